"""Initial states ``rho_tot(0) = sum_g phi_s^g (x) phi_B^g`` and their bath moments.

Bath operators are stored in the Fock basis of ``H_B``. The dynamics only sees
them through a handful of moments: the trace ``T`` and

    V_A[q]      = Tr(a_q phi_B)
    V_A_hat[q]  = Tr(a_q^+ phi_B)
    V_B[q, q']  = Tr(a_q'^+ a_q phi_B)
    V_C[q, q']  = Tr(a_q' a_q phi_B)
    V_C_hat[q, q'] = Tr(a_q^+ a_q'^+ phi_B)

which are the Bargmann-space Gaussian averages of ``z_q``, ``z'*_q``,
``z_q z'*_q'`` and ``z_q z'_q'`` against ``<z|phi_B|z'> exp(z'* z)``.

Index convention: a coefficient ``c[n, p]`` multiplies the ket-bra ``|n><p|``
(ket first). With that reading ``<z|phi_B|z'> = sum c[n,p] z*^n z'^p / sqrt(n! p!)``
and the moments above follow; the Kronecker-delta tables often quoted for these
coefficients hold with the two indices swapped (``c[n, p]`` multiplying
``|p><n|``). :func:`oqs.oracle.gaussian_moment_oracle` evaluates the defining
Gaussian integrals directly and is what the tests check against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import is_hermitian

Occupation = tuple  # sorted tuple of (mode, n) pairs with n > 0

ZERO_TOL = 1e-14
SL_EIG_TOL = 1e-9
NORM_TOL = 1e-10


def occupation(pairs: Mapping[int, int] | Iterable[tuple[int, int]] = ()) -> Occupation:
    """Canonical sparse occupation tuple from ``{mode: n}`` or ``[(mode, n), ...]``."""
    items = pairs.items() if isinstance(pairs, Mapping) else pairs
    acc: dict[int, int] = {}
    for mode, n in items:
        if mode < 0 or n < 0:
            raise ValueError(f"invalid occupation entry ({mode}, {n})")
        acc[int(mode)] = acc.get(int(mode), 0) + int(n)
    return tuple(sorted((m, n) for m, n in acc.items() if n > 0))


VACUUM: Occupation = ()


def single(q: int) -> Occupation:
    return ((int(q), 1),)


def total_excitation(occ: Occupation) -> int:
    return sum(n for _, n in occ)


class FockOperator:
    """Sparse bath operator ``sum c[n,p] |n><p|`` truncated at ``max_exc`` quanta."""

    __slots__ = ("entries", "max_exc")

    def __init__(self, entries: Mapping[tuple[Occupation, Occupation], complex] | None = None, max_exc: int = 2):
        self.max_exc = int(max_exc)
        clean: dict[tuple[Occupation, Occupation], complex] = {}
        for (n, p), c in (entries or {}).items():
            n, p = occupation(n), occupation(p)
            if total_excitation(n) > self.max_exc or total_excitation(p) > self.max_exc:
                raise ValueError(f"entry |{n}><{p}| exceeds max_exc={self.max_exc}")
            c = complex(c)
            if c != 0:
                clean[(n, p)] = clean.get((n, p), 0) + c
        self.entries = clean

    @classmethod
    def vacuum(cls, max_exc: int = 2) -> "FockOperator":
        return cls({(VACUUM, VACUUM): 1.0}, max_exc)

    @classmethod
    def outer(cls, ket: Mapping[Occupation, complex], bra: Mapping[Occupation, complex], max_exc: int = 2) -> "FockOperator":
        """``|ket><bra|`` for sparse state vectors given as ``{occupation: amplitude}``."""
        entries = {}
        for n, a in ket.items():
            if a == 0:
                continue
            for p, b in bra.items():
                if b != 0:
                    entries[(n, p)] = a * np.conj(b)
        return cls(entries, max_exc)

    @classmethod
    def projector(cls, state: Mapping[Occupation, complex], max_exc: int = 2) -> "FockOperator":
        return cls.outer(state, state, max_exc)

    def __repr__(self):
        return f"FockOperator({len(self.entries)} entries, max_exc={self.max_exc})"

    def __add__(self, other: "FockOperator") -> "FockOperator":
        merged = dict(self.entries)
        for k, c in other.entries.items():
            merged[k] = merged.get(k, 0) + c
        return FockOperator(merged, max(self.max_exc, other.max_exc))

    def scaled(self, factor: complex) -> "FockOperator":
        return FockOperator({k: factor * c for k, c in self.entries.items()}, self.max_exc)

    def adjoint(self) -> "FockOperator":
        return FockOperator({(p, n): np.conj(c) for (n, p), c in self.entries.items()}, self.max_exc)

    def trace(self) -> complex:
        return complex(sum(c for (n, p), c in self.entries.items() if n == p))

    def modes(self) -> set[int]:
        out = set()
        for n, p in self.entries:
            out.update(m for m, _ in n)
            out.update(m for m, _ in p)
        return out

    def is_diagonal(self) -> bool:
        return all(n == p for (n, p) in self.entries)

    def states(self) -> list[Occupation]:
        seen = {}
        for n, p in self.entries:
            seen.setdefault(n, None)
            seen.setdefault(p, None)
        return sorted(seen, key=lambda o: (total_excitation(o), o))

    def to_dense(self, states: Sequence[Occupation] | None = None) -> tuple[np.ndarray, list[Occupation]]:
        states = list(states) if states is not None else self.states()
        index = {s: i for i, s in enumerate(states)}
        m = np.zeros((len(states), len(states)), dtype=complex)
        for (n, p), c in self.entries.items():
            m[index[n], index[p]] += c
        return m, states

    def allclose(self, other: "FockOperator", tol: float = 1e-12) -> bool:
        keys = set(self.entries) | set(other.entries)
        return all(abs(self.entries.get(k, 0) - other.entries.get(k, 0)) <= tol for k in keys)


@dataclass(frozen=True)
class PairMoment:
    """Two-mode moment matrix ``M[q, q']`` stored as diagonal + low-rank off-diagonal.

    Off-diagonal entries are those of ``left @ right``; the diagonal of that
    product is ignored and ``diag`` holds the true diagonal. A dense fallback is
    just ``left = off-diagonal part``, ``right = identity``.
    """

    diag: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return self.left.shape[1]

    @property
    def size(self) -> int:
        return len(self.diag)

    @classmethod
    def zeros(cls, n: int) -> "PairMoment":
        return cls(np.zeros(n, complex), np.zeros((n, 0), complex), np.zeros((0, n), complex))

    @classmethod
    def from_dense(cls, m: np.ndarray, rtol: float = 1e-13) -> "PairMoment":
        m = np.asarray(m, dtype=complex)
        n = m.shape[0]
        diag = np.diag(m).copy()
        off = m - np.diag(diag)
        scale = np.max(np.abs(m), initial=0.0)
        if scale == 0 or np.max(np.abs(off), initial=0.0) <= ZERO_TOL * max(scale, 1.0):
            return cls(diag, np.zeros((n, 0), complex), np.zeros((0, n), complex))
        best = None
        for cand in (m, off):
            u, s, vh = np.linalg.svd(cand)
            r = int(np.sum(s > rtol * s[0]))
            if best is None or r < best[0]:
                best = (r, u[:, :r] * s[:r], vh[:r])
        r, left, right = best
        if r > n // 2:
            return cls(diag, off, np.eye(n, dtype=complex))
        return cls(diag, left, right)

    def dense(self) -> np.ndarray:
        full = self.left @ self.right
        np.fill_diagonal(full, self.diag)
        return full

    def lowrank_diag(self) -> np.ndarray:
        """Diagonal of ``left @ right``, to be subtracted from factor contractions."""
        return np.einsum("qr,rq->q", self.left, self.right)

    def offdiag_is_zero(self) -> bool:
        if self.rank == 0:
            return True
        off = self.left @ self.right
        np.fill_diagonal(off, 0)
        return bool(np.max(np.abs(off)) <= ZERO_TOL)

    def is_zero(self) -> bool:
        return bool(np.max(np.abs(self.diag), initial=0.0) <= ZERO_TOL) and self.offdiag_is_zero()

    def conj_transpose(self) -> "PairMoment":
        return PairMoment(self.diag.conj(), self.right.conj().T, self.left.conj().T)

    def conj(self) -> "PairMoment":
        return PairMoment(self.diag.conj(), self.left.conj(), self.right.conj())


@dataclass(frozen=True)
class MomentSet:
    """Bath moments of one ``phi_B`` over ``n`` discrete modes (see module docstring)."""

    T: complex
    VA: np.ndarray
    VA_hat: np.ndarray
    VB: PairMoment
    VC: PairMoment
    VC_hat: PairMoment

    @property
    def n_modes(self) -> int:
        return len(self.VA)

    def first_order_zero(self) -> bool:
        return bool(np.max(np.abs(self.VA), initial=0) <= ZERO_TOL and np.max(np.abs(self.VA_hat), initial=0) <= ZERO_TOL)

    def nonequilibrium_zero(self) -> bool:
        """True when only time-translation-invariant (diagonal) moments survive."""
        return (
            self.first_order_zero()
            and self.VB.offdiag_is_zero()
            and self.VC.is_zero()
            and self.VC_hat.is_zero()
        )

    def violations(self) -> list[str]:
        out = []
        if np.max(np.abs(self.VA), initial=0) > ZERO_TOL:
            out.append("V_A: |n_1..n_q+1..> <-> |n>")
        if np.max(np.abs(self.VA_hat), initial=0) > ZERO_TOL:
            out.append("V_A_hat: |n> <-> |n_1..n_q+1..>")
        if not self.VB.offdiag_is_zero():
            out.append("V_B (q != q'): |n_1..n_q+1..> <-> |n_1..n_q'-1..>")
        if not (self.VC.is_zero() and self.VC_hat.is_zero()):
            out.append("V_C: |n_1..n_q+1..n_q'+1..> <-> |n> (q = q': n_q+2)")
        return out

    def adjoint(self) -> "MomentSet":
        """Moments of ``phi_B^+`` expressed through those of ``phi_B``."""
        return MomentSet(
            T=np.conj(self.T),
            VA=self.VA_hat.conj(),
            VA_hat=self.VA.conj(),
            VB=self.VB.conj_transpose(),
            VC=self.VC_hat.conj(),
            VC_hat=self.VC.conj(),
        )


def moments_from_fock(phi_b: FockOperator, n_modes: int) -> MomentSet:
    """Closed-form moments of a Fock-basis operator (ladder-operator matrix elements)."""
    n = int(n_modes)
    t = 0j
    va = np.zeros(n, complex)
    va_hat = np.zeros(n, complex)
    vb = np.zeros((n, n), complex)
    vc = np.zeros((n, n), complex)
    vc_hat = np.zeros((n, n), complex)
    for (ket, bra), c in phi_b.entries.items():
        nk = dict(ket)
        nb = dict(bra)
        for m in list(nk) + list(nb):
            if not 0 <= m < n:
                raise IndexError(f"mode index {m} outside [0, {n})")
        if ket == bra:
            t += c
            for q, k in ket:
                vb[q, q] += c * k
            continue
        diff = {}
        for m in set(nk) | set(nb):
            d = nk.get(m, 0) - nb.get(m, 0)
            if d:
                diff[m] = d
        if len(diff) > 2 or sum(abs(d) for d in diff.values()) > 2:
            continue
        items = sorted(diff.items())
        if len(items) == 1:
            (q, d), = items
            k = nk.get(q, 0)
            if d == 1:
                va[q] += c * sqrt(k)
            elif d == -1:
                va_hat[q] += c * sqrt(k + 1)
            elif d == 2:
                vc[q, q] += c * sqrt(k * (k - 1))
            elif d == -2:
                vc_hat[q, q] += c * sqrt((k + 1) * (k + 2))
            continue
        (q1, d1), (q2, d2) = items
        k1, k2 = nk.get(q1, 0), nk.get(q2, 0)
        if d1 == 1 and d2 == 1:
            w = c * sqrt(k1 * k2)
            vc[q1, q2] += w
            vc[q2, q1] += w
        elif d1 == -1 and d2 == -1:
            w = c * sqrt((k1 + 1) * (k2 + 1))
            vc_hat[q1, q2] += w
            vc_hat[q2, q1] += w
        else:
            # ket has one more quantum in q, one fewer in q'
            q, qp = (q1, q2) if d1 == 1 else (q2, q1)
            kq, kqp = nk.get(q, 0), nk.get(qp, 0)
            vb[q, qp] += c * sqrt(kq * (kqp + 1))
    return MomentSet(
        T=complex(t),
        VA=va,
        VA_hat=va_hat,
        VB=PairMoment.from_dense(vb),
        VC=PairMoment.from_dense(vc),
        VC_hat=PairMoment.from_dense(vc_hat),
    )


@dataclass(frozen=True)
class GammaTerm:
    phi_s: np.ndarray
    phi_b: FockOperator
    moments: MomentSet
    label: str = ""

    @classmethod
    def build(cls, phi_s, phi_b: FockOperator, n_modes: int, label: str = "") -> "GammaTerm":
        phi_s = np.array(phi_s, dtype=complex)
        return cls(phi_s, phi_b, moments_from_fock(phi_b, n_modes), label)

    @property
    def T(self) -> complex:
        return self.moments.T


def initial_rho_component(term: GammaTerm) -> np.ndarray:
    """Initial system part ``T * phi_s`` (zero for traceless bath factors)."""
    if abs(term.T) <= ZERO_TOL:
        return np.zeros_like(term.phi_s)
    return term.T * term.phi_s


def _infer_pairing(terms: Sequence[GammaTerm], tol: float = 1e-10) -> tuple[int, ...]:
    pairing = [-1] * len(terms)
    for i, a in enumerate(terms):
        if pairing[i] >= 0:
            continue
        for j in [i] + [k for k in range(len(terms)) if k != i]:
            if pairing[j] >= 0 and j != i:
                continue
            b = terms[j]
            if np.allclose(a.phi_s.conj().T, b.phi_s, atol=tol) and a.phi_b.adjoint().allclose(b.phi_b, tol):
                pairing[i], pairing[j] = j, i
                break
        else:
            raise ValueError(f"no adjoint partner found for term {i} ({a.label!r})")
    return tuple(pairing)


class PairingError(ValueError):
    pass


@dataclass(frozen=True)
class InitialState:
    terms: tuple[GammaTerm, ...]
    adjoint_pairing: tuple[int, ...] = field(default=())

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("initial state needs at least one term")
        pairing = tuple(self.adjoint_pairing) or _infer_pairing(terms)
        object.__setattr__(self, "adjoint_pairing", pairing)
        total = sum(complex(t.T * np.trace(t.phi_s)) for t in terms)
        if abs(total - 1) > NORM_TOL:
            raise ValueError(f"initial state not normalised: sum_g T^g Tr(phi_s^g) = {total:.12f}")

    @property
    def n_modes(self) -> int:
        return self.terms[0].moments.n_modes

    @property
    def dim(self) -> int:
        return self.terms[0].phi_s.shape[0]

    def rho_s0(self) -> np.ndarray:
        return sum(initial_rho_component(t) for t in self.terms)

    def check_pairing(self, tol: float = 1e-9) -> None:
        p = self.adjoint_pairing
        if len(p) != len(self.terms) or sorted(p) != list(range(len(p))):
            raise PairingError("adjoint pairing does not cover all terms")
        for i, j in enumerate(p):
            if p[j] != i:
                raise PairingError(f"adjoint pairing is not an involution at term {i}")
            a, b = self.terms[i], self.terms[j]
            if not np.allclose(a.phi_s.conj().T, b.phi_s, atol=tol):
                raise PairingError(f"phi_s of terms {i} and {j} are not adjoint")
            ma, mb = a.moments.adjoint(), b.moments
            if (
                abs(ma.T - mb.T) > tol
                or not np.allclose(ma.VA, mb.VA, atol=tol)
                or not np.allclose(ma.VA_hat, mb.VA_hat, atol=tol)
                or not np.allclose(ma.VB.diag, mb.VB.diag, atol=tol)
            ):
                raise PairingError(f"bath factors of terms {i} and {j} are not adjoint")


@dataclass(frozen=True)
class Classification:
    is_SL: bool
    is_NSL: bool
    all_bath_equilibrium: bool
    lindblad_in_markov_secular: bool
    report: str
    violations: dict = field(default_factory=dict)

    def verdict_line(self) -> str:
        yn = lambda b: "yes" if b else "no"  # noqa: E731
        return (
            f"SL={yn(self.is_SL)} NSL={yn(self.is_NSL)} "
            f"equilibrium={yn(self.all_bath_equilibrium)} lindblad={yn(self.lindblad_in_markov_secular)}"
        )


def _is_density_like(term: GammaTerm) -> bool:
    t = term.T
    if abs(t.imag) > SL_EIG_TOL or t.real <= SL_EIG_TOL:
        return False
    m, _ = term.phi_b.to_dense()
    m = m / t.real
    if not is_hermitian(m, SL_EIG_TOL):
        return False
    return bool(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() >= -SL_EIG_TOL)


def lindblad_violations(state: InitialState) -> dict[int, list[str]]:
    out = {}
    for i, term in enumerate(state.terms):
        v = term.moments.violations()
        if v:
            out[i] = v
    return out


def classify(state: InitialState) -> Classification:
    """SL / NSL / equilibrium / Lindblad-limit verdicts for an initial state.

    A term counts as a genuine density-matrix factor when ``phi_B / T`` is
    Hermitian positive semidefinite (eigenvalues >= -1e-9 in the truncated Fock
    space) with real positive ``T``.
    """
    state.check_pairing()
    is_sl = all(_is_density_like(t) for t in state.terms)
    is_nsl = any(
        abs(t.T) <= SL_EIG_TOL and abs(np.trace(t.phi_s)) <= SL_EIG_TOL for t in state.terms
    )
    eq = all(t.phi_b.is_diagonal() for t in state.terms)
    violations = lindblad_violations(state)
    lind = not violations
    max_exc = max(t.phi_b.max_exc for t in state.terms)
    lines = [f"terms: {len(state.terms)}; Fock truncation max_exc={max_exc}"]
    for i, t in enumerate(state.terms):
        tag = t.label or f"term {i}"
        lines.append(f"  [{i}] {tag}: T={t.T.real:+.6g}{t.T.imag:+.3g}j")
        for v in violations.get(i, []):
            lines.append(f"      non-Lindblad moment {v}")
    cls = Classification(is_sl, is_nsl, eq, lind, "", violations)
    report = cls.verdict_line() + "\n" + "\n".join(lines)
    return Classification(is_sl, is_nsl, eq, lind, report, violations)
