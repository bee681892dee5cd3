"""Brute-force references for the master-equation machinery.

Two independent checks live here:

* :func:`gaussian_moment_oracle` evaluates the Bargmann Gaussian integrals that
  define the bath moments, once by Wick pairing and once by tensor
  Gauss-Hermite quadrature.
* :func:`exact_evolve` propagates the full system (x) truncated-bath state with
  the exact total Hamiltonian ``H_S + sum w a^+a + B^+ L + B L^+`` and traces out
  the bath.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement, product
from math import comb, factorial, sqrt

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .bath import BathModel
from .initial_state import FockOperator, InitialState, Occupation, moments_from_fock, occupation, total_excitation
from .linalg import trace_distance

log = logging.getLogger(__name__)

BASIS_CAP = 50_000
DENSE_LIMIT = 4000
LEAKAGE_TOL = 5e-4
GH_ORDER = 40


class OracleCapError(RuntimeError):
    """Truncated total Hilbert space would exceed the size cap."""


class TruncationLeakageError(RuntimeError):
    """Reduced dynamics not converged in the bath excitation cutoff."""


class OracleConsistencyError(RuntimeError):
    """Wick and quadrature evaluations of a Gaussian moment disagree."""


# ---------------------------------------------------------------------------
# Gaussian moments
# ---------------------------------------------------------------------------

# Per mode the integrand is z*^a z'^b z^c z'*^d exp(z'* z) against the product
# measure d^2z d^2z' exp(-|z|^2 - |z'|^2) / pi^2. The only non-zero two-point
# functions of that (complex) Gaussian weight are <z* z> = <z' z'*> = <z* z'> = 1.
_PAIR_COV = {
    frozenset(("zs", "z")): 1.0,
    frozenset(("zp", "zps")): 1.0,
    frozenset(("zs", "zp")): 1.0,
}


def _wick(labels: tuple[str, ...]) -> float:
    """Sum over perfect pairings of the two-point functions (Isserlis)."""
    if not labels:
        return 1.0
    if len(labels) % 2:
        return 0.0
    first, rest = labels[0], labels[1:]
    total = 0.0
    for i, other in enumerate(rest):
        cov = _PAIR_COV.get(frozenset((first, other)), 0.0) if first != other else 0.0
        if cov:
            total += cov * _wick(rest[:i] + rest[i + 1:])
    return total


@lru_cache(maxsize=None)
def wick_mode_integral(a: int, b: int, c: int, d: int) -> float:
    labels = ("zs",) * a + ("zp",) * b + ("z",) * c + ("zps",) * d
    return _wick(labels)


@lru_cache(maxsize=1)
def _quadrature_grid(order: int = GH_ORDER):
    u, w = np.polynomial.hermite.hermgauss(order)
    amat = np.array([[1.0, -0.5], [-0.5, 1.0]])
    evals, evecs = np.linalg.eigh(amat)
    whiten = evecs @ np.diag(evals**-0.5) @ evecs.T
    # pairs (x, x') and (y, y') share the same quadratic form
    u1, u2 = np.meshgrid(u, u, indexing="ij")
    w12 = np.outer(w, w)
    pair = whiten @ np.vstack([u1.ravel(), u2.ravel()])
    px, pxp = pair
    wpair = w12.ravel()
    x = px[:, None]
    xp = pxp[:, None]
    y = px[None, :]
    yp = pxp[None, :]
    z = x + 1j * y
    zp = xp + 1j * yp
    weight = np.outer(wpair, wpair) * np.exp(1j * (xp * y - yp * x))
    weight *= 1.0 / np.sqrt(np.linalg.det(amat)) ** 2 / np.pi**2
    return z, zp, weight


@lru_cache(maxsize=None)
def quadrature_mode_integral(a: int, b: int, c: int, d: int) -> complex:
    z, zp, weight = _quadrature_grid()
    integrand = np.conj(z) ** a * zp**b * z**c * np.conj(zp) ** d
    return complex(np.sum(weight * integrand))


def mode_integral(a: int, b: int, c: int, d: int) -> float:
    """Cross-checked single-mode Gaussian integral (returns the Wick value)."""
    exact = wick_mode_integral(a, b, c, d)
    quad = quadrature_mode_integral(a, b, c, d)
    scale = max(1.0, abs(exact))
    if abs(quad - exact) > 1e-6 * scale:
        raise OracleConsistencyError(
            f"Wick {exact} vs quadrature {quad} for exponents {(a, b, c, d)}"
        )
    return exact


_PREFACTORS = {
    "T": ((), ()),
    "A": (("z", 0),),
    "A_hat": (("zps", 0),),
    "B": (("z", 0), ("zps", 1)),
    "C": (("z", 0), ("zp", 1)),
    "C_hat": (("zps", 0), ("zps", 1)),
}


def gaussian_moment_oracle(phi_b: FockOperator, moment: str, q: int | None = None, qp: int | None = None) -> complex:
    """Direct Gaussian-integral value of one bath moment of ``phi_b``.

    ``moment`` is one of ``T``, ``A`` (prefactor ``z_q``), ``A_hat`` (``z'*_q``),
    ``B`` (``z_q z'*_q'``), ``C`` (``z_q z'_q'``) or ``C_hat`` (``z'*_q z'*_q'``).
    The Bargmann kernel of ``phi_b = sum c |n><p|`` is
    ``sum c z*^n z'^p / sqrt(n! p!)``. At most two distinct modes may appear.
    """
    if moment not in _PREFACTORS:
        raise ValueError(f"unknown moment {moment!r}")
    pre: dict[int, list[int]] = {}
    slots = {"zp": 1, "z": 2, "zps": 3}
    if moment != "T":
        modes = [q, qp]
        for label, which in _PREFACTORS[moment]:
            m = modes[which]
            if m is None:
                raise ValueError(f"moment {moment} needs mode indices")
            pre.setdefault(m, [0, 0, 0, 0])[slots[label]] += 1
    involved = set(phi_b.modes()) | set(pre)
    if len(involved) > 2:
        raise ValueError("the Gaussian oracle handles at most two modes")
    total = 0j
    for (ket, bra), c in phi_b.entries.items():
        nk, nb = dict(ket), dict(bra)
        norm = 1.0
        for _, k in ket:
            norm *= factorial(k)
        for _, k in bra:
            norm *= factorial(k)
        value = c / sqrt(norm)
        for m in involved:
            extra = pre.get(m, [0, 0, 0, 0])
            value *= mode_integral(nk.get(m, 0), nb.get(m, 0) + extra[1], extra[2], extra[3])
            if value == 0:
                break
        total += value
    return complex(total)


def fock_lattice(n_modes: int = 2, max_exc: int = 2) -> list[Occupation]:
    """All occupations of ``n_modes`` modes with at most ``max_exc`` quanta."""
    out = []
    for counts in product(range(max_exc + 1), repeat=n_modes):
        if sum(counts) <= max_exc:
            out.append(occupation({m: k for m, k in enumerate(counts)}))
    return sorted(out, key=lambda o: (total_excitation(o), o))


def moment_lattice_check(n_modes: int = 2, max_exc: int = 2) -> tuple[float, int]:
    """Compare closed-form moments with the Gaussian oracle on every ``|n><p|``.

    Every ket-bra pair of the lattice is tested for all six moments and all
    mode indices. Returns the largest absolute deviation and the number of
    comparisons made.
    """
    states = fock_lattice(n_modes, max_exc)
    worst, count = 0.0, 0
    for ket in states:
        for bra in states:
            op = FockOperator({(ket, bra): 1.0}, max_exc)
            m = moments_from_fock(op, n_modes)
            closed = {
                "T": lambda q, qp: m.T,
                "A": lambda q, qp: m.VA[q],
                "A_hat": lambda q, qp: m.VA_hat[q],
                "B": lambda q, qp: m.VB.dense()[q, qp],
                "C": lambda q, qp: m.VC.dense()[q, qp],
                "C_hat": lambda q, qp: m.VC_hat.dense()[q, qp],
            }
            for name, value in closed.items():
                for q in range(n_modes):
                    for qp in range(n_modes):
                        ref = gaussian_moment_oracle(op, name, q, qp)
                        worst = max(worst, abs(complex(value(q, qp)) - ref))
                        count += 1
    return worst, count


def single_variable_identities(order: int = 60, probes=(0.3 - 0.2j, -0.7 + 0.4j, 1.1 + 0.0j)) -> dict[str, float]:
    """Max deviation of four one-variable Bargmann identities, by 2-d quadrature.

    With ``dmu(z) = exp(-|z|^2) d^2z / pi`` and ``w`` a free complex number:

    * ``int dmu z*^p z^n = delta_np n!``
    * ``int dmu exp(w* z) z*^p = w*^p``
    * ``int dmu exp(z* w) z^n = w^n``
    * ``int dmu exp(w* z) z*^p z = p w*^(p-1)``
    """
    u, wts = np.polynomial.hermite.hermgauss(order)
    x, y = np.meshgrid(u, u, indexing="ij")
    z = (x + 1j * y).ravel()
    wt = np.outer(wts, wts).ravel() / np.pi
    dev = {"orthogonality": 0.0, "reproducing_bra": 0.0, "reproducing_ket": 0.0, "derivative": 0.0}
    for p in range(4):
        for n in range(4):
            val = np.sum(wt * np.conj(z) ** p * z**n)
            dev["orthogonality"] = max(dev["orthogonality"], abs(val - (factorial(n) if n == p else 0)))
    for w in probes:
        for p in range(4):
            val = np.sum(wt * np.exp(np.conj(w) * z) * np.conj(z) ** p)
            dev["reproducing_bra"] = max(dev["reproducing_bra"], abs(val - np.conj(w) ** p))
            val = np.sum(wt * np.exp(np.conj(z) * w) * z**p)
            dev["reproducing_ket"] = max(dev["reproducing_ket"], abs(val - w**p))
            val = np.sum(wt * np.exp(np.conj(w) * z) * np.conj(z) ** p * z)
            expect = p * np.conj(w) ** (p - 1) if p > 0 else 0
            dev["derivative"] = max(dev["derivative"], abs(val - expect))
    return dev


# ---------------------------------------------------------------------------
# Exact evolution in the truncated Fock space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TotalBasis:
    """Product states ``|a> (x) |n>`` ordered system-major, bath graded-lexicographic."""

    d: int
    n_modes: int
    max_exc: int
    bath_states: tuple[Occupation, ...]

    @property
    def n_bath(self) -> int:
        return len(self.bath_states)

    @property
    def size(self) -> int:
        return self.d * self.n_bath

    def bath_index(self) -> dict[Occupation, int]:
        return {s: i for i, s in enumerate(self.bath_states)}

    def state(self, i: int) -> tuple[int, Occupation]:
        a, m = divmod(i, self.n_bath)
        return a, self.bath_states[m]

    def index(self, a: int, occ: Occupation) -> int:
        return a * self.n_bath + self.bath_index()[occ]


def basis_size(n_modes: int, max_exc: int, d: int) -> int:
    return d * sum(comb(n_modes + m - 1, m) for m in range(max_exc + 1))


def enumerate_basis(n_modes: int, max_exc: int, d: int, cap: int = BASIS_CAP) -> TotalBasis:
    size = basis_size(n_modes, max_exc, d)
    if size > cap:
        raise OracleCapError(f"total basis of {size} states exceeds the cap of {cap}")
    states = []
    for m in range(max_exc + 1):
        for modes in combinations_with_replacement(range(n_modes), m):
            counts: dict[int, int] = {}
            for q in modes:
                counts[q] = counts.get(q, 0) + 1
            states.append(occupation(counts))
    return TotalBasis(d, n_modes, max_exc, tuple(states))


@dataclass(frozen=True)
class TotalHamiltonian:
    matrix: sp.csr_matrix
    basis: TotalBasis

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def bath_creation(bath: BathModel, basis: TotalBasis) -> sp.csr_matrix:
    """``B^+ = sum_q g_q a_q^+`` on the bath part of the basis (leaving it is dropped)."""
    index = basis.bath_index()
    rows, cols, vals = [], [], []
    for j, occ in enumerate(basis.bath_states):
        if total_excitation(occ) >= basis.max_exc:
            continue
        counts = dict(occ)
        for q in range(basis.n_modes):
            g = bath.couplings[q]
            if g == 0:
                continue
            nq = counts.get(q, 0)
            raised = dict(counts)
            raised[q] = nq + 1
            rows.append(index[occupation(raised)])
            cols.append(j)
            vals.append(g * sqrt(nq + 1))
    m = basis.n_bath
    return sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(m, m))


def build_total_hamiltonian(system, bath: BathModel, basis: TotalBasis) -> TotalHamiltonian:
    if bath.n_modes != basis.n_modes:
        raise ValueError("bath and basis disagree on the number of modes")
    hs = sp.csr_matrix(np.asarray(system.hamiltonian, dtype=complex))
    lc = sp.csr_matrix(np.asarray(system.coupling, dtype=complex))
    energies = np.array([sum(bath.omega[q] * n for q, n in occ) for occ in basis.bath_states])
    eye_b = sp.identity(basis.n_bath, dtype=complex, format="csr")
    eye_s = sp.identity(basis.d, dtype=complex, format="csr")
    bdag = bath_creation(bath, basis)
    h = (
        sp.kron(hs, eye_b)
        + sp.kron(eye_s, sp.diags(energies.astype(complex)))
        + sp.kron(lc, bdag)
        + sp.kron(lc.conj().T, bdag.conj().T)
    )
    return TotalHamiltonian(sp.csr_matrix(h), basis)


def total_state_factors(state: InitialState, basis: TotalBasis, tol: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition ``rho_tot = sum_k p_k |psi_k><psi_k|`` of the initial state.

    Only bath states occurring in some ``phi_B`` span the support, so the
    Hermitian eigenproblem is solved on that small subspace.
    """
    index = basis.bath_index()
    support = sorted({o for t in state.terms for o in t.phi_b.states()}, key=lambda o: (total_excitation(o), o))
    for o in support:
        if o not in index:
            raise ValueError(f"bath state {o} lies outside the oracle truncation")
    local = {o: i for i, o in enumerate(support)}
    d, s = basis.d, len(support)
    rho = np.zeros((d * s, d * s), dtype=complex)
    for t in state.terms:
        pb = np.zeros((s, s), dtype=complex)
        for (n, p), c in t.phi_b.entries.items():
            pb[local[n], local[p]] += c
        rho += np.kron(t.phi_s, pb)
    herm_err = np.max(np.abs(rho - rho.conj().T))
    if herm_err > 1e-10:
        raise ValueError(f"total initial state is not Hermitian (max deviation {herm_err:.2e})")
    p, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    keep = np.abs(p) > tol
    p, v = p[keep], v[:, keep]
    vecs = np.zeros((basis.size, len(p)), dtype=complex)
    cols = [index[o] for o in support]
    for a in range(d):
        vecs[a * basis.n_bath + np.array(cols)] = v[a * s:(a + 1) * s]
    return p, vecs


@dataclass(frozen=True)
class ExactResult:
    times: np.ndarray
    rho_s: np.ndarray
    total_purity: np.ndarray


def _reduced(weights: np.ndarray, psi: np.ndarray, basis: TotalBasis) -> np.ndarray:
    k = psi.shape[1]
    blocks = psi.T.reshape(k, basis.d, basis.n_bath)
    return np.einsum("k,kam,kbm->ab", weights, blocks, blocks.conj())


def _purity(weights: np.ndarray, psi: np.ndarray) -> float:
    overlap = psi.conj().T @ psi
    return float(np.real(np.einsum("k,l,kl,kl->", weights, weights, overlap, overlap.conj())))


def exact_evolve(state: InitialState, ham: TotalHamiltonian, times, method: str = "auto") -> ExactResult:
    """Reduced system state ``Tr_B[U rho_tot U^+]`` on ``times``.

    ``method='eigh'`` diagonalises ``H_tot`` densely; ``'krylov'`` uses
    :func:`scipy.sparse.linalg.expm_multiply` on a uniform grid. ``'auto'``
    picks the dense route for bases up to 4000 states.
    """
    times = np.asarray(times, dtype=float)
    basis = ham.basis
    weights, psi0 = total_state_factors(state, basis)
    if method == "auto":
        method = "eigh" if basis.size <= DENSE_LIMIT else "krylov"
    rho = np.empty((len(times), basis.d, basis.d), dtype=complex)
    purity = np.empty(len(times))
    if method == "eigh":
        e, u = np.linalg.eigh(ham.dense())
        c0 = u.conj().T @ psi0
        for i, t in enumerate(times):
            psi = u @ (np.exp(-1j * e * t)[:, None] * c0)
            rho[i] = _reduced(weights, psi, basis)
            purity[i] = _purity(weights, psi)
    elif method == "krylov":
        if len(times) > 1:
            steps = np.diff(times)
            if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(times[-1])):
                raise ValueError("krylov propagation needs a uniform time grid")
        a = -1j * ham.matrix.tocsc()
        if len(times) == 1:
            traj = [expm_multiply(a * times[0], psi0)]
        else:
            traj = expm_multiply(a, psi0, start=times[0], stop=times[-1], num=len(times), endpoint=True)
        for i, psi in enumerate(traj):
            rho[i] = _reduced(weights, psi, basis)
            purity[i] = _purity(weights, psi)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ExactResult(times, rho, purity)


def exact_reduced_dynamics(state: InitialState, system, bath: BathModel, times, max_exc: int = 2,
                           cap: int = BASIS_CAP, method: str = "auto") -> ExactResult:
    basis = enumerate_basis(bath.n_modes, max_exc, system.dim, cap)
    return exact_evolve(state, build_total_hamiltonian(system, bath, basis), times, method)


def leakage_check(state: InitialState, system, bath: BathModel, times, max_exc: int = 2,
                  cap: int = BASIS_CAP, tol: float = LEAKAGE_TOL) -> float:
    """Max entry change of ``rho_s`` when the excitation cutoff is raised by one.

    Raises :class:`TruncationLeakageError` above ``tol``.
    """
    low = exact_reduced_dynamics(state, system, bath, times, max_exc, cap)
    high = exact_reduced_dynamics(state, system, bath, times, max_exc + 1, cap)
    change = float(np.max(np.abs(low.rho_s - high.rho_s)))
    log.info("truncation leakage max_exc=%d -> %d: %.3e", max_exc, max_exc + 1, change)
    if change > tol:
        raise TruncationLeakageError(
            f"raising max_exc from {max_exc} to {max_exc + 1} changes rho_s by {change:.2e} > {tol:.0e}"
        )
    return change


def compare(me_rho, me_times, exact: ExactResult, tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Trace distance between two reduced trajectories on a shared time grid."""
    me_times = np.asarray(me_times, dtype=float)
    if len(me_times) != len(exact.times) or np.max(np.abs(me_times - exact.times), initial=0.0) > tol:
        raise ValueError("time grids of the two trajectories do not match")
    series = np.array([trace_distance(a, b) for a, b in zip(me_rho, exact.rho_s)])
    return float(series.max(initial=0.0)), series
