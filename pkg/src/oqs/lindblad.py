"""Markov / secular limit: jump operators, rates and the Lindblad generator.

Jump operators follow the spectral decomposition of ``H_S``:
``L(w) = sum_{e_b - e_a = w} P(e_a) L P(e_b)``, so ``L(w)`` lowers the energy
by ``w`` (``sigma`` carries ``w = w_1`` for a two-level atom).

For long times the memory operator ``int_0^t alpha(t - tau) V_{tau-t} L dtau``
tends to ``sum_w Gamma(w) L(w)`` with

    Gamma(w) = pi J(w) - i PV int_0^{w_max} J(v) / (v - w) dv.

The rate table stores ``Re gamma = pi J(w)`` and ``Im gamma`` as the principal
value integral itself; the generator uses ``Gamma = Re gamma - i Im gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .bath import SpectralDensity, eval_spectral_density
from .initial_state import InitialState, lindblad_violations
from .linalg import SpectralDecomposition

MERGE_TOL = 1e-10
BLOCK_TOL = 1e-14
RICHARDSON_LEVELS = 4


@dataclass(frozen=True)
class JumpDecomposition:
    frequencies: np.ndarray
    operators: np.ndarray  # (n_w, d, d), original basis

    def __len__(self):
        return len(self.frequencies)

    def total(self) -> np.ndarray:
        return self.operators.sum(axis=0)

    def operator(self, omega: float, tol: float = MERGE_TOL) -> np.ndarray:
        idx = np.flatnonzero(np.abs(self.frequencies - omega) <= tol)
        if not len(idx):
            return np.zeros_like(self.operators[0])
        return self.operators[idx[0]]


def jump_operators(sd: SpectralDecomposition, coupling: np.ndarray) -> JumpDecomposition:
    """Split ``L`` into Bohr-frequency components (gaps merged within 1e-10)."""
    coupling = np.asarray(coupling, dtype=complex)
    l_eig = sd.to_eigenbasis(coupling)
    lowering = -sd.gaps  # e_b - e_a for element (a, b)
    freqs: list[float] = []
    blocks: list[np.ndarray] = []
    order = np.argsort(lowering, axis=None, kind="stable")
    for flat in order:
        a, b = np.unravel_index(flat, lowering.shape)
        if abs(l_eig[a, b]) <= BLOCK_TOL:
            continue
        w = float(lowering[a, b])
        for i, f in enumerate(freqs):
            if abs(f - w) <= MERGE_TOL:
                break
        else:
            freqs.append(w)
            blocks.append(np.zeros_like(l_eig))
            i = len(freqs) - 1
        blocks[i][a, b] = l_eig[a, b]
    if not freqs:
        return JumpDecomposition(np.zeros(0), np.zeros((0,) + coupling.shape, dtype=complex))
    ops = np.array([sd.from_eigenbasis(blk) for blk in blocks])
    return JumpDecomposition(np.array(freqs), ops)


def lindblad_condition(state: InitialState) -> tuple[bool, str]:
    """Whether every component has only Fock-diagonal (number-like) moments.

    Returns the verdict and a report listing each violating moment with the
    class of Fock-state transition it corresponds to.
    """
    violations = lindblad_violations(state)
    if not violations:
        return True, "lindblad=yes: no V_A, V_A_hat, V_C or off-diagonal V_B moments"
    lines = ["lindblad=no"]
    for i, items in sorted(violations.items()):
        tag = state.terms[i].label or f"term {i}"
        for v in items:
            lines.append(f"  [{i}] {tag}: {v}")
    return False, "\n".join(lines)


# ---------------------------------------------------------------------------
# principal values and rates
# ---------------------------------------------------------------------------


def _quad(f, a, b, points=None):
    if b <= a:
        return 0.0
    if points is not None:
        points = [p for p in points if a < p < b]
        if not points:
            points = None
    limit = 400 if points is None else max(400, 4 * len(points))
    val, _ = integrate.quad(f, a, b, limit=limit, epsabs=1e-13, epsrel=1e-12, points=points)
    return val


def excised_integral(f, omega: float, a: float, b: float, h: float, points=None) -> float:
    """``int_a^{w-h} + int_{w+h}^b`` of ``f(v) / (v - w)``.

    ``points`` lists interior breakpoints (kinks of ``f``) handed to the quadrature.
    """
    g = lambda v: f(v) / (v - omega)  # noqa: E731
    return _quad(g, a, omega - h, points) + _quad(g, omega + h, b, points)


def principal_value(f, omega: float, a: float, b: float, h: float | None = None, points=None) -> float:
    """``PV int_a^b f(v) / (v - w) dv`` by symmetric excision and Richardson extrapolation.

    For smooth ``f`` the excised value has an error expansion in odd powers of
    the half-width ``h``; a kink of ``f`` at ``w`` (an interpolated occupation
    profile with a mode on the transition) adds even powers. Values at ``h``,
    ``h/2``, ``h/4``, ``h/8`` are combined in a full Richardson table that
    cancels the ``h``, ``h^2`` and ``h^3`` terms, which covers both cases.
    """
    if not a < b:
        raise ValueError("empty integration interval")
    if omega <= a or omega >= b:
        return _quad(lambda v: f(v) / (v - omega), a, b, points)
    if h is None:
        h = 0.05 * min(omega - a, b - omega, 1.0)
    if not 0 < h < min(omega - a, b - omega):
        raise ValueError("excision half-width must fit inside the interval")
    table = [excised_integral(f, omega, a, b, h / 2**k, points) for k in range(RICHARDSON_LEVELS)]
    for m in range(1, RICHARDSON_LEVELS):
        table = [(2**m * table[k + 1] - table[k]) / (2**m - 1) for k in range(len(table) - 1)]
    return table[0]


@dataclass(frozen=True)
class RateTable:
    frequencies: np.ndarray
    gamma_re: np.ndarray
    gamma_im: np.ndarray
    gamma_b_eq_re: np.ndarray
    gamma_b_eq_im: np.ndarray
    qualifies: bool = True
    diagnostics: list[str] = field(default_factory=list)

    def generator_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """``Gamma(w)`` and ``Gamma_B(w)`` as they enter the generator."""
        return self.gamma_re - 1j * self.gamma_im, self.gamma_b_eq_re - 1j * self.gamma_b_eq_im


def decay_rate(j: SpectralDensity, omega: float, omega_max: float) -> float:
    """``Re gamma(w) = pi J(w)`` for ``0 < w < w_max``."""
    if not 0 < omega < omega_max:
        raise ValueError(f"omega = {omega} outside the support (0, {omega_max})")
    return float(np.pi * eval_spectral_density(j, omega))


def lamb_shift_integral(j: SpectralDensity, omega: float, omega_max: float, h: float | None = None) -> float:
    """``PV int_0^{w_max} J(v) / (v - w) dv``."""
    if omega >= omega_max:
        raise ValueError(f"omega = {omega} not below omega_max = {omega_max}")
    return principal_value(lambda v: eval_spectral_density(j, v), omega, 0.0, omega_max, h)


def occupation_profile(state: InitialState, bath_frequencies: np.ndarray):
    """Mean occupation ``n(v)`` implied by the diagonal ``V_B`` (linear interpolation)."""
    total = sum(complex(t.T) for t in state.terms)
    n_q = sum(t.moments.VB.diag for t in state.terms) / total
    n_q = np.real_if_close(n_q)
    if np.max(np.abs(n_q), initial=0.0) == 0:
        return None
    w = np.asarray(bath_frequencies, float)

    def profile(v):
        return np.interp(v, w, np.real(n_q), left=0.0, right=0.0)

    # the interpolant has a kink at every mode frequency
    profile.breakpoints = w
    return profile


def rates_at(j: SpectralDensity, frequencies, omega_max: float, occupation=None,
             h: float | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``Re gamma``, ``Im gamma`` and their occupation-weighted counterparts at ``frequencies``.

    ``occupation`` is a callable ``n(v)``; without it the weighted rates are zero.
    """
    freqs = np.atleast_1d(np.asarray(frequencies, float))
    if np.any(freqs >= omega_max):
        raise ValueError("frequency at or above omega_max")
    jfun = lambda v: eval_spectral_density(j, v)  # noqa: E731
    re = np.array([np.pi * jfun(w) if w > 0 else 0.0 for w in freqs])
    im = np.array([principal_value(jfun, w, 0.0, omega_max, h) for w in freqs])
    bre = np.zeros_like(re)
    bim = np.zeros_like(im)
    if occupation is not None:
        jb = lambda v: jfun(v) * occupation(v)  # noqa: E731
        bre = np.array([np.pi * jb(w) if w > 0 else 0.0 for w in freqs])
        kinks = getattr(occupation, "breakpoints", None)
        bim = np.array([principal_value(jb, w, 0.0, omega_max, h, kinks) for w in freqs])
    return re, im, bre, bim


def markov_rates(j: SpectralDensity, jumps: JumpDecomposition, omega_max: float,
                 state: InitialState | None = None, bath_frequencies=None,
                 h: float | None = None) -> RateTable:
    """Rates for every jump frequency.

    Without a ``state`` the bath is taken in its vacuum. With a state, the
    Lindblad criterion is checked (``qualifies``) and the equilibrium ``B`` rate
    uses the occupation profile from the diagonal ``V_B`` moments.
    """
    freqs = np.asarray(jumps.frequencies, float)
    qualifies, diags, occ = True, [], None
    if state is not None:
        qualifies, report = lindblad_condition(state)
        if not qualifies:
            diags = report.splitlines()[1:]
        if bath_frequencies is None:
            raise ValueError("bath_frequencies are needed to read occupations from the state")
        occ = occupation_profile(state, bath_frequencies)
    re, im, bre, bim = rates_at(j, freqs, omega_max, occ, h)
    return RateTable(freqs, re, im, bre, bim, qualifies, diags)


def lindblad_rhs(rho: np.ndarray, rates: RateTable, jumps: JumpDecomposition,
                 hamiltonian: np.ndarray | None = None) -> np.ndarray:
    """``-i[H_S, rho] + sum_w { Gamma_B [[L(w), rho], L^+(w)] + Gamma [L(w) rho, L^+(w)] + h.c. }``."""
    if not rates.qualifies:
        raise ValueError("state does not satisfy the Lindblad condition; rates are not applicable")
    if len(rates.frequencies) != len(jumps) or np.max(np.abs(rates.frequencies - jumps.frequencies), initial=0.0) > MERGE_TOL:
        raise ValueError("rate table and jump decomposition do not match")
    rho = np.asarray(rho, dtype=complex)
    gam, gam_b = rates.generator_coefficients()
    out = np.zeros_like(rho)
    for w, lw, g, gb in zip(jumps.frequencies, jumps.operators, gam, gam_b):
        ld = lw.conj().T
        term = g * ((lw @ rho) @ ld - ld @ (lw @ rho))
        if gb != 0:
            c = lw @ rho - rho @ lw
            term = term + gb * (c @ ld - ld @ c)
        out += term + term.conj().T
    if hamiltonian is not None:
        h = np.asarray(hamiltonian, dtype=complex)
        out += -1j * (h @ rho - rho @ h)
    return out
