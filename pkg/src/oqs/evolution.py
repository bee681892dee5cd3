"""Integration of the component master equations and trajectory observables.

Each component ``rho^g`` of the reduced state obeys (eigenbasis of ``H_S``)

    d rho/dt = -i[H_S, rho] + A(t)[rho0(t), L^+] + A^(t)[L, rho0(t)]
               + [K_alpha rho, L^+] + [L, rho K_alpha^+]
               + [[K_B - K_C, X], L^+] + [[K_B' + K_D, X], L]

with ``rho0(t) = exp(-iH_S t) phi_s exp(iH_S t)`` the freely propagated initial
system factor and ``X = rho / T`` for components with non-zero bath trace ``T``
(``X = rho0(t)`` when ``T = 0``, which turns those terms into a source).
Dividing by ``T`` makes the equation invariant under rescaling
``phi_s -> c phi_s``, ``phi_B -> phi_B / c``.

The right-hand side is linear in ``rho`` with time-dependent coefficients, so
the integrator assembles per-time superoperators (row-major vectorisation,
``vec(A X B) = kron(A, B^T) vec(X)``) for blocks of the half-step grid and runs
classical fixed-step RK4 over all components at once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bath import BathModel
from .correlations import (
    CorrelationContext,
    alpha_kernel_eig,
    corr_A,
    corr_A_hat,
    memory_kernels_eig,
    pole_tables,
)
from .initial_state import InitialState
from .linalg import UnphysicalStateError, dagger, von_neumann_entropy

log = logging.getLogger(__name__)

TRACE_ZERO_TOL = 1e-12
DT_WARN = 0.1
PATHS = ("auto", "force_general", "force_equilibrium")


class NumericalInstabilityError(RuntimeError):
    """Non-finite values appeared during integration."""

    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite state at step {step} (t = {t:.6g})")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 2.5e-3
    t_max: float = 10.0
    record_stride: int = 1
    reduced_path: str = "auto"
    chunk_steps: int = 256

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        if self.reduced_path not in PATHS:
            raise ValueError(f"reduced_path must be one of {PATHS}")
        if self.chunk_steps < 1:
            raise ValueError("chunk_steps must be positive")

    @property
    def n_snapshots(self) -> int:
        # the small guard absorbs round-off in t_max / (dt * stride)
        return int(np.floor(self.t_max / (self.dt * self.record_stride) + 1e-9)) + 1

    @property
    def n_steps(self) -> int:
        return (self.n_snapshots - 1) * self.record_stride


@dataclass
class Trajectory:
    times: np.ndarray
    rho: np.ndarray
    components: np.ndarray
    populations: np.ndarray
    sigma_z: np.ndarray
    entropy: np.ndarray
    rate: np.ndarray
    trace_err: np.ndarray
    paths: tuple[str, ...] = field(default=())

    def __len__(self):
        return len(self.times)


# ---------------------------------------------------------------------------
# superoperator helpers (row-major vectorisation, batched over time)
# ---------------------------------------------------------------------------


def _sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> A X B`` for stacks ``(nt, d, d)``."""
    nt, d, _ = np.broadcast_shapes(a.shape, b.shape)
    a = np.broadcast_to(a, (nt, d, d))
    b = np.broadcast_to(b, (nt, d, d))
    return np.einsum("tij,tlk->tikjl", a, b).reshape(nt, d * d, d * d)


def _double_comm_super(k: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``X -> [[K, X], M] = K X M - X K M - M K X + M X K``."""
    eye = np.eye(k.shape[-1])[None]
    return _sandwich(k, m) - _sandwich(eye, k @ m) - _sandwich(m @ k, eye) + _sandwich(m, k)


def _double_comm(k, x, m):
    return (k @ x - x @ k) @ m - m @ (k @ x - x @ k)


def _comm(a, b):
    return a @ b - b @ a


# ---------------------------------------------------------------------------
# per-component data
# ---------------------------------------------------------------------------


@dataclass
class _Component:
    ctx: CorrelationContext
    phi_eig: np.ndarray
    trace: complex
    equilibrium: bool
    has_drive: bool


def _prepare(state: InitialState, system, bath: BathModel, path: str) -> tuple[CorrelationContext, list[_Component]]:
    if state.n_modes != bath.n_modes:
        raise ValueError(f"state has {state.n_modes} modes, bath has {bath.n_modes}")
    if state.dim != system.dim:
        raise ValueError(f"state dimension {state.dim} differs from system dimension {system.dim}")
    base = CorrelationContext.build(system.hamiltonian, system.coupling, bath)
    comps = []
    for term in state.terms:
        m = term.moments
        qualifies = m.nonequilibrium_zero()
        if path == "force_equilibrium" and not qualifies:
            raise ValueError(f"component {term.label!r} has non-equilibrium moments; reduced path not applicable")
        eq = qualifies if path == "auto" else path == "force_equilibrium"
        comps.append(
            _Component(
                ctx=base.for_moments(m),
                phi_eig=base.sd.to_eigenbasis(term.phi_s),
                trace=complex(m.T),
                equilibrium=eq,
                has_drive=not m.first_order_zero(),
            )
        )
    return base, comps


def _free(ctx: CorrelationContext, phi_eig: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``exp(-iH t) phi exp(iH t)`` in the eigenbasis, ``(nt, d, d)``."""
    return phi_eig[None] * np.exp(-1j * np.multiply.outer(times, ctx.gaps))


def _assemble(base: CorrelationContext, comps: list[_Component], times: np.ndarray):
    """Superoperators ``(n_comp, nt, d^2, d^2)`` and sources ``(n_comp, nt, d^2)``."""
    d = base.dim
    nt = len(times)
    L, Ld = base.L_eig[None], base.Ld_eig[None]
    eye = np.eye(d)[None]
    h = np.diag(base.sd.eigenvalues).astype(complex)[None]
    up, dn = pole_tables(base, times)
    ka = alpha_kernel_eig(base, times, up)
    common = -1j * (_sandwich(h, eye) - _sandwich(eye, h))
    common = common + _sandwich(ka, Ld) - _sandwich(Ld @ ka, eye)
    kad = dagger(ka)
    common = common + _sandwich(L, kad) - _sandwich(eye, kad @ L)
    supers = np.empty((len(comps), nt, d * d, d * d), dtype=complex)
    sources = np.zeros((len(comps), nt, d * d), dtype=complex)
    for i, c in enumerate(comps):
        k = memory_kernels_eig(c.ctx, times, equilibrium=c.equilibrium, poles=(up, dn))
        k1 = k["B"] - k["C"]
        k2 = k["Bp"] + k["D"]
        rho0 = _free(base, c.phi_eig, times)
        src = np.zeros((nt, d, d), dtype=complex)
        if c.has_drive:
            a = corr_A(c.ctx, times)[:, None, None]
            ah = corr_A_hat(c.ctx, times)[:, None, None]
            src += a * _comm(rho0, Ld) + ah * _comm(L, rho0)
        if abs(c.trace) > TRACE_ZERO_TOL:
            supers[i] = common + (_double_comm_super(k1, Ld) + _double_comm_super(k2, L)) / c.trace
        else:
            supers[i] = common
            src += _double_comm(k1, rho0, Ld) + _double_comm(k2, rho0, L)
        sources[i] = src.reshape(nt, d * d)
    return supers, sources


def rhs_gamma(rho: np.ndarray, t: float, system, bath: BathModel, term) -> np.ndarray:
    """Right-hand side of one component equation in the original basis (reference path).

    ``term`` is a :class:`~oqs.initial_state.GammaTerm`. This evaluates the
    generator directly with matrix products; :func:`evolve` uses the assembled
    superoperators instead.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (system.dim, system.dim):
        raise ValueError(f"rho has shape {rho.shape}, expected {(system.dim, system.dim)}")
    ctx = CorrelationContext.build(system.hamiltonian, system.coupling, bath, term.moments)
    sd = ctx.sd
    times = np.array([float(t)])
    x = sd.to_eigenbasis(rho)
    L, Ld = ctx.L_eig, ctx.Ld_eig
    h = np.diag(sd.eigenvalues).astype(complex)
    ka = alpha_kernel_eig(ctx, times)[0]
    k = memory_kernels_eig(ctx, times)
    k1 = (k["B"] - k["C"])[0]
    k2 = (k["Bp"] + k["D"])[0]
    rho0 = _free(ctx, sd.to_eigenbasis(term.phi_s), times)[0]
    out = -1j * _comm(h, x) + _comm(ka @ x, Ld) + _comm(L, x @ dagger(ka))
    out = out + complex(corr_A(ctx, times)[0]) * _comm(rho0, Ld) + complex(corr_A_hat(ctx, times)[0]) * _comm(L, rho0)
    trace = complex(term.moments.T)
    xx = x / trace if abs(trace) > TRACE_ZERO_TOL else rho0
    out = out + _double_comm(k1, xx, Ld) + _double_comm(k2, xx, L)
    return sd.from_eigenbasis(out)


def emission_rate(drho: np.ndarray, sigma_z: np.ndarray | None = None) -> float:
    """``R = -Tr(sigma_z d rho/dt)`` with ``sigma_z = 2 P_exc - 1``.

    For two-level systems ``sigma_z`` defaults to ``diag(-1, 1)`` (ground state
    first); larger systems must pass it explicitly.
    """
    drho = np.asarray(drho, dtype=complex)
    if sigma_z is None:
        if drho.shape != (2, 2):
            raise ValueError("emission rate needs sigma_z for systems other than two-level")
        sigma_z = np.diag([-1.0, 1.0])
    sigma_z = np.asarray(sigma_z)
    if sigma_z.shape != drho.shape:
        raise ValueError(f"sigma_z shape {sigma_z.shape} does not match {drho.shape}")
    return float(-np.real(np.trace(sigma_z @ drho)))


def population(rho: np.ndarray, level: int) -> float:
    rho = np.asarray(rho)
    if not 0 <= level < rho.shape[0]:
        raise IndexError(f"level {level} outside 0..{rho.shape[0] - 1}")
    return float(np.real(rho[level, level]))


def _check_dt(system, bath: BathModel, dt: float):
    scale = max(float(np.max(np.abs(bath.omega), initial=0.0)), float(np.linalg.norm(system.hamiltonian, 2)))
    if dt * scale > DT_WARN:
        log.warning("dt * max frequency = %.3g exceeds %.2g; consider a smaller step", dt * scale, DT_WARN)


def evolve(state: InitialState, system, bath: BathModel, cfg: EvolutionConfig = EvolutionConfig()) -> Trajectory:
    """Integrate all components with RK4 and record ``rho_s`` and observables."""
    _check_dt(system, bath, cfg.dt)
    base, comps = _prepare(state, system, bath, cfg.reduced_path)
    sd = base.sd
    d = base.dim
    n_comp = len(comps)
    dt = cfg.dt
    n_steps = cfg.n_steps
    stride = cfg.record_stride
    n_snap = cfg.n_snapshots

    sigma_z = None
    if getattr(system, "excited_projector", None) is not None:
        sigma_z = system.sigma_z
    elif d == 2:
        sigma_z = np.diag([-1.0, 1.0])
    sz_eig = sd.to_eigenbasis(sigma_z) if sigma_z is not None else None

    y = np.stack([c.trace * c.phi_eig if abs(c.trace) > TRACE_ZERO_TOL else np.zeros((d, d), complex)
                  for c in comps]).reshape(n_comp, d * d)

    comp_eig = np.empty((n_snap, n_comp, d, d), dtype=complex)
    drho_eig = np.empty((n_snap, d, d), dtype=complex)

    def record(idx, y, s_now, b_now):
        comp_eig[idx] = y.reshape(n_comp, d, d)
        dy = np.einsum("gij,gj->gi", s_now, y) + b_now
        drho_eig[idx] = dy.sum(axis=0).reshape(d, d)

    # overflow is reported through the finite check below, with the step index
    with np.errstate(over="ignore", invalid="ignore"):
        step = 0
        chunk = cfg.chunk_steps
        while True:
            s1 = min(step + chunk, n_steps)
            times = 0.5 * dt * np.arange(2 * step, 2 * s1 + 1)
            supers, sources = _assemble(base, comps, times)
            for s in range(step, s1 + 1):
                j = 2 * (s - step)
                if s % stride == 0:
                    record(s // stride, y, supers[:, j], sources[:, j])
                if s == s1:
                    break
                a0, b0 = supers[:, j], sources[:, j]
                a1, b1 = supers[:, j + 1], sources[:, j + 1]
                a2, b2 = supers[:, j + 2], sources[:, j + 2]
                k1 = np.einsum("gij,gj->gi", a0, y) + b0
                k2 = np.einsum("gij,gj->gi", a1, y + 0.5 * dt * k1) + b1
                k3 = np.einsum("gij,gj->gi", a1, y + 0.5 * dt * k2) + b1
                k4 = np.einsum("gij,gj->gi", a2, y + dt * k3) + b2
                y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                if not np.all(np.isfinite(y)):
                    raise NumericalInstabilityError(s + 1, (s + 1) * dt)
            step = s1
            if step >= n_steps:
                break

    u = sd.vectors
    comps_orig = np.einsum("ij,sgjk,lk->sgil", u, comp_eig, u.conj())
    rho = comps_orig.sum(axis=1)
    times = dt * stride * np.arange(n_snap)
    pops = np.real(np.einsum("sii->si", rho))
    trace_err = np.abs(np.einsum("sii->s", rho) - 1.0)
    if sz_eig is not None:
        rho_eig = comp_eig.sum(axis=1)
        sz = np.real(np.einsum("ij,sji->s", sz_eig, rho_eig))
        rate = -np.real(np.einsum("ij,sji->s", sz_eig, drho_eig))
    else:
        sz = np.full(n_snap, np.nan)
        rate = np.full(n_snap, np.nan)
    entropy = np.empty(n_snap)
    unphysical = []
    for i, r in enumerate(rho):
        try:
            entropy[i] = von_neumann_entropy(0.5 * (r + r.conj().T))
        except UnphysicalStateError:
            unphysical.append(i)
            entropy[i] = np.nan
    if unphysical:
        worst = min(np.linalg.eigvalsh(0.5 * (rho[i] + rho[i].conj().T))[0] for i in unphysical)
        log.warning("entropy undefined at %d of %d snapshots from t=%.6g on (smallest eigenvalue %.3e)",
                    len(unphysical), n_snap, times[unphysical[0]], worst)
    paths = tuple("equilibrium" if c.equilibrium else "general" for c in comps)
    return Trajectory(times, rho, comps_orig, pops, sz, entropy, rate, trace_err, paths)
