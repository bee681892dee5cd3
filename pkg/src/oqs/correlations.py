"""Bath correlation functions and the memory operators of the component equations.

Every memory operator is a mode sum of one-pole time integrals

    I(x, t) = int_0^t exp(-i x (t - tau)) dtau = (1 - exp(-i x t)) / (i x),

weighted by couplings, moments and matrix elements of ``L`` or ``L^+`` in the
eigenbasis of ``H_S`` (Bohr frequencies ``D_ab = e_a - e_b``):

    K_alpha[a,b] = L_ab    sum_q  g_q^2 I(w_q + D_ab)
    K_B[a,b]     = L_ab    sum_qq' g_q g_q' V_B[q,q'] e^{-i(w_q - w_q')t} I(w_q' + D_ab)
    K_B'[a,b]    = L^+_ab  sum_qq' g_q g_q' V_B[q,q'] e^{-i(w_q - w_q')t} I(D_ab - w_q)
    K_C[a,b]     = -L^+_ab sum_qq' g_q g_q' V_C[q,q'] e^{-i(w_q + w_q')t} I(D_ab - w_q')
    K_D[a,b]     = L_ab    sum_qq' g_q g_q' V_C^[q,q'] e^{+i(w_q + w_q')t} I(w_q' + D_ab)

``K_B`` and ``K_C`` are the integrals ``int_0^t B(t,tau) V_{tau-t} L dtau`` and
``int_0^t C(t,tau) V_{tau-t} L^+ dtau`` of the correlation functions below;
``K_B'`` and ``K_D`` are their partners acting from the other side (for a
self-adjoint component ``K_B' = K_B^+`` and ``K_D = -K_C^+``).

Pair moments are contracted through their diagonal + low-rank form, so a sum
over ``q, q'`` costs ``O(N * rank)`` rather than ``O(N^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bath import BathModel
from .initial_state import MomentSet, PairMoment
from .linalg import SpectralDecomposition, herm_eig

RESONANCE_TOL = 1e-12


def one_pole(x, t):
    """``I(x, t) = (1 - exp(-ixt)) / (ix)`` with the limit ``t`` for ``|x| < 1e-12``.

    Broadcasts over ``x`` and ``t``; ``expm1`` keeps small ``x t`` accurate.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    small = np.abs(x) < RESONANCE_TOL
    safe = np.where(small, 1.0, x)
    out = -np.expm1(-1j * safe * t) / (1j * safe)
    out = np.where(small, t.astype(complex), out)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class CorrelationContext:
    """Bath, ``H_S`` eigenbasis and coupling matrices (eigenbasis) for one run.

    ``moments`` is optional so one context can serve every component via
    :meth:`for_moments`.
    """

    bath: BathModel
    sd: SpectralDecomposition
    L_eig: np.ndarray
    Ld_eig: np.ndarray
    moments: MomentSet | None = None

    @classmethod
    def build(cls, hamiltonian, coupling, bath: BathModel, moments: MomentSet | None = None) -> "CorrelationContext":
        sd = herm_eig(hamiltonian)
        coupling = np.asarray(coupling, dtype=complex)
        if coupling.shape != (sd.dim, sd.dim):
            raise ValueError(f"coupling has shape {coupling.shape}, H_S has dimension {sd.dim}")
        if moments is not None and moments.n_modes != bath.n_modes:
            raise ValueError("moment arrays and bath disagree on the number of modes")
        l_eig = sd.to_eigenbasis(coupling)
        return cls(bath, sd, l_eig, l_eig.conj().T, moments)

    def for_moments(self, moments: MomentSet) -> "CorrelationContext":
        if moments.n_modes != self.bath.n_modes:
            raise ValueError("moment arrays and bath disagree on the number of modes")
        return replace(self, moments=moments)

    @property
    def dim(self) -> int:
        return self.sd.dim

    @property
    def gaps(self) -> np.ndarray:
        return self.sd.gaps

    def _m(self) -> MomentSet:
        if self.moments is None:
            raise ValueError("context carries no moments")
        return self.moments


# ---------------------------------------------------------------------------
# correlation functions
# ---------------------------------------------------------------------------


def corr_A(ctx: CorrelationContext, t):
    """``A(t) = i sum_q g_q exp(-i w_q t) V_A[q]``."""
    b = ctx.bath
    ph = np.exp(-1j * np.multiply.outer(np.asarray(t, float), b.omega))
    return 1j * ph @ (b.couplings * ctx._m().VA)


def corr_A_hat(ctx: CorrelationContext, t):
    """``A^(t) = -i sum_q g_q exp(+i w_q t) V_A^[q]``."""
    b = ctx.bath
    ph = np.exp(1j * np.multiply.outer(np.asarray(t, float), b.omega))
    return -1j * ph @ (b.couplings * ctx._m().VA_hat)


def _pair_sum(pm: PairMoment, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``sum_qq' u[..., q] M[q, q'] v[..., q']`` with ``M`` in diagonal + low-rank form."""
    out = np.einsum("...q,q,...q->...", u, pm.diag, v)
    if pm.rank:
        out = out + np.einsum("...r,...r->...", u @ pm.left, v @ pm.right.T)
        out = out - np.einsum("...q,q,...q->...", u, pm.lowrank_diag(), v)
    return out


def _check_times(t, tau):
    if np.any(np.asarray(tau) > np.asarray(t)) or np.any(np.asarray(tau) < 0):
        raise ValueError("correlation functions need 0 <= tau <= t")


def corr_B(ctx: CorrelationContext, t: float, tau: float) -> tuple[complex, complex]:
    """``B(t, tau) = sum_qq' g_q g_q' V_B[q,q'] exp(-i w_q t + i w_q' tau)``, split as (eq, neq).

    The equilibrium part keeps the diagonal ``q = q'`` and depends on ``t - tau`` only.
    """
    _check_times(t, tau)
    b, vb = ctx.bath, ctx._m().VB
    g, w = b.couplings, b.omega
    eq = complex(np.sum(g**2 * vb.diag * np.exp(-1j * w * (t - tau))))
    off = PairMoment(np.zeros_like(vb.diag), vb.left, vb.right)
    neq = complex(_pair_sum(off, g * np.exp(-1j * w * t), g * np.exp(1j * w * tau)))
    return eq, neq


def corr_C(ctx: CorrelationContext, t: float, tau: float) -> complex:
    """``C(t, tau) = -sum_qq' g_q g_q' V_C[q,q'] exp(-i w_q t - i w_q' tau)``."""
    _check_times(t, tau)
    b = ctx.bath
    g, w = b.couplings, b.omega
    return complex(-_pair_sum(ctx._m().VC, g * np.exp(-1j * w * t), g * np.exp(-1j * w * tau)))


# ---------------------------------------------------------------------------
# memory operators (eigenbasis, vectorised over time)
# ---------------------------------------------------------------------------


def _poles(ctx: CorrelationContext, times: np.ndarray, sign: int) -> np.ndarray:
    """``I(sign * w_q + D_ab, t)`` with shape ``(nt, N, d*d)``."""
    x = sign * ctx.bath.omega[:, None] + ctx.gaps.ravel()[None, :]
    return one_pole(x[None], times[:, None, None])


def alpha_kernel_eig(ctx: CorrelationContext, times, up: np.ndarray | None = None) -> np.ndarray:
    """``K_alpha`` in the eigenbasis, shape ``(nt, d, d)``."""
    times = np.atleast_1d(np.asarray(times, float))
    d = ctx.dim
    if up is None:
        up = _poles(ctx, times, +1)
    s = np.einsum("q,tqk->tk", ctx.bath.couplings**2, up)
    return s.reshape(-1, d, d) * ctx.L_eig


def pole_tables(ctx: CorrelationContext, times) -> tuple[np.ndarray, np.ndarray]:
    """``I(w_q + D_ab, t)`` and ``I(D_ab - w_q, t)``, each ``(nt, N, d*d)``; shareable across components."""
    times = np.atleast_1d(np.asarray(times, float))
    return _poles(ctx, times, +1), _poles(ctx, times, -1)


def memory_kernels_eig(ctx: CorrelationContext, times, equilibrium: bool = False,
                       poles: tuple[np.ndarray, np.ndarray] | None = None) -> dict[str, np.ndarray]:
    """All component-specific memory operators in the eigenbasis at ``times``.

    Returns ``{"B", "Bp", "C", "D"}`` arrays of shape ``(nt, d, d)``. With
    ``equilibrium=True`` only the diagonal part of ``V_B`` is used and ``C``,
    ``D`` are zero. ``poles`` may carry precomputed :func:`pole_tables`.
    """
    times = np.atleast_1d(np.asarray(times, float))
    m = ctx._m()
    g, w = ctx.bath.couplings, ctx.bath.omega
    d = ctx.dim
    nt = len(times)
    zero = np.zeros((nt, d, d), dtype=complex)
    b_zero, c_zero, d_zero = m.VB.is_zero(), m.VC.is_zero(), m.VC_hat.is_zero()
    if poles is not None:
        up, dn = poles
    else:
        up = _poles(ctx, times, +1) if not (b_zero and d_zero) else None
        dn = _poles(ctx, times, -1) if not (b_zero and c_zero) else None
    if equilibrium:
        wdiag = g**2 * m.VB.diag
        return {
            "B": np.einsum("q,tqk->tk", wdiag, up).reshape(nt, d, d) * ctx.L_eig,
            "Bp": np.einsum("q,tqk->tk", wdiag, dn).reshape(nt, d, d) * ctx.Ld_eig,
            "C": zero,
            "D": zero.copy(),
        } if not b_zero else {"B": zero, "Bp": zero.copy(), "C": zero.copy(), "D": zero.copy()}
    out = {}
    ph = np.exp(-1j * np.multiply.outer(times, w))  # (nt, N)
    gm = g * ph  # g_q exp(-i w_q t)
    gp = g * ph.conj()  # g_q exp(+i w_q t)
    if b_zero:
        out["B"] = zero
        out["Bp"] = zero.copy()
    else:
        s = _pair_sum(m.VB, gm[:, None, :], np.moveaxis(gp[:, :, None] * up, 1, 2))
        out["B"] = s.reshape(nt, d, d) * ctx.L_eig
        s = _pair_sum(m.VB, np.moveaxis(gm[:, :, None] * dn, 1, 2), gp[:, None, :])
        out["Bp"] = s.reshape(nt, d, d) * ctx.Ld_eig
    if c_zero:
        out["C"] = zero.copy()
    else:
        s = _pair_sum(m.VC, gm[:, None, :], np.moveaxis(gm[:, :, None] * dn, 1, 2))
        out["C"] = -s.reshape(nt, d, d) * ctx.Ld_eig
    if d_zero:
        out["D"] = zero.copy()
    else:
        s = _pair_sum(m.VC_hat, gp[:, None, :], np.moveaxis(gp[:, :, None] * up, 1, 2))
        out["D"] = s.reshape(nt, d, d) * ctx.L_eig
    return out


def _to_original(ctx: CorrelationContext, k_eig: np.ndarray) -> np.ndarray:
    u = ctx.sd.vectors
    return u @ k_eig @ u.conj().T


def memory_op_alpha(ctx: CorrelationContext, t: float) -> np.ndarray:
    """``int_0^t alpha(t - tau) V_{tau-t} L dtau`` in the original basis."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return _to_original(ctx, alpha_kernel_eig(ctx, [t])[0])


def memory_op_B(ctx: CorrelationContext, t: float) -> np.ndarray:
    """``int_0^t B(t, tau) V_{tau-t} L dtau`` in the original basis."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return _to_original(ctx, memory_kernels_eig(ctx, [t])["B"][0])


def memory_op_B_partner(ctx: CorrelationContext, t: float) -> np.ndarray:
    """``K_B'``: the ``B``-moment operator acting through ``L^+`` (``= K_B^+`` for Hermitian bath factors)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return _to_original(ctx, memory_kernels_eig(ctx, [t])["Bp"][0])


def memory_op_C(ctx: CorrelationContext, t: float) -> np.ndarray:
    """``int_0^t C(t, tau) V_{tau-t} L^+ dtau`` in the original basis."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return _to_original(ctx, memory_kernels_eig(ctx, [t])["C"][0])


def memory_op_C_partner(ctx: CorrelationContext, t: float) -> np.ndarray:
    """``K_D``: the two-creation-moment operator (``= -K_C^+`` for Hermitian bath factors)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return _to_original(ctx, memory_kernels_eig(ctx, [t])["D"][0])
