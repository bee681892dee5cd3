"""Bosonic environment: spectral density, discretisation and wave packets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpectralDensity:
    """``J(w) = alpha * w**s * exp(-w / omega_c)`` (sub-ohmic for ``s < 1``)."""

    alpha: float = 0.005
    s: float = 0.5
    omega_c: float = 5.0

    def __post_init__(self):
        if self.alpha < 0 or self.s <= 0 or self.omega_c <= 0:
            raise ValueError(f"invalid spectral density parameters {self}")

    def __call__(self, omega):
        return eval_spectral_density(self, omega)

    def scaled(self, factor: float) -> "SpectralDensity":
        return SpectralDensity(self.alpha * factor, self.s, self.omega_c)


def eval_spectral_density(j: SpectralDensity, omega):
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is only defined for omega >= 0")
    out = j.alpha * w**j.s * np.exp(-w / j.omega_c)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BathModel:
    """Discrete set of bath modes.

    ``frequencies`` are lab-frame mode frequencies; ``offset`` is subtracted from
    them in the dynamics (a rotating frame at the laser frequency, ``omega_L``).
    """

    frequencies: np.ndarray
    couplings: np.ndarray
    spacing: float
    offset: float = 0.0
    density: SpectralDensity | None = field(default=None, compare=False)

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=float)
        g = np.asarray(self.couplings, dtype=float)
        if w.shape != g.shape or w.ndim != 1:
            raise ValueError("frequencies and couplings must be 1-d arrays of equal length")
        if np.any(g < 0):
            raise ValueError("couplings must be non-negative")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "couplings", g)

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    @property
    def omega(self) -> np.ndarray:
        """Mode frequencies as they enter the dynamics."""
        return self.frequencies - self.offset

    @property
    def omega_max(self) -> float:
        return float(self.frequencies[-1])

    def in_rotating_frame(self, omega_l: float) -> "BathModel":
        return BathModel(self.frequencies, self.couplings, self.spacing, omega_l, self.density)

    def with_couplings(self, couplings) -> "BathModel":
        return BathModel(self.frequencies, np.asarray(couplings, float), self.spacing, self.offset, self.density)


def discretize(j: SpectralDensity, omega_max: float = 100.0, n: int = 300) -> BathModel:
    """Uniform grid ``w_q = q * dw`` (q = 1..n) with ``g_q**2 = J(w_q) dw``."""
    if n < 1 or omega_max <= 0:
        raise ValueError(f"need n >= 1 and omega_max > 0, got n={n}, omega_max={omega_max}")
    dw = omega_max / n
    w = dw * np.arange(1, n + 1)
    g = np.sqrt(eval_spectral_density(j, w) * dw)
    return BathModel(w, np.atleast_1d(g), dw, 0.0, j)


def alpha_corr(bath: BathModel, dt):
    """Vacuum correlation ``sum_q g_q**2 exp(-i w_q dt)``; vectorised over ``dt``."""
    dt = np.asarray(dt, dtype=float)
    out = np.exp(-1j * np.multiply.outer(dt, bath.omega)) @ bath.couplings**2
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GaussianPacket:
    amplitudes: np.ndarray
    center: float
    width: float

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def gaussian_packet(bath: BathModel, k0: float, sigma: float) -> GaussianPacket:
    """Single-photon packet ``G_k = sqrt(exp(-(w_k-k0)^2 / 2 sigma^2) / (2 pi sigma))``.

    Evaluated on the lab-frame grid, then rescaled to unit norm on that grid.
    """
    if sigma <= 0:
        raise ValueError("packet width must be positive")
    w = bath.frequencies
    # log-space keeps far-off-grid packets from silently underflowing to NaN
    log_raw = -((w - k0) ** 2) / (4.0 * sigma**2) - 0.5 * np.log(2.0 * np.pi * sigma)
    if np.max(log_raw) < np.log(1e-300):
        raise ValueError(f"packet centred at {k0} with width {sigma} lies entirely outside the bath grid")
    raw = np.exp(log_raw - np.max(log_raw))
    amps = raw / np.sqrt(np.sum(raw**2))
    return GaussianPacket(amps.astype(complex), float(k0), float(sigma))


def raw_packet_amplitudes(bath: BathModel, k0: float, sigma: float) -> np.ndarray:
    """Unnormalised packet amplitudes, as written before grid renormalisation."""
    w = bath.frequencies
    return np.sqrt(np.exp(-((w - k0) ** 2) / (2.0 * sigma**2)) / (sigma * 2.0 * np.pi))
