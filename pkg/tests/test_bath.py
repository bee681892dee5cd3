import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oqs.bath import (
    SpectralDensity,
    alpha_corr,
    discretize,
    eval_spectral_density,
    gaussian_packet,
    raw_packet_amplitudes,
)


def test_spectral_density_values():
    j = SpectralDensity()
    assert eval_spectral_density(j, 0.0) == 0.0
    assert eval_spectral_density(j, 1.0) == pytest.approx(0.005 * np.exp(-0.2), rel=1e-14)
    assert np.pi * j(1.0) == pytest.approx(0.012861, abs=1e-6)
    w = np.linspace(0, 20, 11)
    assert np.allclose(j(w), 0.005 * np.sqrt(w) * np.exp(-w / 5))
    with pytest.raises(ValueError):
        j(-1.0)
    with pytest.raises(ValueError):
        SpectralDensity(alpha=-1.0)


def test_discretize_grid_and_couplings():
    j = SpectralDensity()
    bath = discretize(j, 100.0, 300)
    assert bath.n_modes == 300
    assert bath.spacing == pytest.approx(1 / 3)
    assert bath.frequencies[0] == pytest.approx(1 / 3)
    assert bath.omega_max == pytest.approx(100.0)
    assert np.allclose(bath.couplings**2, j(bath.frequencies) * bath.spacing)
    with pytest.raises(ValueError):
        discretize(j, 10.0, 0)


def test_rotating_frame_shifts_dynamics_only():
    bath = discretize(SpectralDensity(), 10.0, 10)
    shifted = bath.in_rotating_frame(1.5)
    assert np.allclose(shifted.frequencies, bath.frequencies)
    assert np.allclose(shifted.omega, bath.frequencies - 1.5)


def test_alpha_corr_properties():
    bath = discretize(SpectralDensity(), 100.0, 300)
    assert alpha_corr(bath, 0.0) == pytest.approx(np.sum(bath.couplings**2))
    t = np.linspace(0, 5, 7)
    assert np.allclose(alpha_corr(bath, -t), np.conj(alpha_corr(bath, t)))
    # on a fine grid the discrete sum approaches int J(w) exp(-iwt) dw
    from scipy import integrate

    fine = discretize(SpectralDensity(), 100.0, 20000)
    re, _ = integrate.quad(lambda w: fine.density(w) * np.cos(w * 0.5), 0, 100, limit=400)
    assert alpha_corr(fine, 0.5).real == pytest.approx(re, rel=2e-3)


@settings(max_examples=25, deadline=None)
@given(k0=st.floats(0.5, 50.0), sigma=st.floats(0.05, 5.0))
def test_gaussian_packet_normalised_and_peaked(k0, sigma):
    bath = discretize(SpectralDensity(), 100.0, 300)
    p = gaussian_packet(bath, k0, sigma)
    assert p.norm == pytest.approx(1.0, abs=1e-12)
    peak = bath.frequencies[np.argmax(np.abs(p.amplitudes))]
    assert abs(peak - k0) <= bath.spacing


def test_gaussian_packet_shape_matches_raw_formula():
    bath = discretize(SpectralDensity(), 100.0, 300)
    raw = raw_packet_amplitudes(bath, 1.0, 1.0)
    p = gaussian_packet(bath, 1.0, 1.0).amplitudes
    assert np.allclose(p, raw / np.linalg.norm(raw))


def test_gaussian_packet_off_grid():
    bath = discretize(SpectralDensity(), 10.0, 30)
    with pytest.raises(ValueError):
        gaussian_packet(bath, 1e4, 0.1)
    with pytest.raises(ValueError):
        gaussian_packet(bath, 1.0, 0.0)
