import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oqs.linalg import (
    NotHermitianError,
    UnphysicalStateError,
    commutator,
    dagger,
    fix_phases,
    herm_eig,
    interaction_transform,
    is_hermitian,
    trace_distance,
    von_neumann_entropy,
)

from conftest import random_density


def _random_hermitian(rng, d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return x + x.conj().T


def test_herm_eig_reconstructs_and_sorts(rng):
    for d in (1, 2, 3, 7):
        m = _random_hermitian(rng, d)
        sd = herm_eig(m)
        assert np.all(np.diff(sd.eigenvalues) >= 0)
        u = sd.vectors
        assert np.allclose(u.conj().T @ u, np.eye(d), atol=1e-12)
        assert np.allclose(sd.from_eigenbasis(np.diag(sd.eigenvalues)), m, atol=1e-10)
        assert np.allclose(sd.to_eigenbasis(m), np.diag(sd.eigenvalues), atol=1e-10)


def test_herm_eig_phase_convention(rng):
    sd = herm_eig(_random_hermitian(rng, 5))
    for j in range(5):
        col = sd.vectors[:, j]
        k = np.argmax(np.abs(col))
        assert abs(col[k].imag) < 1e-12 and col[k].real > 0


def test_herm_eig_diagonal_input():
    sd = herm_eig(np.diag([2.0, -1.0, 0.5]))
    assert np.allclose(sd.eigenvalues, [-1.0, 0.5, 2.0])
    assert np.allclose(np.abs(sd.vectors), np.eye(3)[:, [1, 2, 0]])


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        herm_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        herm_eig(np.zeros((2, 3)))


def test_fix_phases_is_idempotent(rng):
    v = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    once = fix_phases(v)
    assert np.allclose(fix_phases(once), once)


def test_interaction_transform(rng):
    h = _random_hermitian(rng, 3)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    sd = herm_eig(h)
    assert np.allclose(interaction_transform(a, sd, 0.0), a)
    w, v = np.linalg.eigh(h)
    t = 0.37
    u = v @ np.diag(np.exp(1j * w * t)) @ v.conj().T
    assert np.allclose(interaction_transform(a, sd, t), u @ a @ u.conj().T, atol=1e-10)
    # group property
    both = interaction_transform(interaction_transform(a, sd, 0.2), sd, 0.3)
    assert np.allclose(both, interaction_transform(a, sd, 0.5), atol=1e-10)


def test_entropy_reference_values():
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert von_neumann_entropy(np.eye(3) / 3) == pytest.approx(np.log(3), abs=1e-12)
    p = np.array([0.75, 0.25, 0.0])
    assert von_neumann_entropy(np.diag(p)) == pytest.approx(0.562335144618808, abs=1e-12)


def test_entropy_clips_round_off_and_rejects_unphysical():
    assert von_neumann_entropy(np.diag([1.0 + 5e-10, -5e-10])) == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(UnphysicalStateError):
        von_neumann_entropy(np.diag([1.1, -0.1]))
    with pytest.raises(UnphysicalStateError):
        von_neumann_entropy(np.diag([0.5, 0.4]))
    with pytest.raises(NotHermitianError):
        von_neumann_entropy(np.array([[0.5, 0.3], [0.0, 0.5]]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5))
def test_entropy_unitary_invariance(seed, d):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, d)
    u = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]
    assert von_neumann_entropy(u @ rho @ u.conj().T) == pytest.approx(von_neumann_entropy(rho), abs=1e-9)
    assert 0.0 <= von_neumann_entropy(rho) <= np.log(d) + 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 4))
def test_trace_distance_metric(seed, d):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density(rng, d) for _ in range(3))
    assert trace_distance(a, a) == pytest.approx(0.0, abs=1e-12)
    assert trace_distance(a, b) == pytest.approx(trace_distance(b, a), abs=1e-12)
    assert 0.0 <= trace_distance(a, b) <= 1.0 + 1e-12
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12


def test_trace_distance_orthogonal_pure_states():
    assert trace_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        trace_distance(np.eye(2) / 2, np.eye(3) / 3)


def test_small_helpers():
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.allclose(dagger(a), a.T)
    assert np.allclose(commutator(a, dagger(a)), np.diag([1.0, -1.0]))
    assert is_hermitian(a + dagger(a))
    assert not is_hermitian(a)
