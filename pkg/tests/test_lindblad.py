import numpy as np
import pytest
from scipy import integrate

from oqs.bath import SpectralDensity, discretize
from oqs.correlations import CorrelationContext, memory_op_alpha
from oqs.initial_state import VACUUM, FockOperator, GammaTerm, InitialState, single
from oqs.linalg import herm_eig
from oqs.lindblad import (
    decay_rate,
    excised_integral,
    jump_operators,
    lamb_shift_integral,
    lindblad_condition,
    lindblad_rhs,
    markov_rates,
    principal_value,
    rates_at,
)
from oqs.presets import build_example1, build_example2, two_level_system, v_atom_system


def _jumps(system):
    return jump_operators(herm_eig(system.hamiltonian), system.coupling)


def test_two_level_jump_operators():
    system = two_level_system(1.0)
    jumps = _jumps(system)
    assert np.allclose(sorted(jumps.frequencies), [-1.0, 1.0])
    sigma = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.allclose(jumps.operator(1.0), sigma)
    assert np.allclose(jumps.operator(-1.0), sigma.T)
    assert np.allclose(jumps.total(), system.coupling, atol=1e-12)
    assert not jumps.operator(3.0).any()


def test_commuting_coupling_gives_single_zero_frequency():
    h = np.diag([0.0, 1.0])
    jumps = jump_operators(herm_eig(h), np.diag([1.0, -1.0]))
    assert np.allclose(jumps.frequencies, [0.0])
    assert np.allclose(jumps.total(), np.diag([1.0, -1.0]))


@pytest.mark.parametrize("hermitian", [False, True])
def test_v_atom_decomposition_properties(hermitian):
    system = v_atom_system(1.0, 0.5, epsilon_l=0.01)
    coupling = system.coupling + system.coupling.conj().T if hermitian else system.coupling
    jumps = jump_operators(herm_eig(system.hamiltonian), coupling)
    assert np.allclose(jumps.total(), coupling, atol=1e-12)
    for i in range(len(jumps)):
        for k in range(i + 1, len(jumps)):
            assert abs(np.trace(jumps.operators[i].conj().T @ jumps.operators[k])) < 1e-12
    if hermitian:
        # L(-w) = L(w)^+ holds for a Hermitian coupling
        for w, op in zip(jumps.frequencies, jumps.operators):
            assert np.allclose(jumps.operator(-w), op.conj().T, atol=1e-12)


def test_degenerate_gaps_are_merged():
    system = v_atom_system(1.0, 1.0)
    jumps = _jumps(system)
    # the lowering-only coupling has a single merged channel at w = 1
    assert np.allclose(jumps.frequencies, [1.0])
    assert np.allclose(jumps.operator(1.0), system.coupling)


def test_decay_rate_reference_value():
    j = SpectralDensity()
    assert decay_rate(j, 1.0, 100.0) == pytest.approx(0.012861, abs=1e-6)
    with pytest.raises(ValueError):
        decay_rate(j, 0.0, 100.0)
    with pytest.raises(ValueError):
        decay_rate(j, 120.0, 100.0)
    # the maximum of pi J sits at s * w_c
    w = np.linspace(0.5, 6.0, 56)
    values = [decay_rate(j, x, 100.0) for x in w]
    assert w[int(np.argmax(values))] == pytest.approx(2.5)


def test_principal_value_matches_cauchy_weight_quadrature():
    j = SpectralDensity()
    for omega in (0.3, 1.0, 4.0):
        ref, _ = integrate.quad(j, 0.0, 100.0, weight="cauchy", wvar=omega, limit=400)
        assert lamb_shift_integral(j, omega, 100.0) == pytest.approx(ref, rel=1e-8)


def test_principal_value_of_simple_functions():
    # PV int_0^2 dv / (v - 1) = 0 and PV int_0^2 v / (v - 1) dv = 2
    assert principal_value(lambda v: 1.0, 1.0, 0.0, 2.0) == pytest.approx(0.0, abs=1e-10)
    assert principal_value(lambda v: v, 1.0, 0.0, 2.0) == pytest.approx(2.0, abs=1e-10)
    # outside the interval it is an ordinary integral
    assert principal_value(lambda v: 1.0, 3.0, 0.0, 2.0) == pytest.approx(np.log(1 / 3))
    with pytest.raises(ValueError):
        principal_value(lambda v: 1.0, 1.0, 0.0, 2.0, h=2.0)
    with pytest.raises(ValueError):
        principal_value(lambda v: 1.0, 1.0, 2.0, 0.0)


def test_principal_value_stable_under_excision_halving():
    j = SpectralDensity()
    f = lambda v: j(v)  # noqa: E731
    h = 0.2
    prev = principal_value(f, 1.0, 0.0, 100.0, h)
    while h > 1e-4:
        h /= 2
        cur = principal_value(f, 1.0, 0.0, 100.0, h)
        assert abs(cur - prev) < 1e-4 * abs(prev)
        prev = cur
    # without extrapolation the excised integral converges only linearly
    raw = excised_integral(f, 1.0, 0.0, 100.0, 0.2)
    assert abs(raw - prev) > abs(principal_value(f, 1.0, 0.0, 100.0, 0.2) - prev)


def test_zero_density_gives_zero_rates():
    jumps = _jumps(two_level_system(1.0))
    r = markov_rates(SpectralDensity(alpha=0.0), jumps, 10.0)
    assert not r.gamma_re.any() and not r.gamma_im.any()
    rho = np.array([[0.3, 0.2j], [-0.2j, 0.7]])
    assert np.allclose(lindblad_rhs(rho, r, jumps), 0)


def test_rates_at_arrays_and_support():
    j = SpectralDensity()
    re, im, bre, bim = rates_at(j, [0.5, 1.0], 100.0)
    assert re[1] == pytest.approx(0.0128605926, abs=1e-9)
    assert im[1] == pytest.approx(0.0128669425, abs=1e-9)
    assert not bre.any() and not bim.any()
    # occupation n(v) = 1 doubles nothing but copies the vacuum rates
    _, _, bre, bim = rates_at(j, [1.0], 100.0, occupation=lambda v: 1.0)
    assert bre[0] == pytest.approx(re[1]) and bim[0] == pytest.approx(im[1], rel=1e-9)
    with pytest.raises(ValueError):
        rates_at(j, [100.0], 100.0)


def test_long_time_memory_operator_tends_to_rates():
    j = SpectralDensity(0.005, 0.5, 5.0)
    bath = discretize(j, 30.0, 6000)
    system = two_level_system(1.0)
    ctx = CorrelationContext.build(system.hamiltonian, system.coupling, bath, None)
    jumps = _jumps(system)
    gam, _ = markov_rates(j, jumps, 30.0).generator_coefficients()
    target = sum(g * op for g, op in zip(gam, jumps.operators))
    k = memory_op_alpha(ctx, 50.0)
    assert np.max(np.abs(k - target)) < 2e-3 * np.max(np.abs(target))


def _vacuum_state(rho):
    return InitialState((GammaTerm.build(rho, FockOperator.vacuum(), 10),))


def test_lindblad_rhs_trace_free_and_hermitian(rng):
    system = two_level_system(1.0)
    bath = discretize(SpectralDensity(), 10.0, 10)
    jumps = _jumps(system)
    # mode 0 sits at w = 1, so the occupation profile is non-zero at the transition
    thermal = FockOperator({(VACUUM, VACUUM): 0.8, (single(0), single(0)): 0.2})
    state = InitialState((GammaTerm.build(np.diag([0.5, 0.5]).astype(complex), thermal, 10),))
    rates = markov_rates(bath.density, jumps, 10.0, state, bath.frequencies)
    assert rates.qualifies and rates.gamma_b_eq_re.any()
    for _ in range(5):
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = x @ x.conj().T
        rho /= np.trace(rho)
        out = lindblad_rhs(rho, rates, jumps, system.hamiltonian)
        assert abs(np.trace(out)) < 1e-14
        assert np.allclose(out, out.conj().T, atol=1e-14)


def test_vacuum_ground_state_is_stationary():
    system = two_level_system(1.0)
    jumps = _jumps(system)
    rates = markov_rates(SpectralDensity(), jumps, 10.0)
    ground = np.diag([1.0, 0.0]).astype(complex)
    # only the Lamb shift of the upward channel survives and it leaves |g><g| fixed
    assert np.allclose(lindblad_rhs(ground, rates, jumps, system.hamiltonian), 0, atol=1e-15)
    excited = np.diag([0.0, 1.0]).astype(complex)
    out = lindblad_rhs(excited, rates, jumps, system.hamiltonian)
    assert out[1, 1].real == pytest.approx(-2 * rates.gamma_re[list(jumps.frequencies).index(1.0)])


def test_lindblad_condition_and_refusal(default_bath):
    ok, report = lindblad_condition(_vacuum_state(np.diag([0.5, 0.5]).astype(complex)))
    assert ok and report.startswith("lindblad=yes")
    _, state = build_example1("NSL", default_bath)
    ok, report = lindblad_condition(state)
    assert not ok
    assert "V_A" in report and "V_B" in report
    system, dc = build_example2("DC", default_bath)
    assert lindblad_condition(dc)[0]
    _, sl = build_example2("SL", default_bath)
    assert not lindblad_condition(sl)[0]
    jumps = _jumps(system)
    rates = markov_rates(default_bath.density, jumps, default_bath.omega_max, sl, default_bath.frequencies)
    assert not rates.qualifies and rates.diagnostics
    with pytest.raises(ValueError):
        lindblad_rhs(np.eye(2) / 2, rates, jumps)
    with pytest.raises(ValueError):
        markov_rates(default_bath.density, jumps, default_bath.omega_max, sl)
