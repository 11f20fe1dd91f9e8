import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fmhnn import DomainError, SolverConfig, SystemDef, Trajectory, solve_abm
from fmhnn.dynamics import (
    AttractorClass,
    AttractorKind,
    BifurcationScan,
    ClassifierConfig,
    DivergenceError,
    bifurcation_scan,
    bifurcation_sweep,
    classify_attractor,
    find_peaks,
    lyapunov_spectrum,
    multistability_probe,
    write_lyapunov_csv,
    write_scan_csv,
)

FFT = dict(convolution_mode="fft_accelerated")


def _traj(x, h=0.01, diverged_at=None):
    x = np.asarray(x, dtype=float)
    states = np.column_stack([x, x, x])
    return Trajectory(np.arange(len(x)) * h, states, diverged_at)


@settings(max_examples=30)
@given(m=st.integers(1, 30), h=st.sampled_from([0.001, 0.005, 0.01, 0.0137]))
def test_peak_count_on_sine(m, h):
    t = np.arange(0, m + h / 2, h)
    assert abs(len(find_peaks(np.sin(2 * np.pi * t))) - m) <= 1


def test_peaks_are_strict():
    assert list(find_peaks([0, 1, 1, 0, 2, 0])) == [4]
    assert len(find_peaks([1.0, 2.0])) == 0


def test_constant_is_fixed_point():
    assert classify_attractor(_traj(np.full(500, 3.0))).kind is AttractorKind.FIXED_POINT


def test_sinusoid_is_period_one():
    t = np.arange(0, 100, 0.01)
    assert classify_attractor(_traj(np.sin(2 * np.pi * t / 3))) == AttractorClass(AttractorKind.PERIODIC, 1)


def test_two_tone_is_period_two():
    t = np.arange(0, 200, 0.01)
    x = np.sin(2 * np.pi * t) + 0.3 * np.sin(np.pi * t)
    assert classify_attractor(_traj(x)) == AttractorClass(AttractorKind.PERIODIC, 2)


def test_diverged_flag_wins():
    assert classify_attractor(_traj(np.zeros(10), diverged_at=9)).kind is AttractorKind.DIVERGENT


def test_aperiodic_peaks_are_chaotic():
    rng = np.random.default_rng(0)
    t = np.arange(0, 400, 0.01)
    x = np.sin(2 * np.pi * t) * (1 + 0.2 * np.interp(t, np.arange(0, 401), rng.uniform(size=401)))
    assert classify_attractor(_traj(x)).kind is AttractorKind.CHAOTIC


def test_few_peaks_undetermined():
    t = np.arange(0, 10, 0.01)
    x = t * np.sin(2 * np.pi * t / 2.5)
    assert classify_attractor(_traj(x)).kind is AttractorKind.UNDETERMINED


def test_attractor_class_round_trip():
    for c in (AttractorClass(AttractorKind.PERIODIC, 4), AttractorClass(AttractorKind.CHAOTIC)):
        assert AttractorClass.parse(str(c)) == c
    with pytest.raises(ValueError):
        AttractorClass(AttractorKind.PERIODIC, 0)


def test_classifier_config_validation():
    with pytest.raises(DomainError):
        ClassifierConfig(transient_fraction=1.0)
    with pytest.raises(DomainError):
        ClassifierConfig(max_period=0)


def test_stable_regime_is_fixed_point(default_system):
    # delta = -8 lies in the region where both quadratic roots have negative real part
    tr = solve_abm(default_system, [0.01, -0.01, -8.0], 0.5, SolverConfig(t_end=100, **FFT))
    assert classify_attractor(tr).kind is AttractorKind.FIXED_POINT


def test_fixed_point_survives_longer_horizon(default_system):
    for T in (100, 200):
        tr = solve_abm(default_system, [0.01, 0.0, -18.0], 0.93, SolverConfig(t_end=T, **FFT))
        assert classify_attractor(tr).kind is AttractorKind.FIXED_POINT


def test_sweep_validation(default_system):
    with pytest.raises(DomainError):
        bifurcation_sweep(default_system, 0.9, 0.8, 5, [0, 1e-6, 0])
    with pytest.raises(DomainError):
        bifurcation_sweep(default_system, 0.0, 0.8, 5, [0, 1e-6, 0])
    with pytest.raises(DomainError):
        bifurcation_sweep(default_system, 0.8, 0.9, 1, [0, 1e-6, 0])
    with pytest.raises(DomainError):
        bifurcation_scan(default_system, [0.9], [0, 1e-6, 0], observable_index=3)


def test_sweep_is_deterministic_and_ordered(default_system):
    cfg = SolverConfig(step_size=0.01, t_end=40)
    a = bifurcation_sweep(default_system, 0.95, 1.0, 3, [0, 1e-6, 0], cfg)
    b = bifurcation_sweep(default_system, 0.95, 1.0, 3, [0, 1e-6, 0], cfg, workers=3)
    np.testing.assert_array_equal(a.alpha_grid, [0.95, 0.975, 1.0])
    assert a.classes == b.classes
    for x, y in zip(a.samples, b.samples):
        np.testing.assert_array_equal(x, y)


def test_scan_invariants():
    with pytest.raises(DomainError):
        BifurcationScan([0.9, 0.8], [[], []], [None, None])
    with pytest.raises(DomainError):
        BifurcationScan([0.9], [[], []], [None])


def test_scan_csv_long_format():
    scan = BifurcationScan(
        [0.9, 1.0],
        [np.zeros(0), np.array([1.0, 2.0])],
        [AttractorClass(AttractorKind.DIVERGENT), AttractorClass(AttractorKind.PERIODIC, 2)],
    )
    buf = io.StringIO()
    write_scan_csv(scan, buf)
    assert buf.getvalue().splitlines() == ["alpha,class,value", "0.9,divergent,", "1,periodic(2),1", "1,periodic(2),2"]


def test_initial_condition_sensitivity(default_system):
    cfg = SolverConfig(t_end=400, **FFT)
    starts = [(0.5, -0.5, 0.5), (0.5, -1.0, 1.0), (0.5, -0.7, 0.7)]
    grid = np.round(np.arange(0.96, 1.0001, 0.008), 3)
    seqs = [tuple(map(str, bifurcation_scan(default_system, grid, x0, cfg).classes)) for x0 in starts]
    assert len(set(seqs)) >= 2


# --- Lyapunov ---------------------------------------------------------------

def _linear(diag):
    A = np.diag(diag)
    return SystemDef(len(diag), lambda t, x, p: A @ x, jacobian=lambda x, p: A)


@pytest.mark.parametrize("diag", [(-1.0, -2.0), (-0.5, -3.0, -0.1)])
def test_lyapunov_linear_oracle(diag):
    spec = lyapunov_spectrum(_linear(diag), 1.0, np.ones(len(diag)), SolverConfig(t_end=200, **FFT))
    np.testing.assert_allclose(spec.exponents, sorted(diag, reverse=True), atol=0.05)
    assert spec.meta["memory"] == "restart"


def test_lyapunov_nonnormal_linear():
    A = np.array([[-1.0, 5.0], [0.0, -2.0]])
    sysd = SystemDef(2, lambda t, x, p: A @ x, jacobian=lambda x, p: A)
    spec = lyapunov_spectrum(sysd, 1.0, [1.0, 1.0], SolverConfig(t_end=200, **FFT))
    np.testing.assert_allclose(spec.exponents, [-1.0, -2.0], atol=0.05)


def test_lyapunov_fractional_linear_decays_slowly():
    # Mittag-Leffler decay is algebraic, so finite-time exponents shrink toward zero
    spec = lyapunov_spectrum(_linear((-1.0, -2.0)), 0.9, [1.0, 1.0], SolverConfig(t_end=100, **FFT))
    assert np.all(spec.exponents < 0)
    assert np.all(spec.exponents > -1.0)
    assert spec.meta["memory"] == "full"


def test_lyapunov_sorted_and_sum_matches_trace(default_system):
    spec = lyapunov_spectrum(default_system, 1.0, [0, 1e-6, 0], SolverConfig(t_end=200, **FFT), transient=50)
    assert list(spec.exponents) == sorted(spec.exponents, reverse=True)
    assert spec.exponents[0] <= 0.02
    assert spec.exponents.sum() == pytest.approx(spec.trace_average, rel=0.05)


def test_lyapunov_divergent_base():
    blow = SystemDef(1, lambda t, x, p: x * x, jacobian=lambda x, p: np.array([[2 * x[0]]]))
    with pytest.raises(DivergenceError) as err:
        lyapunov_spectrum(blow, 1.0, [1.0], SolverConfig(step_size=0.01, t_end=5, divergence_threshold=100))
    assert err.value.step > 0


def test_lyapunov_csv():
    buf = io.StringIO()
    spec = lyapunov_spectrum(_linear((-1.0,)), 1.0, [1.0], SolverConfig(step_size=0.01, t_end=10))
    write_lyapunov_csv(spec, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "exponent_index,value"
    assert lines[1].startswith("1,-0.99")


# --- multistability -----------------------------------------------------------

def test_probe_determinism(default_system):
    cfg = SolverConfig(t_end=50, **FFT)
    res = multistability_probe(default_system, 0.93, [(0, 0.5, -6), (0, 0.5, -6)], cfg)
    assert res[0].attractor == res[1].attractor
    np.testing.assert_array_equal(res[0].terminal_state, res[1].terminal_state)


def test_probe_stable_case(default_system):
    res = multistability_probe(default_system, 0.93, [(0.01, 0.0, -18.0)], SolverConfig(t_end=100, **FFT))
    assert res[0].attractor.kind is AttractorKind.FIXED_POINT


def test_probe_needs_starts(default_system):
    with pytest.raises(DomainError):
        multistability_probe(default_system, 0.93, [])
