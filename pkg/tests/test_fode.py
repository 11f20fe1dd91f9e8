import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfcx

from fmhnn import (
    ConfigError,
    ConvolutionMode,
    DomainError,
    FractionalOrder,
    IntegrationError,
    MLArgs,
    SolverConfig,
    SystemDef,
    abm_weights,
    mittag_leffler,
    solve_abm,
)
from fmhnn._history import History, first_corrector_weight, lag_weights


# --- Mittag-Leffler oracles -------------------------------------------------

@pytest.mark.parametrize("z", [-50.0, -10.0, -1.0, 0.0, 0.5, 3.0])
def test_ml_alpha_one_is_exp(z):
    assert mittag_leffler(1.0, 1.0, z) == pytest.approx(math.exp(z), rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("x", [0.1, 1.0, 2.0, 5.0])
def test_ml_half_is_scaled_erfc(x):
    # E_{1/2}(-x) = exp(x^2) erfc(x)
    assert mittag_leffler(0.5, 1.0, -x) == pytest.approx(erfcx(x), rel=1e-12)


@pytest.mark.parametrize("x", [0.3, 2.0, 4.0])
def test_ml_alpha_two_is_cos(x):
    assert mittag_leffler(2.0, 1.0, -x * x) == pytest.approx(math.cos(x), abs=1e-12)


def test_ml_beta_two_alpha_one():
    # E_{1,2}(z) = (e^z - 1)/z
    z = -3.0
    assert mittag_leffler(1.0, 2.0, z) == pytest.approx(math.expm1(z) / z, rel=1e-13)


def test_ml_zero_argument():
    assert mittag_leffler(0.7, 1.0, 0.0) == 1.0
    assert mittag_leffler(0.7, 3.0, 0.0) == pytest.approx(0.5)


def test_ml_complex_argument():
    z = 1j * 2.0
    assert mittag_leffler(1.0, 1.0, z) == pytest.approx(complex(math.cos(2), math.sin(2)), abs=1e-13)


def test_ml_large_negative_fractional():
    # asymptotics: E_a(-x) ~ x^-1 / Gamma(1 - a)
    x = 50.0
    approx = 1 / (x * math.gamma(0.2)) - 1 / (x**2 * math.gamma(-0.6))
    assert mittag_leffler(0.8, 1.0, -x) == pytest.approx(approx, rel=1e-3)


def test_ml_domain_errors():
    with pytest.raises(DomainError):
        mittag_leffler(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 1.0, math.inf)
    with pytest.raises(DomainError):
        mittag_leffler(0.1, 1.0, -50.0)


def test_mlargs_evaluates():
    assert MLArgs(1.0, 1.0, -1.0).evaluate() == pytest.approx(math.exp(-1))
    with pytest.raises(DomainError):
        MLArgs(-1.0, 1.0, 0.0)


# --- weights ------------------------------------------------------------------

def _naive_weights(alpha, n, h):
    b = np.array([h**alpha / alpha * ((n - j) ** alpha - (n - 1 - j) ** alpha) for j in range(n)])
    a = np.empty(n + 1)
    a[0] = (n - 1) ** (alpha + 1) - (n - 1 - alpha) * n**alpha
    for j in range(1, n):
        a[j] = (n - j + 1) ** (alpha + 1) - 2 * (n - j) ** (alpha + 1) + (n - j - 1) ** (alpha + 1)
    a[n] = 1.0
    return b, a * h**alpha / (alpha * (alpha + 1))


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.93, 1.0])
@pytest.mark.parametrize("n", [1, 2, 7, 40])
def test_abm_weights_match_closed_form(alpha, n):
    b, a = abm_weights(alpha, n, 0.1)
    bn, an = _naive_weights(alpha, n, 0.1)
    np.testing.assert_allclose(b, bn, rtol=1e-12)
    np.testing.assert_allclose(a, an, rtol=1e-10, atol=1e-15)


@given(alpha=st.floats(0.05, 1.0), n=st.integers(1, 500))
def test_weight_sums_integrate_constants(alpha, n):
    # both rules are exact for f = 1: sum of weights = t_n^a / a
    b, a = abm_weights(alpha, n, 1.0)
    exact = n**alpha / alpha
    assert math.fsum(b) == pytest.approx(exact, rel=1e-10)
    assert math.fsum(a) == pytest.approx(exact, rel=1e-10)


@given(alpha=st.floats(0.05, 1.0), n=st.integers(2, 400))
def test_weights_positive(alpha, n):
    b, a = abm_weights(alpha, n)
    assert np.all(b > 0)
    assert np.all(a > 0)


def test_lag_weights_large_lag_no_cancellation():
    # for large k, B[k] ~ a k^(a-1); naive differencing loses all digits here
    B, A = lag_weights(0.5, 10**7)
    k = 10**7
    assert B[k] == pytest.approx(0.5 * k**-0.5, rel=1e-6)
    assert A[k] == pytest.approx(1.5 * 0.5 * k**-0.5, rel=1e-6)


def test_first_corrector_weight_at_one():
    assert first_corrector_weight(0.6, 1) == pytest.approx(0.6)


def test_abm_weights_rejects_bad_n():
    with pytest.raises(DomainError):
        abm_weights(0.5, 0)


# --- configuration --------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.01, math.nan])
def test_fractional_order_bounds(alpha):
    with pytest.raises((DomainError, ConfigError)):
        FractionalOrder(alpha)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"step_size": 0.0},
        {"step_size": -1.0},
        {"t_end": 1.0, "step_size": 0.3},
        {"t_end": 1e9, "step_size": 1e-3},
        {"convolution_mode": "bogus"},
        {"corrector_iterations": 0},
        {"divergence_threshold": 0.0},
        {"backend": "gpu"},
    ],
)
def test_solver_config_rejects(kwargs):
    with pytest.raises(ConfigError):
        SolverConfig(**kwargs)


def test_solver_config_defaults():
    cfg = SolverConfig()
    assert cfg.n_steps == 20000
    assert cfg.convolution_mode is ConvolutionMode.DIRECT


# --- solver -----------------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9, 1.0])
def test_relaxation_matches_mittag_leffler(relaxation, alpha):
    cfg = SolverConfig(step_size=0.01, t_end=5.0)
    tr = solve_abm(relaxation, [1.0], alpha, cfg)
    idx = np.arange(0, len(tr), 50)
    exact = np.array([mittag_leffler(alpha, 1.0, -(t**alpha)) for t in tr.times[idx]])
    assert np.max(np.abs(tr.states[idx, 0] - exact)) < 5e-3


def test_alpha_one_reduces_to_heun(relaxation):
    h = 0.1
    tr = solve_abm(relaxation, [1.0], 1.0, SolverConfig(step_size=h, t_end=1.0))
    # PECE trapezoidal growth factor for x' = -x, iterated from y0 with full history:
    y = [1.0]
    F = [-1.0]
    for m in range(1, 11):
        pred = 1.0 + h * sum(F)
        corr = 1.0 + h / 2 * (F[0] + 2 * sum(F[1:]) - pred)
        y.append(corr)
        F.append(-corr)
    np.testing.assert_allclose(tr.states[:, 0], y, rtol=1e-13)


def test_zero_rhs_keeps_state():
    zero = SystemDef(3, lambda t, x, p: np.zeros(3))
    tr = solve_abm(zero, [1.0, -2.0, 3.0], 0.6, SolverConfig(step_size=0.1, t_end=2.0))
    assert np.all(tr.states == np.array([1.0, -2.0, 3.0]))


def test_time_dependent_rhs():
    # D^a x = Gamma(2)/Gamma(2-a) t^(1-a) has solution x = t (f depends on t only)
    a = 0.6
    sysd = SystemDef(1, lambda t, x, p: np.array([math.gamma(2) / math.gamma(2 - a) * t ** (1 - a)]))
    tr = solve_abm(sysd, [0.0], a, SolverConfig(step_size=0.01, t_end=1.0))
    assert abs(tr.states[-1, 0] - 1.0) < 1e-3


def test_divergence_is_flagged():
    blow = SystemDef(1, lambda t, x, p: x * x)
    tr = solve_abm(blow, [1.0], 1.0, SolverConfig(step_size=0.01, t_end=5.0, divergence_threshold=100.0))
    assert tr.diverged
    assert tr.diverged_at == len(tr) - 1
    assert abs(tr.states[-1, 0]) > 100.0


def test_nonfinite_rhs_raises():
    bad = SystemDef(1, lambda t, x, p: np.array([math.nan]))
    with pytest.raises(IntegrationError):
        solve_abm(bad, [1.0], 0.5, SolverConfig(step_size=0.1, t_end=1.0))


def test_initial_state_length_checked(relaxation):
    with pytest.raises(ConfigError):
        solve_abm(relaxation, [1.0, 2.0], 0.5, SolverConfig(step_size=0.1, t_end=1.0))


@pytest.mark.parametrize("alpha", [0.4, 0.8, 1.0])
@pytest.mark.parametrize("block", [1, 4, 16, 64])
def test_fft_mode_matches_direct(relaxation, alpha, block):
    kw = dict(step_size=0.01, t_end=7.31)
    d = solve_abm(relaxation, [1.0], alpha, SolverConfig(**kw))
    f = solve_abm(relaxation, [1.0], alpha, SolverConfig(convolution_mode="fft_accelerated", block_size=block, **kw))
    np.testing.assert_allclose(f.states, d.states, rtol=0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.3, 1.0), c=st.floats(-5, 5), lam=st.floats(-1, 0.5))
def test_linear_problem_is_homogeneous(alpha, c, lam):
    lin = SystemDef(1, lambda t, x, p: lam * x)
    cfg = SolverConfig(step_size=0.02, t_end=2.0)
    one = solve_abm(lin, [1.0], alpha, cfg).states
    scaled = solve_abm(lin, [c], alpha, cfg).states
    np.testing.assert_allclose(scaled, c * one, rtol=1e-12, atol=1e-12)


def test_history_rescale_is_linear():
    h1 = History(0.7, 200, 2, block=8)
    h2 = History(0.7, 200, 2, block=8)
    rng = np.random.default_rng(0)
    M = np.array([[2.0, 0.5], [0.0, -1.0]])
    for m in range(120):
        f = rng.normal(size=2)
        h1.push(m, f)
        h2.push(m, f @ M)
    h1.rescale(119, lambda X: X @ M)
    for m in range(120, 201):
        f = rng.normal(size=2)
        h1.push(m, f)
        h2.push(m, f)
        np.testing.assert_allclose(h1.predictor_sum(m), h2.predictor_sum(m), atol=1e-10)
        np.testing.assert_allclose(h1.corrector_sum(m), h2.corrector_sum(m), atol=1e-10)
