import numpy as np
import pytest

from fmhnn import COMPILED_AVAILABLE, DEFAULT_PARAMS, RingParams, SolverConfig, ring_system, solve_abm, two_neuron_system
from fmhnn import _backend
from fmhnn.models import pack_ring_state

needs_ext = pytest.mark.skipif(not COMPILED_AVAILABLE, reason="compiled kernels not built")

RING_X1 = [-2.48, -6.12, -5.90, -1.46, -1.07]
RING_X2 = [-4.48, -8.64, -3.06, -5.27, -2.01]
RING_PHI = [-6.76, -2.30, -4.55, -6.30, -8.02]


@needs_ext
@pytest.mark.parametrize("mode", ["direct", "fft_accelerated"])
@pytest.mark.parametrize("alpha", [0.6, 0.93, 1.0])
def test_two_neuron_backends_agree(mode, alpha):
    kw = dict(step_size=0.01, t_end=20.0, convolution_mode=mode)
    a = solve_abm(two_neuron_system(), [-4.5, 0.5, -4.5], alpha, SolverConfig(backend="compiled", **kw))
    b = solve_abm(two_neuron_system(), [-4.5, 0.5, -4.5], alpha, SolverConfig(backend="python", **kw))
    np.testing.assert_allclose(a.states, b.states, rtol=0, atol=1e-11)


@needs_ext
def test_ring_backends_agree():
    sysd = ring_system(RingParams(DEFAULT_PARAMS, 5, 1, 0.5))
    x0 = pack_ring_state(RING_X1, RING_X2, RING_PHI)
    kw = dict(step_size=0.01, t_end=10.0, convolution_mode="fft_accelerated")
    a = solve_abm(sysd, x0, 0.9, SolverConfig(backend="compiled", **kw))
    b = solve_abm(sysd, x0, 0.9, SolverConfig(backend="python", **kw))
    np.testing.assert_allclose(a.states, b.states, rtol=0, atol=1e-11)


@needs_ext
def test_divergence_reported_identically():
    kw = dict(step_size=0.005, t_end=100.0, convolution_mode="fft_accelerated")
    a = solve_abm(two_neuron_system(), [0.0, 0.5, 14.0], 0.93, SolverConfig(backend="compiled", **kw))
    b = solve_abm(two_neuron_system(), [0.0, 0.5, 14.0], 0.93, SolverConfig(backend="python", **kw))
    assert a.diverged_at == b.diverged_at is not None


def test_get_python_backend():
    assert _backend.get("python") is _backend._purepy
    assert _backend.get("auto") in (_backend._purepy, _backend._compiled)
