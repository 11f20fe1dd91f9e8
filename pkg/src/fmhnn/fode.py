"""Caputo fractional ODE integration (Adams-Bashforth-Moulton) and Mittag-Leffler values.

The solver integrates ``D^a x = f(t, x)``, ``0 < a <= 1``, in its Volterra form

    x(t) = x0 + 1/Gamma(a) * int_0^t (t - s)^(a-1) f(s, x(s)) ds

with a product-rectangle predictor and a product-trapezoidal corrector on a
uniform grid. The full history is retained. For ``a = 1`` the method is the
classical second-order Adams (Heun / trapezoidal PECE) scheme.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

import mpmath
import numpy as np
from scipy.special import gammaln, rgamma

from ._history import History, lag_weights, first_corrector_weight, scales

__all__ = [
    "FodeError",
    "ConfigError",
    "IntegrationError",
    "DomainError",
    "FractionalOrder",
    "ConvolutionMode",
    "SolverConfig",
    "SystemDef",
    "Trajectory",
    "abm_weights",
    "solve_abm",
    "MLArgs",
    "mittag_leffler",
    "MAX_GRID_LENGTH",
]

#: hard cap on the number of grid points of a single solve
MAX_GRID_LENGTH = 100_000_000


class FodeError(Exception):
    """Base class for solver errors."""


class ConfigError(FodeError, ValueError):
    """Invalid solver configuration."""


class DomainError(FodeError, ValueError):
    """Argument outside the supported domain of an evaluation."""


class IntegrationError(FodeError):
    """The right-hand side produced a non-finite value.

    Attributes
    ----------
    step : int
        Grid index at which the offending evaluation happened.
    """

    def __init__(self, step: int, message: str = ""):
        self.step = int(step)
        super().__init__(message or f"non-finite right-hand side at step {step}")


@dataclass(frozen=True)
class FractionalOrder:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (math.isfinite(a) and 0.0 < a <= 1.0):
            raise DomainError(f"fractional order must lie in (0, 1], got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    def __float__(self) -> float:
        return self.alpha


class ConvolutionMode(str, enum.Enum):
    DIRECT = "direct"
    FFT = "fft_accelerated"


@dataclass(frozen=True)
class SolverConfig:
    """Uniform-grid solver settings.

    ``block_size`` is the base panel size of the FFT-accelerated history
    sum and is ignored in direct mode. ``backend`` picks the compiled kernel
    (``"compiled"``), the numpy implementation (``"python"``) or whichever is
    available (``"auto"``); it only matters for systems exposing a native
    model description.
    """

    step_size: float = 0.005
    t_end: float = 100.0
    convolution_mode: Union[ConvolutionMode, str] = ConvolutionMode.DIRECT
    divergence_threshold: float = 1e6
    corrector_iterations: int = 1
    block_size: int = 64
    backend: str = "auto"

    def __post_init__(self):
        try:
            mode = ConvolutionMode(self.convolution_mode)
        except ValueError:
            raise ConfigError(f"unknown convolution mode {self.convolution_mode!r}") from None
        object.__setattr__(self, "convolution_mode", mode)
        h, T = float(self.step_size), float(self.t_end)
        if not (math.isfinite(h) and h > 0):
            raise ConfigError("step_size must be a positive finite number")
        if not (math.isfinite(T) and T > 0):
            raise ConfigError("t_end must be a positive finite number")
        thr = float(self.divergence_threshold)
        if not thr > 0:
            raise ConfigError("divergence_threshold must be positive")
        if int(self.corrector_iterations) < 1:
            raise ConfigError("corrector_iterations must be >= 1")
        if int(self.block_size) < 1:
            raise ConfigError("block_size must be >= 1")
        if self.backend not in ("auto", "compiled", "python"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        object.__setattr__(self, "step_size", h)
        object.__setattr__(self, "t_end", T)
        object.__setattr__(self, "divergence_threshold", thr)
        object.__setattr__(self, "corrector_iterations", int(self.corrector_iterations))
        object.__setattr__(self, "block_size", int(self.block_size))
        self.n_steps  # validates the grid length

    @property
    def n_steps(self) -> int:
        ratio = self.t_end / self.step_size
        if not math.isfinite(ratio) or ratio + 1 > MAX_GRID_LENGTH:
            raise ConfigError(f"grid length {ratio:.3g} exceeds {MAX_GRID_LENGTH}")
        n = int(round(ratio))
        if n < 1 or abs(n - ratio) > 1e-6 * max(1.0, ratio):
            raise ConfigError("t_end must be an integer multiple of step_size")
        return n


@dataclass
class SystemDef:
    """A fractional system ``D^a x = rhs(t, x, params)``.

    ``native`` optionally describes the system to the compiled kernel as a
    tuple ``(b1, b2, b3, b4, k, d, n_nodes, p)``; solvers fall back to
    ``rhs`` when it is absent.
    """

    dimension: int
    rhs: Callable[[float, np.ndarray, Any], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray, Any], np.ndarray]] = None
    params: Any = None
    native: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise ConfigError("dimension must be positive")
        self.dimension = int(self.dimension)

    def f(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.rhs(t, x, self.params), dtype=float)

    def jac(self, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
        """Analytic Jacobian if available, central differences otherwise."""
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x, self.params), dtype=float)
        n = self.dimension
        J = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = eps
            J[:, i] = (self.f(0.0, x + e) - self.f(0.0, x - e)) / (2 * eps)
        return J


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    diverged_at: Optional[int] = None
    alpha: float = 1.0
    step_size: float = 0.0

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    def __len__(self) -> int:
        return len(self.times)


def _alpha(order) -> float:
    if isinstance(order, FractionalOrder):
        return order.alpha
    return FractionalOrder(order).alpha


def abm_weights(order, n_steps: int, step_size: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature weights for the output at grid index ``n_steps``.

    Returns ``(b, a)`` where ``b[j]``, ``j = 0..n-1``, are the
    product-rectangle (predictor) weights and ``a[j]``, ``j = 0..n``, the
    product-trapezoidal (corrector) weights, both for the kernel
    ``(t_n - s)^(a-1)`` without the ``1/Gamma(a)`` factor:

        b_j = h^a/a * ((n-j)^a - (n-1-j)^a)
        a_j = h^a/(a(a+1)) * {(n-1)^(a+1) - (n-1-a) n^a,   j = 0
                              (n-j+1)^(a+1) - 2(n-j)^(a+1) + (n-j-1)^(a+1)
                              1,                            j = n}
    """
    alpha = _alpha(order)
    n = int(n_steps)
    if n < 1:
        raise DomainError("n_steps must be >= 1")
    h = float(step_size)
    B, A = lag_weights(alpha, n)
    lags = n - np.arange(n)
    b = (h**alpha / alpha) * B[lags]
    a = np.empty(n + 1)
    a[0] = first_corrector_weight(alpha, n)
    a[1:n] = A[lags[1:]]
    a[n] = 1.0
    a *= h**alpha / (alpha * (alpha + 1.0))
    return b, a


def _abm_loop(f, y0, alpha, h, n_steps, block, iterations, threshold, t0=0.0):
    """Reference ABM time loop over a python right-hand side ``f(t, y)``."""
    dim = y0.shape[0]
    hist = History(alpha, n_steps, dim, block)
    cp, cc = scales(alpha, h)
    Y = np.empty((n_steps + 1, dim))
    Y[0] = y0
    f0 = np.asarray(f(t0, y0), dtype=float)
    if f0.shape != (dim,):
        raise ConfigError(f"rhs returned shape {f0.shape}, expected ({dim},)")
    if not np.all(np.isfinite(f0)):
        raise IntegrationError(0)
    hist.push(0, f0)
    for m in range(1, n_steps + 1):
        t = t0 + m * h
        y = y0 + cp * hist.predictor_sum(m)
        base = y0 + cc * hist.corrector_sum(m)
        for _ in range(iterations):
            fp = f(t, y)
            if not np.all(np.isfinite(fp)):
                raise IntegrationError(m)
            y = base + cc * fp
        Y[m] = y
        if np.max(np.abs(y)) > threshold:
            return Y[: m + 1], m
        fm = f(t, y)
        if not np.all(np.isfinite(fm)):
            raise IntegrationError(m)
        hist.push(m, fm)
    return Y, None


def solve_abm(system: SystemDef, x0, order, cfg: Optional[SolverConfig] = None) -> Trajectory:
    """Integrate ``system`` from ``x0`` on ``[0, cfg.t_end]``.

    Integration stops early, recording ``diverged_at``, as soon as the
    infinity norm of the state exceeds ``cfg.divergence_threshold``; the
    returned states then end at that row.

    Raises
    ------
    IntegrationError
        The right-hand side returned a non-finite value.
    ConfigError
        Mismatched initial state or invalid configuration.
    """
    from . import _backend

    cfg = cfg or SolverConfig()
    alpha = _alpha(order)
    y0 = np.array(x0, dtype=float).reshape(-1)
    if y0.shape[0] != system.dimension:
        raise ConfigError(f"x0 has length {y0.shape[0]}, system dimension is {system.dimension}")
    if not np.all(np.isfinite(y0)):
        raise ConfigError("x0 must be finite")
    n = cfg.n_steps
    h = cfg.step_size
    block = cfg.block_size if cfg.convolution_mode is ConvolutionMode.FFT else 0

    if system.native is not None and cfg.backend != "python":
        impl = _backend.get(cfg.backend)
        Y, div, bad = impl.abm_native(
            np.asarray(system.native, dtype=float), y0, alpha, h, n, block,
            cfg.corrector_iterations, cfg.divergence_threshold,
        )
        if bad >= 0:
            raise IntegrationError(bad)
        diverged = div if div >= 0 else None
    else:
        Y, diverged = _abm_loop(
            system.f, y0, alpha, h, n, block, cfg.corrector_iterations, cfg.divergence_threshold
        )
    times = np.arange(Y.shape[0]) * h
    return Trajectory(times=times, states=Y, diverged_at=diverged, alpha=alpha, step_size=h)


# --- Mittag-Leffler ---------------------------------------------------------

ML_MAX_TERMS = 2000


@dataclass(frozen=True)
class MLArgs:
    alpha: float
    beta: float
    z: Union[float, complex]

    def __post_init__(self):
        if not float(self.alpha) > 0:
            raise DomainError("alpha must be positive")

    def evaluate(self, max_terms: int = ML_MAX_TERMS):
        return mittag_leffler(self.alpha, self.beta, self.z, max_terms)

ML_TERM_EPS = 1e-16


def mittag_leffler(alpha: float, beta: float, z, max_terms: int = ML_MAX_TERMS):
    """``E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta)`` by direct summation.

    The series is summed in arbitrary precision, with the working precision
    chosen from the largest term, so cancellation for negative or complex
    ``z`` does not spoil the result. Summation stops once a term past the
    largest one drops below ``1e-16`` relative to the partial sum. If that has
    not happened within ``max_terms`` terms the argument is outside the
    supported range and :class:`DomainError` is raised. Arguments whose
    largest term is below 1e3 take a double-precision path (absolute error
    about 1e-13). With the default cap
    this covers ``|z| <= 50`` for ``alpha >= 0.7`` and ``|z| <= 5`` for
    ``alpha >= 0.1``.
    """
    alpha = float(alpha)
    beta = float(beta)
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    zc = complex(z)
    if not (math.isfinite(zc.real) and math.isfinite(zc.imag)):
        raise DomainError("z must be finite")
    if zc == 0:
        return _real_if(float(mpmath.rgamma(beta)), z)

    r = abs(zc)
    k = np.arange(max_terms, dtype=float)
    arg = alpha * k + beta
    with np.errstate(all="ignore"):
        logterm = k * math.log(r) - _loggamma_abs(arg)
    peak = float(np.max(logterm))
    k_peak = int(np.argmax(logterm))
    tail_ok = np.nonzero((k > k_peak) & (logterm < peak + math.log(ML_TERM_EPS) - 2.3 * 3))[0]
    if tail_ok.size == 0:
        raise DomainError(
            f"Mittag-Leffler series for alpha={alpha}, |z|={r:.3g} does not converge "
            f"within {max_terms} terms"
        )
    peak10 = max(peak, 0.0) / math.log(10)
    if peak10 <= 3.0:
        # mild cancellation: double precision keeps the absolute error near 1e-13
        kk = k[: int(tail_ok[0]) + 1]
        terms = (zc.real if zc.imag == 0 else zc) ** kk * rgamma(alpha * kk + beta)
        if zc.imag == 0:
            return _real_if(math.fsum(terms), z)
        return _real_if(complex(math.fsum(terms.real), math.fsum(terms.imag)), z)
    digits = int(peak10) + 25
    total = _ml_series(alpha, beta, zc, k_peak, max_terms, digits)
    for _ in range(6):
        # accept once a run with 20 more digits agrees to double precision
        check = _ml_series(alpha, beta, zc, k_peak, max_terms, digits + 20)
        if abs(check - total) <= 1e-17 * abs(check):
            total = check
            break
        digits, total = digits + 20, check
    out = complex(total) if isinstance(total, mpmath.mpc) else float(total)
    return _real_if(out, z)


def _ml_series(alpha, beta, zc, k_peak, max_terms, digits):
    with mpmath.workdps(digits):
        zm = mpmath.mpc(zc.real, zc.imag) if zc.imag else mpmath.mpf(zc.real)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        tiny = mpmath.mpf(10) ** (-digits)
        am, bm = mpmath.mpf(alpha), mpmath.mpf(beta)
        for kk in range(max_terms):
            term = power * mpmath.rgamma(am * kk + bm)
            total += term
            if kk > k_peak and abs(term) < ML_TERM_EPS * max(abs(total), tiny):
                return +total
            power *= zm
    raise DomainError("Mittag-Leffler series hit the term cap")


def _loggamma_abs(x: np.ndarray) -> np.ndarray:
    return gammaln(x)


def _real_if(value, z):
    if isinstance(z, complex) or np.iscomplexobj(z):
        return complex(value)
    return float(np.real(value))
