"""Attractor classification, bifurcation sweeps over the fractional order, and
finite-time Lyapunov spectra."""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._history import History, scales
from .fode import (
    ConvolutionMode,
    DomainError,
    IntegrationError,
    SolverConfig,
    SystemDef,
    Trajectory,
    solve_abm,
)

__all__ = [
    "AttractorKind",
    "AttractorClass",
    "ClassifierConfig",
    "BifurcationScan",
    "LyapunovSpectrum",
    "ProbeResult",
    "DivergenceError",
    "find_peaks",
    "classify_attractor",
    "bifurcation_sweep",
    "bifurcation_scan",
    "lyapunov_spectrum",
    "multistability_probe",
    "write_scan_csv",
    "write_lyapunov_csv",
]


class DivergenceError(IntegrationError):
    """The base trajectory left the divergence threshold."""


class AttractorKind(str, enum.Enum):
    FIXED_POINT = "fixed_point"
    PERIODIC = "periodic"
    CHAOTIC = "chaotic"
    DIVERGENT = "divergent"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class AttractorClass:
    kind: AttractorKind
    period: Optional[int] = None

    def __post_init__(self):
        if self.kind is AttractorKind.PERIODIC:
            if self.period is None or self.period < 1:
                raise ValueError("periodic attractors need a period >= 1")
        elif self.period is not None:
            raise ValueError(f"{self.kind.value} carries no period")

    def __str__(self) -> str:
        if self.kind is AttractorKind.PERIODIC:
            return f"periodic({self.period})"
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> "AttractorClass":
        text = text.strip()
        if text.startswith("periodic(") and text.endswith(")"):
            return cls(AttractorKind.PERIODIC, int(text[9:-1]))
        return cls(AttractorKind(text))


@dataclass(frozen=True)
class ClassifierConfig:
    """Thresholds for :func:`classify_attractor`.

    Attributes
    ----------
    transient_fraction : float
        Leading fraction of the trajectory discarded before classification.
    fixed_point_tol : float
        Post-transient range of the observable below which the orbit counts as
        a fixed point.
    peak_cluster_tol : float
        Absolute tolerance for two peaks to belong to the same group.
    max_period : int
        Largest period tried before an orbit with enough peaks is called
        chaotic.
    """

    transient_fraction: float = 0.5
    fixed_point_tol: float = 1e-2
    peak_cluster_tol: float = 1e-3
    max_period: int = 16

    def __post_init__(self):
        if not 0 <= self.transient_fraction < 1:
            raise DomainError("transient_fraction must lie in [0, 1)")
        if self.fixed_point_tol < 0 or self.peak_cluster_tol < 0:
            raise DomainError("tolerances must be non-negative")
        if self.max_period < 1:
            raise DomainError("max_period must be >= 1")


def find_peaks(x) -> np.ndarray:
    """Indices of strict interior local maxima of a 1-D sequence."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        return np.zeros(0, dtype=int)
    mid = x[1:-1]
    return np.flatnonzero((mid > x[:-2]) & (mid > x[2:])) + 1


def _post_transient(traj: Trajectory, observable_index: int, fraction: float) -> np.ndarray:
    x = np.asarray(traj.states)[:, observable_index]
    return x[int(math.floor(fraction * len(x))) :]


def _peak_period(v: np.ndarray, tol: float, max_period: int) -> Optional[int]:
    """Smallest ``k`` for which the peak sequence repeats every ``k`` peaks.

    Peaks are grouped by their index modulo ``k``; a group is tight when its
    consecutive members agree within ``tol``, which tolerates the slow drift a
    long memory imposes on otherwise periodic orbits.
    """
    for k in range(1, min(max_period, len(v) // 2) + 1):
        if np.all(np.abs(v[k:] - v[:-k]) <= tol):
            return k
    return None


def _classify_samples(post: np.ndarray, cfg: ClassifierConfig) -> tuple[AttractorClass, np.ndarray]:
    if post.size == 0 or np.ptp(post) < cfg.fixed_point_tol:
        return AttractorClass(AttractorKind.FIXED_POINT), np.zeros(0)
    peaks = post[find_peaks(post)]
    k = _peak_period(peaks, cfg.peak_cluster_tol, cfg.max_period)
    if k is not None:
        return AttractorClass(AttractorKind.PERIODIC, k), peaks
    if len(peaks) > cfg.max_period:
        return AttractorClass(AttractorKind.CHAOTIC), peaks
    return AttractorClass(AttractorKind.UNDETERMINED), peaks


def classify_attractor(
    traj: Trajectory, observable_index: int = 2, cfg: Optional[ClassifierConfig] = None
) -> AttractorClass:
    """Label the post-transient behaviour of ``traj`` from one observable.

    Divergent if the trajectory was cut at the divergence threshold; a fixed
    point if the observable's range is below ``fixed_point_tol``; ``periodic(k)``
    if its strict local maxima fall into ``k`` groups repeating in order;
    chaotic if there are more than ``max_period`` maxima and no such grouping;
    undetermined otherwise.
    """
    if len(traj) == 0:
        raise DomainError("cannot classify an empty trajectory")
    if traj.diverged:
        return AttractorClass(AttractorKind.DIVERGENT)
    cfg = cfg or ClassifierConfig()
    post = _post_transient(traj, observable_index, cfg.transient_fraction)
    return _classify_samples(post, cfg)[0]


# --- bifurcation sweep ------------------------------------------------------


@dataclass
class BifurcationScan:
    alpha_grid: np.ndarray
    samples: list
    classes: list
    observable_index: int = 2

    def __post_init__(self):
        g = np.asarray(self.alpha_grid, dtype=float)
        if g.ndim != 1 or np.any(g <= 0) or np.any(g > 1) or np.any(np.diff(g) <= 0):
            raise DomainError("alpha grid must be strictly increasing inside (0, 1]")
        if not len(self.samples) == len(self.classes) == len(g):
            raise DomainError("samples and classes must match the alpha grid")
        self.alpha_grid = g

    def rows(self):
        """Long-format rows ``(alpha, class, value)``; divergent or sample-free points give one row with an empty value."""
        for a, vals, cls in zip(self.alpha_grid, self.samples, self.classes):
            if len(vals) == 0:
                yield a, str(cls), None
            for v in vals:
                yield a, str(cls), float(v)


def _scan_point(system, alpha, x0, cfg, observable_index, ccfg):
    traj = solve_abm(system, x0, alpha, cfg)
    if traj.diverged:
        return np.zeros(0), AttractorClass(AttractorKind.DIVERGENT)
    post = _post_transient(traj, observable_index, ccfg.transient_fraction)
    cls, peaks = _classify_samples(post, ccfg)
    return peaks, cls


def bifurcation_scan(
    system: SystemDef,
    alphas: Sequence[float],
    x0,
    cfg: Optional[SolverConfig] = None,
    observable_index: int = 2,
    classifier: Optional[ClassifierConfig] = None,
    workers: int = 1,
) -> BifurcationScan:
    """Classify the attractor reached from ``x0`` at each order in ``alphas``.

    Runs are independent; with ``workers > 1`` they share a thread pool and
    are reassembled in grid order.
    """
    grid = np.asarray(alphas, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("alpha grid must be a non-empty 1-D sequence")
    if np.any(grid <= 0) or np.any(grid > 1) or np.any(np.diff(grid) <= 0):
        raise DomainError("alpha grid must be strictly increasing inside (0, 1]")
    if not 0 <= observable_index < system.dimension:
        raise DomainError(f"observable index {observable_index} out of range")
    cfg = cfg or SolverConfig()
    ccfg = classifier or ClassifierConfig()

    def run(a):
        return _scan_point(system, float(a), x0, cfg, observable_index, ccfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, grid))
    else:
        results = [run(a) for a in grid]
    return BifurcationScan(
        alpha_grid=grid,
        samples=[r[0] for r in results],
        classes=[r[1] for r in results],
        observable_index=observable_index,
    )


def bifurcation_sweep(
    system: SystemDef,
    alpha_lo: float,
    alpha_hi: float,
    n_points: int,
    x0,
    cfg: Optional[SolverConfig] = None,
    observable_index: int = 2,
    classifier: Optional[ClassifierConfig] = None,
    workers: int = 1,
) -> BifurcationScan:
    """Sweep ``n_points`` equally spaced orders on ``[alpha_lo, alpha_hi]``."""
    if not 0 < alpha_lo < alpha_hi <= 1:
        raise DomainError("need 0 < alpha_lo < alpha_hi <= 1")
    if int(n_points) < 2:
        raise DomainError("n_points must be >= 2")
    grid = np.linspace(alpha_lo, alpha_hi, int(n_points))
    return bifurcation_scan(system, grid, x0, cfg, observable_index, classifier, workers)


# --- Lyapunov spectrum ------------------------------------------------------


@dataclass
class LyapunovSpectrum:
    """Finite-time exponents of the discretized variational system, sorted descending."""

    exponents: np.ndarray
    renorm_interval: int
    horizon: float
    alpha: float
    method: str = "benettin-qr"
    trace_average: float = math.nan
    meta: dict = field(default_factory=dict)


def _tangent_segment(J, Phi0, alpha, h, start, steps, block, iterations):
    """ABM run of ``D^a Phi = J(t) Phi`` on ``steps`` steps from ``Phi0`` (no memory before ``start``)."""
    d = Phi0.shape[0]
    hist = History(alpha, steps, d * d, block)
    cp, cc = scales(alpha, h)
    y0 = Phi0.ravel()
    hist.push(0, (J[start] @ Phi0).ravel())
    y = y0
    for m in range(1, steps + 1):
        Jm = J[start + m]
        y = y0 + cp * hist.predictor_sum(m)
        base = y0 + cc * hist.corrector_sum(m)
        for _ in range(iterations):
            y = base + cc * (Jm @ y.reshape(d, d)).ravel()
        hist.push(m, (Jm @ y.reshape(d, d)).ravel())
    return y.reshape(d, d)


def _qr_positive(M):
    Q, R = np.linalg.qr(M)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s, (R.T * s).T


def lyapunov_spectrum(
    system: SystemDef,
    alpha: float,
    x0,
    cfg: Optional[SolverConfig] = None,
    renorm_interval: int = 50,
    transient: float = 0.0,
) -> LyapunovSpectrum:
    """Benettin QR estimate of the finite-time Lyapunov spectrum.

    The state is integrated with :func:`solve_abm`; a tangent basis ``Phi``
    with ``Phi(0) = I`` follows ``D^a Phi = J(x(t)) Phi`` under the same ABM
    scheme and is re-orthonormalized every ``renorm_interval`` steps.

    For ``alpha < 1`` the variational equation keeps its full memory: after a
    QR step ``Phi = Q R`` the whole stored history is right-multiplied by
    ``R^-1``, which is exact because the scheme is linear in ``Phi``. At
    ``alpha = 1`` the dynamics are memoryless and each segment restarts from
    ``Q``; carrying ``R^-1`` through the history would otherwise overflow in
    contracting directions.

    Parameters
    ----------
    transient : float
        Time discarded before log stretches are accumulated.

    Raises
    ------
    DivergenceError
        The base trajectory diverged; ``step`` is the divergence index.
    """
    cfg = cfg or SolverConfig()
    renorm_interval = int(renorm_interval)
    if renorm_interval < 1:
        raise DomainError("renorm_interval must be >= 1")
    traj = solve_abm(system, x0, alpha, cfg)
    if traj.diverged:
        raise DivergenceError(traj.diverged_at, "base trajectory diverged")
    alpha = traj.alpha
    h = cfg.step_size
    N = len(traj) - 1
    d = system.dimension
    J = np.stack([system.jac(x) for x in traj.states])
    block = cfg.block_size if cfg.convolution_mode is ConvolutionMode.FFT else 0
    skip = int(round(transient / h))
    if skip >= N:
        raise DomainError("transient must be shorter than the horizon")

    logs = np.zeros(d)
    counted = 0
    if alpha >= 1.0:
        Phi = np.eye(d)
        m = 0
        while m < N:
            steps = min(renorm_interval, N - m)
            Phi = _tangent_segment(J, Phi, alpha, h, m, steps, 0, cfg.corrector_iterations)
            m += steps
            Phi, R = _qr_positive(Phi)
            if m - steps >= skip:
                logs += np.log(np.diag(R))
                counted += steps
    else:
        hist = History(alpha, N, d * d, block)
        cp, cc = scales(alpha, h)
        y0 = np.eye(d).ravel()
        hist.push(0, (J[0] @ np.eye(d)).ravel())
        prev = 0
        for m in range(1, N + 1):
            Jm = J[m]
            y = y0 + cp * hist.predictor_sum(m)
            base = y0 + cc * hist.corrector_sum(m)
            for _ in range(cfg.corrector_iterations):
                y = base + cc * (Jm @ y.reshape(d, d)).ravel()
            hist.push(m, (Jm @ y.reshape(d, d)).ravel())
            if m % renorm_interval == 0 or m == N:
                Q, R = _qr_positive(y.reshape(d, d))
                Rinv = np.linalg.inv(R)

                def right(X, Rinv=Rinv):
                    return (X.reshape(-1, d, d) @ Rinv).reshape(X.shape)

                hist.rescale(m, right)
                y0 = right(y0[None, :])[0]
                if prev >= skip:
                    logs += np.log(np.diag(R))
                    counted += m - prev
                prev = m
            if not np.all(np.isfinite(y)):
                raise IntegrationError(m, "tangent system overflowed")

    if counted == 0:
        raise DomainError("no renormalization interval after the transient")
    span = counted * h
    exps = np.sort(logs / span)[::-1]
    if not np.all(np.isfinite(exps)):
        raise IntegrationError(N, "non-finite Lyapunov exponents")
    traces = np.trace(J, axis1=1, axis2=2)
    return LyapunovSpectrum(
        exponents=exps,
        renorm_interval=renorm_interval,
        horizon=N * h,
        alpha=alpha,
        trace_average=float(np.mean(traces[skip:])),
        meta={"step_size": h, "transient": skip * h, "memory": "restart" if alpha >= 1.0 else "full"},
    )


# --- multistability -----------------------------------------------------------


@dataclass
class ProbeResult:
    x0: np.ndarray
    attractor: AttractorClass
    terminal_state: np.ndarray
    peak_summary: tuple = ()


def multistability_probe(
    system: SystemDef,
    alpha: float,
    x0_list,
    cfg: Optional[SolverConfig] = None,
    observable_index: int = 2,
    classifier: Optional[ClassifierConfig] = None,
    workers: int = 1,
) -> list[ProbeResult]:
    """Classify the attractor reached from each initial condition."""
    starts = [np.asarray(x, dtype=float) for x in x0_list]
    if not starts:
        raise DomainError("x0_list must not be empty")
    cfg = cfg or SolverConfig()
    ccfg = classifier or ClassifierConfig()

    def run(x0):
        traj = solve_abm(system, x0, alpha, cfg)
        if traj.diverged:
            return ProbeResult(x0, AttractorClass(AttractorKind.DIVERGENT), traj.states[-1].copy())
        post = _post_transient(traj, observable_index, ccfg.transient_fraction)
        cls, peaks = _classify_samples(post, ccfg)
        summary = (len(peaks), float(peaks.min()), float(peaks.max())) if len(peaks) else (0,)
        return ProbeResult(x0, cls, traj.states[-1].copy(), summary)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, starts))
    return [run(x) for x in starts]


# --- CSV ------------------------------------------------------------------------


def _fmt(v) -> str:
    return "" if v is None else format(v, ".9g")


def write_scan_csv(scan: BifurcationScan, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["alpha", "class", "value"])
    for a, cls, v in scan.rows():
        w.writerow([_fmt(a), cls, _fmt(v)])


def write_lyapunov_csv(spec: LyapunovSpectrum, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["exponent_index", "value"])
    for i, v in enumerate(spec.exponents, start=1):
        w.writerow([i, _fmt(float(v))])
