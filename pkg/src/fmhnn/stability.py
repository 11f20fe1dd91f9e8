"""Linear stability of the memristor Hopfield equilibria ``(0, 0, delta)``.

At ``E* = (0, 0, delta)`` the two-neuron Jacobian is block lower-triangular:
a 2x2 block ``[[-1 + b1 + k delta, b2 - k delta], [b3 - k delta, -1 + b4 + k delta]]``
and a zero in the flux direction. The characteristic polynomial factors as
``lambda * (lambda^2 - tau lambda + eta)`` with ``tau`` the trace and ``eta``
the determinant of that block.

A fractional linear system of order ``a`` is asymptotically stable iff every
eigenvalue satisfies ``|arg lambda| > a pi / 2``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .fode import DomainError
from .models import FmhnnParams, RingParams, jacobian_ring, jacobian_two_neuron, pack_ring_state

__all__ = [
    "Verdict",
    "RegionCase",
    "CharPoly2N",
    "StabilityReport",
    "RingSpectrum",
    "RegionResult",
    "STABLE_FOR_ALL",
    "UNSTABLE_FOR_ALL",
    "UNBOUNDED",
    "char_poly_two_neuron",
    "eigenvalues_at_equilibrium",
    "matignon_check",
    "critical_alpha",
    "region_boundaries",
    "classify_region",
    "stability_report",
    "ring_spectrum",
    "ring_stability_bound",
    "ring_linear_part",
    "ring_printed_eigenvalues",
    "ring_precondition",
    "lipschitz_bound",
]

STABLE_FOR_ALL = "stable-for-all-alpha<=1"
UNSTABLE_FOR_ALL = "unstable-for-all-alpha"
UNBOUNDED = "unbounded"

ZERO_TOL = 1e-10
ANGLE_TOL = 1e-12


class Verdict(str, enum.Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


class RegionCase(str, enum.Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"
    CASE4 = "Case4"
    CASE5 = "Case5"
    NOT_APPLICABLE = "n/a"


@dataclass(frozen=True)
class CharPoly2N:
    """Reduced quadratic ``lambda^2 - tau lambda + eta``."""

    tau: float
    eta: float

    def roots(self) -> np.ndarray:
        disc = self.tau * self.tau - 4.0 * self.eta
        if disc >= 0:
            s = math.sqrt(disc)
            # avoid cancellation in the smaller root
            big = 0.5 * (self.tau + math.copysign(s, self.tau)) if self.tau != 0 else 0.5 * s
            if big == 0.0:
                return np.array([0.0 + 0j, 0.0 + 0j])
            small = self.eta / big
            return np.array(sorted([big, small], reverse=True), dtype=complex)
        s = math.sqrt(-disc)
        return np.array([complex(self.tau / 2, s / 2), complex(self.tau / 2, -s / 2)])


def _block(params: FmhnnParams, delta: float) -> np.ndarray:
    kd = params.k * delta
    return np.array([
        [-1.0 + params.b1 + kd, params.b2 - kd],
        [params.b3 - kd, -1.0 + params.b4 + kd],
    ])


def char_poly_two_neuron(params: FmhnnParams, delta: float) -> CharPoly2N:
    M = _block(params, float(delta))
    tau = M[0, 0] + M[1, 1]
    eta = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return CharPoly2N(tau=float(tau), eta=float(eta))


def eigenvalues_at_equilibrium(params: FmhnnParams, delta: float) -> np.ndarray:
    """``[0, lambda_1, lambda_2]``: the flux-direction zero, then the quadratic's roots."""
    roots = char_poly_two_neuron(params, delta).roots()
    return np.concatenate([[0.0 + 0j], roots])


def _as_eigs(eigs) -> np.ndarray:
    return np.atleast_1d(np.asarray(eigs, dtype=complex))


def matignon_check(eigs, alpha: float, zero_tol: float = ZERO_TOL, angle_tol: float = ANGLE_TOL) -> Verdict:
    """Classify the spectrum of a fractional linear system of order ``alpha``.

    Unstable if some eigenvalue has ``|arg| < alpha pi/2``; stable if every
    eigenvalue is nonzero and satisfies the strict inequality; marginal when
    the inequality only holds with equality or a zero eigenvalue is present.
    """
    alpha = float(alpha)
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    ev = _as_eigs(eigs)
    cone = alpha * math.pi / 2
    marginal = False
    for lam in ev:
        if abs(lam) <= zero_tol:
            marginal = True
            continue
        ang = abs(cmath.phase(lam))
        if ang < cone - angle_tol:
            return Verdict.UNSTABLE
        if ang <= cone + angle_tol:
            marginal = True
    return Verdict.MARGINAL if marginal else Verdict.STABLE


def critical_alpha(eigs, zero_tol: float = ZERO_TOL) -> Union[float, str]:
    """Largest order below which the nonzero spectrum meets the Matignon condition.

    Returns ``(2/pi) * min |arg lambda|`` over nonzero eigenvalues, or
    :data:`STABLE_FOR_ALL` when that minimum is at least ``pi/2``, or
    :data:`UNSTABLE_FOR_ALL` when a nonzero eigenvalue is real and positive.
    """
    ev = _as_eigs(eigs)
    if ev.size == 0:
        raise DomainError("critical_alpha needs at least one eigenvalue")
    nz = ev[np.abs(ev) > zero_tol]
    if nz.size == 0:
        raise DomainError("critical order undefined for an all-zero spectrum")
    angles = np.abs(np.angle(nz))
    for lam, ang in zip(nz, angles):
        if lam.real > 0 and ang <= ANGLE_TOL:
            return UNSTABLE_FOR_ALL
    smallest = float(angles.min())
    if smallest >= math.pi / 2 - ANGLE_TOL:
        return STABLE_FOR_ALL
    return 2.0 * smallest / math.pi


def region_boundaries(params: FmhnnParams) -> dict:
    """Values of ``delta`` where ``eta = 0``, ``tau = 0`` and ``tau^2 = 4 eta``.

    ``tau`` and ``eta`` are affine in ``delta`` (the ``k^2 delta^2`` terms of
    the determinant cancel), so the first two are single roots and the
    discriminant boundary has up to two.
    """
    k = params.k
    if k == 0:
        raise DomainError("region classification undefined for k = 0")
    t0 = char_poly_two_neuron(params, 0.0)
    t1 = char_poly_two_neuron(params, 1.0)
    tau0, tau1 = t0.tau, t1.tau - t0.tau
    eta0, eta1 = t0.eta, t1.eta - t0.eta
    out = {
        "tau_zero": -tau0 / tau1 if tau1 else math.nan,
        "eta_zero": -eta0 / eta1 if eta1 else math.nan,
    }
    # (tau0 + tau1 x)^2 - 4 (eta0 + eta1 x) = 0
    qa, qb, qc = tau1 * tau1, 2 * tau0 * tau1 - 4 * eta1, tau0 * tau0 - 4 * eta0
    out["discriminant_zero"] = tuple(sorted(float(r.real) for r in np.roots([qa, qb, qc]) if abs(r.imag) < 1e-12))
    return out


@dataclass(frozen=True)
class RegionResult:
    case: RegionCase
    verdict: Verdict
    tau: float
    eta: float


def classify_region(params: FmhnnParams, delta: float, alpha: float, tol: float = 1e-4) -> RegionResult:
    """Place ``E* = (0, 0, delta)`` in one of the five sign cases of (tau, eta).

    ==========  =========================  =========================
    Case 1      eta = 0, tau < 0           stable
    Case 2      eta > 0, tau = 0           stable iff alpha < 1
    Case 3      eta > 0, tau < 0           stable
    Case 4      eta > tau^2/4, tau > 0     cos(alpha pi/2) > tau/(2 sqrt(eta))
    Case 5      eta < 0, or tau > 0 with   unstable
                eta <= tau^2/4
    ==========  =========================  =========================

    ``tau`` is the trace of the 2x2 block; ``tol`` is the absolute tolerance
    for the equalities.
    """
    if params.k == 0:
        raise DomainError("region classification undefined for k = 0")
    alpha = float(alpha)
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    cp = char_poly_two_neuron(params, delta)
    tau, eta = cp.tau, cp.eta
    if abs(eta) <= tol:
        if tau < -tol:
            return RegionResult(RegionCase.CASE1, Verdict.STABLE, tau, eta)
        return RegionResult(RegionCase.CASE5, Verdict.UNSTABLE, tau, eta)
    if eta < 0:
        return RegionResult(RegionCase.CASE5, Verdict.UNSTABLE, tau, eta)
    if abs(tau) <= tol:
        verdict = Verdict.STABLE if alpha < 1 else Verdict.MARGINAL
        return RegionResult(RegionCase.CASE2, verdict, tau, eta)
    if tau < 0:
        return RegionResult(RegionCase.CASE3, Verdict.STABLE, tau, eta)
    if eta > tau * tau / 4:
        lhs, rhs = math.cos(alpha * math.pi / 2), tau / (2 * math.sqrt(eta))
        if lhs > rhs + ANGLE_TOL:
            verdict = Verdict.STABLE
        elif lhs < rhs - ANGLE_TOL:
            verdict = Verdict.UNSTABLE
        else:
            verdict = Verdict.MARGINAL
        return RegionResult(RegionCase.CASE4, verdict, tau, eta)
    return RegionResult(RegionCase.CASE5, Verdict.UNSTABLE, tau, eta)


@dataclass
class StabilityReport:
    """Stability of ``E* = (0, 0, delta)``.

    ``matignon_stable`` and the integer/fractional flags look at the
    quadratic's roots only; the structural zero of the flux direction is
    reported through ``has_zero_eigenvalue`` and does not by itself make the
    verdict marginal.
    """

    delta: float
    eigenvalues: np.ndarray
    alpha: float
    verdict: Verdict
    critical_alpha: Union[float, str]
    region_case: RegionCase
    integer_stable: bool
    fractional_stable: bool
    has_zero_eigenvalue: bool = True

    @property
    def matignon_stable(self) -> bool:
        return self.verdict is Verdict.STABLE

    def to_record(self) -> dict:
        lam = self.eigenvalues[1:]
        ca = self.critical_alpha
        return {
            "delta": self.delta,
            "case": self.region_case.value,
            "lambda1_re": float(lam[0].real),
            "lambda1_im": float(lam[0].imag),
            "lambda2_re": float(lam[1].real),
            "lambda2_im": float(lam[1].imag),
            "critical_alpha": ca,
            "alpha": self.alpha,
            "verdict": self.verdict.value,
            "integer_stable": "Yes" if self.integer_stable else "No",
            "fractional_stable": "Yes" if self.fractional_stable else "No",
        }


def stability_report(params: FmhnnParams, delta: float, alpha: float = 1.0, classify: bool = True) -> StabilityReport:
    eigs = eigenvalues_at_equilibrium(params, delta)
    quad = eigs[1:]
    verdict = matignon_check(quad, alpha)
    try:
        ca = critical_alpha(quad)
    except DomainError:
        ca = UNSTABLE_FOR_ALL
    integer = matignon_check(quad, 1.0) is Verdict.STABLE
    # stable for some order in (0, 1): critical order positive, and no zero root
    has_quad_zero = bool(np.any(np.abs(quad) <= ZERO_TOL))
    if has_quad_zero:
        fractional = False
    elif ca == STABLE_FOR_ALL:
        fractional = True
    elif ca == UNSTABLE_FOR_ALL:
        fractional = False
    else:
        fractional = ca > 0
    case = classify_region(params, delta, alpha).case if classify else RegionCase.NOT_APPLICABLE
    return StabilityReport(
        delta=float(delta), eigenvalues=eigs, alpha=float(alpha), verdict=verdict,
        critical_alpha=ca, region_case=case, integer_stable=integer, fractional_stable=fractional,
    )


# --- ring network ---------------------------------------------------------


@dataclass
class RingSpectrum:
    """Spectra of the ring linearization at ``(0, 0, delta_i)``.

    ``block_eigenvalues`` come from the circulant block decomposition and are
    ``None`` when the per-node deltas differ (the Jacobian is then not block
    circulant). ``linear_part_eigenvalues`` belong to the constant matrix of
    the compact form ``F(X) = A X + H(X)`` with ``A = bcirc(A0, A1, ..., A1)``.
    """

    block_eigenvalues: Optional[np.ndarray]
    dense_eigenvalues: np.ndarray
    stability_bound_n: Union[float, str]
    linear_part_eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    printed_eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))


def ring_stability_bound(p: int, d: float) -> Union[float, str]:
    """``(2p(d+1) + d)/d``; rings with ``1 < n`` strictly below it are stable.

    Returns :data:`UNBOUNDED` for ``d = 0``.
    """
    p, d = int(p), float(d)
    if p < 1:
        raise DomainError("p must be >= 1")
    if d < 0 or not math.isfinite(d):
        raise DomainError("d must be finite and >= 0")
    if d == 0:
        return UNBOUNDED
    return (2 * p * (d + 1) + d) / d


def _block_circulant_eigs(A0: np.ndarray, offsets: dict[int, np.ndarray], n: int) -> np.ndarray:
    out = []
    for m in range(n):
        M = A0.astype(complex).copy()
        for j, Aj in offsets.items():
            M += Aj * np.exp(2j * np.pi * j * m / n)
        out.append(np.linalg.eigvals(M))
    return np.concatenate(out)


def ring_spectrum(params: RingParams, delta_vec) -> RingSpectrum:
    n, p, d = params.n, params.p, params.d
    dv = np.atleast_1d(np.asarray(delta_vec, dtype=float))
    if dv.shape != (n,):
        raise DomainError(f"delta_vec must have length n={n}, got shape {dv.shape}")
    state = pack_ring_state(np.zeros(n), np.zeros(n), dv)
    dense = np.linalg.eigvals(jacobian_ring(state, params))

    block = None
    if np.all(dv == dv[0]):
        A0 = jacobian_two_neuron([0.0, 0.0, dv[0]], params.base)
        # 2p neighbours, each pulling with d/(2p)
        A0[0, 0] -= d
        A1 = np.zeros((3, 3))
        A1[0, 0] = d / (2 * p)
        offsets = {j % n: A1 for j in range(-p, p + 1) if j != 0}
        block = _block_circulant_eigs(A0, offsets, n)

    return RingSpectrum(
        block_eigenvalues=block,
        dense_eigenvalues=dense,
        stability_bound_n=ring_stability_bound(p, d) if d > 0 else UNBOUNDED,
        linear_part_eigenvalues=np.linalg.eigvals(ring_linear_part(n, p, d)),
        printed_eigenvalues=ring_printed_eigenvalues(n, p, d),
    )


def ring_linear_part(n: int, p: int, d: float) -> np.ndarray:
    """Constant matrix ``A = bcirc(A0, A1, ..., A1)`` of the ring's compact form.

    ``A0 = [[-1 - d/p, 0, 0], [0, -1, 0], [1, -1, 0]]`` and ``A1 = d/(2p) e11``,
    with ``A1`` in every off-diagonal block as displayed. It equals the
    linear part of the ring Jacobian only for ``p = 1, n = 3``: the coupling
    reaches ``2p`` neighbours, not ``n - 1``, and its diagonal weight is ``d``,
    not ``d/p``.
    """
    A0 = np.array([[-1.0 - d / p, 0, 0], [0, -1.0, 0], [1.0, -1.0, 0]])
    A1 = np.zeros((3, 3))
    A1[0, 0] = d / (2 * p)
    A = np.zeros((3 * n, 3 * n))
    for i in range(n):
        for j in range(n):
            A[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] = A0 if i == j else A1
    return A


def ring_printed_eigenvalues(n: int, p: int, d: float) -> np.ndarray:
    """The eigenvalue list stated for the ring's linear part (kept for comparison)."""
    return np.array([
        -1.0, 0.0, (d * (n - 1) - 2 * p * (d + 1)) / (2 * p), 1.0 - n, 0.0,
        (1.0 - n) * (3 * d / (2 * p) + 1.0),
    ])


def ring_precondition(eigs, n_structural_zeros: int, zero_tol: float = 1e-9) -> bool:
    """True when no eigenvalue has ``|arg| < alpha pi/2`` for any ``alpha < 1``.

    The ``n_structural_zeros`` flux-direction zeros are excused; any further
    zero eigenvalue or any eigenvalue with positive real part fails.
    """
    ev = _as_eigs(eigs)
    zeros = int(np.sum(np.abs(ev) <= zero_tol))
    if zeros > n_structural_zeros:
        return False
    nz = ev[np.abs(ev) > zero_tol]
    return bool(np.all(nz.real <= zero_tol * np.maximum(1.0, np.abs(nz))))


def lipschitz_bound(params: FmhnnParams, phi_cap: float) -> float:
    """``||A|| + ||B|| + phi_cap ||K||`` (spectral norms) for ``F(x) = A x + B tanh(x) + phi K x``."""
    phi_cap = float(phi_cap)
    if phi_cap < 0:
        raise DomainError("phi_cap must be >= 0")
    A = np.array([[-1.0, 0, 0], [0, -1.0, 0], [1.0, -1.0, 0]])
    B = np.array([[params.b1, params.b2, 0], [params.b3, params.b4, 0], [0, 0, 0]])
    k = params.k
    K = np.array([[k, -k, 0], [-k, k, 0], [0, 0, 0]])
    return float(np.linalg.norm(A, 2) + np.linalg.norm(B, 2) + phi_cap * np.linalg.norm(K, 2))
