"""Product-integration weights and history bookkeeping for the fractional ABM scheme.

The history sums of the predictor and corrector are Toeplitz in the lag
``m - j`` (apart from the first corrector weight, which is handled on its own).
:class:`History` keeps the right-hand-side history and, in blocked mode,
accumulates the far-field part of each sum ahead of time with FFT
convolutions over a dyadic triangle decomposition:

* pairs ``(j, m)`` inside the same base block of size ``r`` are summed
  directly when ``m`` is reached;
* every other pair lives in exactly one square ``j in [s, s + L)``,
  ``m in [s + L, s + 2L)`` with ``L = r * 2**l`` and ``s`` a multiple of
  ``2L``. The square is evaluated as soon as ``F[s + L - 1]`` is known,
  which is before any of its outputs is needed.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft


def lag_weights(alpha: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unscaled predictor and corrector lag weights for lags ``0..n``.

    ``B[k] = k**a - (k-1)**a`` and
    ``A[k] = (k+1)**(a+1) - 2 k**(a+1) + (k-1)**(a+1)``, evaluated in a
    cancellation-free form. ``B[0] = A[0] = 0``.
    """
    B = np.zeros(n + 1)
    A = np.zeros(n + 1)
    if n < 1:
        return B, A
    g = alpha + 1.0
    B[1] = 1.0
    A[1] = 2.0**g - 2.0
    if n >= 2:
        k = np.arange(2, n + 1, dtype=float)
        up = np.log1p(1.0 / k)
        down = np.log1p(-1.0 / k)
        B[2:] = -(k**alpha) * np.expm1(alpha * down)
        A[2:] = k**g * (np.expm1(g * up) + np.expm1(g * down))
    return B, A


def first_corrector_weight(alpha: float, m: int | np.ndarray):
    """Weight of ``f(t_0)`` in the corrector for output index ``m >= 1``.

    Equals ``(m-1)**(a+1) - (m-1-a) * m**a``.
    """
    m = np.asarray(m, dtype=float)
    with np.errstate(divide="ignore"):
        out = m**alpha * ((m - 1.0) * np.expm1(alpha * np.log1p(-1.0 / m)) + alpha)
    return out if out.ndim else float(out)


class History:
    """Right-hand-side history ``F`` plus pending far-field sums.

    Parameters
    ----------
    alpha : float
        Fractional order.
    n_steps : int
        Number of steps; outputs are indexed ``1..n_steps``.
    dim : int
        State dimension.
    block : int
        Base block size ``r`` of the FFT decomposition; ``0`` selects the
        direct mode where every sum is taken over the full history.
    """

    def __init__(self, alpha: float, n_steps: int, dim: int, block: int = 0):
        self.alpha = float(alpha)
        self.n = int(n_steps)
        self.dim = int(dim)
        self.block = int(block)
        self.B, self.A = lag_weights(self.alpha, self.n)
        # reversed copies so that lags m-j for j = lo..m-1 are a contiguous slice
        self.Brev = np.ascontiguousarray(self.B[::-1])
        self.Arev = np.ascontiguousarray(self.A[::-1])
        self.a0 = np.zeros(self.n + 1)
        if self.n >= 1:
            self.a0[1:] = first_corrector_weight(self.alpha, np.arange(1, self.n + 1))
        self.F = np.zeros((self.n + 1, self.dim))
        self.far_pred = np.zeros((self.n + 1, self.dim))
        self.far_corr = np.zeros((self.n + 1, self.dim))
        self._spectra: dict[int, tuple[int, np.ndarray, np.ndarray]] = {}

    # -- direct pieces -------------------------------------------------
    def _leaf_start(self, m: int) -> int:
        if self.block <= 0:
            return 0
        return (m // self.block) * self.block

    def predictor_sum(self, m: int) -> np.ndarray:
        """``sum_{j<m} B[m-j] F[j]``."""
        lo = self._leaf_start(m)
        n = self.n
        near = self.Brev[n - (m - lo) : n] @ self.F[lo:m]
        return self.far_pred[m] + near

    def corrector_sum(self, m: int) -> np.ndarray:
        """``a0(m) F[0] + sum_{1<=j<m} A[m-j] F[j]``."""
        lo = max(self._leaf_start(m), 1)
        n = self.n
        near = self.Arev[n - (m - lo) : n] @ self.F[lo:m] if m > lo else 0.0
        return self.far_corr[m] + near + self.a0[m] * self.F[0]

    def push(self, m: int, fm: np.ndarray) -> None:
        self.F[m] = fm
        self.flush(m)

    # -- far field -------------------------------------------------------
    def flush(self, m: int) -> None:
        """Run every square whose source block ends at index ``m``."""
        r = self.block
        if r <= 0:
            return
        c = m + 1
        L = r
        while L <= self.n:
            if c % L == 0 and (c // L) % 2 == 1:
                self._square(c - L, L)
            elif c % L != 0:
                break
            L *= 2

    def _level(self, L: int):
        cached = self._spectra.get(L)
        if cached is None:
            nfft = scipy.fft.next_fast_len(3 * L - 2, real=True)
            hi = min(2 * L, self.n + 1)
            wb = np.zeros(2 * L - 1)
            wa = np.zeros(2 * L - 1)
            wb[: hi - 1] = self.B[1:hi]
            wa[: hi - 1] = self.A[1:hi]
            cached = (nfft, scipy.fft.rfft(wb, nfft), scipy.fft.rfft(wa, nfft))
            self._spectra[L] = cached
        return cached

    def _square(self, s: int, L: int) -> None:
        first = s + L
        if first > self.n:
            return
        last = min(s + 2 * L, self.n + 1)
        nfft, wb, wa = self._level(L)
        src = self.F[s : s + L]
        xf = scipy.fft.rfft(src, nfft, axis=0)
        count = last - first
        pred = scipy.fft.irfft(xf * wb[:, None], nfft, axis=0)
        self.far_pred[first:last] += pred[L - 1 : L - 1 + count]
        if s == 0:
            # F[0] enters the corrector through a0 only
            xf = xf - scipy.fft.rfft(src[:1], nfft, axis=0)
        corr = scipy.fft.irfft(xf * wa[:, None], nfft, axis=0)
        self.far_corr[first:last] += corr[L - 1 : L - 1 + count]

    def rescale(self, upto: int, transform) -> None:
        """Apply a linear map to the stored history rows ``0..upto`` and to the
        pending far-field sums. Used by tangent-space renormalization."""
        self.F[: upto + 1] = transform(self.F[: upto + 1])
        self.far_pred[upto + 1 :] = transform(self.far_pred[upto + 1 :])
        self.far_corr[upto + 1 :] = transform(self.far_corr[upto + 1 :])


def scales(alpha: float, h: float) -> tuple[float, float]:
    """Predictor and corrector prefactors ``h^a/Gamma(a+1)``, ``h^a/Gamma(a+2)``."""
    ha = h**alpha
    return ha / math.gamma(alpha + 1.0), ha / math.gamma(alpha + 2.0)
