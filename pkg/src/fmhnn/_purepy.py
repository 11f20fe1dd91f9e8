"""Pure numpy fallback for the compiled ABM kernel (:mod:`fmhnn._kernels`)."""

import numpy as np

from .fode import IntegrationError, _abm_loop
from .models import FmhnnParams, _ring_rhs_arrays


def abm_native(model, y0, alpha, h, n, block, iterations, threshold):
    """Run the ABM loop for the native model ``(b1, b2, b3, b4, k, d, n_nodes, p)``.

    Returns ``(states, diverged_at, bad_step)`` with ``-1`` meaning "none".
    """
    b1, b2, b3, b4, k, d = (float(v) for v in model[:6])
    nn, p = int(model[6]), int(model[7])
    base = FmhnnParams(b1, b2, b3, b4, k)
    y0 = np.asarray(y0, dtype=float)
    if y0.shape[0] != 3 * nn:
        raise ValueError("initial state does not match the model dimension")

    def f(t, y):
        s = y.reshape(nn, 3)
        return _ring_rhs_arrays(s[:, 0], s[:, 1], s[:, 2], base, nn, p, d)

    try:
        Y, div = _abm_loop(f, y0, alpha, h, n, block, iterations, threshold)
    except IntegrationError as exc:
        return np.empty((0, 3 * nn)), -1, exc.step
    return Y, (-1 if div is None else div), -1
