"""Composite Simpson quadrature on uniform grids."""

import numpy as np


def simpson_weights(n_points: int, h: float) -> np.ndarray:
    """Weights w such that ``w @ f`` is the composite Simpson integral.

    ``n_points`` must be odd (an even number of intervals).
    """
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError(f"Simpson's rule needs an odd number of points >= 3, got {n_points}")
    w = np.full(n_points, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def simpson(f, h: float) -> float:
    f = np.asarray(f)
    return f @ simpson_weights(f.shape[-1], h)


def inner(f, g, h: float):
    """<f, g> = integral of conj(f) g."""
    return simpson(np.conj(f) * g, h)


def norm(f, h: float) -> float:
    return float(np.sqrt(simpson(np.abs(f) ** 2, h)))
