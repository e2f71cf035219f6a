"""Integer-order Bessel functions of the first kind, J_m(x), for real x >= 0.

Values come from Miller's downward recurrence

    J_{k-1}(x) = (2k / x) J_k(x) - J_{k+1}(x),

started well above the wanted order with arbitrary seeds and normalised with
the identity J_0 + 2 sum_k J_{2k} = 1. Downward recurrence is stable for
J (the minimal solution), whereas the upward direction loses accuracy once
m > x. A truncated power series is kept as an independent check.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError

# seeds are rescaled when they grow past this
_RESCALE = 1e250
# below this argument 2k/x can overflow in one step; the power series is exact there
_SMALL_X = 1e-3


def _start_order(m_max: int, x_max: float) -> int:
    """Even starting order for the recurrence, safely above both m_max and x."""
    top = max(m_max, int(math.ceil(x_max)))
    start = top + 20 + int(math.sqrt(40.0 * (top + 1)))
    return start + (start % 2)


def bessel_j_orders(m_max: int, x) -> np.ndarray:
    """J_0..J_{m_max} at every x; result has shape ``(m_max + 1,) + x.shape``."""
    if m_max < 0:
        raise InvalidParameterError(f"m_max must be >= 0, got {m_max}")
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise InvalidParameterError("Bessel argument must be finite and non-negative")
    flat = x.ravel()
    out = np.zeros((m_max + 1, flat.size))
    zero = flat == 0.0
    out[0, zero] = 1.0
    small = ~zero & (flat < _SMALL_X)
    for m in range(m_max + 1):
        out[m, small] = bessel_j_series(m, flat[small], terms=8)
    large = ~zero & ~small
    xs = flat[large]
    if xs.size:
        start = _start_order(m_max, float(xs.max()))
        j_next = np.zeros_like(xs)  # J_{k+1}
        j_k = np.full_like(xs, 1e-300)  # J_k, arbitrary seed
        norm = np.zeros_like(xs)
        vals = np.zeros((m_max + 1, xs.size))
        for k in range(start, 0, -1):
            j_prev = (2.0 * k / xs) * j_k - j_next
            j_next, j_k = j_k, j_prev  # now j_k holds J_{k-1}
            if k - 1 <= m_max:
                vals[k - 1] = j_k
            if (k - 1) % 2 == 0 and k - 1 > 0:
                norm += 2.0 * j_k
            big = np.abs(j_k) > _RESCALE
            if big.any():
                s = np.where(big, _RESCALE, 1.0)
                j_k, j_next, norm = j_k / s, j_next / s, norm / s
                vals /= s
        norm += j_k  # J_0 term
        out[:, large] = vals / norm
    return out.reshape((m_max + 1,) + x.shape)


def bessel_j(m: int, x) -> np.ndarray | float:
    """J_m(x) for integer m (negative orders via J_{-m} = (-1)^m J_m)."""
    sign = (-1.0) ** m if m < 0 else 1.0
    vals = bessel_j_orders(abs(m), x)[abs(m)] * sign
    return float(vals) if np.ndim(vals) == 0 else vals


def bessel_j_series(m: int, x, terms: int = 60):
    """Truncated power series sum_k (-1)^k (x/2)^(2k+m) / (k! (k+m)!).

    Accurate for moderate x (cancellation grows like exp(x)); used as a
    cross-check of the recurrence.
    """
    if m < 0:
        return (-1.0) ** m * bessel_j_series(-m, x, terms)
    x = np.asarray(x, dtype=float)
    half = 0.5 * x
    term = half**m / math.factorial(m)
    total = term.copy() if isinstance(term, np.ndarray) else term
    q = -(half * half)
    for k in range(1, terms):
        term = term * q / (k * (k + m))
        total = total + term
    return total


def sum_rule(x, m_max: int = 60):
    """J_0(x)^2 + 2 sum_{m=1}^{m_max} J_m(x)^2, which tends to 1."""
    J = bessel_j_orders(m_max, x)
    return J[0] ** 2 + 2.0 * np.sum(J[1:] ** 2, axis=0)
