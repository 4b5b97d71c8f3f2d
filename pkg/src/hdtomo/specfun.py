"""Special functions used by the tomographic kernels.

Everything here works on scalars or numpy arrays (evaluated elementwise).
Polynomials are always evaluated by recurrence, never from coefficient
expansions.
"""

from __future__ import annotations

import math

import numpy as np

# Configuration constants. Tests probe these boundaries directly.
MAX_ORDER = 64
KUMMER_ARG_BOUND = 200.0
KUMMER_MAX_TERMS = 500
KUMMER_RTOL = 1e-15

__all__ = [
    "ConvergenceError",
    "MAX_ORDER",
    "KUMMER_ARG_BOUND",
    "KUMMER_MAX_TERMS",
    "KUMMER_RTOL",
    "hermite",
    "laguerre",
    "laguerre_sequence",
    "kummer_phi",
    "ln_factorial",
]


class ConvergenceError(ArithmeticError):
    """A series or iterative method did not converge."""


def _check_order(name, n, max_order):
    if int(n) != n or n < 0:
        raise ValueError(f"{name}: order must be a non-negative integer, got {n!r}")
    if n > max_order:
        raise ValueError(f"{name}: order {n} exceeds the configured maximum {max_order}")


def hermite(n, y, max_order=MAX_ORDER):
    """Physicists' Hermite polynomial H_n(y).

    Uses the three-term recurrence H_{k+1} = 2y H_k - 2k H_{k-1}.
    """
    _check_order("hermite", n, max_order)
    y = np.asarray(y, dtype=float)
    h_prev = np.ones_like(y)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * y
    for k in range(1, n):
        h_prev, h = h, 2.0 * y * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def laguerre_sequence(n_max, d, y, max_order=MAX_ORDER):
    """Generalized Laguerre polynomials L_0^d(y) ... L_{n_max}^d(y).

    Returns an array of shape ``(n_max + 1,) + np.shape(y)``.
    """
    _check_order("laguerre", n_max, max_order)
    _check_order("laguerre", d, max_order)
    y = np.asarray(y, dtype=float)
    out = np.empty((n_max + 1,) + y.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 + d - y
    # (k+1) L_{k+1} = (2k + 1 + d - y) L_k - (k + d) L_{k-1}
    for k in range(1, n_max):
        out[k + 1] = ((2 * k + 1 + d - y) * out[k] - (k + d) * out[k - 1]) / (k + 1)
    return out


def laguerre(n, d, y, max_order=MAX_ORDER):
    """Generalized Laguerre polynomial L_n^d(y), by upward recurrence in n."""
    val = laguerre_sequence(n, d, y, max_order)[n]
    return val if np.ndim(val) else float(val)


def _kummer_series(a, b, z, rtol, max_terms):
    # plain Maclaurin series; only called with z >= 0
    total = np.ones_like(z)
    term = np.ones_like(z)
    for j in range(max_terms):
        ratio = (a + j) / ((b + j) * (j + 1.0))
        term = term * ratio * z
        total = total + term
        if a + j == 0.0:
            # terminating polynomial: every later term is zero
            return total
        past_turning = (j + 1 > -a) and np.all(np.abs(ratio * z) < 1.0)
        if past_turning and np.all(np.abs(term) <= rtol * np.abs(total)):
            return total
    raise ConvergenceError(
        f"kummer_phi({a}, {b}, x) did not converge within {max_terms} terms "
        f"(max |x| = {float(np.max(z)) if z.size else 0.0})"
    )


def kummer_phi(a, b, x, bound=KUMMER_ARG_BOUND, rtol=KUMMER_RTOL, max_terms=KUMMER_MAX_TERMS):
    """Confluent hypergeometric function Phi(a, b; x) = 1F1(a; b; x).

    Negative arguments go through the Kummer transformation
    Phi(a, b; x) = e^x Phi(b - a, b; -x) so the series never alternates
    because of x.

    Args:
        a, b: real parameters; b may not be a non-positive integer.
        x: real argument (scalar or array) with |x| <= bound.

    Raises:
        ValueError: invalid b or argument out of range.
        ConvergenceError: the series did not settle within ``max_terms``.
    """
    if b <= 0 and float(b).is_integer():
        raise ValueError(f"kummer_phi: b must not be a non-positive integer, got {b}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("kummer_phi: non-finite argument")
    if x.size and np.max(np.abs(x)) > bound:
        raise ValueError(f"kummer_phi: |x| = {np.max(np.abs(x))} exceeds the configured bound {bound}")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    pos = x >= 0
    if np.any(pos):
        out[pos] = _kummer_series(a, b, x[pos], rtol, max_terms)
    neg = ~pos
    if np.any(neg):
        z = -x[neg]
        out[neg] = np.exp(-z) * _kummer_series(b - a, b, z, rtol, max_terms)
    return float(out[0]) if scalar else out


def ln_factorial(n):
    """ln(n!), exact via integer product up to n = 20, ln-gamma beyond."""
    if int(n) != n or n < 0:
        raise ValueError(f"ln_factorial: n must be a non-negative integer, got {n!r}")
    n = int(n)
    if n <= 20:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1.0)
