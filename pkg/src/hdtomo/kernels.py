"""Tomographic kernel (pattern) functions.

All kernels take ``(phi, x)`` as scalars or equal-shape arrays and are
evaluated elementwise. Averaging a kernel over homodyne data with phases
folded into [0, pi) estimates the corresponding expectation value.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import specfun
from .specfun import hermite, kummer_phi, ln_factorial

MAX_MOMENT_ORDER = 16
FOCK_CUTOFF = 40

__all__ = [
    "MomentIndex",
    "MatrixIndex",
    "AdaptiveCoefficient",
    "fold_phases",
    "moment_kernel",
    "matrix_kernel",
    "null_function",
    "adaptive_number_kernel",
    "optimal_mu",
    "PhiCache",
    "combined_null_kernel",
]


class MomentIndex(NamedTuple):
    """Powers (n, m) of the normally ordered moment a^dag^n a^m."""

    n: int
    m: int

    def validate(self, max_order=MAX_MOMENT_ORDER):
        if min(self.n, self.m) < 0:
            raise ValueError(f"negative moment index {tuple(self)}")
        if self.n + self.m > max_order:
            raise ValueError(f"moment order {self.n + self.m} exceeds maximum {max_order}")
        return self


class MatrixIndex(NamedTuple):
    """Density-matrix element <n|rho|n+k>."""

    n: int
    k: int

    def validate(self, cutoff=FOCK_CUTOFF):
        if min(self.n, self.k) < 0:
            raise ValueError(f"negative matrix index {tuple(self)}")
        if self.n + self.k > cutoff:
            raise ValueError(f"Fock index {self.n + self.k} exceeds cutoff {cutoff}")
        return self


class AdaptiveCoefficient(NamedTuple):
    """Coefficient mu of the k = 0 null function e^{2i phi} in the photon-number kernel."""

    mu: complex


def fold_phases(phi, x):
    """Map phases in [pi, 2 pi) to [0, pi) using x_{phi + pi} = -x_phi."""
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    upper = phi >= math.pi
    return np.where(upper, phi - math.pi, phi), np.where(upper, -x, x)


def moment_kernel(idx, phi, x, max_order=MAX_MOMENT_ORDER):
    """Kernel for <a^dag^n a^m>: e^{i(m-n)phi} H_{n+m}(sqrt2 x) / (sqrt(2^{n+m}) C(n+m, n))."""
    n, m = MomentIndex(*idx).validate(max_order)
    order = n + m
    norm = math.sqrt(2.0**order) * math.comb(order, n)
    h = hermite(order, math.sqrt(2.0) * np.asarray(x, dtype=float), max_order=max(max_order, order))
    return np.exp(1j * (m - n) * np.asarray(phi, dtype=float)) * h / norm


class PhiCache:
    """Memoizes Kummer-function columns for a fixed vector of quadratures.

    The pattern functions for all (n, k) reuse a handful of Phi(a, b; .)
    evaluations on the same data, so reconstructing a whole density matrix
    evaluates each distinct (a, b) pair once.
    """

    def __init__(self, x):
        self.x = np.asarray(x, dtype=float)
        self.z = 2.0 * self.x**2
        if self.z.size and np.max(self.z) > specfun.KUMMER_ARG_BOUND:
            bad = int(np.argmax(self.z))
            raise ValueError(
                f"|x| = {abs(self.x.flat[bad])} at index {bad} exceeds the pattern-function "
                f"range sqrt({specfun.KUMMER_ARG_BOUND}/2)"
            )
        self._even = {}
        self._odd = {}
        self._gauss = None

    def even(self, a):
        # Phi(a, 1/2; -2x^2)
        if a not in self._even:
            self._even[a] = kummer_phi(a, 0.5, -self.z)
        return self._even[a]

    def odd(self, a):
        # e^{-2x^2} Phi(a, 3/2; 2x^2)
        if a not in self._odd:
            if self._gauss is None:
                self._gauss = np.exp(-self.z)
            self._odd[a] = self._gauss * kummer_phi(a, 1.5, self.z)
        return self._odd[a]


def _pattern_f(n, k, cache):
    """f_nk(x) times (-1)^{floor(k/2)}; see matrix_kernel."""
    total = np.zeros_like(cache.x)
    half = k / 2.0
    for l in range(n + 1):
        log_denom = ln_factorial(l) + ln_factorial(n - l) + ln_factorial(l + k)
        sign = -1.0 if l % 2 else 1.0
        if k % 2 == 0:
            coef = sign * math.exp(l * math.log(2.0) + math.lgamma(1.0 + l + half) - log_denom)
            total += coef * cache.even(1.0 + l + half)
        else:
            coef = sign * math.exp((l + 0.5) * math.log(2.0) + math.lgamma(1.0 + l + (k + 1) / 2.0) - log_denom)
            total += coef * cache.odd(-l - half)
    if k % 2:
        total *= 2.0 * cache.x
    if (k // 2) % 2:
        total = -total
    return total


def matrix_kernel(idx, phi, x, cutoff=FOCK_CUTOFF, cache=None):
    """Pattern function whose average is the matrix element <n|rho|n+k>.

    R = 2 e^{-ik phi} sqrt(2^k n! (n+k)!) f_nk(x), with f_nk the finite sum of
    Gamma-weighted confluent hypergeometric functions (odd k carries the
    extra 2x e^{-2x^2} factor). The printed sum is multiplied by
    (-1)^{floor(k/2)}: without it the k = 2, 3 (mod 4) elements come out
    with the wrong sign against exact coherent-state values.

    Args:
        idx: (n, k) matrix index.
        phi, x: phases and quadratures (scalar or arrays).
        cutoff: largest n + k allowed.
        cache: optional :class:`PhiCache` built on ``x`` to share work
            across several (n, k).
    """
    n, k = MatrixIndex(*idx).validate(cutoff)
    scalar = np.ndim(x) == 0 and np.ndim(phi) == 0
    if cache is None:
        cache = PhiCache(np.atleast_1d(np.asarray(x, dtype=float)))
    log_pref = 0.5 * (k * math.log(2.0) + ln_factorial(n) + ln_factorial(n + k))
    f = _pattern_f(n, k, cache)
    out = 2.0 * math.exp(log_pref) * f * np.exp(-1j * k * np.asarray(phi, dtype=float))
    return complex(out[0]) if scalar else out


def null_function(k, phi, x):
    """F_k(x, phi) = x^k e^{i(k+2)phi}; its tomographic average vanishes for every state."""
    if int(k) != k or k < 0:
        raise ValueError(f"null_function: k must be a non-negative integer, got {k!r}")
    out = np.asarray(x, dtype=float) ** k * np.exp(1j * (k + 2) * np.asarray(phi, dtype=float))
    return out if np.ndim(out) else complex(out)


def adaptive_number_kernel(coef, phi, x):
    """Photon-number kernel 2x^2 - 1/2 + mu e^{2i phi} + conj(mu) e^{-2i phi} (real)."""
    mu = coef.mu if isinstance(coef, AdaptiveCoefficient) else complex(coef)
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    out = 2.0 * x * x - 0.5 + 2.0 * (mu * np.exp(2j * phi)).real
    return out if out.ndim else float(out)


def optimal_mu(dataset) -> AdaptiveCoefficient:
    """mu* = -<a^dag^2> / 2, with <a^dag^2> estimated from the same data."""
    if len(dataset) == 0:
        raise ValueError("optimal_mu: empty dataset")
    phi, x = fold_phases(dataset.phi, dataset.x)
    adag2 = np.mean(moment_kernel((2, 0), phi, x))
    return AdaptiveCoefficient(complex(-0.5 * adag2))


def combined_null_kernel(base, coefs, phi, x):
    """Kernel base + sum_k (mu_k F_k + conj(mu_k) conj(F_k)) for arbitrary M.

    Hook for multi-term null-function optimization; only the M = 1 case has a
    closed-form optimal coefficient (:func:`optimal_mu`).
    """
    out = np.asarray(base(phi, x))
    for k, mu in enumerate(coefs):
        out = out + 2.0 * (complex(mu) * null_function(k, phi, x)).real
    return out

