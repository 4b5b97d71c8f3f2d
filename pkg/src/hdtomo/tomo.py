"""Tomographic averaging: estimates with confidence intervals, density
matrix, photon distribution and Wigner function reconstruction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .kernels import FOCK_CUTOFF, PhiCache, fold_phases, matrix_kernel
from .specfun import laguerre_sequence, ln_factorial

# Wigner values follow the matrix-element series literally: vacuum peak 2,
# integral over the plane equal to pi (pi times the 2/pi textbook convention).
WIGNER_NORMALIZATION = "series: W(0)=2 for vacuum, integral d^2z W = pi"

__all__ = [
    "EstimateResult",
    "DensityMatrix",
    "WignerGrid",
    "average_kernel",
    "reconstruct_rho",
    "photon_distribution",
    "wigner_from_rho",
]


class EstimateResult(NamedTuple):
    """Sample mean of a kernel with 1-sigma standard errors per component."""

    value: complex
    stderr_re: float
    stderr_im: float = 0.0

    @property
    def stderr(self):
        return math.hypot(self.stderr_re, self.stderr_im)

    def to_dict(self):
        v = complex(self.value)
        return {"re": v.real, "im": v.imag, "err_re": self.stderr_re, "err_im": self.stderr_im}


def _check_dataset(dataset):
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if not dataset.calibrated:
        raise ValueError("dataset is not calibrated")


def _summarize(values, index_offset=0):
    values = np.asarray(values)
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0]) + index_offset
        raise FloatingPointError(f"non-finite kernel value at record {i}")
    n = values.size
    root_n = math.sqrt(n)
    if np.iscomplexobj(values):
        mean = complex(np.mean(values))
        return EstimateResult(mean, float(np.std(values.real)) / root_n, float(np.std(values.imag)) / root_n)
    return EstimateResult(float(np.mean(values)), float(np.std(values)) / root_n, 0.0)


def average_kernel(dataset, kernel: Callable) -> EstimateResult:
    """Average ``kernel(phi, x)`` over the dataset after phase folding.

    The standard error of each component is the rms deviation of the kernel
    over the data divided by sqrt(N).
    """
    _check_dataset(dataset)
    phi, x = fold_phases(dataset.phi, dataset.x)
    return _summarize(kernel(phi, x))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Reconstructed rho_{jk} = <j|rho|k> with per-element standard errors.

    Only the upper triangle is estimated; the lower one is its conjugate, so
    the matrix is Hermitian by construction.
    """

    value: np.ndarray
    err_re: np.ndarray
    err_im: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.value.shape[0]

    @property
    def n_max(self):
        return self.dim - 1

    def element(self, j, k) -> EstimateResult:
        v = complex(self.value[j, k])
        return EstimateResult(v.real if j == k else v, float(self.err_re[j, k]), float(self.err_im[j, k]))

    @classmethod
    def from_array(cls, rho, meta=None):
        """Wrap an exact matrix (zero errors), e.g. a theoretical state."""
        rho = np.asarray(rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        upper = np.triu(rho)
        value = upper + np.triu(rho, 1).conj().T
        np.fill_diagonal(value, np.diag(rho).real)
        zeros = np.zeros(rho.shape)
        return cls(value, zeros, zeros.copy(), dict(meta or {}))

    @classmethod
    def from_upper(cls, n_max, entries, meta=None):
        """Build from ``{(j, k): EstimateResult}`` for k >= j."""
        dim = n_max + 1
        value = np.zeros((dim, dim), dtype=complex)
        err_re = np.zeros((dim, dim))
        err_im = np.zeros((dim, dim))
        for (j, k), est in entries.items():
            v = complex(est.value)
            if j == k:
                v = complex(v.real, 0.0)
            value[j, k] = v
            value[k, j] = v.conjugate()
            err_re[j, k] = err_re[k, j] = est.stderr_re
            err_im[j, k] = err_im[k, j] = est.stderr_im
        return cls(value, err_re, err_im, dict(meta or {}))

    def to_dict(self):
        elements = []
        for j in range(self.dim):
            for k in range(j, self.dim):
                v = complex(self.value[j, k])
                elements.append(
                    {
                        "j": j,
                        "k": k,
                        "re": v.real,
                        "im": v.imag,
                        "err_re": float(self.err_re[j, k]),
                        "err_im": float(self.err_im[j, k]),
                    }
                )
        return {"n_max": self.n_max, "elements": elements}

    @classmethod
    def from_dict(cls, d):
        entries = {
            (e["j"], e["k"]): EstimateResult(complex(e["re"], e["im"]), e["err_re"], e["err_im"])
            for e in d["elements"]
        }
        return cls.from_upper(int(d["n_max"]), entries)


def reconstruct_rho(dataset, n_max, cutoff=FOCK_CUTOFF) -> DensityMatrix:
    """Estimate every <j|rho|k>, k >= j <= n_max, by pattern-function averaging."""
    _check_dataset(dataset)
    if int(n_max) != n_max or n_max < 0:
        raise ValueError(f"n_max must be a non-negative integer, got {n_max!r}")
    if n_max > cutoff:
        raise ValueError(f"n_max {n_max} exceeds the kernel cutoff {cutoff}")
    phi, x = fold_phases(dataset.phi, dataset.x)
    cache = PhiCache(x)
    entries = {}
    for j in range(n_max + 1):
        for d in range(n_max + 1 - j):
            values = matrix_kernel((j, d), phi, x, cutoff=cutoff, cache=cache)
            entries[(j, j + d)] = _summarize(values.real if d == 0 else values)
    return DensityMatrix.from_upper(n_max, entries, meta={"n": len(dataset)})


def photon_distribution(rho: DensityMatrix):
    """Diagonal of rho as ``[(n, p_n, stderr), ...]``, not renormalized."""
    return [(n, float(rho.value[n, n].real), float(rho.err_re[n, n])) for n in range(rho.dim)]


@dataclass(frozen=True, eq=False)
class WignerGrid:
    z: np.ndarray
    w: np.ndarray
    d_max: int
    n_max: int
    normalization: str = WIGNER_NORMALIZATION

    @property
    def points(self):
        return list(zip(self.z.tolist(), self.w.tolist()))


def wigner_from_rho(rho: DensityMatrix, grid, d_max) -> WignerGrid:
    """Evaluate W(z) = Re sum_d e^{i d arg z} sum_n Lambda(n, d; |z|^2) rho_{n, n+d}.

    Lambda(n, d; r) = (-1)^n 2 (2 - delta_d0) |2z|^d sqrt(n!/(n+d)!) e^{-2r} L_n^d(4r),
    truncated at d <= d_max and n + d <= rho.n_max.
    """
    n_max = rho.n_max
    if int(d_max) != d_max or not 0 <= d_max <= n_max:
        raise ValueError(f"d_max must lie in [0, {n_max}], got {d_max!r}")
    z = np.atleast_1d(np.asarray(grid, dtype=complex)).ravel()
    r2 = np.abs(z) ** 2
    two_z = 2.0 * np.abs(z)
    gauss = np.exp(-2.0 * r2)
    phase = np.exp(1j * np.angle(z))
    w = np.zeros(z.shape)
    for d in range(int(d_max) + 1):
        top = n_max - d
        lag = laguerre_sequence(top, d, 4.0 * r2, max_order=max(top, d, 64))
        acc = np.zeros(z.shape, dtype=complex)
        for n in range(top + 1):
            ratio = math.exp(0.5 * (ln_factorial(n) - ln_factorial(n + d)))
            sign = -1.0 if n % 2 else 1.0
            acc += sign * ratio * lag[n] * rho.value[n, n + d]
        weight = 2.0 * (1.0 if d == 0 else 2.0)
        w += (weight * two_z**d * gauss * phase**d * acc).real
    if not np.all(np.isfinite(w)):
        raise FloatingPointError("non-finite Wigner value")
    return WignerGrid(z=z, w=w, d_max=int(d_max), n_max=n_max)
