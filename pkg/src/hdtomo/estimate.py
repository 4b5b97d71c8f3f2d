"""Device-parameter estimation from homodyne data.

Adaptive mean-photon-number estimation, loss of a passive component from
before/after datasets, and maximum-likelihood fitting of the
absorption/amplification channel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .model import ChannelSpec, SignalSpec, sample_dataset
from .kernels import adaptive_number_kernel, fold_phases, moment_kernel, optimal_mu
from .specfun import ConvergenceError
from .tomo import EstimateResult, average_kernel

log = logging.getLogger(__name__)

__all__ = [
    "LossNotIdentifiable",
    "LossEstimate",
    "ChannelFit",
    "mean_photon_adaptive",
    "estimate_loss",
    "estimate_alpha",
    "channel_loglik",
    "fit_channel",
    "fit_channel_from_reference",
    "loss_sweep",
]


class LossNotIdentifiable(ValueError):
    """A mean-photon estimate is not significantly positive."""


@dataclass(frozen=True)
class LossEstimate:
    gamma: float
    gamma_err: float
    n0: EstimateResult
    n_gamma: EstimateResult
    visibility_correction: float = 1.0

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "gamma_err": self.gamma_err,
            "n0": float(self.n0.value),
            "n0_err": self.n0.stderr_re,
            "ngamma": float(self.n_gamma.value),
            "ngamma_err": self.n_gamma.stderr_re,
            "visibility_exponent": self.visibility_correction,
        }


@dataclass(frozen=True)
class ChannelFit:
    """Maximum-likelihood channel parameters.

    ``degenerate`` marks g_hat statistically indistinguishable from 1, where
    the split into (g1t, g2t) is not identifiable; ``physical`` is False when
    either rate comes out negative (reported as is, never clamped).
    """

    g_hat: float
    delta2_hat: float
    g1t_hat: float
    g2t_hat: float
    loglik: float
    converged: bool
    iterations: int
    cov: np.ndarray = field(repr=False)
    degenerate: bool = False
    physical: bool = True

    @property
    def g_err(self):
        return math.sqrt(self.cov[0, 0])

    @property
    def delta2_err(self):
        return math.sqrt(self.cov[1, 1])

    def to_dict(self):
        return {
            "g": self.g_hat,
            "delta2": self.delta2_hat,
            "g1t": self.g1t_hat,
            "g2t": self.g2t_hat,
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "cov": np.asarray(self.cov).tolist(),
            "degenerate": self.degenerate,
            "physical": self.physical,
        }


def mean_photon_adaptive(dataset) -> EstimateResult:
    """<a^dag a> from the photon-number kernel with the variance-optimal mu.

    The data are used twice: once for mu*, once for the average.
    """
    coef = optimal_mu(dataset)
    return average_kernel(dataset, lambda phi, x: adaptive_number_kernel(coef, phi, x))


def estimate_loss(data0, data_gamma, vis0=1.0, vis_gamma=1.0, exponent=1.0) -> LossEstimate:
    """Loss Gamma from mean photon numbers before and after the component.

    Gamma = -1/2 ln[(n_Gamma / n_0) / (V_Gamma / V_0)^exponent], with
    first-order error propagation from both standard errors.
    """
    if not (vis0 > 0 and vis_gamma > 0):
        raise ValueError("visibilities must be positive")
    n0 = mean_photon_adaptive(data0)
    ng = mean_photon_adaptive(data_gamma)
    for name, est in (("n0", n0), ("n_gamma", ng)):
        if not est.value > 2.0 * est.stderr_re:
            raise LossNotIdentifiable(
                f"{name} = {est.value:.6g} +- {est.stderr_re:.3g} is not positive beyond 2 standard errors"
            )
    ratio = ng.value / n0.value
    gamma = -0.5 * (math.log(ratio) - exponent * math.log(vis_gamma / vis0))
    gamma_err = 0.5 * math.hypot(n0.stderr_re / n0.value, ng.stderr_re / ng.value)
    return LossEstimate(gamma, gamma_err, n0, ng, exponent)


def estimate_alpha(dataset) -> complex:
    """Coherent amplitude <a> via the first-moment kernel 2x e^{i phi}."""
    return complex(average_kernel(dataset, lambda phi, x: moment_kernel((0, 1), phi, x)).value)


def _width(g, delta2, eta):
    return delta2 + 0.5 * g * g + (1.0 - eta) / (2.0 * eta)


def channel_loglik(dataset, alpha0, eta, g, delta2) -> float:
    """Log-likelihood sum_j log p(x_j | g, delta2) of the coherent-signal model."""
    s2 = _width(g, delta2, eta)
    if not s2 > 0:
        raise ValueError(f"total width s2 = {s2} must be positive")
    phi, x = fold_phases(dataset.phi, dataset.x)
    resid = x - g * (complex(alpha0) * np.exp(-1j * phi)).real
    return float(-0.5 * x.size * math.log(math.pi * s2) - np.sum(resid * resid) / s2)


class _SufficientStats:
    # the log-likelihood depends on the data only through these sums
    def __init__(self, dataset, alpha0):
        phi, x = fold_phases(dataset.phi, dataset.x)
        c = (complex(alpha0) * np.exp(-1j * phi)).real
        self.n = x.size
        self.sxx = float(np.sum(x * x))
        self.sxc = float(np.sum(x * c))
        self.scc = float(np.sum(c * c))

    def loglik(self, g, delta2, eta):
        s2 = _width(g, delta2, eta)
        if not s2 > 0:
            return -math.inf
        rss = self.sxx - 2.0 * g * self.sxc + g * g * self.scc
        return -0.5 * self.n * math.log(math.pi * s2) - rss / s2


def _hessian(f, theta, steps):
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    h = np.empty((k, k))
    f0 = f(theta)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = steps[i]
        h[i, i] = (f(theta + ei) - 2.0 * f0 + f(theta - ei)) / steps[i] ** 2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = steps[j]
            h[i, j] = h[j, i] = (
                f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)
            ) / (4.0 * steps[i] * steps[j])
    return h


def _rates_from_fit(g, delta2):
    diff = -2.0 * math.log(g)  # g1t - g2t
    if abs(g - 1.0) < 1e-9:
        total = 2.0 * delta2
    else:
        total = -4.0 * math.log(g) * delta2 / (1.0 - g * g)
    return 0.5 * (total + diff), 0.5 * (total - diff)


def fit_channel(dataset, alpha0, eta, max_iter=10_000, xatol=1e-8, raise_on_failure=True) -> ChannelFit:
    """Maximum-likelihood (g, delta^2) for a known input amplitude ``alpha0``.

    Nelder-Mead on (g, sqrt(delta^2)) from a moment-based start; errors from
    the observed information (numerical Hessian at the maximum).
    """
    if len(dataset) == 0:
        raise ValueError("fit_channel: empty dataset")
    if not dataset.calibrated:
        raise ValueError("fit_channel: dataset is not calibrated")
    alpha0 = complex(alpha0)
    if alpha0 == 0:
        raise ValueError("fit_channel: alpha0 must be nonzero for g to be identifiable")
    if not 0 < eta <= 1:
        raise ValueError(f"fit_channel: eta must lie in (0, 1], got {eta}")

    stats = _SufficientStats(dataset, alpha0)
    phi, x = fold_phases(dataset.phi, dataset.x)
    g0 = abs(np.mean(2.0 * x * np.exp(1j * phi))) / abs(alpha0)
    resid = x - g0 * (alpha0 * np.exp(-1j * phi)).real
    var_hat = float(np.var(resid))
    delta2_0 = max(0.0, 2.0 * var_hat - 0.5 * g0 * g0 - (1.0 - eta) / (2.0 * eta))

    def objective(theta):
        g, u = theta
        if g <= 0:
            return math.inf
        return -stats.loglik(g, u * u, eta) / stats.n

    start = np.array([g0, math.sqrt(delta2_0)])
    simplex = np.array([start, start + [0.05 * max(g0, 0.1), 0.0], start + [0.0, 0.05 + 0.05 * start[1]]])
    res = minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={"xatol": xatol, "fatol": math.inf, "maxiter": max_iter, "maxfev": 4 * max_iter, "initial_simplex": simplex},
    )
    converged = bool(res.success)
    if not converged:
        msg = f"fit_channel: Nelder-Mead did not converge after {res.nit} iterations ({res.message})"
        if raise_on_failure:
            raise ConvergenceError(msg)
        log.warning(msg)

    g_hat = float(res.x[0])
    delta2_hat = float(res.x[1] ** 2)
    loglik = stats.loglik(g_hat, delta2_hat, eta)

    steps = [1e-4 * max(g_hat, 1e-2), 1e-4 * max(delta2_hat, 1e-2)]
    hess = _hessian(lambda t: stats.loglik(t[0], t[1], eta), [g_hat, delta2_hat], steps)
    try:
        cov = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.nan)

    g1t, g2t = _rates_from_fit(g_hat, delta2_hat)
    g_err = math.sqrt(cov[0, 0]) if cov[0, 0] > 0 else math.nan
    degenerate = not abs(g_hat - 1.0) > 3.0 * g_err
    if degenerate:
        log.warning("fit_channel: g_hat = %.6g is consistent with 1; (g1t, g2t) split not identifiable", g_hat)
    physical = g1t >= 0 and g2t >= 0
    return ChannelFit(
        g_hat=g_hat,
        delta2_hat=delta2_hat,
        g1t_hat=g1t,
        g2t_hat=g2t,
        loglik=loglik,
        converged=converged,
        iterations=int(res.nit),
        cov=cov,
        degenerate=degenerate,
        physical=physical,
    )


def fit_channel_from_reference(reference, dataset, eta, **kwargs) -> ChannelFit:
    """Fit the channel using alpha0 estimated from a pre-channel ``reference`` dataset."""
    return fit_channel(dataset, estimate_alpha(reference), eta, **kwargs)


class SweepRow(NamedTuple):
    n0: float
    gamma_true: float
    n_est: float
    n_err: float
    n_expected: float
    gamma_est: float
    gamma_err: float


def loss_sweep(amplitudes, gammas, n, seed, visibility=1.0):
    """Simulate before/after pairs for every (amplitude, Gamma) and estimate the loss.

    Each point gets its own pair of seeds derived from ``seed``. The expected
    output photon number is n0 e^{-2 Gamma}, with n0 = (V |alpha|)^2 the
    detected input photon number.
    """
    amplitudes = [complex(a) for a in amplitudes]
    gammas = [float(g) for g in gammas]
    if not amplitudes or not gammas:
        raise ValueError("loss_sweep: need at least one amplitude and one loss value")
    if any(g < 0 for g in gammas):
        raise ValueError("loss_sweep: loss values must be non-negative")
    seeds = np.random.SeedSequence(seed).generate_state(2 * len(amplitudes) * len(gammas), dtype=np.uint32)
    rows = []
    i = 0
    for alpha in amplitudes:
        signal = SignalSpec(alpha)
        n0 = (visibility * abs(alpha)) ** 2
        for gamma in gammas:
            ref = sample_dataset(signal, ChannelSpec(visibility=visibility), n, int(seeds[i]))
            out = sample_dataset(signal, ChannelSpec.pure_loss(gamma, visibility=visibility), n, int(seeds[i + 1]))
            i += 2
            est = estimate_loss(ref, out, visibility, visibility)
            rows.append(
                SweepRow(
                    n0=n0,
                    gamma_true=gamma,
                    n_est=float(est.n_gamma.value),
                    n_err=est.n_gamma.stderr_re,
                    n_expected=n0 * math.exp(-2.0 * gamma),
                    gamma_est=est.gamma,
                    gamma_err=est.gamma_err,
                )
            )
    return rows
