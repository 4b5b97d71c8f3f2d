"""Gaussian signals, the absorbing/amplifying channel and synthetic homodyne data.

Quadrature convention: x_phi = (a e^{-i phi} + a^dag e^{i phi}) / 2, so the
vacuum has variance 1/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi
QT_SERIES_THRESHOLD = 1e-9

__all__ = [
    "SignalSpec",
    "ChannelSpec",
    "DerivedChannel",
    "HomodyneRecord",
    "HomodyneDataset",
    "derive_channel",
    "homodyne_pdf",
    "sample_dataset",
    "calibrate",
]


@dataclass(frozen=True)
class SignalSpec:
    """Gaussian input state D(alpha) S(r) nu S^dag(r) D^dag(alpha).

    Only coherent signals (``squeeze_r == 0`` and ``n_thermal == 0``) can be
    sampled or reconstructed; the other fields exist so the type covers the
    general Gaussian family.
    """

    alpha: complex = 0j
    squeeze_r: float = 0.0
    n_thermal: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not (math.isfinite(self.alpha.real) and math.isfinite(self.alpha.imag)):
            raise ValueError("alpha must be finite")
        if not self.n_thermal >= 0:
            raise ValueError(f"n_thermal must be >= 0, got {self.n_thermal}")
        if not math.isfinite(self.squeeze_r):
            raise ValueError("squeeze_r must be finite")

    @classmethod
    def vacuum(cls):
        return cls(0j)

    @classmethod
    def coherent(cls, alpha):
        return cls(complex(alpha))

    @property
    def is_coherent(self):
        return self.squeeze_r == 0 and self.n_thermal == 0

    @property
    def mean_photons(self):
        return abs(self.alpha) ** 2

    def to_dict(self):
        return {
            "alpha_re": self.alpha.real,
            "alpha_im": self.alpha.imag,
            "squeeze_r": self.squeeze_r,
            "n_thermal": self.n_thermal,
        }


@dataclass(frozen=True)
class ChannelSpec:
    """Master-equation channel (absorption G1 t, gain G2 t) plus detection.

    Attributes:
        g1t: absorption G1 * t.
        g2t: amplification G2 * t.
        eta: detector quantum efficiency in (0, 1].
        visibility: homodyne mode overlap in (0, 1]; scales the detected amplitude.
    """

    g1t: float = 0.0
    g2t: float = 0.0
    eta: float = 1.0
    visibility: float = 1.0

    def __post_init__(self):
        if not (self.g1t >= 0 and math.isfinite(self.g1t)):
            raise ValueError(f"g1t must be finite and >= 0, got {self.g1t}")
        if not (self.g2t >= 0 and math.isfinite(self.g2t)):
            raise ValueError(f"g2t must be finite and >= 0, got {self.g2t}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0 < self.visibility <= 1:
            raise ValueError(f"visibility must lie in (0, 1], got {self.visibility}")

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def pure_loss(cls, gamma, eta=1.0, visibility=1.0):
        """Loss Gamma reduces the amplitude by e^{-Gamma}: g1t = 2 Gamma."""
        return cls(g1t=2.0 * gamma, eta=eta, visibility=visibility)

    @classmethod
    def from_atoms(cls, gamma_rate, n_lower, n_upper, t, eta=1.0, visibility=1.0):
        """Two-level-atom medium: G1 = gamma N1, G2 = gamma N2, over time t."""
        return cls(
            g1t=gamma_rate * n_lower * t,
            g2t=gamma_rate * n_upper * t,
            eta=eta,
            visibility=visibility,
        )

    def to_dict(self):
        return {"g1t": self.g1t, "g2t": self.g2t, "eta": self.eta, "visibility": self.visibility}


class DerivedChannel(NamedTuple):
    g: float
    qt: float
    delta2: float
    s2: float


def derive_channel(channel: ChannelSpec) -> DerivedChannel:
    """Amplitude gain g, Q t, added noise delta^2 and total width s2."""
    qt = 0.5 * (channel.g1t - channel.g2t)
    g = math.exp(-qt)
    total = channel.g1t + channel.g2t
    if abs(qt) < QT_SERIES_THRESHOLD:
        # (1 - e^{-2q}) / (4q) = 1/2 - q/2 + O(q^2)
        delta2 = total * (0.5 - 0.5 * qt)
    else:
        delta2 = total * (-math.expm1(-2.0 * qt)) / (4.0 * qt)
    s2 = delta2 + 0.5 * g * g + (1.0 - channel.eta) / (2.0 * channel.eta)
    return DerivedChannel(g=g, qt=qt, delta2=delta2, s2=s2)


def _mean_quadrature(alpha, amp, phi):
    return amp * (alpha * np.exp(-1j * np.asarray(phi, dtype=float))).real


def homodyne_pdf(signal: SignalSpec, derived: DerivedChannel, phi, x, visibility=1.0):
    """Quadrature probability density p(x; phi) after the channel.

    p = (pi s2)^{-1/2} exp(-(x - g V Re(alpha e^{-i phi}))^2 / s2)
    """
    if not signal.is_coherent:
        raise ValueError("homodyne_pdf: only coherent signals are supported")
    mean = _mean_quadrature(signal.alpha, derived.g * visibility, phi)
    x = np.asarray(x, dtype=float)
    p = np.exp(-((x - mean) ** 2) / derived.s2) / math.sqrt(math.pi * derived.s2)
    return p if np.ndim(p) else float(p)


class HomodyneRecord(NamedTuple):
    phi: float
    x: float


@dataclass(frozen=True, eq=False)
class HomodyneDataset:
    """Calibrated (phase, quadrature) samples.

    Stored column-wise as two float arrays; ``records`` gives the row view.
    """

    phi: np.ndarray
    x: np.ndarray
    calibrated: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float).ravel()
        x = np.array(self.x, dtype=float).ravel()
        if phi.shape != x.shape:
            raise ValueError(f"phi and x lengths differ: {phi.size} != {x.size}")
        for name, arr in (("phase", phi), ("quadrature", x)):
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise ValueError(f"non-finite {name} at record {int(bad[0])}")
        phi = np.mod(phi, TWO_PI)
        # np.mod can round a tiny negative phase up to exactly 2 pi
        phi[phi >= TWO_PI] = 0.0
        phi.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def from_records(cls, records, calibrated=True, meta=None):
        records = list(records)
        phi = [r[0] for r in records]
        x = [r[1] for r in records]
        return cls(np.array(phi, dtype=float), np.array(x, dtype=float), calibrated, meta or {})

    @property
    def n(self):
        return self.x.size

    def __len__(self):
        return self.x.size

    @property
    def records(self):
        return [HomodyneRecord(float(p), float(v)) for p, v in zip(self.phi, self.x)]

    def __iter__(self) -> Iterator[HomodyneRecord]:
        return iter(self.records)

    def with_flags(self, calibrated=None, meta=None):
        return replace(
            self,
            calibrated=self.calibrated if calibrated is None else calibrated,
            meta=self.meta if meta is None else meta,
        )


def sample_dataset(signal: SignalSpec, channel: ChannelSpec, n: int, seed: int, calibrated=True):
    """Draw ``n`` homodyne samples on the phase ramp 2 pi (j - 1/2) / n.

    One quadrature value per phase, drawn from :func:`homodyne_pdf` with a
    PCG64 generator seeded by ``seed``. Identical inputs give bit-identical data.
    Pass ``calibrated=False`` to mark the output as raw detector data.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"sample_dataset: n must be a positive integer, got {n!r}")
    if not signal.is_coherent:
        raise ValueError("sample_dataset: squeezed/thermal signals cannot be sampled")
    n = int(n)
    derived = derive_channel(channel)
    phi = TWO_PI * (np.arange(1, n + 1) - 0.5) / n
    rng = np.random.Generator(np.random.PCG64(seed))
    mean = _mean_quadrature(signal.alpha, derived.g * channel.visibility, phi)
    x = mean + math.sqrt(0.5 * derived.s2) * rng.standard_normal(n)
    meta = {
        "n": n,
        "seed": int(seed),
        "calibrated": bool(calibrated),
        "scale": 1.0,
        "signal": signal.to_dict(),
        "channel": channel.to_dict(),
    }
    return HomodyneDataset(phi, x, calibrated=calibrated, meta=meta)


def calibrate(raw: HomodyneDataset, vacuum: HomodyneDataset) -> HomodyneDataset:
    """Rescale ``raw`` so that the vacuum reference has variance 1/4."""
    if len(vacuum) == 0:
        raise ValueError("calibrate: vacuum dataset is empty")
    if raw.calibrated:
        raise ValueError("calibrate: dataset is already calibrated")
    var = float(np.var(vacuum.x))
    if not (math.isfinite(var) and var > 0):
        raise ValueError(f"calibrate: unusable vacuum variance {var}")
    c = math.sqrt(0.25 / var)
    meta = dict(raw.meta)
    meta["calibrated"] = True
    meta["scale"] = meta.get("scale", 1.0) * c
    return HomodyneDataset(raw.phi, raw.x * c, calibrated=True, meta=meta)
