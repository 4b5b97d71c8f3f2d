import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdtomo.model import (
    ChannelSpec,
    HomodyneDataset,
    HomodyneRecord,
    SignalSpec,
    calibrate,
    derive_channel,
    homodyne_pdf,
    sample_dataset,
)

from oracles import GH_T, GH_W

LN2 = math.log(2.0)


# -- types -----------------------------------------------------------------

def test_channel_spec_validation():
    for kwargs in ({"g1t": -0.1}, {"g2t": -1.0}, {"eta": 0.0}, {"eta": 1.2}, {"visibility": 0.0}, {"visibility": 1.5}):
        with pytest.raises(ValueError):
            ChannelSpec(**kwargs)


def test_channel_from_atoms():
    ch = ChannelSpec.from_atoms(gamma_rate=0.5, n_lower=4, n_upper=1, t=2.0)
    assert (ch.g1t, ch.g2t) == (4.0, 1.0)


def test_signal_spec_validation():
    with pytest.raises(ValueError):
        SignalSpec(1.0, n_thermal=-1.0)
    assert not SignalSpec(1.0, squeeze_r=0.3).is_coherent


# -- derive_channel --------------------------------------------------------

def test_derive_identity():
    d = derive_channel(ChannelSpec())
    assert (d.g, d.delta2, d.s2) == (1.0, 0.0, 0.5)


def test_derive_pure_loss():
    d = derive_channel(ChannelSpec(g1t=2 * LN2))
    assert d.g == pytest.approx(0.5, rel=1e-15)
    assert d.delta2 == pytest.approx(0.375, rel=1e-14)
    assert d.s2 == pytest.approx(0.5, rel=1e-15)


def test_derive_amplifier():
    d = derive_channel(ChannelSpec(g2t=2 * LN2))
    assert d.g == pytest.approx(2.0, rel=1e-15)
    assert d.delta2 == pytest.approx(1.5, rel=1e-14)
    assert d.s2 == pytest.approx(3.5, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(g1t=st.floats(0, 8), eta=st.floats(0.05, 1.0))
def test_pure_loss_total_width(g1t, eta):
    d = derive_channel(ChannelSpec(g1t=g1t, eta=eta))
    assert d.delta2 + 0.5 * d.g**2 == pytest.approx(0.5, abs=2e-16)
    assert d.s2 > 0


def test_delta2_continuous_at_zero_qt():
    total = 1.3
    at_zero = derive_channel(ChannelSpec(g1t=total / 2, g2t=total / 2)).delta2
    near = derive_channel(ChannelSpec(g1t=total / 2 + 1e-9, g2t=total / 2 - 1e-9)).delta2
    assert abs(near - at_zero) < 1e-8
    assert at_zero == pytest.approx(total / 2)


# -- homodyne_pdf ----------------------------------------------------------

def test_pdf_vacuum_peak():
    d = derive_channel(ChannelSpec())
    assert homodyne_pdf(SignalSpec.vacuum(), d, 0.3, 0.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)


def test_pdf_shifted_peak():
    d = derive_channel(ChannelSpec())
    assert homodyne_pdf(SignalSpec(2.0), d, 0.0, 2.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)


def test_pdf_tails():
    d = derive_channel(ChannelSpec())
    assert homodyne_pdf(SignalSpec(1 + 1j), d, 1.0, 50.0) == 0.0
    assert homodyne_pdf(SignalSpec(1 + 1j), d, 1.0, -50.0) == 0.0


def test_pdf_rejects_squeezed():
    with pytest.raises(ValueError):
        homodyne_pdf(SignalSpec(1.0, squeeze_r=0.2), derive_channel(ChannelSpec()), 0.0, 0.0)


@settings(max_examples=80, deadline=None)
@given(
    alpha_re=st.floats(-4, 4),
    alpha_im=st.floats(-4, 4),
    g1t=st.floats(0, 3),
    g2t=st.floats(0, 1.5),
    eta=st.floats(0.3, 1.0),
    vis=st.floats(0.2, 1.0),
    phi=st.floats(0, 2 * math.pi),
)
def test_pdf_normalized_and_centered(alpha_re, alpha_im, g1t, g2t, eta, vis, phi):
    sig = SignalSpec(complex(alpha_re, alpha_im))
    ch = ChannelSpec(g1t=g1t, g2t=g2t, eta=eta, visibility=vis)
    d = derive_channel(ch)
    mean = d.g * vis * (sig.alpha * np.exp(-1j * phi)).real
    width = math.sqrt(d.s2)
    # Gauss-Hermite with the pdf divided out: int p dx = sum w p(x) e^{t^2} * width
    x = mean + width * GH_T
    p = homodyne_pdf(sig, d, phi, x, visibility=vis)
    weights = GH_W * np.exp(GH_T**2) * width
    assert np.sum(weights * p) == pytest.approx(1.0, abs=1e-9)
    assert np.sum(weights * p * x) == pytest.approx(mean, abs=1e-9)


# -- sample_dataset --------------------------------------------------------

def test_sample_phases_grid():
    ds = sample_dataset(SignalSpec.vacuum(), ChannelSpec(), 8, seed=0)
    np.testing.assert_allclose(ds.phi, 2 * math.pi * (np.arange(1, 9) - 0.5) / 8, rtol=0, atol=1e-15)
    assert ds.calibrated
    assert ds.meta["n"] == 8 and ds.meta["seed"] == 0


def test_sample_vacuum_variance(vacuum_1e5):
    var = float(np.var(vacuum_1e5.x))
    assert 0.2472 <= var <= 0.2528


def test_sample_reference_photon_number(coherent_ref):
    k = 2 * coherent_ref.x**2 - 0.5
    stderr = k.std() / math.sqrt(k.size)
    assert abs(k.mean() - 8.4) < 3 * stderr


def test_sample_deterministic():
    a = sample_dataset(SignalSpec(1 + 2j), ChannelSpec(g1t=0.3), 1000, seed=5)
    b = sample_dataset(SignalSpec(1 + 2j), ChannelSpec(g1t=0.3), 1000, seed=5)
    assert a.records == b.records
    assert a.x.tobytes() == b.x.tobytes()
    c = sample_dataset(SignalSpec(1 + 2j), ChannelSpec(g1t=0.3), 1000, seed=6)
    assert a.x.tobytes() != c.x.tobytes()


def test_sample_rejects_bad_input():
    with pytest.raises(ValueError):
        sample_dataset(SignalSpec.vacuum(), ChannelSpec(), 0, seed=1)
    with pytest.raises(ValueError):
        sample_dataset(SignalSpec(1.0, squeeze_r=0.5), ChannelSpec(), 10, seed=1)
    with pytest.raises(ValueError):
        sample_dataset(SignalSpec(1.0, n_thermal=0.5), ChannelSpec(), 10, seed=1)


def test_sample_mean_follows_model():
    alpha = 2.0 - 1.0j
    ch = ChannelSpec(g1t=0.8, g2t=0.1, eta=0.8, visibility=0.7)
    d = derive_channel(ch)
    ds = sample_dataset(SignalSpec(alpha), ch, 1_000_000, seed=3)
    mean = d.g * ch.visibility * (alpha * np.exp(-1j * ds.phi)).real
    resid = ds.x - mean
    se = math.sqrt(d.s2 / 2) / math.sqrt(ds.n)
    assert abs(resid.mean()) < 4 * se
    # the phase-resolved mean: <2 x e^{i phi}> over [0, 2pi) is g V alpha
    proj = np.mean(2 * ds.x * np.exp(1j * ds.phi))
    se_proj = 2 * math.sqrt(d.s2 / 2) / math.sqrt(ds.n)
    assert abs(proj - d.g * ch.visibility * alpha) < 4 * se_proj * math.sqrt(2)
    assert np.var(resid) == pytest.approx(d.s2 / 2, rel=4 * math.sqrt(2 / ds.n))


# -- dataset container -----------------------------------------------------

def test_dataset_phase_normalization():
    ds = HomodyneDataset([-0.5, 2 * math.pi + 0.25, 7.0], [0.0, 1.0, 2.0])
    assert np.all((ds.phi >= 0) & (ds.phi < 2 * math.pi))
    assert ds.phi[1] == pytest.approx(0.25)


def test_dataset_records_roundtrip():
    recs = [HomodyneRecord(0.1, 0.2), HomodyneRecord(3.0, -1.5)]
    ds = HomodyneDataset.from_records(recs)
    assert ds.records == recs
    assert len(ds) == 2


def test_dataset_immutable():
    ds = HomodyneDataset([0.1], [0.2])
    with pytest.raises(ValueError):
        ds.x[0] = 1.0


# -- calibrate -------------------------------------------------------------

def _raw(x, phi=None):
    x = np.asarray(x, dtype=float)
    phi = np.linspace(0, 2 * math.pi, x.size, endpoint=False) if phi is None else phi
    return HomodyneDataset(phi, x, calibrated=False)


def test_calibrate_unit_scale():
    vac = _raw([0.5, -0.5, 0.5, -0.5])  # variance exactly 1/4
    raw = _raw([1.0, 2.0, 3.0, 4.0])
    out = calibrate(raw, vac)
    assert out.meta["scale"] == 1.0
    np.testing.assert_array_equal(out.x, raw.x)
    assert out.calibrated


def test_calibrate_doubled_vacuum():
    vac = _raw([1.0, -1.0, 1.0, -1.0])
    out = calibrate(_raw([2.0, 4.0]), vac)
    assert out.meta["scale"] == 0.5
    np.testing.assert_array_equal(out.x, [1.0, 2.0])


def test_calibrate_errors():
    with pytest.raises(ValueError):
        calibrate(_raw([1.0]), HomodyneDataset([], [], calibrated=False))
    with pytest.raises(ValueError):
        calibrate(_raw([1.0]), _raw([0.3, 0.3]))
    with pytest.raises(ValueError):
        calibrate(HomodyneDataset([0.0], [1.0], calibrated=True), _raw([1.0, -1.0]))


def test_calibrate_restores_shot_noise_units():
    gain = 3.7
    vac = sample_dataset(SignalSpec.vacuum(), ChannelSpec(), 50_000, seed=1, calibrated=False)
    sig = sample_dataset(SignalSpec(2.0), ChannelSpec(), 50_000, seed=2, calibrated=False)
    vac = HomodyneDataset(vac.phi, vac.x * gain, calibrated=False)
    sig = HomodyneDataset(sig.phi, sig.x * gain, calibrated=False)
    out = calibrate(sig, vac)
    assert out.meta["scale"] == pytest.approx(1 / gain, rel=0.01)


def test_dataset_rejects_nonfinite():
    with pytest.raises(ValueError, match="quadrature at record 1"):
        HomodyneDataset([0.1, 0.2], [0.0, float("nan")])
    with pytest.raises(ValueError, match="phase at record 0"):
        HomodyneDataset([float("inf")], [0.0])
