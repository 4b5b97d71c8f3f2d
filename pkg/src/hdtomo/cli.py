"""Command-line front end.

Exit codes: 0 success, 2 usage/validation error, 1 runtime/numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .estimate import estimate_loss, fit_channel, loss_sweep, mean_photon_adaptive
from .model import ChannelSpec, SignalSpec, calibrate, sample_dataset
from .tomo import photon_distribution, reconstruct_rho, wigner_from_rho

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

log = logging.getLogger("hdtomo")


class UsageError(Exception):
    pass


def _parse_floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _parse_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be min:max:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if not (step > 0 and hi >= lo):
        raise argparse.ArgumentTypeError(f"grid needs step > 0 and max >= min, got {text!r}")
    return lo, hi, step


def grid_axis(lo, hi, step):
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _require_input(path):
    if not Path(path).is_file():
        raise UsageError(f"input file not found: {path}")


def _require_calibrated(ds, path, assume):
    if not ds.calibrated and not assume:
        raise UsageError(f"{path} is not marked calibrated (no sidecar or calibrated=false); "
                         "run 'calibrate' or pass --assume-calibrated")
    return ds.with_flags(calibrated=True)


def cmd_simulate(args):
    signal = SignalSpec(complex(args.alpha_re, args.alpha_im))
    channel = ChannelSpec(g1t=args.g1t, g2t=args.g2t, eta=args.eta, visibility=args.visibility)
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    if args.gain <= 0:
        raise UsageError("--gain must be positive")
    ds = sample_dataset(signal, channel, args.n, args.seed, calibrated=not (args.raw or args.gain != 1.0))
    if args.gain != 1.0:
        meta = dict(ds.meta, gain=args.gain)
        ds = type(ds)(ds.phi, ds.x * args.gain, calibrated=ds.calibrated, meta=meta)
    io.write_dataset(args.out, ds)
    print(f"N={len(ds)} seed={args.seed}")


def cmd_calibrate(args):
    _require_input(args.raw)
    _require_input(args.vacuum)
    raw = io.read_dataset(args.raw).with_flags(calibrated=False)
    vac = io.read_dataset(args.vacuum)
    out = calibrate(raw, vac)
    io.write_dataset(args.out, out)
    print(f"N={len(out)} scale={out.meta['scale']:.9g}")


def cmd_reconstruct(args):
    _require_input(args.data)
    if args.nmax < 0:
        raise UsageError("--nmax must be >= 0")
    ds = _require_calibrated(io.read_dataset(args.data), args.data, args.assume_calibrated)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rho = reconstruct_rho(ds, args.nmax)
    io.write_rho(out / "rho.json", rho)
    dist = photon_distribution(rho)
    io.write_table(out / "photon.csv", ["n", "p", "err"], dist)
    trace = sum(p for _, p, _ in dist)
    nbar = sum(n * p for n, p, _ in dist)
    print(f"trace={trace:.6f} nbar={nbar:.6f}")


def cmd_wigner(args):
    _require_input(args.rho)
    rho = io.read_rho(args.rho)
    if not 0 <= args.dmax <= rho.n_max:
        raise UsageError(f"--dmax {args.dmax} must lie in [0, {rho.n_max}] for this density matrix")
    axis = grid_axis(*args.grid)
    re, im = np.meshgrid(axis, axis, indexing="ij")
    grid = wigner_from_rho(rho, (re + 1j * im).ravel(), args.dmax)
    io.write_wigner(args.out, grid)
    i = int(np.argmax(grid.w))
    print(f"points={grid.w.size} max W={grid.w[i]:.6f} at ({grid.z[i].real:.4g}, {grid.z[i].imag:.4g})")


def cmd_estimate(args):
    if args.mode == "mean-photon":
        _require_input(args.data)
        ds = _require_calibrated(io.read_dataset(args.data), args.data, args.assume_calibrated)
        est = mean_photon_adaptive(ds)
        io.write_json(args.out, {"value": float(est.value), "stderr": est.stderr_re})
        print(f"nbar = {est.value:.6f} +- {est.stderr_re:.6f}")
    elif args.mode == "loss":
        for p in (args.data0, args.data_gamma):
            _require_input(p)
        if not (args.vis0 > 0 and args.visg > 0):
            raise UsageError("visibilities must be positive")
        d0 = _require_calibrated(io.read_dataset(args.data0), args.data0, args.assume_calibrated)
        dg = _require_calibrated(io.read_dataset(args.data_gamma), args.data_gamma, args.assume_calibrated)
        est = estimate_loss(d0, dg, args.vis0, args.visg, args.vis_exponent)
        io.write_json(args.out, est.to_dict())
        print(f"gamma = {est.gamma:.6f} +- {est.gamma_err:.6f} "
              f"(n0 = {est.n0.value:.4f}, ngamma = {est.n_gamma.value:.4f})")
    else:
        _require_input(args.data)
        if not 0 < args.eta <= 1:
            raise UsageError("--eta must lie in (0, 1]")
        ds = _require_calibrated(io.read_dataset(args.data), args.data, args.assume_calibrated)
        fit = fit_channel(ds, complex(args.alpha0_re, args.alpha0_im), args.eta)
        io.write_json(args.out, fit.to_dict())
        print(f"g = {fit.g_hat:.6f} +- {fit.g_err:.6f}, delta2 = {fit.delta2_hat:.6f}, "
              f"g1t = {fit.g1t_hat:.6f}, g2t = {fit.g2t_hat:.6f}")
        if fit.degenerate:
            print("warning: g is consistent with 1; the (g1t, g2t) split is not identifiable", file=sys.stderr)
        if not fit.physical:
            print("warning: negative rate estimate (non-physical fit)", file=sys.stderr)


def cmd_loss_sweep(args):
    if not args.amplitudes:
        raise UsageError("--amplitudes must not be empty")
    if not args.gammas:
        raise UsageError("--gammas must not be empty")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if not 0 < args.visibility <= 1:
        raise UsageError("--visibility must lie in (0, 1]")
    rows = loss_sweep(args.amplitudes, args.gammas, args.n, args.seed, visibility=args.visibility)
    io.write_table(args.out, ["n0", "gamma_true", "n_est", "n_err", "n_expected"],
                   [(r.n0, r.gamma_true, r.n_est, r.n_err, r.n_expected) for r in rows])
    print(f"rows={len(rows)}")


def build_parser():
    p = argparse.ArgumentParser(prog="hdtomo", description="Homodyne tomography for optical device characterization.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic homodyne dataset")
    s.add_argument("--alpha-re", type=float, default=0.0)
    s.add_argument("--alpha-im", type=float, default=0.0)
    s.add_argument("--g1t", type=float, default=0.0, help="absorption G1*t")
    s.add_argument("--g2t", type=float, default=0.0, help="amplification G2*t")
    s.add_argument("--eta", type=float, default=1.0, help="detector quantum efficiency")
    s.add_argument("--visibility", type=float, default=1.0)
    s.add_argument("--n", type=int, required=True, help="number of samples")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True, help="output CSV (sidecar <name>.meta.json alongside)")
    s.add_argument("--raw", action="store_true", help="mark output uncalibrated")
    s.add_argument("--gain", type=float, default=1.0, help="detector gain applied to x; output is marked uncalibrated")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("calibrate", help="rescale raw data to vacuum variance 1/4")
    s.add_argument("--raw", required=True)
    s.add_argument("--vacuum", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("reconstruct", help="density matrix and photon distribution")
    s.add_argument("--data", required=True)
    s.add_argument("--nmax", type=int, required=True)
    s.add_argument("--out", required=True, help="output directory (rho.json, photon.csv)")
    s.add_argument("--assume-calibrated", action="store_true")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("wigner", help="Wigner function on a square grid")
    s.add_argument("--rho", required=True)
    s.add_argument("--grid", type=_parse_grid, required=True, help="min:max:step, used for both axes")
    s.add_argument("--dmax", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_wigner)

    s = sub.add_parser("estimate", help="parameter estimation")
    modes = s.add_subparsers(dest="mode", required=True)
    m = modes.add_parser("mean-photon")
    m.add_argument("--data", required=True)
    m = modes.add_parser("loss")
    m.add_argument("--data0", required=True)
    m.add_argument("--data-gamma", required=True)
    m.add_argument("--vis0", type=float, default=1.0)
    m.add_argument("--visg", type=float, default=1.0)
    m.add_argument("--vis-exponent", type=float, default=1.0)
    m = modes.add_parser("channel")
    m.add_argument("--data", required=True)
    m.add_argument("--alpha0-re", type=float, required=True)
    m.add_argument("--alpha0-im", type=float, default=0.0)
    m.add_argument("--eta", type=float, default=1.0)
    for m in modes.choices.values():
        m.add_argument("--out", required=True, help="output JSON")
        m.add_argument("--assume-calibrated", action="store_true")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("loss-sweep", help="estimated vs expected photon number over a loss grid")
    s.add_argument("--amplitudes", type=_parse_floats, required=True, help="comma-separated real amplitudes")
    s.add_argument("--gammas", type=_parse_floats, required=True, help="comma-separated loss values")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--visibility", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_loss_sweep)
    return p


def _attach_grid(argv):
    # "--grid -3:3:0.25" would otherwise be read as an unknown option
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok == "--grid" and out[i + 1].startswith("-"):
            out[i : i + 2] = [f"--grid={out[i + 1]}"]
            break
    return out


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    argv = _attach_grid(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
