"""Command-line interface: bank, scatter, reconstruct, stability, moments, classify.

Every run writes a ``run.json`` manifest echoing the full configuration,
seed, and library version next to its outputs, and all numeric output goes
through the documented SIG1 / PGM / CSV formats.  Outputs are byte-identical
across reruns with the same configuration and seed, regardless of
``--threads``.

Exit codes: 0 success, 2 usage error, 3 I/O failure, 4 numeric/frame failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .classify import (
    Dataset,
    classify_ova,
    read_features_csv,
)
from .deform import (
    diff_metric,
    random_smooth_warp,
    rep_fourier_modulus,
    rep_identity,
    stability_ratio,
    warp,
)
from .errors import FormatError, ScatterkitError
from .filterbank import BankParams, build_bank_1d, build_morlet_2d
from .inverse import aligned_relative_error, reconstruct, sigma_threshold
from .moments import ProcessModel, estimate_moments
from .scattering import ScatteringOutput, default_threads, flatten, path_label, scatter
from .signal import Signal, load_pgm, load_sig, save_pgm, save_sig

IO_ERRORS = (OSError, FileNotFoundError, FormatError)


def _write_manifest(directory_or_file: str, config: dict) -> None:
    if os.path.isdir(directory_or_file):
        path = os.path.join(directory_or_file, "run.json")
    else:
        path = os.path.join(os.path.dirname(os.path.abspath(directory_or_file)), "run.json")
    payload = {"version": __version__, **config}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_input(path: str) -> Signal:
    if path.endswith(".pgm"):
        return load_pgm(path)
    return load_sig(path)


def _build_bank(shape, ndims: int, scales: int, bands: int, frame_min: float | None = None):
    params = BankParams() if frame_min is None else BankParams(frame_min=frame_min)
    if ndims == 1:
        return build_bank_1d(shape, scales, bands, params)
    return build_morlet_2d(shape, scales, bands, params)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_bank(args) -> int:
    shape = (args.size,) if args.ndims == 1 else (args.size, args.size)
    bank = _build_bank(shape, args.ndims, args.scales, args.bands, args.frame_min)
    print(f"frame bounds: A={bank.frame_lower:.6f} B={bank.frame_upper:.6f}")
    if args.out:
        from .filterbank import save_bank

        os.makedirs(args.out, exist_ok=True)
        save_bank(bank, args.out)
        _write_manifest(args.out, {"command": "bank", "config": _config(args)})
        print(f"bank written to {args.out}")
    return 0


def _cmd_scatter(args) -> int:
    x = _load_input(args.input)
    ndims = x.ndims
    bank = _build_bank(x.shape, ndims, args.scales, args.bands, args.frame_min)
    out = scatter(
        x,
        bank,
        max_order=args.order,
        oversampling=args.oversampling,
        nonlinearity=args.rho,
        threads=args.threads,
    )
    os.makedirs(args.out, exist_ok=True)
    files = {}
    for path in out.paths():
        name = path_label(path) + ".sig"
        sig = out.coefficients[path]
        save_sig(sig, os.path.join(args.out, name))
        files[name] = {
            "path": [list(jk) for jk in path],
            "spacing": sig.sample_spacing,
            "shape": list(sig.shape),
        }
    vec, layout = flatten(out)
    from .classify import write_features_csv

    write_features_csv(os.path.join(args.out, "features.csv"), vec[None, :], layout.labels())
    manifest = {
        "format": "scatterkit-scatter-v1",
        "input_shape": list(x.shape),
        "ndims": ndims,
        "scales": args.scales,
        "bands": args.bands,
        "order": args.order,
        "rho": args.rho,
        "oversampling": args.oversampling,
        "frame_min": args.frame_min,
        "energies": {str(m): e for m, e in out.order_energies.items()},
        "files": files,
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(args.out, {"command": "scatter", "config": _config(args)})
    print(f"scattering written to {args.out} ({len(files)} paths)")
    return 0


def _load_scatter_dir(directory: str):
    path = os.path.join(directory, "manifest.json")
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "scatterkit-scatter-v1":
        raise FormatError(f"{path}: not a scattering output directory")
    coefficients = {}
    for name, meta in manifest["files"].items():
        sig = load_sig(os.path.join(directory, name), sample_spacing=meta["spacing"])
        coefficients[tuple(tuple(jk) for jk in meta["path"])] = sig
    out = ScatteringOutput(
        coefficients=coefficients,
        n_scales=manifest["scales"],
        n_bands=manifest["bands"],
        max_order=manifest["order"],
        nonlinearity=manifest["rho"],
        oversampling=manifest["oversampling"],
        input_shape=tuple(manifest["input_shape"]),
    )
    return out, manifest


def _cmd_reconstruct(args) -> int:
    target, manifest = _load_scatter_dir(args.target)
    bank = _build_bank(
        tuple(manifest["input_shape"]),
        manifest["ndims"],
        manifest["scales"],
        manifest["bands"],
        manifest.get("frame_min"),
    )
    recon, run = reconstruct(target, bank, seed=args.seed, max_iter=args.max_iter)
    if args.out.endswith(".pgm"):
        save_pgm(recon, args.out)
    else:
        save_sig(recon, args.out)
    with open(args.history, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective"])
        for i, v in enumerate(run.history):
            writer.writerow([i, f"{v:.17g}"])
    report = {
        "command": "reconstruct",
        "config": _config(args),
        "converged": run.converged,
        "iterations": run.iterations,
        "sigma_threshold": run.sigma_threshold,
        "final_objective": run.history[-1],
    }
    if args.reference:
        ref = _load_input(args.reference)
        report["aligned_relative_error"] = aligned_relative_error(ref, recon)
    _write_manifest(args.out, report)
    status = "converged" if run.converged else "not converged (cap reached)"
    print(f"reconstruction {status} after {run.iterations} iterations; "
          f"objective {run.history[-1]:.4e} (threshold {run.sigma_threshold:.4e})")
    if "aligned_relative_error" in report:
        print(f"aligned relative error vs reference: {report['aligned_relative_error']:.4f}")
    return 0


def _cmd_stability(args) -> int:
    x = _load_input(args.input)
    bank = None
    if args.rep == "scattering":
        bank = _build_bank(x.shape, x.ndims, args.scales, args.bands, args.frame_min)

        def rep(sig):
            return flatten(scatter(sig, bank, max_order=args.order, threads=args.threads))[0]

    elif args.rep == "fourier":
        rep = rep_fourier_modulus
    else:
        rep = rep_identity

    rows = []
    for i in range(args.warps):
        g = random_smooth_warp(x.shape, args.amplitude, seed=args.seed + i)
        metric = diff_metric(g, args.scales)
        fa = np.asarray(rep(x), dtype=np.float64)
        fb = np.asarray(rep(warp(x, g)), dtype=np.float64)
        dist = float(np.linalg.norm(fb - fa))
        rows.append(
            {
                "warp": i,
                "sup_norm": g.sup_norm,
                "jac_norm": g.jac_norm,
                "metric": metric,
                "distance": dist,
                "ratio": dist / (metric * x.norm()),
            }
        )
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["warp", "sup_norm", "jac_norm", "metric", "distance", "ratio"])
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in row.items()})
    _write_manifest(args.out, {"command": "stability", "config": _config(args)})
    worst = max(r["ratio"] for r in rows)
    print(f"{args.warps} warps, rep={args.rep}: max stability ratio {worst:.4f}")
    return 0


def _parse_model(spec: str, base_path: str | None) -> ProcessModel:
    parts = spec.split(":")
    kind, params = parts[0], parts[1:]
    if kind == "ar1":
        out = {"coeff": float(params[0])} if params else {}
        if len(params) > 1:
            out["std"] = float(params[1])
        return ProcessModel("ar1", out)
    if kind == "gaussian_white":
        return ProcessModel("gaussian_white", {"std": float(params[0])} if params else {})
    if kind == "bernoulli_spikes":
        out = {}
        if params:
            out["p"] = float(params[0])
        if len(params) > 1:
            out["amplitude"] = float(params[1])
        return ProcessModel("bernoulli_spikes", out)
    if kind in ("phase_randomized", "shifted_image"):
        if not base_path:
            raise FormatError(f"model {kind} needs --base image")
        return ProcessModel(kind, {"base": _load_input(base_path)})
    if kind == "constant":
        return ProcessModel("constant", {"value": float(params[0])} if params else {})
    raise FormatError(f"unknown process model {spec!r}")


def _cmd_moments(args) -> int:
    model = _parse_model(args.model, args.base)
    model = ProcessModel(model.kind, model.params, seed=args.seed)
    shape = (args.size,) if args.ndims == 1 else (args.size, args.size)
    bank = _build_bank(shape, args.ndims, args.scales, args.bands, args.frame_min)
    est = estimate_moments(model, bank, max_order=args.order, realizations=args.realizations)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "mean", "variance"])
        for p, m, v in zip(est.paths, est.means, est.variances):
            writer.writerow([path_label(p), f"{m:.17g}", f"{v:.17g}"])
    _write_manifest(args.out, {"command": "moments", "config": _config(args)})
    print(f"moments for {len(est.paths)} paths written to {args.out}")
    return 0


def _cmd_classify(args) -> int:
    X_train, names_train, y_train = read_features_csv(args.train)
    X_test, names_test, y_test = read_features_csv(args.test)
    if names_train != names_test:
        raise FormatError("train and test CSVs have different feature columns")
    if y_train is None or y_test is None:
        raise FormatError("feature CSVs must carry a __label__ column")
    X = np.vstack([X_train, X_test])
    y = np.concatenate([y_train, y_test])
    ds = Dataset(
        features=X,
        labels=y,
        feature_names=names_train,
        provenance=args.train,
        train_idx=np.arange(len(y_train)),
        test_idx=np.arange(len(y_train), len(y)),
        split_seed=args.seed,
    )
    lam = args.reg_lambda if args.reg_lambda == "auto" else float(args.reg_lambda)
    result = classify_ova(ds, penalty_exponent=args.p, strength=lam)
    model_path, report_path = args.out
    model = result.model
    payload = {
        "classes": list(model.classes),
        "p": model.penalty_exponent,
        "lambda": model.strength,
        "weights": model.weights.tolist(),
        "intercepts": model.intercepts.tolist(),
        "feature_mean": model.standardizer.mean.tolist(),
        "feature_std": model.standardizer.std.tolist(),
        "objective": model.objective,
    }
    with open(model_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(report_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerow(["train_accuracy", f"{result.train_accuracy:.17g}"])
        writer.writerow(["test_accuracy", f"{result.test_accuracy:.17g}"])
        writer.writerow(["lambda", f"{result.strength:.17g}"])
    _write_manifest(model_path, {"command": "classify", "config": _config(args)})
    print(f"train accuracy {result.train_accuracy:.4f}, test accuracy {result.test_accuracy:.4f} "
          f"(lambda={result.strength:g})")
    return 0


# ---------------------------------------------------------------------------


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func" and not callable(v)}


def _add_common(p, scales=True, bands=True):
    if scales:
        p.add_argument("--scales", type=int, default=4, help="invariance exponent J")
    if bands:
        p.add_argument("--bands", type=int, default=4, help="orientations (2D) or bands/octave (1D)")
    p.add_argument("--frame-min", type=float, default=None, dest="frame_min",
                   help="override the lower frame-bound gate")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: SCATTERKIT_THREADS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatterkit",
        description="Wavelet scattering transforms, stability harness, inverse scattering, "
                    "moments, and linear classification.",
    )
    parser.add_argument("--version", action="version", version=f"scatterkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bank", help="build a filter bank and report frame bounds")
    p.add_argument("--check", action="store_true", help="build, verify gates, print bounds")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--ndims", type=int, choices=(1, 2), default=2)
    p.add_argument("--out", default=None, help="directory to export the bank")
    _add_common(p)
    p.set_defaults(func=_cmd_bank)

    p = sub.add_parser("scatter", help="scattering transform of a signal")
    p.add_argument("--input", required=True, help="SIG1 or PGM input")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--rho", choices=("modulus", "rectifier"), default="modulus")
    p.add_argument("--oversampling", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=_cmd_scatter)

    p = sub.add_parser("reconstruct", help="gradient-descent reconstruction from coefficients")
    p.add_argument("--target", required=True, help="scatter output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=2000, dest="max_iter")
    p.add_argument("--out", required=True, help="output image (.pgm) or signal (.sig)")
    p.add_argument("--history", required=True, help="objective history CSV")
    p.add_argument("--reference", default=None, help="original signal for aligned-error report")
    _add_common(p, scales=False, bands=False)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("stability", help="deformation stability sweep for a representation")
    p.add_argument("--input", required=True)
    p.add_argument("--rep", choices=("scattering", "fourier", "identity"), default="scattering")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--warps", type=int, default=20)
    p.add_argument("--amplitude", type=float, default=0.1, help="target Jacobian sup norm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report CSV")
    _add_common(p)
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("moments", help="scattering moments of a stationary process")
    p.add_argument("--model", required=True, help="e.g. ar1:0.9, gaussian_white:1.0, bernoulli_spikes:0.05:1")
    p.add_argument("--base", default=None, help="base image for phase_randomized / shifted_image")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--realizations", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--ndims", type=int, choices=(1, 2), default=2)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_moments)

    p = sub.add_parser("classify", help="one-versus-all linear models on feature CSVs")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--p", type=int, choices=(1, 2), default=2)
    p.add_argument("--lambda", dest="reg_lambda", default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", nargs=2, metavar=("MODEL_JSON", "REPORT_CSV"), required=True)
    p.set_defaults(func=_cmd_classify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ScatterkitError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
