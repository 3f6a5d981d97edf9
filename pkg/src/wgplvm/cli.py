"""Command-line driver.

Subcommands: ``fit``, ``encode``, ``uq``, ``latent`` and ``synth``. Each
writes CSV outputs (with a '#'-prefixed schema line), a JSON summary where
applicable, and a PNG rendering of the report next to the delimited output.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure. Failures emit a one-line machine-readable JSON record on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import data_io, experiments, synth
from .errors import (
    ConfigError,
    ConvergenceError,
    CutLocusError,
    DataFormatError,
    DimensionMismatchError,
    InvalidPointError,
    NumericalError,
)

_CONFIG_ERRORS = (ConfigError,)
_DATA_ERRORS = (DataFormatError, InvalidPointError, DimensionMismatchError,
                FileNotFoundError)
_NUMERIC_ERRORS = (NumericalError, ConvergenceError, CutLocusError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wgplvm",
        description="Probabilistic submanifold learning on Riemannian data spaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False):
        p.add_argument("--seed", type=int, default=None,
                       help="override the base seed of the configuration")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (default: config out_dir)")
        p.add_argument("--model", choices=experiments.MODEL_KINDS, default=None,
                       help="override the configured model")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")
        if checkpoint:
            p.add_argument("--checkpoint", type=Path, required=True,
                           help="checkpoint written by 'fit'")

    p_fit = sub.add_parser("fit", help="train a model and write a checkpoint")
    p_fit.add_argument("--config", type=Path, required=True)
    common(p_fit)

    p_enc = sub.add_parser("encode", help="reconstruction-error report")
    common(p_enc, checkpoint=True)
    p_enc.add_argument("--test", type=Path, default=None,
                       help="explicit test dataset (repetitions must be 1)")
    p_enc.add_argument("--repetitions", type=int, default=1)

    p_uq = sub.add_parser("uq", help="uncertainty calibration report")
    common(p_uq, checkpoint=True)
    p_uq.add_argument("--test", type=Path, default=None)
    p_uq.add_argument("--repetitions", type=int, default=1)
    p_uq.add_argument("--num-samples", type=int, default=None,
                      help="predictive samples per test point (default: config)")
    p_uq.add_argument("--bins", type=int, default=None,
                      help="histogram bins (default: config)")

    p_lat = sub.add_parser("latent", help="export latent coordinates with labels")
    common(p_lat, checkpoint=True)
    p_lat.add_argument("--label", required=True,
                       help="label key (e.g. timestamp, species, truth, fa)")

    p_syn = sub.add_parser("synth", help="generate a synthetic dataset")
    p_syn.add_argument("--kind", required=True, choices=sorted(synth.GENERATORS))
    p_syn.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                       help="generator parameter override (repeatable)")
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--out", type=Path, default=Path("."))

    return parser


def _out_dir(args, config=None) -> Path:
    out = args.out if args.out is not None else Path(
        config.out_dir if config else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_overrides(config, args):
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "model", None) is not None:
        config.model = args.model
    return config


def _write_csv(path, schema, rows):
    lines = ["# " + schema]
    for row in rows:
        lines.append(",".join(_fmt_field(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt_field(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_json(path, doc):
    def coerce(obj):
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        raise TypeError(f"not JSON-serializable: {type(obj)}")

    Path(path).write_text(json.dumps(doc, indent=1, default=coerce),
                          encoding="utf-8")


def _load_test_points(config, path):
    loader = config.dataset.loader
    if loader == "synth":
        kind = config.dataset.kind
        loader = {"sphere_circle": "directions", "spd_geodesic": "spd",
                  "kendall_family": "landmarks"}[kind]
    if loader == "directions":
        ds = data_io.load_directions(path)
    elif loader == "landmarks":
        ds = data_io.load_landmarks(path,
                                    reference_index=config.dataset.reference_index)
    elif loader == "spd":
        ds = data_io.load_spd(path, size=config.dataset.size)
    else:
        raise ConfigError(f"--test is not supported for loader {loader!r}")
    return ds.points


# -- subcommand handlers -------------------------------------------------------


def _run_fit(args) -> None:
    config = _apply_overrides(experiments.load_config(args.config), args)
    out = _out_dir(args, config)
    dataset = experiments.build_dataset(config, base_dir=args.config.parent)
    train_idx, _ = data_io.split_indices(
        len(dataset), config.train_fraction, config.resolved_split_seed)
    fitted = experiments.fit_single(config, dataset, train_idx)
    train_labels = {key: [values[i] for i in train_idx]
                    for key, values in dataset.labels.items()}
    doc = experiments.checkpoint_dict(fitted, config, train_idx, train_labels)
    experiments.save_checkpoint(doc, out / "checkpoint.json")
    _write_csv(out / "fit_trace.csv", "iteration,objective",
               fitted.state.fit_trace)
    if not args.no_figures:
        from . import plotting
        plotting.save_fit_trace(fitted.state.fit_trace, out / "fit_trace.png")
    print(f"checkpoint: {out / 'checkpoint.json'}")
    print(f"final objective: {fitted.state.fit_trace[-1][1]:.6f} "
          f"({len(fitted.state.fit_trace)} trace entries)")


def _prepare_protocol(args):
    fitted, config, _doc = experiments.load_checkpoint(args.checkpoint)
    config = _apply_overrides(config, args)
    if args.model is not None and args.model != fitted.kind:
        fitted = None  # cannot reuse a checkpoint fitted as a different model
    out = _out_dir(args, config)
    dataset = experiments.build_dataset(config, base_dir=args.checkpoint.parent)
    test_points = None
    if args.test is not None:
        if args.repetitions != 1:
            raise ConfigError("--test requires --repetitions 1")
        if fitted is None:
            raise ConfigError("--test with --model requires a matching checkpoint")
        test_points = _load_test_points(config, args.test)
    return fitted, config, dataset, test_points, out


def _run_encode(args) -> None:
    fitted, config, dataset, test_points, out = _prepare_protocol(args)
    report = experiments.encode_report(
        config, dataset, repetitions=args.repetitions, fitted=fitted,
        test_points=test_points)
    rows = [[rep, config.resolved_split_seed + rep, report.rmse_intrinsic[rep],
             report.rmse_euclidean[rep], report.excluded[rep],
             report.violation_rate[rep], report.seconds[rep]]
            for rep in range(len(report.rmse_intrinsic))]
    _write_csv(out / "encode_report.csv",
               "repetition,split_seed,rmse_intrinsic,rmse_euclidean,"
               "excluded_cut_locus,violation_rate,seconds", rows)
    _write_json(out / "encode_summary.json", report.summary_dict())
    if not args.no_figures:
        from . import plotting
        plotting.save_encode_report(report, out / "encode_report.png")
    summary = report.summary_dict()
    print(f"encode[{report.model}]: intrinsic RMSE "
          f"{summary['rmse_intrinsic']['mean']:.6g} "
          f"± {summary['rmse_intrinsic']['stderr']:.2g} "
          f"over {len(report.rmse_intrinsic)} repetition(s)")


def _run_uq(args) -> None:
    fitted, config, dataset, test_points, out = _prepare_protocol(args)
    if args.num_samples is not None:
        config.uq_samples = args.num_samples
    if args.bins is not None:
        config.uq_bins = args.bins
    report = experiments.uq_report(
        config, dataset, repetitions=args.repetitions, fitted=fitted,
        test_points=test_points)

    hist_rows = []
    for metric in ("intrinsic", "euclidean"):
        hist = report.histogram(metric)
        if hist is None:
            continue
        edges, counts, density = hist
        for b in range(len(counts)):
            hist_rows.append([metric, edges[b], edges[b + 1],
                              int(counts[b]), density[b]])
    _write_csv(out / "uq_histogram.csv", "metric,bin_lo,bin_hi,count,density",
               hist_rows)

    cum_rows = []
    for metric in ("intrinsic", "euclidean"):
        cum = report.cumulative(metric)
        if cum is None:
            continue
        xs, cdf = cum
        cum_rows.extend([metric, x, c] for x, c in zip(xs, cdf))
    _write_csv(out / "uq_cumulative.csv", "metric,fraction,cdf", cum_rows)
    _write_json(out / "uq_summary.json", report.summary_dict())
    if not args.no_figures:
        from . import plotting
        plotting.save_calibration(report, out / "uq_calibration.png")
    print(f"uq[{report.model}]: sup distance from diagonal "
          f"{report.sup_distance('intrinsic'):.4f} "
          f"({report.fractions_intrinsic.size} fractions)")


def _run_latent(args) -> None:
    _fitted, config, doc = experiments.load_checkpoint(args.checkpoint)
    out = _out_dir(args, config)
    header, rows = experiments.latent_rows(doc, args.label)
    _write_csv(out / "latent.csv", ",".join(header), rows)
    if not args.no_figures:
        from . import plotting
        latents = np.array([row[:-1] for row in rows], dtype=float)
        plotting.save_latent_scatter(latents, [row[-1] for row in rows],
                                     args.label, out / "latent.png")
    print(f"latent export: {len(rows)} rows -> {out / 'latent.csv'}")


def _run_synth(args) -> None:
    params = {}
    for item in args.param:
        if "=" not in item:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            raise ConfigError(f"--param value for {key!r} is not a number: {raw!r}")
        params[key.strip()] = value
    try:
        dataset = synth.generate(args.kind, params, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    args.out.mkdir(parents=True, exist_ok=True)
    data_path, labels_path = synth.write_dataset(
        dataset, args.out / f"{args.kind}.csv")
    print(f"wrote {data_path} ({len(dataset)} rows)"
          + (f" and {labels_path}" if labels_path else ""))


_HANDLERS = {
    "fit": _run_fit,
    "encode": _run_encode,
    "uq": _run_uq,
    "latent": _run_latent,
    "synth": _run_synth,
}


def _fail(code: int, exc: Exception) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _HANDLERS[args.command](args)
    except _CONFIG_ERRORS as exc:
        return _fail(2, exc)
    except _DATA_ERRORS as exc:
        return _fail(3, exc)
    except _NUMERIC_ERRORS as exc:
        return _fail(4, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
