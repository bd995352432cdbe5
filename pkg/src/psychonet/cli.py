"""Command-line interface.

Subcommands: ``simulate`` (Monte Carlo benchmark batches), ``weight-search``
(rank acquisition weight tuples), ``components`` (per-candidate acquisition
component dump for heatmaps), ``fisher-calibration`` (energy baseline and
rank-correlation analysis), ``replay`` (scripted session to a document), and
``serve`` (HTTP session service).

All simulate-family flags can also be given in a JSON config file
(``--config``); explicit flags override file values. ``serve`` honors the
PSYCHONET_PORT / PSYCHONET_DATA_DIR / PSYCHONET_STATIC_DIR environment
variables when the flags are absent.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import functions as pf
from ._seeds import derive_seed
from .acquisition import COMPONENTS, AcquisitionConfig, AcquisitionWeights, TrialScorer
from .metrics import make_test_set, rmse, spearman
from .sampling import scrambled_sobol
from .session import Session, SessionConfig
from .simulate import (
    BenchmarkConfig,
    batch_summary,
    resolve_function,
    run_batch,
    run_simulation,
    weight_search,
    write_batch_outputs,
    write_series_csv,
)

FUNCTION_CHOICES = [*pf.FAMILIES, "random"]


def _parse_weights(text):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("weights must be four comma-separated numbers")
    return parts


def _parse_ablation(text):
    if text in ("", "none"):
        return ()
    names = tuple(part.strip() for part in text.split(",") if part.strip())
    unknown = set(names) - set(COMPONENTS)
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown components: {sorted(unknown)}")
    return names


def _add_benchmark_args(parser):
    parser.add_argument("--function", choices=FUNCTION_CHOICES, help="synthetic observer")
    parser.add_argument("--mode", choices=[pf.DETECTION, pf.DISCRIMINATION], default=None)
    parser.add_argument("--dims", type=int, default=None, help="dimensions for sphere/random")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--runs", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--weights", type=_parse_weights, default=None, metavar="a,b,c,d")
    parser.add_argument(
        "--ablation",
        type=_parse_ablation,
        default=None,
        metavar="grad,prox,unc,la",
        help="enabled acquisition components; 'none' gives the pure random sampler",
    )
    parser.add_argument("--grid-levels", type=int, default=None)
    parser.add_argument("--test-set-size", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--config", default=None, help="JSON file mirroring these flags")
    parser.add_argument("--out", default=None, help="output directory")


_BENCH_DEFAULTS = {
    "function": "nv2d",
    "mode": pf.DETECTION,
    "dims": None,
    "trials": 150,
    "runs": 1,
    "seed": 0,
    "weights": None,
    "ablation": COMPONENTS,
    "grid_levels": None,
    "test_set_size": None,
    "jobs": None,
    "out": "results",
}


def _merge_options(args):
    """Defaults < config file < explicit flags."""
    merged = dict(_BENCH_DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            file_options = json.load(fh)
        unknown = set(file_options) - set(_BENCH_DEFAULTS)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        if "ablation" in file_options and file_options["ablation"] is not None:
            file_options["ablation"] = tuple(file_options["ablation"])
        merged.update(file_options)
    for key in _BENCH_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _benchmark_config(options) -> BenchmarkConfig:
    fn = resolve_function(options["function"], options["mode"], dim=options["dims"])
    weights = (
        AcquisitionWeights(*options["weights"]) if options["weights"] else AcquisitionWeights()
    )
    return BenchmarkConfig(
        function=fn,
        runs=options["runs"],
        trials_per_run=options["trials"],
        seed=options["seed"],
        weights=weights,
        components=tuple(options["ablation"]),
        grid_levels=options["grid_levels"],
        test_set_size=options["test_set_size"],
    )


def cmd_simulate(args):
    options = _merge_options(args)
    cfg = _benchmark_config(options)
    report = run_batch(cfg, jobs=options["jobs"])
    out_dir = write_batch_outputs(report, options["out"])
    agg = report.aggregate()
    print(f"wrote {out_dir}/runs.csv and {out_dir}/summary.json")
    print(
        f"AUC_RMSE {agg['auc_rmse']['mean']:.3f} +/- {agg['auc_rmse']['sem']:.3f}  "
        f"AUC_Brier {agg['auc_brier']['mean']:.3f} +/- {agg['auc_brier']['sem']:.3f}"
    )
    return 0


def cmd_weight_search(args):
    options = _merge_options(args)
    with open(args.grid_file) as fh:
        grid = json.load(fh)
    base = _benchmark_config(options)
    rows = weight_search(base, grid, jobs=options["jobs"])
    os.makedirs(options["out"], exist_ok=True)
    path = os.path.join(options["out"], "weight_search.json")
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2)
    print(f"wrote {path}")
    for row in rows:
        print(f"  weights {row['weights']}  AUC_RMSE {row['auc_rmse_mean']:.3f}")
    return 0


def cmd_components(args):
    """Run a session up to --trial and dump per-candidate component values."""
    options = _merge_options(args)
    cfg = _benchmark_config(options)
    fn = cfg.function
    run_seed = derive_seed(cfg.seed, "run", 0)
    session = Session.new(cfg.session_config(run_seed))
    rng_tag = 0
    for t in range(1, args.trial + 1):
        x, _, _ = session.next_query()
        rng = np.random.default_rng(derive_seed(run_seed, "obs", t))
        session.record_response(x, pf.sample_response(fn, x, rng))
        rng_tag = t
    scorer = TrialScorer(
        session.estimator,
        session.X,
        session.y,
        session.config.acquisition,
        session.config.bounds_array,
        derive_seed(run_seed, "acq", rng_tag + 1),
        weights=session.config.acquisition.weights.masked(session.config.components),
    )
    candidates = scrambled_sobol(
        session.config.acquisition.candidate_count,
        session.config.dim,
        session.config.bounds_array,
        derive_seed(run_seed, "components"),
    )
    raw = scorer.calibrate(candidates)
    combined, comps = scorer.combined(candidates, raw=raw)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(session.config.dim)] + list(COMPONENTS) + ["combined"])
        for i in range(candidates.shape[0]):
            writer.writerow(
                [repr(v) for v in candidates[i]]
                + [repr(float(comps[name][i])) for name in COMPONENTS]
                + [repr(float(combined[i]))]
            )
    print(f"wrote {args.out} ({candidates.shape[0]} candidates at trial {args.trial + 1})")
    return 0


def cmd_fisher_calibration(args):
    """Windowed-energy baseline of the random observer vs a real function,
    with the rank correlation between energy and validation error."""
    options = _merge_options(args)
    dims = args.dims
    fn = resolve_function(options["function"], options["mode"], dim=dims)
    random_fn = resolve_function("random", dim=fn.dim)

    def batch_for(function):
        return BenchmarkConfig(
            function=function,
            runs=options["runs"],
            trials_per_run=options["trials"],
            seed=options["seed"],
            components=tuple(options["ablation"]),
        )

    window = 15
    print(f"running {options['runs']} runs of {options['function']} in {fn.dim}D ...")
    fn_report = run_batch(batch_for(fn), jobs=options["jobs"])
    print(f"running {options['runs']} runs of the random observer ...")
    random_report = run_batch(batch_for(random_fn), jobs=options["jobs"])

    def windowed(series):
        diffs = np.abs(np.diff(np.asarray(series.fisher)))
        return np.array([diffs[max(0, i - window) : i].mean() for i in range(window, len(diffs) + 1)])

    random_finals = [float(windowed(s)[-1]) for s in random_report.series if len(s.fisher) > window]
    pooled_energy, pooled_rmse = [], []
    for series in fn_report.series:
        w = windowed(series)
        pooled_energy.extend(w)
        pooled_rmse.extend(series.rmse[window:])
    baseline = float(np.mean(random_finals))
    rho = spearman(pooled_energy, pooled_rmse)
    summary = {
        "function": options["function"],
        "dims": fn.dim,
        "runs": options["runs"],
        "trials": options["trials"],
        "window": window,
        "random_baseline_mean": baseline,
        "random_baseline_per_run": random_finals,
        "spearman_energy_vs_rmse": rho,
        "snr_final_per_run": [
            baseline / float(windowed(s)[-1]) for s in fn_report.series if len(s.fisher) > window
        ],
    }
    os.makedirs(options["out"], exist_ok=True)
    path = os.path.join(options["out"], "fisher_calibration.json")
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
    write_series_csv(os.path.join(options["out"], "function_runs.csv"), fn_report.series)
    write_series_csv(os.path.join(options["out"], "random_runs.csv"), random_report.series)
    print(f"wrote {path}; baseline {baseline:.2e}, spearman {rho:.4f}")
    return 0


def cmd_replay(args):
    """Drive a session from a config document and a scripted response list."""
    with open(args.config) as fh:
        config = SessionConfig.from_dict(json.load(fh))
    responses = [int(v) for v in args.responses.split(",")]
    session = Session.new(config)
    for response in responses:
        x, _, _ = session.next_query()
        session.record_response(x, response)
    document = session.export()
    if args.out == "-":
        json.dump(document, sys.stdout, sort_keys=True)
    else:
        with open(args.out, "w") as fh:
            json.dump(document, fh, sort_keys=True)
        print(f"wrote {args.out}")
    return 0


def cmd_serve(args):
    from .service import serve

    port = args.port or int(os.environ.get("PSYCHONET_PORT", "8000"))
    data_dir = args.data_dir or os.environ.get("PSYCHONET_DATA_DIR", "./sessions")
    static_dir = args.static_dir or os.environ.get("PSYCHONET_STATIC_DIR")
    serve(port=port, data_dir=data_dir, static_dir=static_dir, host=args.host)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="psychonet")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte Carlo benchmark batch")
    _add_benchmark_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("weight-search", help="rank acquisition weight tuples")
    _add_benchmark_args(p)
    p.add_argument("--grid-file", required=True, help="JSON list of [a,b,c,d] tuples")
    p.set_defaults(func=cmd_weight_search)

    p = sub.add_parser("components", help="dump per-candidate component values")
    _add_benchmark_args(p)
    p.add_argument("--trial", type=int, required=True, help="number of recorded trials first")
    p.set_defaults(func=cmd_components)
    p.set_defaults(out="components.csv")

    p = sub.add_parser("fisher-calibration", help="energy baseline and SNR analysis")
    _add_benchmark_args(p)
    p.set_defaults(func=cmd_fisher_calibration)

    p = sub.add_parser("replay", help="run a scripted session to a document")
    p.add_argument("--config", required=True, help="JSON session config document")
    p.add_argument("--responses", required=True, help="comma-separated 0/1 script")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--static-dir", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
