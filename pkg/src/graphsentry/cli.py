"""Command-line front end: simulation, detection, power sweeps, clique injection.

Every run writes a ``metadata.json`` recording the fully resolved options and
master seed; re-running a command with ``--config metadata.json`` reproduces
the outputs byte for byte.  Exit codes: 0 clean, 2 when any anomaly was
flagged, 1 on error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .embedding import select_dim, singular_values
from .series import GraphSeries, inject_clique, load_edge_list
from .simulate import power_experiment, sample_series, scenario1, scenario_mmsbm
from .stats import detect_chart, detect_pvalue

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAGGED = 2


class CommandError(Exception):
    """User-facing CLI failure; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags, which would collide with the
    # "anomaly flagged" exit code; route parse errors through CommandError.
    def error(self, message):
        raise CommandError(message)


_DEFAULTS = {
    "simulate": {
        "scenario": None, "seed": 0, "n": None, "m": None, "delta_n": None,
        "delta_x": None, "theta": None, "p": 0.8, "q": 0.3,
    },
    "detect-chart": {
        "method": "omni", "span": "2", "dim": "auto", "dim_joint": None,
        "window": 11, "seed": 0, "max_rank": 1000, "n_jobs": 1,
    },
    "detect-pvalue": {
        "method": "omni", "span": "2", "dim": "auto", "dim_joint": None,
        "bootstrap": 400, "alpha": 0.05, "seed": 0, "max_rank": 1000,
        "n_jobs": 1, "full_span_null": False,
    },
    "power": {
        "theta": "0.05,0.25,0.5,0.75,0.9", "n_mc": 100, "method": "omni,mase",
        "span": "2", "bootstrap": 400, "alpha": 0.05, "seed": 0, "n_jobs": 1,
        "n": 400, "delta_n": 100, "delta_x": 0.12, "p": 0.8, "q": 0.3, "m": 12,
    },
    "inject": {"time": None, "clique_weight": 1.0, "mode": "increment"},
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="graphsentry", description=__doc__)
    parser.add_argument("--version", action="version", version=f"graphsentry {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="metadata.json from a previous run; its options become defaults")
        p.add_argument("--output-dir", help="directory for output artifacts")
        return p

    p = add("simulate", "generate a synthetic graph series with planted anomalies")
    p.add_argument("--scenario", choices=["1", "2", "3", "mmsbm"])
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, help="vertex count")
    p.add_argument("--m", type=int, help="number of time points (block-model scenarios)")
    p.add_argument("--delta-n", type=int, dest="delta_n", help="number of perturbed vertices")
    p.add_argument("--delta-x", type=float, dest="delta_x", help="perturbation scale")
    p.add_argument("--theta", type=float, help="membership spread (scenario mmsbm)")
    p.add_argument("--p", type=float, help="within-community connectivity")
    p.add_argument("--q", type=float, help="between-community connectivity")

    for name in ("detect-chart", "detect-pvalue"):
        p = add(name, "detect anomalous times and vertices in an edge-list series")
        p.add_argument("--input", help="edge-list file")
        p.add_argument("--method", choices=["omni", "mase"])
        p.add_argument("--span", choices=["2", "all"])
        p.add_argument("--dim", help="embedding dimension, or 'auto'")
        p.add_argument("--dim-joint", dest="dim_joint", help="joint dimension (default: same as --dim)")
        p.add_argument("--max-rank", type=int, dest="max_rank", help="cap for automatic dimension selection")
        p.add_argument("--seed", type=int)
        p.add_argument("--n-jobs", type=int, dest="n_jobs")
        if name == "detect-chart":
            p.add_argument("--window", type=int, help="control-chart window length")
        else:
            p.add_argument("--bootstrap", type=int, help="bootstrap replicates per time")
            p.add_argument("--alpha", type=float, help="significance level")
            p.add_argument("--full-span-null", action="store_const", const=True,
                           dest="full_span_null", help="replicate the whole span in the bootstrap")

    p = add("power", "empirical power sweep of the bootstrap detector over theta")
    p.add_argument("--theta", help="comma-separated theta grid")
    p.add_argument("--n-mc", type=int, dest="n_mc", help="Monte Carlo replicates per cell")
    p.add_argument("--method", help="comma-separated methods (omni,mase)")
    p.add_argument("--span", help="comma-separated spans (2,all)")
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-jobs", type=int, dest="n_jobs")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--delta-n", type=int, dest="delta_n")
    p.add_argument("--delta-x", type=float, dest="delta_x")
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)

    p = add("inject", "plant a clique on listed vertices at one time point")
    p.add_argument("--input", help="edge-list file")
    p.add_argument("--time", type=int, help="time index receiving the clique")
    p.add_argument("--clique-vertices", dest="clique_vertices", help="file with one vertex label per line")
    p.add_argument("--clique-weight", type=float, dest="clique_weight")
    p.add_argument("--mode", choices=["increment", "set"], help="add to or overwrite existing weights")

    return parser


def _resolve_options(args: argparse.Namespace) -> dict:
    """Merge builtin defaults, --config contents, and explicit flags (in that order)."""
    opts = dict(_DEFAULTS.get(args.command, {}))
    opts["input"] = None
    opts["output_dir"] = None
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            saved = json.load(fh)
        if saved.get("command") not in (None, args.command):
            raise CommandError(
                f"config was written by '{saved.get('command')}', not '{args.command}'"
            )
        for key, val in saved.get("options", {}).items():
            opts[key] = val
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is not None:
            opts[key] = val
    return opts


def _require(opts: dict, *keys: str) -> None:
    for key in keys:
        if opts.get(key) is None:
            raise CommandError(f"--{key.replace('_', '-')} is required")


def _out_dir(opts: dict) -> Path:
    _require(opts, "output_dir")
    out = Path(opts["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_metadata(out: Path, command: str, opts: dict, extra: dict | None = None) -> None:
    meta = {
        "tool": "graphsentry",
        "version": __version__,
        "command": command,
        "options": opts,
    }
    if extra:
        meta.update(extra)
    with open(out / "metadata.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_dims(g: GraphSeries, opts: dict) -> tuple[int, int | None]:
    dim = opts.get("dim", "auto")
    if isinstance(dim, str) and dim != "auto":
        dim = int(dim)
    if dim == "auto":
        densest = max(g.adjacency, key=lambda a: a.nnz)
        values = singular_values(densest, max_rank=opts.get("max_rank"))
        dim = select_dim(values, max_rank=opts.get("max_rank"))
    dim_joint = opts.get("dim_joint")
    if dim_joint is not None and dim_joint != "auto":
        dim_joint = int(dim_joint)
    elif dim_joint == "auto":
        dim_joint = None
    return int(dim), dim_joint


def _span_arg(value) -> object:
    return "all" if str(value) == "all" else 2


def cmd_simulate(opts: dict) -> int:
    _require(opts, "scenario")
    out = _out_dir(opts)
    scenario = str(opts["scenario"])
    root = np.random.SeedSequence(int(opts["seed"]))
    latent_seed, sample_seed = root.spawn(2)

    if scenario == "1":
        kw = {}
        if opts.get("n") is not None:
            kw["n"] = int(opts["n"])
        if opts.get("delta_n") is not None:
            kw["delta_n"] = int(opts["delta_n"])
        if opts.get("delta_x") is not None:
            kw["delta_x"] = float(opts["delta_x"])
        latent = scenario1(seed=latent_seed, **kw)
    else:
        theta = {"2": 0.125, "3": 0.875}.get(scenario, opts.get("theta"))
        if theta is None:
            raise CommandError("--theta is required for scenario 'mmsbm'")
        kw = {"theta": float(theta), "p": float(opts["p"]), "q": float(opts["q"])}
        if opts.get("n") is not None:
            kw["n"] = int(opts["n"])
        if opts.get("m") is not None:
            kw["m"] = int(opts["m"])
        if opts.get("delta_n") is not None:
            kw["delta_n"] = int(opts["delta_n"])
        if opts.get("delta_x") is not None:
            kw["delta_x"] = float(opts["delta_x"])
        latent = scenario_mmsbm(seed=latent_seed, **kw)

    g = sample_series(latent, seed=sample_seed)
    g.to_edge_list(out / "edges.txt")
    ground_truth = {
        "anomalous_times": sorted(latent.anomalous_times),
        "anomalous_vertices": [g.labels[i] for i in sorted(latent.anomalous_vertices)],
        "params": latent.params,
    }
    _write_metadata(out, "simulate", opts, {"ground_truth": ground_truth})
    return EXIT_OK


def cmd_detect(command: str, opts: dict) -> int:
    _require(opts, "input")
    out = _out_dir(opts)
    g = load_edge_list(opts["input"])
    d, d_joint = _resolve_dims(g, opts)
    span = _span_arg(opts["span"])
    resolved = {"dim": d, "dim_joint": d_joint if d_joint is not None else d}

    if command == "detect-chart":
        graph_chart, vertex_chart = detect_chart(
            g, method=opts["method"], d=d, d_joint=d_joint, span=span,
            window=int(opts["window"]),
        )
        with open(out / "graph_chart.csv", "w", encoding="utf-8") as fh:
            graph_chart.to_csv(fh)
        with open(out / "vertex_chart.csv", "w", encoding="utf-8") as fh:
            vertex_chart.to_csv(fh)
        flagged = graph_chart.any_flag() or vertex_chart.any_flag()
        resolved["graph_flags"] = graph_chart.flagged_times()
        resolved["vertex_flag_times"] = vertex_chart.flagged_times()
        _write_metadata(out, command, opts, {"resolved": resolved})
        return EXIT_FLAGGED if flagged else EXIT_OK

    report = detect_pvalue(
        g, method=opts["method"], d=d, d_joint=d_joint, span=span,
        n_boot=int(opts["bootstrap"]), alpha=float(opts["alpha"]),
        seed=int(opts["seed"]), full_span_null=bool(opts.get("full_span_null")),
        n_jobs=int(opts.get("n_jobs", 1)),
    )
    with open(out / "pvalues.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    resolved["significant_times"] = report.anomalous_times()
    _write_metadata(out, command, opts, {"resolved": resolved})
    return EXIT_FLAGGED if report.any_flag() else EXIT_OK


def cmd_power(opts: dict) -> int:
    out = _out_dir(opts)
    thetas = [float(x) for x in str(opts["theta"]).split(",") if x]
    methods = [m.strip() for m in str(opts["method"]).split(",") if m.strip()]
    spans = [_span_arg(s) for s in str(opts["span"]).split(",") if s]
    table = power_experiment(
        theta_grid=thetas,
        n_mc=int(opts["n_mc"]),
        p=float(opts["p"]),
        q=float(opts["q"]),
        methods=methods,
        spans=spans,
        alpha=float(opts["alpha"]),
        seed=int(opts["seed"]),
        n_boot=int(opts["bootstrap"]),
        n=int(opts["n"]),
        delta_n=int(opts["delta_n"]),
        delta_x=float(opts["delta_x"]),
        m=int(opts["m"]),
        n_jobs=int(opts.get("n_jobs", 1)),
    )
    with open(out / "power.csv", "w", encoding="utf-8") as fh:
        table.to_csv(fh)
    _write_metadata(out, "power", opts)
    return EXIT_OK


def cmd_inject(opts: dict) -> int:
    _require(opts, "input", "time", "clique_vertices")
    out = _out_dir(opts)
    g = load_edge_list(opts["input"])
    labels = []
    with open(opts["clique_vertices"], "r", encoding="utf-8") as fh:
        for line in fh:
            tok = line.split("#", 1)[0].strip()
            if tok:
                labels.append(tok)
    injected = inject_clique(
        g, int(opts["time"]), labels,
        weight=float(opts["clique_weight"]), mode=opts["mode"],
    )
    injected.to_edge_list(out / "edges.txt")
    _write_metadata(out, "inject", opts, {"resolved": {"clique_size": len(labels)}})
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        opts = _resolve_options(args)
        if args.command == "simulate":
            return cmd_simulate(opts)
        if args.command in ("detect-chart", "detect-pvalue"):
            return cmd_detect(args.command, opts)
        if args.command == "power":
            return cmd_power(opts)
        if args.command == "inject":
            return cmd_inject(opts)
        raise CommandError(f"unknown command {args.command!r}")
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
