"""Command-line front end (``hlab``).

Exit codes: 0 success, 2 parameter or domain error, 3 numerical failure.
Errors are written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .counterexample import LacunarySeries, besov_membership_probe, quotient_statistics
from .dyadic import CubeFamily, regularize
from .errors import DomainError, NumericalError
from .experiments import (
    SCENARIOS,
    ExperimentConfig,
    adams_trials,
    diam_trials,
    phi_estimate,
    run_distortion_experiment,
    stability_report,
)
from .exponents import DistortionParams, summary
from .fractal import PointSet, box_dimension, cantor_set
from .grid import GridFunction
from .operators import bessel_potential, maximal, riesz_potential

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(json.dumps({"error": "usage", "message": message}, sort_keys=True) + "\n")
        raise SystemExit(EXIT_DOMAIN)


def _levels(text: str):
    lo, sep, hi = str(text).partition("..")
    if not sep:
        raise argparse.ArgumentTypeError(f"levels must look like 4..10, got {text!r}")
    return int(lo), int(hi)


def _read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys may use dashes."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise DomainError(f"config line without '=': {raw!r}")
        out[key.strip().replace("-", "_")] = val.strip().strip('"').strip("'")
    return out


def _emit(report: dict, args, stream=None):
    stream = stream or sys.stdout
    if args.format == "csv":
        stream.write(_to_csv(report))
        return
    payload = dict(report)
    payload.setdefault("version", __version__)
    payload["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    stream.write(json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _to_csv(report: dict) -> str:
    """Rows of the first list-of-records field, or flat key/value pairs."""
    buf = io.StringIO()
    for key in ("levels", "rows", "points", "table"):
        rows = report.get(key)
        if isinstance(rows, list) and rows and isinstance(rows[0], dict):
            fields = [k for k in rows[0] if not isinstance(rows[0][k], (list, dict))]
            w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
            return buf.getvalue()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k in sorted(report):
        v = report[k]
        if not isinstance(v, (list, dict)):
            w.writerow([k, v])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def cmd_exponents(args):
    params = DistortionParams(args.n, args.alpha, args.p, args.k, args.m, args.lorentz)
    return summary(params, tau=args.tau, q=args.q)


def cmd_regularize(args):
    fam = CubeFamily.from_json(Path(args.input).read_text())
    reg = regularize(fam)
    text = reg.to_json()
    if args.output:
        Path(args.output).write_text(text + "\n")
    return {
        "input": args.input,
        "output": args.output,
        "tau": reg.tau,
        "input_cubes": len(fam),
        "output_cubes": len(reg),
        "input_weight": fam.tau_weight,
        "output_weight": reg.tau_weight,
        "family": json.loads(text),
    }


def cmd_estimate_dim(args):
    if args.input:
        pts = PointSet.from_csv(Path(args.input).read_text())
        source = {"input": args.input}
    else:
        pts = cantor_set(args.ratio, args.depth, mode="endpoints")
        source = {"generator": "cantor", "ratio": args.ratio, "depth": args.depth}
    lo, hi = args.levels
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = box_dimension(pts, lo, hi)
    out = {"source": source, "levels": [lo, hi], "estimate": est.to_dict()}
    out["warnings"] = [str(w.message) for w in caught]
    return out


def cmd_operators(args):
    g = GridFunction.from_csv(Path(args.input).read_text())
    if args.op == "maximal":
        res = maximal(g, args.order)
    elif args.op == "riesz":
        res = riesz_potential(g, args.order, method=args.method)
    else:
        res = bessel_potential(g, args.order, method=args.method)
    if args.output:
        Path(args.output).write_text(res.to_csv())
    return {
        "op": args.op,
        "order": args.order,
        "grid": {"dim": g.dim, "corner": list(g.corner), "side": g.side, "cells": g.cells},
        "output": args.output,
        "values": None if args.output else res.values.tolist(),
    }


def cmd_adams(args):
    rep = stability_report(adams_trials, args.mode, args.cells, args.trials, args.seed, workers=args.workers)
    rep["grid"] = {"box": [0.0, 1.0], "cells": args.cells}
    rep["config"] = {"mode": args.mode, "trials": args.trials, "seed": args.seed, "cells": args.cells}
    return rep


def cmd_diam(args):
    kw = {"alpha": args.alpha, "p": args.p, "theta": args.theta, "workers": args.workers}
    rep = stability_report(diam_trials, args.mode, args.cells, args.trials, args.seed, **kw)
    rep["grid"] = {"box": [0.0, 1.0], "cells": args.cells}
    rep["config"] = dict(kw, mode=args.mode, trials=args.trials, seed=args.seed, cells=args.cells)
    rep["config"].pop("workers")
    return rep


def cmd_counterexample(args):
    series = LacunarySeries(sigma=args.sigma, base=args.base, terms=args.terms, envelope=not args.no_envelope)
    cfg = {"series": series.to_dict(), "probe": args.probe, "seed": args.seed, "points": args.points}
    if args.probe == "quotients":
        stats = quotient_statistics(series, n_points=args.points, seed=args.seed)
        control = quotient_statistics(np.sin, n_points=args.points, seed=args.seed)
        return {
            "config": cfg,
            "median_oscillation": stats["median_oscillation"],
            "median_abs_quotient": stats["median_abs_quotient"],
            "control_median_oscillation": control["median_oscillation"],
            "points": stats["points"],
        }
    probe = besov_membership_probe(series)
    return {"config": cfg, "besov": probe}


def _distortion_config(args, scenario):
    params = DistortionParams(args.n, args.alpha, args.p)
    return ExperimentConfig(
        scenario=scenario,
        params=params,
        seed=args.seed,
        levels=args.levels,
        ratio=args.ratio,
        depth=args.depth,
        gamma=args.gamma,
    )


def cmd_distortion(args):
    return run_distortion_experiment(_distortion_config(args, args.scenario))


def cmd_phi(args):
    if args.input:
        pts = PointSet.from_csv(Path(args.input).read_text())
    else:
        pts = cantor_set(args.ratio, args.depth, mode="endpoints")
    maps = {
        "identity": lambda x: x,
        "zero": np.zeros_like,
        "holder": lambda x: np.sign(x) * np.abs(x) ** args.gamma,
    }
    lo, hi = args.levels
    est = phi_estimate(pts, maps[args.map], args.mu, args.q, range(lo, hi + 1))
    cfg = {"mu": args.mu, "q": args.q, "levels": [lo, hi], "map": args.map, "input": args.input}
    if not args.input:
        cfg.update({"ratio": args.ratio, "depth": args.depth})
    return {"config": cfg, "estimate": est.to_dict()}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", help="key=value file; command-line flags win")

    ap = _Parser(prog="hlab", description="Dimension-distortion numerical laboratory")
    ap.add_argument("--version", action="version", version=f"hlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("exponents", parents=[common], help="critical dimension, sigma, mu_q, beta_bar")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--lorentz", action="store_true", help="allow alpha*p = n")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("regularize", parents=[common], help="make a cube family satisfy the packing inequality")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_regularize)

    p = sub.add_parser("estimate-dim", parents=[common], help="box-counting dimension of a point set")
    p.add_argument("--input", help="point CSV; defaults to a Cantor set")
    p.add_argument("--levels", type=_levels, default=(4, 10))
    p.add_argument("--ratio", type=float, default=1.0 / 3.0)
    p.add_argument("--depth", type=int, default=14)
    p.set_defaults(func=cmd_estimate_dim)

    p = sub.add_parser("operators", parents=[common], help="apply a maximal / Riesz / Bessel operator to a grid CSV")
    p.add_argument("--op", choices=("maximal", "riesz", "bessel"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--order", type=float, default=None, help="beta for maximal/riesz, alpha for bessel")
    p.add_argument("--method", choices=("auto", "direct", "fft"), default="auto")
    p.add_argument("--output")
    p.set_defaults(func=cmd_operators)

    p = sub.add_parser("adams-check", parents=[common], help="Adams trace-inequality ratio stability")
    p.add_argument("--mode", choices=("riesz", "maximal", "lorentz"), default="riesz")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cells", type=int, default=1024)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_adams)

    p = sub.add_parser("diam-check", parents=[common], help="image-diameter bound ratio stability")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--p", type=float, default=3.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--mode", choices=("riesz", "maximal", "lorentz"), default="riesz")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cells", type=int, default=1024)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_diam)

    p = sub.add_parser("counterexample", parents=[common], help="lacunary series probes")
    p.add_argument("--sigma", type=float, default=0.4)
    p.add_argument("--base", type=float, default=5.0)
    p.add_argument("--terms", type=int, default=None)
    p.add_argument("--no-envelope", action="store_true")
    p.add_argument("--probe", choices=("quotients", "besov"), default="quotients")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_counterexample)

    for name, func, help_ in (
        ("distortion", cmd_distortion, "Cantor-set dimension distortion experiment"),
        ("phi", cmd_phi, "Phi set-function estimate"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--levels", type=_levels, default=(4, 9))
        p.add_argument("--ratio", type=float, default=1.0 / 3.0)
        p.add_argument("--depth", type=int, default=14)
        p.add_argument("--gamma", type=float, default=0.5)
        if name == "distortion":
            p.add_argument("--scenario", choices=SCENARIOS, default="cantor_identity")
            p.add_argument("--n", type=int, default=1)
            p.add_argument("--alpha", type=float, default=1.5)
            p.add_argument("--p", type=float, default=2.0)
        else:
            p.add_argument("--mu", type=float, required=True)
            p.add_argument("--q", type=float, required=True)
            p.add_argument("--map", choices=("identity", "holder", "zero"), default="identity")
            p.add_argument("--input")
        p.set_defaults(func=func)
    return ap


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _parse(argv):
    ap = build_parser()
    path = _config_path(argv)
    if path:
        cfg = _read_config(path)
        choices = ap._subparsers._group_actions[0].choices
        command = next((tok for tok in argv if tok in choices), None)
        if command is not None:
            sub = choices[command]
            actions = {a.dest: a for a in sub._actions}
            unknown = sorted(set(cfg) - set(actions))
            if unknown:
                raise DomainError(f"unknown config keys for {command}: {unknown}")
            for key, val in cfg.items():
                action = actions[key]
                action.required = False
                if isinstance(action, argparse._StoreTrueAction):
                    action.default = val.lower() in ("1", "true", "yes", "on")
                else:
                    # argparse converts string defaults with the action's type
                    action.default = val
    return ap.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
        if args.command == "operators" and args.order is None:
            raise DomainError("--order is required for operators")
        report = args.func(args)
        _emit(report, args)
        return EXIT_OK
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_DOMAIN
    except (DomainError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        _error("domain", exc)
        return EXIT_DOMAIN
    except (NumericalError, OverflowError, FloatingPointError) as exc:
        _error("numerical", exc, getattr(exc, "diagnostics", None))
        return EXIT_NUMERICAL


def _error(kind, exc, diagnostics=None):
    payload = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    if diagnostics:
        payload["diagnostics"] = diagnostics
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=_json_default) + "\n")


if __name__ == "__main__":
    sys.exit(main())
