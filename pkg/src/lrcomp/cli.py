"""Command line: rates, simulate, experiment, urn, validate."""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, parse_config
from .experiments import (BUILTIN_SCENARIOS, DEFAULT_SEED, builtin_scenario, compare_engines,
                          crossval_settings, run_batch, run_scenario)
from .output import _jsonable, csv_text, header, report_dict, write_results
from .rates import DEFAULT_REGIME_GRID, ParamFamily, classify_regime, total_rates
from .seeding import derive_stream
from .stats import SIGNIFICANCE, chi_square_two_sample, histogram
from .urn import urn_run

LAMBDA_KINDS = {
    "constant": lambda c: ParamFamily.constant(c),
    "affine_log": lambda c: ParamFamily("affine_log", {"a": 1.0, "b": c}),
    "log_squared": lambda c: ParamFamily("log_squared", {"a": 0.0, "b": c}),
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--runs", type=int)
    p.add_argument("--engine", choices=("coupled", "oracle"))
    p.add_argument("--out", help="output directory (default: print to stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--alpha-minus", type=float)
    p.add_argument("--alpha-plus", type=float)
    p.add_argument("--lambda-kind", choices=sorted(LAMBDA_KINDS),
                   help="constant: c; affine_log: 1 + c log n; log_squared: c (log n)^2")
    p.add_argument("--lambda-c", type=float)
    p.add_argument("--threads", type=int, help="worker threads (default LRC_THREADS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrcomp", description="Long-range competition simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("rates", help="print R_n, Z_n, c_n and the regime label as JSON")
    _common(p)
    p = sub.add_parser("simulate", help="independent runs of one instance")
    _common(p)
    p = sub.add_parser("experiment", help="run a scenario; writes runs.csv and report.json")
    p.add_argument("scenario", nargs="?", choices=BUILTIN_SCENARIOS)
    _common(p)
    p = sub.add_parser("urn", help="alpha = 0 urn oracle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")
    p = sub.add_parser("validate", help="engine and urn cross-checks on small tori")
    _common(p)
    return ap


def _overrides(args) -> dict:
    doc = {}
    for key, attr in (("d", "d"), ("m", "m"), ("seed", "seed"), ("runs", "runs"),
                      ("engine", "engine"), ("format", "format")):
        v = getattr(args, attr, None)
        if v is not None:
            doc[key] = v
    if args.alpha_minus is not None:
        doc["alpha_minus"] = args.alpha_minus
    if args.alpha_plus is not None:
        doc["alpha_plus"] = args.alpha_plus
    if args.lambda_kind is not None or args.lambda_c is not None:
        kind = args.lambda_kind or "constant"
        c = args.lambda_c if args.lambda_c is not None else 1.0
        doc["lambda"] = LAMBDA_KINDS[kind](c).to_dict()
    if args.out is not None:
        doc["out_dir"] = args.out
    return doc


def _config(args, scenario: str | None = None) -> RunConfig:
    doc = {}
    if args.config:
        from .config import load_document
        doc = load_document(Path(args.config).read_text())
    doc.update(_overrides(args))
    if scenario is not None:
        doc["scenario"] = scenario
    if "scenario" not in doc:
        doc.setdefault("d", 1)
        doc.setdefault("m", 100)
    return parse_config(doc)


def _emit(text: str, out_dir: str | None, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
    else:
        path = Path(out_dir) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        print(f"wrote {path}", file=sys.stderr)


def cmd_rates(args) -> int:
    cfg = _config(args)
    rates = total_rates(cfg.params)
    regime = classify_regime(cfg.params, DEFAULT_REGIME_GRID)
    out = {"n": cfg.params.n, **asdict(rates), "regime": regime, "params": cfg.params.to_dict()}
    print(json.dumps(_jsonable(out), indent=2))
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    results = run_batch(cfg.params, cfg.engine, cfg.seed, range(cfg.runs),
                        phase_m=8.0 if cfg.engine == "coupled" else None,
                        checkpoint_times=cfg.checkpoints, threads=args.threads)
    if cfg.format == "csv":
        _emit(csv_text(results), cfg.out_dir, "runs.csv")
    else:
        if cfg.out_dir is None:
            from .output import run_dict
            print(json.dumps({"header": header(), "runs": [run_dict(r) for r in results]}, indent=2))
        else:
            write_results(results, Path(cfg.out_dir) / "runs.json", "json")
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args, args.scenario)
    if cfg.scenario is None:
        raise ConfigError("scenario", "give a scenario name or a config with a 'scenario' key")
    report = run_scenario(cfg.scenario, threads=args.threads)
    if cfg.out_dir is not None:
        write_results(report, Path(cfg.out_dir) / "runs.csv", "csv")
        write_results(report, Path(cfg.out_dir) / "report.json", "json")
    elif cfg.format == "json":
        print(json.dumps(report_dict(report), indent=2))
    print(report.summary_line(), file=sys.stderr)
    return 0 if report.passed else 1


def cmd_urn(args) -> int:
    rows = ["run_index,n_minus,n_plus,seed"]
    for i in range(args.runs):
        s = derive_stream(args.seed, i)
        a, b = urn_run(args.n, args.z, s)
        rows.append(f"{i},{a},{b},{s}")
    _emit("\n".join(rows) + "\n", args.out, "urn.csv")
    return 0


def cmd_validate(args) -> int:
    runs = args.runs or 2000
    seed = DEFAULT_SEED if args.seed is None else args.seed
    ok = True
    block = 0
    for d, m in ((1, 7), (2, 5)):
        for label, params in crossval_settings(d):
            out = compare_engines(params.with_m(m), runs, derive_stream(seed, block), args.threads)
            block += 1
            good = out["p_value"] > SIGNIFICANCE
            ok &= good
            print(f"engines d={d} m={m} {label}: p={out['p_value']:.4f} {'ok' if good else 'FAIL'}")
    spec = builtin_scenario("urn-crossval", runs=runs, seed=seed)
    rep = run_scenario(spec, threads=args.threads)
    ok &= rep.passed
    print(f"urn vs coupled n=25: p={rep.statistics['p_value']:.4f} {'ok' if rep.passed else 'FAIL'}")
    return 0 if ok else 1


COMMANDS = {"rates": cmd_rates, "simulate": cmd_simulate, "experiment": cmd_experiment,
            "urn": cmd_urn, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
