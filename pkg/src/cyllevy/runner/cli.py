"""Command line: ``cyllevy run <config|id>``, ``cyllevy list``, ``cyllevy describe <id>``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 when the
config cannot be parsed or validated.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .. import parallel
from ..errors import CylLevyError, StatisticalFailure
from . import config as cfgmod
from .checks import CHECKS

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _plain(x):
    """JSON-ready copy of a report: arrays to lists, complex to {re, im}, paths to str."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _plain(x.real), "im": _plain(x.imag)}
    if isinstance(x, Path):
        return str(x)
    if hasattr(x, "to_dict"):
        return _plain(x.to_dict())
    return x


def dumps(report):
    return json.dumps(_plain(report), sort_keys=True, indent=2) + "\n"


def check_seed(seed, check_id):
    return int(parallel.stream_rng(seed, "check", check_id).integers(0, 2**62))


def run_config(cfg, out_dir=None, workers=None, echo=print):
    """Run every check of a validated scenario; returns (exit code, summary)."""
    out = Path(out_dir or cfg.output or f"cyllevy-out/{cfg.id}")
    (out / "checks").mkdir(parents=True, exist_ok=True)
    ctx = cfgmod.build_context(cfg)
    workers = workers or cfg.workers
    rows = []
    for c in cfg.checks:
        seed = check_seed(cfg.seed, c["id"])
        try:
            rep = CHECKS[c["kind"]].run(c["params"], ctx, seed, cfg.n_paths, out, workers, c["id"])
        except (CylLevyError, StatisticalFailure, ValueError) as exc:
            rep = {"pass": False, "error": f"{type(exc).__name__}: {exc}"}
        rep = {"id": c["id"], "kind": c["kind"], "seed": seed, "params": c["params"], **rep, "pass": bool(rep["pass"])}
        (out / "checks" / f"{c['id']}.json").write_text(dumps(rep))
        rows.append({"id": c["id"], "kind": c["kind"], "pass": rep["pass"]})
        echo(f"{'PASS' if rep['pass'] else 'FAIL'}  {c['id']} ({c['kind']})" + (f": {rep['error']}" if "error" in rep else ""))
    passed = sum(r["pass"] for r in rows)
    summary = {
        "scenario": cfg.id,
        "seed": cfg.seed,
        "n_paths": cfg.n_paths,
        "total": len(rows),
        "passed": passed,
        "failed": len(rows) - passed,
        "checks": rows,
    }
    (out / "summary.json").write_text(dumps(summary))
    (out / "config.yaml").write_text(cfg.to_yaml())
    return (EXIT_OK if passed == len(rows) else EXIT_FAIL), summary


def _cmd_run(args):
    try:
        cfg = cfgmod.resolve(args.config)
        cfg = cfg.with_overrides(seed=args.seed, n_paths=args.paths, output=args.out)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, summary = run_config(cfg, args.out, args.workers)
    print(f"{summary['passed']}/{summary['total']} checks passed")
    return code


def _cmd_list(args):
    for sid in cfgmod.bundled_ids():
        doc = yaml.safe_load(cfgmod.bundled_text(sid))
        print(f"{sid:32s} {doc.get('description', '').strip().splitlines()[0] if doc.get('description') else ''}")
    return EXIT_OK


def _cmd_describe(args):
    try:
        cfg = cfgmod.resolve(args.scenario)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{cfg.id}: {cfg.description.strip()}")
    print(f"seed {cfg.seed}, {cfg.n_paths} paths")
    for c in cfg.checks:
        print(f"  - {c['id']} ({c['kind']})")
    print("\ncanonical config:\n")
    print(cfg.to_yaml())
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="cyllevy", description="Scenario runner for cylindrical Levy process checks")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file or bundled scenario id")
    run.add_argument("config", help="path to a YAML scenario or a bundled scenario id")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--paths", type=int, help="override the scenario n_paths")
    run.add_argument("--out", help="output directory (default: the scenario's output field, else cyllevy-out/<id>)")
    run.add_argument("--workers", type=int, help="threads per check (does not change results)")
    run.set_defaults(fn=_cmd_run)
    sub.add_parser("list", help="list bundled scenarios").set_defaults(fn=_cmd_list)
    desc = sub.add_parser("describe", help="show a scenario and its canonical config")
    desc.add_argument("scenario", help="bundled scenario id or YAML path")
    desc.set_defaults(fn=_cmd_describe)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
