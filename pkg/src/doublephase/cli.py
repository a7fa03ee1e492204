"""Command line: ``doublephase run --config FILE`` and ``doublephase fixtures``.

Exit status is 0 when every check passes, 1 when a task fails or a check
does not hold, and 2 when the config cannot be parsed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import subprocess
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .errors import BracketError, ConfigError, DomainError, InputError, PreconditionError
from .fixtures import FIXTURES, get_fixture, write_fixtures
from .parallel import default_threads
from .solver import save_checkpoint
from .tasks import run_task

__all__ = ["main", "build_payload", "run_config", "clean"]


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return obj


def build_payload(cfg, result) -> dict:
    failed = [c["name"] for c in result.checks if not c["passed"]]
    summary = f"{cfg.task}: {len(result.checks) - len(failed)}/{len(result.checks)} checks passed"
    if failed:
        summary += " (failed: " + ", ".join(failed) + ")"
    return clean({
        "version": __version__,
        "config": cfg.echo(),
        "result": result.payload,
        "checks": result.checks,
        "passed": not failed,
        "summary": summary,
    })


def dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)


def _git_commit() -> str | None:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).parent)
    except (OSError, subprocess.SubprocessError):
        return None
    if out.returncode != 0:
        return None
    return out.stdout.strip() or None


def _write_table(path: Path, rows: list[dict]):
    names: list[str] = []
    for r in rows:
        for k in r:
            if k not in names:
                names.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=names)
        w.writeheader()
        for r in rows:
            w.writerow({k: clean(v) for k, v in r.items()})


def run_config(cfg, out_dir, threads=None):
    """Run one config, write the report, tables and checkpoints; return ``(payload, result)``."""
    result = run_task(cfg, threads)
    payload = build_payload(cfg, result)
    out = Path(out_dir)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    for name, rows in result.tables.items():
        if rows:
            _write_table(out / "tables" / f"{name}.csv", rows)
    for name, sol in result.solutions.items():
        save_checkpoint(sol, out / "checkpoints" / name)
    report = {
        "payload": payload,
        "run": {
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "threads": threads if threads is not None else default_threads(),
            "gitCommit": _git_commit(),
            "source": cfg.source,
        },
    }
    (out / "report.json").write_text(dumps(report) + "\n")
    return payload, result


def _cmd_run(args) -> int:
    try:
        if args.fixture:
            cfg = get_fixture(args.fixture).load()
        else:
            cfg = load_config(args.config)
        cfg = cfg.with_seed(args.seed)
        if args.out:
            out = args.out
        elif args.fixture:
            out = "out"
        else:
            out = str(cfg.base_dir / cfg.output_dir)
        payload, result = run_config(cfg, out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    except (InputError, DomainError, PreconditionError, BracketError) as exc:
        print(f"task failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(payload["summary"])
    for c in result.checks:
        if not c["passed"]:
            print(f"FAILED {c['name']}: value={clean(c['value'])} limit={clean(c['limit'])}", file=sys.stderr)
    return 0 if payload["passed"] else 1


def _cmd_fixtures(args) -> int:
    if args.write:
        for p in write_fixtures(args.write):
            print(p)
        return 0
    width = max(len(n) for n in FIXTURES)
    for name, fx in FIXTURES.items():
        print(f"{name:<{width}}  {fx.exercises}")
    return 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="doublephase", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="TOML experiment file")
    src.add_argument("--fixture", help="name of a built-in fixture")
    run.add_argument("--out", help="output directory (default: the config's output.dir)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    run.set_defaults(func=_cmd_run)
    fx = sub.add_parser("fixtures", help="list the built-in experiment catalog")
    fx.add_argument("--write", metavar="DIR", help="write every fixture as a TOML file into DIR")
    fx.set_defaults(func=_cmd_fixtures)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
