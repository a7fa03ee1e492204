"""Experiment configuration: a TOML document with ``model``, ``domain``, ``params``, ``checks`` and ``output`` blocks.

Example::

    task = "norm"
    seed = 0

    [model]
    p = 2.0
    q = 3.0
    weight = { kind = "power_clipped", alpha = 0.5 }

    [domain]
    lower = [0.0, 0.0]
    upper = [1.0, 1.0]
    cells = 32

    [params]
    field = { kind = "constant", value = 1.0 }

    [checks]
    expect = 0.7071067811865476
    tol = 1e-8
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError, InputError
from .grid import Grid
from .nfunc import NFunction
from .weights import weight_from_dict

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = ["TASKS", "RANDOMISED", "ExperimentConfig", "load_config", "parse_config"]

TASKS = ("norm", "muck", "jensen", "maximal", "poincare", "solve", "regularity")
# tasks whose generators draw random numbers and therefore need a seed
RANDOMISED = ("jensen", "maximal", "poincare")
_TOP_KEYS = {"name", "task", "seed", "model", "domain", "params", "checks", "output"}


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    task: str
    model: NFunction
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    grid: Grid
    params: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    seed: int | None = None
    name: str = ""
    output_dir: str = "out"
    source: str = "<string>"
    base_dir: Path = Path(".")

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        if seed is None:
            return self
        return replace(self, seed=int(seed))

    def echo(self) -> dict:
        """Config as it was understood, for the report."""
        return {
            "name": self.name,
            "task": self.task,
            "seed": self.seed,
            "model": self.model.describe(),
            "domain": {
                "lower": list(self.lower),
                "upper": list(self.upper),
                "dims": list(self.grid.dims),
                "spacing": self.grid.h,
            },
            "params": self.params,
            "checks": self.checks,
        }


def _num(v, where: str, src: str, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", f"{src}: {where}")
    return kind(v)


def _vec(v, where: str, src: str) -> tuple[float, ...]:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"expected a non-empty list of numbers, got {v!r}", f"{src}: {where}")
    return tuple(_num(x, f"{where}[{i}]", src) for i, x in enumerate(v))


def _domain(d: dict, src: str):
    if not isinstance(d, dict):
        raise ConfigError("missing [domain] block", src)
    if "lower" in d:
        lower = _vec(d["lower"], "domain.lower", src)
        upper = _vec(d.get("upper"), "domain.upper", src)
        if len(lower) != len(upper):
            raise ConfigError("lower and upper differ in length", f"{src}: domain")
        cells = _num(d.get("cells"), "domain.cells", src, int)
        try:
            grid = Grid.box(lower, upper, cells)
        except (InputError, ValueError) as exc:
            raise ConfigError(str(exc), f"{src}: domain") from exc
        return lower, upper, grid
    if "dims" in d:
        dims = tuple(int(x) for x in _vec(d["dims"], "domain.dims", src))
        origin = _vec(d.get("origin", [0.0] * len(dims)), "domain.origin", src)
        h = _num(d.get("spacing"), "domain.spacing", src)
        try:
            grid = Grid(dims, origin, h)
        except (InputError, ValueError) as exc:
            raise ConfigError(str(exc), f"{src}: domain") from exc
        return grid.origin, grid.upper, grid
    raise ConfigError("domain needs either lower/upper/cells or dims/origin/spacing", f"{src}: domain")


def _model(d: dict, src: str, base_dir) -> NFunction:
    if not isinstance(d, dict):
        raise ConfigError("missing [model] block", src)
    p = _num(d.get("p"), "model.p", src)
    q = _num(d.get("q"), "model.q", src)
    w = d.get("weight", {"kind": "zero"})
    try:
        weight = weight_from_dict(w, base_dir)
        return NFunction(p, q, weight)
    except ConfigError as exc:
        raise ConfigError(str(exc), f"{src}: model.weight") from exc
    except InputError as exc:
        raise ConfigError(str(exc), f"{src}: model") from exc


def parse_config(text: str, source: str = "<string>", base_dir=None) -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        loc = f"{source}:{m.group(1)}:{m.group(2)}" if m else source
        raise ConfigError(str(exc).split(" (at line")[0], loc) from exc
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}", source)
    task = doc.get("task")
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}", f"{source}: task")
    base_dir = Path(base_dir) if base_dir is not None else Path(".")
    model = _model(doc.get("model"), source, base_dir)
    lower, upper, grid = _domain(doc.get("domain"), source)
    seed = doc.get("seed")
    if seed is not None:
        seed = _num(seed, "seed", source, int)
    for block in ("params", "checks", "output"):
        if not isinstance(doc.get(block, {}), dict):
            raise ConfigError(f"[{block}] must be a table", f"{source}: {block}")
    out = doc.get("output", {}).get("dir", "out")
    return ExperimentConfig(task, model, lower, upper, grid, dict(doc.get("params", {})),
                            dict(doc.get("checks", {})), seed, str(doc.get("name", "")), str(out), source, base_dir)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config file does not exist", str(path))
    return parse_config(path.read_text(), str(path), path.parent)
