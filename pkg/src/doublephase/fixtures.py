"""Built-in experiment catalog; each entry is a complete TOML config."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .config import ExperimentConfig, parse_config

__all__ = ["Fixture", "FIXTURES", "get_fixture", "write_fixtures"]


@dataclass(frozen=True)
class Fixture:
    name: str
    exercises: str
    config: str

    def text(self) -> str:
        return f"# {self.exercises}\nname = \"{self.name}\"\n" + self.config.lstrip("\n")

    def load(self) -> ExperimentConfig:
        return parse_config(self.text(), f"fixture:{self.name}")


_LINE = """
[domain]
lower = [-1.0]
upper = [1.0]
cells = 64
"""

_SQUARE = """
[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
cells = {cells}
"""

_FIXTURES = [
    Fixture(
        "norm-unit-square",
        "Luxemburg norm of a constant for the pure power t^2/2: exactly 1/sqrt(2)",
        """
task = "norm"
[model]
p = 2.0
q = 3.0
[params]
field = { kind = "constant", value = 1.0 }
dual = true
[checks]
expect = 0.7071067811865476
tol = 1e-8
""" + _SQUARE.format(cells=32),
    ),
    Fixture(
        "example-power-alpha-0.5",
        "class-A constant of the clipped power coefficient min(|x|^0.5, 1) over a depth sweep",
        """
task = "muck"
[model]
p = 2.0
q = 3.0
weight = { kind = "power_clipped", alpha = 0.5 }
[params]
depths = [4, 5, 6, 7, 8]
""" + _LINE,
    ),
    Fixture(
        "example-unbounded-weight",
        "class-A constant of the unbounded coefficient |x|^-0.5",
        """
task = "muck"
[model]
p = 2.0
q = 3.0
weight = { kind = "power", alpha = -0.5 }
[params]
depths = [4, 5, 6, 7, 8]
""" + _LINE,
    ),
    Fixture(
        "example-hoelder-coefficient",
        "class-A constant of a coefficient with a(x) <= C(a(y) + |x-y|^alpha)",
        """
task = "muck"
[model]
p = 2.0
q = 2.5
weight = { kind = "hoelder_bump", alpha = 0.5, centers = [[0.1]] }
[params]
depths = [4, 5, 6, 7, 8]
""" + _LINE,
    ),
    Fixture(
        "example-sum-max-min",
        "class-A constant of the pointwise maximum of two admissible coefficients",
        """
task = "muck"
[model]
p = 2.0
q = 3.0
[model.weight]
kind = "combo"
op = "max"
left = { kind = "power_clipped", alpha = 0.5 }
right = { kind = "checkerboard", levels = [1.0, 100.0], scale = 0.25 }
[params]
depths = [4, 5, 6, 7, 8]
""" + _LINE,
    ),
    Fixture(
        "example-Aq-weight",
        "Jensen ratio per cube against the classical A_q constant of the weight |x|^0.5",
        """
task = "jensen"
seed = 0
[model]
p = 2.0
q = 3.0
weight = { kind = "power", alpha = 0.5 }
[params]
depth = 7
[checks]
aq_ceiling = true
""" + _LINE,
    ),
    Fixture(
        "jensen-outside-A-divergence",
        "Jensen estimator for |x|^-1.5, outside the class, grows with depth",
        """
task = "jensen"
seed = 0
[model]
p = 2.0
q = 3.0
weight = { kind = "power", alpha = -1.5, strict = false }
[params]
depths = [6, 7, 8, 9]
[checks]
diverge = true
""" + _LINE,
    ),
    Fixture(
        "maximal-bounded-catalog",
        "modular boundedness of the maximal operator and of its dual variant; CZ and domination checks",
        """
task = "maximal"
seed = 0
[model]
p = 2.0
q = 3.0
weight = { kind = "power_clipped", alpha = 0.5 }
[params]
variants = ["primal", "dual"]
count = 200
cz_fields = 10
[domain]
lower = [-1.0]
upper = [1.0]
cells = 512
""",
    ),
    Fixture(
        "maximal-outside-A-divergence",
        "maximal operator on spikes for |x|^-1.5: modular ratio grows under refinement",
        """
task = "maximal"
seed = 0
[model]
p = 2.0
q = 3.0
weight = { kind = "power", alpha = -1.5, strict = false }
[params]
variants = []
cz_fields = 0
spike_depths = [6, 7, 8, 9]
[checks]
diverge = true
""" + _LINE,
    ),
    Fixture(
        "poincare-power-clipped",
        "Sobolev-Poincare ratios over random bumps and the zero-set sweep",
        """
task = "poincare"
seed = 0
[model]
p = 2.0
q = 3.0
weight = { kind = "power_clipped", alpha = 0.5, center = [0.5, 0.5] }
[params]
trials = 100
s = 1.2
fractions = [0.5, 0.25, 0.1]
""" + _SQUARE.format(cells=64),
    ),
    Fixture(
        "pde-harmonic-sanity",
        "Laplace minimiser with linear boundary data reproduces x1",
        """
task = "solve"
[model]
p = 2.0
q = 3.0
[params]
boundary = "x1"
cells = [32, 64, 128]
[checks]
max_error = 1e-12
""" + _SQUARE.format(cells=32),
    ),
    Fixture(
        "pde-harmonic-quadratic-order",
        "Laplace minimiser with data x1^2 - x2^2: error table and fitted order over h",
        """
task = "solve"
[model]
p = 2.0
q = 3.0
[params]
boundary = "harmonic_quadratic"
cells = [32, 64, 128]
[checks]
slope = 2.0
slope_tol = 0.2
""" + _SQUARE.format(cells=32),
    ),
    Fixture(
        "regularity-power-clipped",
        "oscillation decay, Caccioppoli and local-bound ratios for a double phase minimiser, a = min(|x-c|^0.5, 1)",
        """
task = "regularity"
[model]
p = 2.0
q = 3.0
weight = { kind = "power_clipped", alpha = 0.5, center = [0.5, 0.5] }
[params]
boundary = "smooth"
cells = 256
levels = 4
tol_residual = 1e-6
""" + _SQUARE.format(cells=256),
    ),
    Fixture(
        "regularity-hoelder-bump",
        "oscillation decay for a minimiser with a Hoelder coefficient, alpha = 1 and q/p = 1 + alpha/n",
        """
task = "regularity"
[model]
p = 2.0
q = 3.0
weight = { kind = "hoelder_bump", alpha = 1.0, centers = [[0.5, 0.5], [0.3, 0.7]], offsets = [0.0, 0.1] }
[params]
boundary = "smooth"
cells = 256
levels = 4
tol_residual = 1e-6
""" + _SQUARE.format(cells=256),
    ),
]

FIXTURES = {f.name: f for f in _FIXTURES}


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; run 'doublephase fixtures' for the list") from None


def write_fixtures(directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for f in _FIXTURES:
        path = d / f"{f.name}.toml"
        path.write_text(f.text())
        out.append(path)
    return out
