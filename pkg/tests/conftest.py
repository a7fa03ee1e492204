import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from doublephase.grid import Grid  # noqa: E402


@pytest.fixture
def unit_square():
    return Grid.box((0.0, 0.0), (1.0, 1.0), 32)


@pytest.fixture
def unit_interval():
    return Grid.box((0.0,), (1.0,), 256)


# criterion -> list of (part, passed, detail); filled by the acceptance suite
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def record():
    def _record(criterion: int, part: str, passed: bool, detail: str = ""):
        ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
        return bool(passed)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p for _, p, _ in parts)
        shown = "; ".join(f"{name}{'' if p else ' [FAIL]'}: {detail}" for name, p, detail in parts)
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {shown}")
