from __future__ import annotations

import numpy as np
import pytest

from redlight.images import ColorImage, GrayImage


def make_gray(rows) -> GrayImage:
    return GrayImage(np.asarray(rows, dtype=np.uint8))


def make_color(rows) -> ColorImage:
    return ColorImage(np.asarray(rows, dtype=np.uint8))


def random_gray(rng: np.random.RandomState, width: int, height: int) -> GrayImage:
    return GrayImage(rng.randint(0, 256, size=(height, width), dtype=np.uint8))


def random_color(rng: np.random.RandomState, width: int, height: int) -> ColorImage:
    return ColorImage(rng.randint(0, 256, size=(height, width, 3), dtype=np.uint8))


def flat_gray(value: int, width: int, height: int) -> GrayImage:
    return GrayImage(np.full((height, width), value, dtype=np.uint8))


@pytest.fixture
def rng() -> np.random.RandomState:
    return np.random.RandomState(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one line per acceptance criterion at the end of the run."""
    rows: dict[str, str] = {}
    for outcome in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            if getattr(report, "when", "call") not in ("call", "setup"):
                continue
            name = nodeid.split("::")[-1]
            verdict = {"passed": "PASS", "failed": "FAIL", "error": "FAIL", "skipped": "SKIP"}[outcome]
            # a later FAIL overrides an earlier PASS for the same test
            if rows.get(name) != "FAIL":
                rows[name] = verdict
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(rows):
        label = name.removeprefix("test_").replace("_", " ")
        terminalreporter.write_line(f"{rows[name]:4s}  {label}")
