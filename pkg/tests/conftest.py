from __future__ import annotations

import numpy as np
import pytest

from laakso.cantor import CantorAddress
from laakso.space import LaaksoPoint, canonicalize
from laakso.triadic import Triadic


def random_point(rng: np.random.Generator, N: int, height_depth: int | None = None) -> LaaksoPoint:
    d = N if height_depth is None else height_depth
    h = Triadic(int(rng.integers(0, 3**d + 1)), d)
    bits = "".join("1" if b else "0" for b in rng.integers(0, 2, size=N))
    return canonicalize(h, CantorAddress(bits))


def random_pairs(rng: np.random.Generator, N: int, count: int) -> list[tuple[LaaksoPoint, LaaksoPoint]]:
    return [(random_point(rng, N), random_point(rng, N)) for _ in range(count)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
