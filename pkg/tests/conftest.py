from __future__ import annotations

import numpy as np
import pytest

from susyhom.graph_complex import Graph

# one line per acceptance criterion, filled in by tests/test_acceptance.py
CRITERIA: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])


def random_graphs(count: int, n_max: int, seed: int, n_min: int = 1) -> list[Graph]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        p = float(rng.uniform(0.1, 0.9))
        out.append(Graph.random(n, p, rng))
    return out


@pytest.fixture(scope="session")
def acceptance_graphs() -> list[Graph]:
    return random_graphs(200, 12, seed=20240611)
