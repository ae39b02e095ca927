import itertools
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


GOLDEN = Path(__file__).parent / "data" / "solver_golden.json"


def complex_array(pair):
    return np.array(pair["re"]) + 1j * np.array(pair["im"])


def load_golden():
    return json.loads(GOLDEN.read_text())["instances"]


def exhaustive_support_oracle(A, y, P, s=1):
    """Signals on ``s`` groups whose restricted least-squares fit reproduces ``y``."""
    hits = []
    for sup in itertools.combinations(range(P.num_groups), s):
        idx = P.indices(sup)
        coef, *_ = np.linalg.lstsq(A[:, idx], y, rcond=None)
        if np.linalg.norm(A[:, idx] @ coef - y) <= 1e-10 * np.linalg.norm(y):
            x = np.zeros(A.shape[1], dtype=complex)
            x[idx] = coef
            hits.append(x)
    return hits


# acceptance verdicts, echoed once more at the end of the run
ACCEPTANCE: list[str] = []


def record_verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
