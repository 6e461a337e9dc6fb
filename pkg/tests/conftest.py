import numpy as np
import pytest

from ndcoreset.data import Dataset

ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    def record(number, name, ok, detail=""):
        line = f"[acceptance {number}] {'PASS' if ok else 'FAIL'} {name}"
        if detail:
            line += f" :: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_dataset(rng, n, dim, pos_fraction=0.5):
    X = rng.standard_normal((n, dim))
    y = np.where(rng.random(n) < pos_fraction, 1, -1)
    y[0], y[1] = 1, -1
    return Dataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
