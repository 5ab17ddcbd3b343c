import numpy as np
import pytest

from portstow.engine import ProblemAdapter
from portstow.storage import Instance, is_permutation, repair_permutation

_ACCEPTANCE_LINES = []


class ToyAdapter(ProblemAdapter):
    """Independent variables over explicit domains; fitness is the sum."""

    def __init__(self, domains):
        self.domains = [np.asarray(d) for d in domains]

    @property
    def variable_count(self):
        return len(self.domains)

    def domain(self, i):
        return self.domains[i]

    def random_feasible(self, rng):
        return np.array([d[rng.integers(0, len(d))] for d in self.domains])

    def repair(self, vector, rng):
        return vector

    def is_feasible(self, vector):
        return all(v in d for v, d in zip(vector, self.domains))

    def fitness(self, vector):
        return float(np.sum(vector))


class BijectionAdapter(ProblemAdapter):
    """Permutations of 1..n with a fixed weight per slot."""

    def __init__(self, n, weights=None):
        self.n = n
        self.weights = np.arange(1, n + 1, dtype=float) if weights is None else weights
        self._dom = np.arange(1, n + 1)

    @property
    def variable_count(self):
        return self.n

    def domain(self, i):
        return self._dom

    def random_feasible(self, rng):
        return rng.permutation(self.n) + 1

    def repair(self, vector, rng):
        return repair_permutation(vector)

    def is_feasible(self, vector):
        return is_permutation(vector, self.n)

    def fitness(self, vector):
        return float(np.dot(vector, self.weights))


@pytest.fixture
def toy_adapter():
    return ToyAdapter


@pytest.fixture
def bijection_adapter():
    return BijectionAdapter


def random_instance(rng, max_side=4, high=365):
    n1, n2, n3 = (int(v) for v in rng.integers(1, max_side + 1, size=3))
    nc = int(rng.integers(1, n1 * n2 * n3 + 1))
    return Instance(n1, n2, n3, tuple(int(d) for d in rng.integers(1, high + 1, size=nc)))


@pytest.fixture
def acceptance_report():
    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
