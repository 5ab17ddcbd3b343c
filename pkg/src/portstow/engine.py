"""Harmony search over vectors of discrete decision variables.

The engine knows nothing about containers.  A :class:`ProblemAdapter`
supplies the variable domains, random feasible vectors, repair, the
feasibility test and the objective (minimised).

Random draws follow a fixed order so that a seed reproduces a run exactly:
per improvisation, variables are visited in ascending index order and each
one draws, as needed, the consideration coin, the memory row (or domain
position), the adjustment coin and the direction coin.  Repair draws come
after the whole vector is built.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Invalid solver parameters or an unusable problem definition."""


class ImprovisationError(RuntimeError):
    """The adapter could not turn an improvised vector into a feasible one."""


@dataclass(frozen=True)
class EngineParams:
    hms: int = 50
    hmcr: float = 0.95
    par: float = 0.1
    bw: float = 1.0
    max_improvisations: Optional[int] = None
    stagnation_limit: Optional[int] = 20
    seed: int = 0

    def __post_init__(self):
        if self.hms < 1:
            raise ConfigurationError(f"hms must be >= 1, got {self.hms}")
        for name in ("hmcr", "par"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        if self.bw < 0:
            raise ConfigurationError(f"bw must be >= 0, got {self.bw}")
        if self.max_improvisations is None and self.stagnation_limit is None:
            raise ConfigurationError(
                "at least one of max_improvisations / stagnation_limit must be set")
        if self.max_improvisations is not None and self.max_improvisations < 0:
            raise ConfigurationError("max_improvisations must be >= 0")
        if self.stagnation_limit is not None and self.stagnation_limit < 1:
            raise ConfigurationError("stagnation_limit must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")


class ProblemAdapter(abc.ABC):
    """Problem definition consumed by the engine."""

    @property
    @abc.abstractmethod
    def variable_count(self) -> int:
        ...

    @abc.abstractmethod
    def domain(self, i: int) -> Sequence:
        """Ordered finite value list for variable ``i`` (0-based)."""

    @abc.abstractmethod
    def random_feasible(self, rng: np.random.Generator) -> np.ndarray:
        ...

    @abc.abstractmethod
    def repair(self, vector: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        ...

    @abc.abstractmethod
    def is_feasible(self, vector: np.ndarray) -> bool:
        ...

    @abc.abstractmethod
    def fitness(self, vector: np.ndarray) -> float:
        ...

    def index_of(self, i: int, value) -> int:
        return list(self.domain(i)).index(value)

    def place_adjusted(self, vector: np.ndarray, i: int, original, adjusted) -> None:
        """Write a pitch-adjusted value into slot ``i`` of a partial vector."""
        vector[i] = adjusted


@dataclass
class HarmonyMemory:
    vectors: np.ndarray
    fitness: np.ndarray
    worst_index: int = field(init=False)

    def __post_init__(self):
        self.worst_index = int(np.argmax(self.fitness))

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.fitness))

    def copy(self) -> "HarmonyMemory":
        return HarmonyMemory(self.vectors.copy(), self.fitness.copy())


@dataclass
class RunTrace:
    """Outcome of one solver run.

    ``history[0]`` is the best fitness of the initial memory (population) and
    ``history[t]`` the best fitness after step ``t``.
    """

    history: np.ndarray
    best: np.ndarray
    iterations: int
    evaluations: int
    accepted: int = 0

    @property
    def f_initial(self) -> float:
        return float(self.history[0])

    @property
    def f_final(self) -> float:
        return float(self.history[-1])

    def same_as(self, other: "RunTrace") -> bool:
        return (self.iterations == other.iterations
                and self.evaluations == other.evaluations
                and self.accepted == other.accepted
                and self.history.tobytes() == other.history.tobytes()
                and self.best.tobytes() == other.best.tobytes())


def init_memory(adapter: ProblemAdapter, params: EngineParams,
                rng: np.random.Generator) -> HarmonyMemory:
    n = adapter.variable_count
    if n < 1:
        raise ConfigurationError("adapter declares no decision variables")
    for i in range(n):
        if len(adapter.domain(i)) == 0:
            raise ConfigurationError(f"domain of variable {i} is empty")
    vectors = np.stack([np.asarray(adapter.random_feasible(rng))
                        for _ in range(params.hms)])
    fitness = np.array([adapter.fitness(v) for v in vectors], dtype=np.float64)
    return HarmonyMemory(vectors, fitness)


def memory_consideration(memory: HarmonyMemory, i: int, adapter: ProblemAdapter,
                         params: EngineParams, rng: np.random.Generator):
    """Draw a value for variable ``i``.

    Returns ``(value, from_memory)``; only memory-drawn values are eligible
    for pitch adjustment.
    """
    if rng.random() < params.hmcr:
        return memory.vectors[rng.integers(0, len(memory)), i], True
    dom = adapter.domain(i)
    return dom[rng.integers(0, len(dom))], False


def pitch_adjust_discrete(k: int, domain_size: int, params: EngineParams,
                          rng: np.random.Generator) -> int:
    """Move domain index ``k`` to a neighbour with probability ``par``.

    The step is +1 or -1 on a fair coin, forced inward at the domain ends.
    """
    if rng.random() < params.par:
        if domain_size == 1:
            return k
        if k == 0:
            return 1
        if k == domain_size - 1:
            return domain_size - 2
        return k - 1 if rng.random() < 0.5 else k + 1
    return k


def pitch_adjust_continuous(value: float, params: EngineParams,
                            rng: np.random.Generator) -> float:
    if rng.random() < params.par:
        sign = -1.0 if rng.random() < 0.5 else 1.0
        return value + sign * params.bw * rng.random()
    return value


def improvise(memory: HarmonyMemory, adapter: ProblemAdapter, params: EngineParams,
              rng: np.random.Generator) -> np.ndarray:
    n = adapter.variable_count
    vector = np.zeros(n, dtype=memory.vectors.dtype)
    for i in range(n):
        value, from_memory = memory_consideration(memory, i, adapter, params, rng)
        if from_memory:
            dom = adapter.domain(i)
            k = adapter.index_of(i, value)
            k_new = pitch_adjust_discrete(k, len(dom), params, rng)
            adapter.place_adjusted(vector, i, value, dom[k_new])
        else:
            vector[i] = value
    vector = adapter.repair(vector, rng)
    if not adapter.is_feasible(vector):
        raise ImprovisationError("repair returned an infeasible vector")
    return vector


def update_memory(memory: HarmonyMemory, candidate: np.ndarray,
                  adapter: ProblemAdapter, fitness: Optional[float] = None) -> bool:
    """Replace the worst harmony if ``candidate`` is strictly better."""
    if fitness is None:
        fitness = adapter.fitness(candidate)
    w = memory.worst_index
    if not fitness < memory.fitness[w]:
        return False
    if not adapter.is_feasible(candidate):
        return False
    memory.vectors[w] = candidate
    memory.fitness[w] = fitness
    memory.worst_index = int(np.argmax(memory.fitness))
    return True


def run(adapter: ProblemAdapter, params: EngineParams,
        rng: Optional[np.random.Generator] = None, *, generic: bool = False,
        memory: Optional[HarmonyMemory] = None) -> RunTrace:
    """Run harmony search to termination.

    Adapters that provide ``run_kernel(memory, params, rng)`` get their
    compiled loop unless ``generic`` is set; both routes yield the same trace.
    """
    if rng is None:
        rng = np.random.default_rng(params.seed)
    if memory is None:
        memory = init_memory(adapter, params, rng)
    kernel = getattr(adapter, "run_kernel", None)
    if kernel is not None and not generic:
        return kernel(memory, params, rng)

    best = float(memory.fitness.min())
    history = [best]
    limit = params.max_improvisations
    stag_limit = params.stagnation_limit
    stagnation = 0
    accepted = 0
    while not ((limit is not None and len(history) - 1 >= limit)
               or (stag_limit is not None and stagnation >= stag_limit)):
        candidate = improvise(memory, adapter, params, rng)
        f = adapter.fitness(candidate)
        if update_memory(memory, candidate, adapter, f):
            accepted += 1
        if f < best:
            best = f
            stagnation = 0
        else:
            stagnation += 1
        history.append(best)
    iterations = len(history) - 1
    return RunTrace(
        history=np.array(history, dtype=np.float64),
        best=memory.vectors[memory.best_index].copy(),
        iterations=iterations,
        evaluations=len(memory) + iterations,
        accepted=accepted,
    )


def relative_improvement(trace: RunTrace) -> float:
    if trace.f_initial == 0:
        return 0.0
    return (trace.f_initial - trace.f_final) / trace.f_initial


__all__ = [
    "ConfigurationError", "ImprovisationError", "EngineParams", "ProblemAdapter",
    "HarmonyMemory", "RunTrace", "init_memory", "memory_consideration",
    "pitch_adjust_discrete", "pitch_adjust_continuous", "improvise",
    "update_memory", "run", "relative_improvement",
]
