"""Genetic-algorithm baseline over the same permutation encoding.

Roulette-wheel parents, order-preserving two-point crossover, swap mutation
and elitism of one.  Fitness is minimised, so roulette weights are
``max(f) - f + 1e-9``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .engine import ConfigurationError, RunTrace
from .storage import Instance, build_canonical_layout


@dataclass(frozen=True)
class GAParams:
    population_size: int = 50
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    max_generations: Optional[int] = None
    stagnation_limit: Optional[int] = None
    max_evals: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 1:
            raise ConfigurationError("population_size must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        if (self.max_generations is None and self.stagnation_limit is None
                and self.max_evals is None):
            raise ConfigurationError("GA needs at least one termination limit")
        if (self.population_size == 1 and self.max_generations is None
                and self.stagnation_limit is None):
            raise ConfigurationError(
                "a population of one evaluates no offspring; an evaluation "
                "budget alone never terminates")


def roulette_select(population: Sequence, fitness: Sequence[float],
                    rng: np.random.Generator):
    """Pick one individual with probability proportional to its weight."""
    idx = kernels.roulette_index(np.asarray(fitness, dtype=np.float64), rng)
    return population[idx]


def selection_weights(fitness: Sequence[float]) -> np.ndarray:
    f = np.asarray(fitness, dtype=np.float64)
    w = f.max() - f + kernels.ROULETTE_EPS
    return w / w.sum()


def crossover_with_cuts(parent_a, parent_b, c1: int, c2: int) -> Tuple[np.ndarray, np.ndarray]:
    """Order crossover around the 1-based inclusive segment ``[c1, c2]``."""
    a = np.asarray(parent_a, dtype=np.int64)
    b = np.asarray(parent_b, dtype=np.int64)
    used = np.empty(a.shape[0] + 1, dtype=np.bool_)
    child_a = np.empty_like(a)
    child_b = np.empty_like(b)
    kernels.order_crossover(a, b, c1 - 1, c2 - 1, child_a, used)
    kernels.order_crossover(b, a, c1 - 1, c2 - 1, child_b, used)
    return child_a, child_b


def two_point_crossover(parent_a, parent_b, rng: np.random.Generator):
    n = len(parent_a)
    if n < 2:
        return np.array(parent_a, dtype=np.int64), np.array(parent_b, dtype=np.int64)
    c1, c2 = kernels.draw_cuts(n, rng)
    return crossover_with_cuts(parent_a, parent_b, c1 + 1, c2 + 1)


def swap_mutation(individual, rng: np.random.Generator) -> np.ndarray:
    out = np.array(individual, dtype=np.int64)
    kernels.swap_slots(out, rng)
    return out


def run_ga(instance: Instance, params: GAParams,
           rng: Optional[np.random.Generator] = None) -> RunTrace:
    if rng is None:
        rng = np.random.default_rng(params.seed)
    layout = build_canonical_layout(instance)
    prio = instance.priorities()
    m = layout.rehandle_counts()
    size, nc = params.population_size, instance.nc
    pop = np.stack([rng.permutation(nc).astype(np.int64) + 1 for _ in range(size)])
    fit = np.array([kernels.fitness_seq(prio, m, p) for p in pop], dtype=np.float64)
    best = float(fit.min())
    chunks = [np.array([best])]
    evals = size
    stagnation = 0
    generations = 0
    stag_limit = -1 if params.stagnation_limit is None else params.stagnation_limit
    max_evals = -1 if params.max_evals is None else params.max_evals
    while True:
        remaining = (-1 if params.max_generations is None
                     else params.max_generations - generations)
        buf = np.empty(1024, dtype=np.float64)
        count, stagnation, best, evals, done = kernels.ga_run_chunk(
            pop, fit, prio, m, float(params.crossover_rate), float(params.mutation_rate),
            remaining, stag_limit, stagnation, max_evals, evals, best, buf, rng)
        chunks.append(buf[:count])
        generations += count
        if done:
            break
    return RunTrace(
        history=np.concatenate(chunks),
        best=pop[int(np.argmin(fit))].copy(),
        iterations=generations,
        evaluations=int(evals),
    )
