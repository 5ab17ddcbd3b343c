"""Single-bay container storage: geometry, rehandles, objective, repair.

Containers are numbered ``1..nc``.  The bay is an ``n1 x n2 x n3`` grid with
``z = 1`` the ground tier.  Occupied cells form a fixed canonical layout (full
tiers bottom-up, the top tier filled in ``(y, x)`` order) and a solution is a
permutation assigning one container to each occupied slot.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .engine import EngineParams, HarmonyMemory, ProblemAdapter, RunTrace


@dataclass(frozen=True)
class Instance:
    n1: int
    n2: int
    n3: int
    delivery_dates: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "delivery_dates",
                           tuple(int(d) for d in self.delivery_dates))
        if min(self.n1, self.n2, self.n3) < 1:
            raise ValueError("bay dimensions must be positive")
        if self.nc < 1:
            raise ValueError("an instance needs at least one container")
        if self.nc > self.capacity:
            raise ValueError(
                f"nc={self.nc} exceeds bay capacity {self.capacity}")
        if min(self.delivery_dates) < 1:
            raise ValueError("delivery dates must be >= 1")

    @property
    def nc(self) -> int:
        return len(self.delivery_dates)

    @property
    def capacity(self) -> int:
        return self.n1 * self.n2 * self.n3

    @property
    def floor_capacity(self) -> int:
        return self.n1 * self.n2

    def priorities(self) -> np.ndarray:
        return 1.0 / np.asarray(self.delivery_dates, dtype=np.float64)

    def to_text(self) -> str:
        return (f"{self.n1} {self.n2} {self.n3} {self.nc}\n"
                + " ".join(str(d) for d in self.delivery_dates) + "\n")

    @classmethod
    def from_text(cls, text: str) -> "Instance":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 2:
            raise ValueError("instance file needs a header line and a date line")
        header = [int(t) for t in lines[0].split()]
        if len(header) != 4:
            raise ValueError("header must read 'n1 n2 n3 nc'")
        n1, n2, n3, nc = header
        dates = [int(t) for t in lines[1].split()]
        if len(dates) != nc:
            raise ValueError(f"expected {nc} delivery dates, found {len(dates)}")
        return cls(n1, n2, n3, tuple(dates))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Instance":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Layout:
    """Occupied cells, one row ``(x, y, z)`` per slot, 1-based."""

    dims: Tuple[int, int, int]
    cells: np.ndarray

    def __len__(self):
        return self.cells.shape[0]

    def rehandle_counts(self) -> np.ndarray:
        """Containers stacked above each slot, as float64 for the kernels."""
        counts = np.zeros(len(self), dtype=np.float64)
        columns = {}
        for k, (x, y, z) in enumerate(self.cells.tolist()):
            columns.setdefault((x, y), []).append((z, k))
        for stack in columns.values():
            for z, k in stack:
                counts[k] = sum(1 for z2, _ in stack if z2 > z)
        return counts

    def floor_counts(self) -> np.ndarray:
        n3 = self.dims[2]
        return np.bincount(self.cells[:, 2] - 1, minlength=n3)[:n3]


def build_canonical_layout(instance: Instance) -> Layout:
    n1, n2, n3 = instance.n1, instance.n2, instance.n3
    z, y, x = np.unravel_index(np.arange(instance.nc), (n3, n2, n1))
    cells = np.stack([x + 1, y + 1, z + 1], axis=1).astype(np.int64)
    return Layout((n1, n2, n3), cells)


def layout_from_cells(dims: Sequence[int], cells: Iterable[Sequence[int]]) -> Layout:
    """Layout from arbitrary cells, sorted into canonical ``(z, y, x)`` order."""
    arr = np.array(sorted((tuple(c) for c in cells), key=lambda c: (c[2], c[1], c[0])),
                   dtype=np.int64).reshape(-1, 3)
    return Layout(tuple(int(d) for d in dims), arr)


def rehandles(layout: Layout, slot: int) -> int:
    x, y, z = layout.cells[slot]
    same = (layout.cells[:, 0] == x) & (layout.cells[:, 1] == y)
    return int(np.count_nonzero(same & (layout.cells[:, 2] > z)))


def priority(instance: Instance, i: int) -> float:
    return 1.0 / instance.delivery_dates[i - 1]


def fitness(instance: Instance, layout: Layout, arrangement: Sequence[int]) -> float:
    """Priority-weighted rehandle total; slot ``k`` holds ``arrangement[k]``."""
    assign = np.asarray(arrangement, dtype=np.int64)
    return float(kernels.fitness_seq(instance.priorities(), layout.rehandle_counts(),
                                     assign))


def check_constraints(instance: Instance, layout: Layout) -> bool:
    """Tier counts never grow upward and nothing floats."""
    cells = layout.cells
    n1, n2, n3 = instance.n1, instance.n2, instance.n3
    if len(layout) != instance.nc:
        return False
    if len(layout) == 0:
        return True
    lo_ok = (cells >= 1).all()
    hi_ok = (cells[:, 0] <= n1).all() and (cells[:, 1] <= n2).all() and (cells[:, 2] <= n3).all()
    if not (lo_ok and hi_ok):
        return False
    occupied = {tuple(c) for c in cells.tolist()}
    if len(occupied) != len(layout):
        return False
    counts = np.bincount(cells[:, 2] - 1, minlength=n3)
    if np.any(np.diff(counts) > 0):
        return False
    return all(z == 1 or (x, y, z - 1) in occupied for x, y, z in occupied)


def is_permutation(arrangement: Sequence[int], nc: int) -> bool:
    a = np.asarray(arrangement)
    if a.shape != (nc,):
        return False
    return bool(np.array_equal(np.sort(a), np.arange(1, nc + 1)))


def repair_permutation(raw: Sequence[int], rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Keep the first copy of each id; later duplicates take the missing ids
    in ascending order.  Deterministic, so ``rng`` is never drawn from."""
    vec = np.array(raw, dtype=np.int64)
    n = vec.shape[0]
    if n and (vec.min() < 1 or vec.max() > n):
        raise ValueError("container ids must lie in 1..nc")
    kernels.repair_inplace(vec, np.empty(n + 1, dtype=np.bool_))
    return vec


def oracle_optimal(instance: Instance, layout: Layout) -> Tuple[np.ndarray, float]:
    """Exact optimum for a fixed layout.

    With the slots fixed the objective pairs priorities with rehandle counts,
    so the rearrangement inequality gives the minimum: highest priority onto
    the fewest rehandles.
    """
    prio = instance.priorities()
    m = layout.rehandle_counts()
    containers = np.argsort(-prio, kind="stable") + 1
    slots = np.argsort(m, kind="stable")
    assign = np.empty(instance.nc, dtype=np.int64)
    assign[slots] = containers
    return assign, fitness(instance, layout, assign)


def exhaustive_optimal(instance: Instance, layout: Layout) -> Tuple[np.ndarray, float]:
    """Brute-force minimum over all ``nc!`` arrangements (small nc only)."""
    nc = instance.nc
    if nc > 9:
        raise ValueError("exhaustive enumeration is limited to nc <= 9")
    perms = np.array(list(itertools.permutations(range(1, nc + 1))), dtype=np.int64)
    prio = instance.priorities()
    m = layout.rehandle_counts()
    values = (prio[perms - 1] * m).sum(axis=1)
    k = int(np.argmin(values))
    return perms[k], float(values[k])


def dump_arrangement(layout: Layout, arrangement: Sequence[int]) -> str:
    return "".join(f"{x} {y} {z} {int(c)}\n"
                   for (x, y, z), c in zip(layout.cells.tolist(), arrangement))


def to_grid(layout: Layout, arrangement: Sequence[int]) -> np.ndarray:
    """Full ``(n1, n2, n3)`` grid of container ids, 0 marking empty cells."""
    grid = np.zeros(layout.dims, dtype=np.int64)
    for (x, y, z), c in zip(layout.cells.tolist(), arrangement):
        grid[x - 1, y - 1, z - 1] = c
    return grid


class ContainerAdapter(ProblemAdapter):
    """Harmony-search view of an instance: one variable per occupied slot,
    every domain ``1..nc``."""

    CHUNK = 4096

    def __init__(self, instance: Instance):
        self.instance = instance
        self.layout = build_canonical_layout(instance)
        self.prio = instance.priorities()
        self.rehandle_counts = self.layout.rehandle_counts()
        self._domain = np.arange(1, instance.nc + 1, dtype=np.int64)

    @property
    def variable_count(self) -> int:
        return self.instance.nc

    def domain(self, i):
        return self._domain

    def index_of(self, i, value):
        return int(value) - 1

    def random_feasible(self, rng):
        return rng.permutation(self.instance.nc).astype(np.int64) + 1

    def repair(self, vector, rng):
        return repair_permutation(vector)

    def is_feasible(self, vector):
        return is_permutation(vector, self.instance.nc)

    def fitness(self, vector):
        return float(kernels.fitness_seq(self.prio, self.rehandle_counts,
                                         np.asarray(vector, dtype=np.int64)))

    def place_adjusted(self, vector, i, original, adjusted):
        kernels.place_swapped(vector, i, original, adjusted)

    def swap_neighbor(self, arrangement, container: int, step: int) -> np.ndarray:
        """Exchange the slots of ``container`` and ``container + step``."""
        out = np.array(arrangement, dtype=np.int64)
        other = container + step
        if not 1 <= other <= self.instance.nc:
            return out
        a = int(np.flatnonzero(out == container)[0])
        b = int(np.flatnonzero(out == other)[0])
        out[a], out[b] = other, container
        return out

    def run_kernel(self, memory: HarmonyMemory, params: EngineParams,
                   rng: np.random.Generator) -> RunTrace:
        vectors = np.ascontiguousarray(memory.vectors, dtype=np.int64)
        fit = np.ascontiguousarray(memory.fitness, dtype=np.float64)
        limit = params.max_improvisations
        stag_limit = -1 if params.stagnation_limit is None else params.stagnation_limit
        best = float(fit.min())
        chunks = [np.array([best])]
        stagnation = 0
        accepted = 0
        total = 0
        while True:
            remaining = -1 if limit is None else limit - total
            buf = np.empty(self.CHUNK, dtype=np.float64)
            count, stagnation, best, acc, done = kernels.hs_run_chunk(
                vectors, fit, self.prio, self.rehandle_counts,
                float(params.hmcr), float(params.par), remaining, stag_limit,
                stagnation, best, buf, rng)
            chunks.append(buf[:count])
            total += count
            accepted += acc
            if done:
                break
        memory.vectors = vectors
        memory.fitness = fit
        memory.worst_index = int(np.argmax(fit))
        return RunTrace(
            history=np.concatenate(chunks),
            best=vectors[memory.best_index].copy(),
            iterations=total,
            evaluations=len(memory) + total,
            accepted=accepted,
        )


def make_adapter(instance: Instance) -> ContainerAdapter:
    return ContainerAdapter(instance)
