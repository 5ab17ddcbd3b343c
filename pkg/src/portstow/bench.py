"""Seeded instance generation and experiment campaigns.

Each campaign row gets a solver seed from ``(base_seed, sweep_index,
replication_index)`` through splitmix64; its instance is seeded from
``(base_seed, nc, replication_index)``.  Adding replications or sweep points
never changes rows that already exist.  Output bytes depend only on
the :class:`ExperimentSpec`.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .engine import EngineParams, run
from .ga import GAParams, run_ga
from .storage import (Instance, build_canonical_layout, exhaustive_optimal,
                      make_adapter, oracle_optimal)

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
DATE_RANGE = (1, 365)
CSV_HEADER = ["experiment", "param", "value", "seed", "f_initial", "f_final", "evals", "ms"]
KINDS = ("table1", "table2", "table3", "table4", "fig6", "single")


class UsageError(ValueError):
    pass


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def row_seed(base_seed: int, sweep_index: int, replication: int) -> int:
    """``splitmix64(splitmix64(splitmix64(base) ^ sweep) ^ replication)``."""
    h = splitmix64(base_seed & MASK64)
    h = splitmix64(h ^ sweep_index)
    return splitmix64(h ^ replication)


def instance_seed(base_seed: int, nc: int, replication: int) -> int:
    """Instances depend on the container count, not on solver parameters, so
    every point of an HMS or stagnation sweep sees the same instances."""
    h = splitmix64(splitmix64(base_seed & MASK64) ^ (nc << 20))
    return splitmix64(h ^ replication)


def generate_instance(n1: int, n2: int, n3: int, nc: int, seed: int) -> Instance:
    """Delivery dates uniform on 1..365, deterministic in ``seed``."""
    capacity = n1 * n2 * n3
    if nc > capacity:
        raise UsageError(f"nc={nc} exceeds bay capacity {capacity} ({n1}x{n2}x{n3})")
    if nc < 1:
        raise UsageError("nc must be >= 1")
    rng = np.random.default_rng(seed)
    dates = rng.integers(DATE_RANGE[0], DATE_RANGE[1] + 1, size=nc)
    return Instance(n1, n2, n3, tuple(int(d) for d in dates))


def cube_side(nc: int) -> int:
    side = max(1, round(nc ** (1.0 / 3.0)))
    while side ** 3 < nc:
        side += 1
    return side


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    param: str
    values: Tuple[int, ...]
    fixed: Dict[str, float] = field(default_factory=dict)
    reps: int = 30
    base_seed: int = 0
    algorithms: Tuple[str, ...] = ("hs",)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown experiment {self.kind!r}")
        if not self.values:
            raise UsageError("experiment sweep is empty")
        if self.reps < 1:
            raise UsageError("replications must be >= 1")

    def point(self, value) -> Dict[str, float]:
        params = dict(self.fixed)
        params[self.param] = value
        return params


PRESETS = {
    "table1": dict(param="nc", values=(64, 125, 343, 729, 1000),
                   fixed={"hms": 50, "stagnation": 20}),
    "table2": dict(param="stagnation", values=(20, 50, 100, 150, 175, 200),
                   fixed={"nc": 64, "hms": 50}),
    "table3": dict(param="hms", values=(20, 50, 75, 100, 125),
                   fixed={"nc": 125, "stagnation": 100}),
    "table4": dict(param="population", values=(20, 50, 75, 100, 125),
                   fixed={"nc": 125, "stagnation": 100}, algorithms=("hs", "ga")),
    "fig6": dict(param="nc", values=(64, 125, 343, 729, 1000),
                 fixed={"hms": 50, "stagnation": 20}, algorithms=("hs", "ga")),
}


def preset(kind: str, reps: int = 30, base_seed: int = 0, **overrides) -> ExperimentSpec:
    if kind not in PRESETS:
        raise UsageError(f"no preset for experiment {kind!r}")
    fields = dict(PRESETS[kind])
    fields["fixed"] = dict(fields["fixed"])
    fields.update(overrides)
    return ExperimentSpec(kind=kind, reps=reps, base_seed=base_seed, **fields)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    param: str
    value: int
    seed: int
    f_initial: float
    f_final: float
    evals: int
    ms: Optional[float] = None

    @property
    def algorithm(self) -> str:
        return self.experiment.rsplit("-", 1)[-1]

    def rounded(self, timing: bool = True) -> "ResultRow":
        """The row as it reads back from CSV."""
        return replace(self,
                       f_initial=float(f"{self.f_initial:.6f}"),
                       f_final=float(f"{self.f_final:.6f}"),
                       ms=float(f"{self.ms:.6f}") if timing and self.ms is not None else None)


def _solve_point(spec: ExperimentSpec, sweep_index: int, replication: int) -> List[ResultRow]:
    point = spec.point(spec.values[sweep_index])
    nc = int(point["nc"])
    side = cube_side(nc)
    seed = row_seed(spec.base_seed, sweep_index, replication)
    value = int(spec.values[sweep_index])
    instance = generate_instance(side, side, side, nc, instance_seed(spec.base_seed, nc, replication))
    size = int(point["hms"] if "hms" in point else point["population"])
    rows = []

    t0 = time.perf_counter()
    params = EngineParams(hms=size,
                          hmcr=float(point.get("hmcr", 0.95)),
                          par=float(point.get("par", 0.1)),
                          stagnation_limit=int(point["stagnation"]),
                          seed=splitmix64(seed ^ 1))
    hs = run(make_adapter(instance), params)
    rows.append(ResultRow(f"{spec.kind}-hs", spec.param, value, seed, hs.f_initial,
                          hs.f_final, hs.evaluations, (time.perf_counter() - t0) * 1e3))

    if "ga" in spec.algorithms:
        t0 = time.perf_counter()
        ga_params = GAParams(population_size=size,
                             crossover_rate=float(point.get("crossover_rate", 0.9)),
                             mutation_rate=float(point.get("mutation_rate", 0.1)),
                             max_evals=hs.evaluations,
                             stagnation_limit=1 if size == 1 else None,
                             seed=splitmix64(seed ^ 2))
        ga = run_ga(instance, ga_params)
        rows.append(ResultRow(f"{spec.kind}-ga", spec.param, value, seed, ga.f_initial,
                              ga.f_final, ga.evaluations, (time.perf_counter() - t0) * 1e3))
    return rows


def _solve_task(task):
    spec, si, ri = task
    try:
        return _solve_point(spec, si, ri)
    except Exception as exc:  # one failed row must not sink the campaign
        log.error("row (%s, sweep %d, rep %d) failed: %s", spec.kind, si, ri, exc)
        seed = row_seed(spec.base_seed, si, ri)
        return [ResultRow(f"{spec.kind}-{algo}", spec.param, int(spec.values[si]), seed,
                          math.nan, math.nan, 0, None) for algo in spec.algorithms]


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> List[ResultRow]:
    """All rows, in sweep order then replication order."""
    tasks = [(spec, si, ri) for si in range(len(spec.values)) for ri in range(spec.reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_solve_task, tasks))
    else:
        chunks = [_solve_task(t) for t in tasks]
    return list(itertools.chain.from_iterable(chunks))


def summarize(rows: Iterable[ResultRow]) -> Dict[Tuple[str, int], Dict[str, float]]:
    """Mean/median statistics per (algorithm, swept value)."""
    groups: Dict[Tuple[str, int], List[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.algorithm, r.value), []).append(r)
    out = {}
    for key, rs in groups.items():
        fi = np.array([r.f_initial for r in rs])
        ff = np.array([r.f_final for r in rs])
        rel = np.where(fi > 0, (fi - ff) / np.where(fi > 0, fi, 1.0), 0.0)
        out[key] = {
            "n": len(rs),
            "mean_f_initial": float(np.nanmean(fi)),
            "mean_f_final": float(np.nanmean(ff)),
            "median_improvement": float(np.nanmedian(rel)),
            "mean_evals": float(np.mean([r.evals for r in rs])),
        }
    return out


# ---------------------------------------------------------------------------
# CSV

def _fmt(x: float) -> str:
    return f"{x:.6f}"


def format_csv(rows: Sequence[ResultRow], timing: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        ms = _fmt(r.ms) if timing and r.ms is not None else ""
        writer.writerow([r.experiment, r.param, r.value, r.seed, _fmt(r.f_initial),
                         _fmt(r.f_final), r.evals, ms])
    return buf.getvalue()


def emit_csv(rows: Sequence[ResultRow], path: Union[str, Path], timing: bool = False) -> None:
    """Write rows; wall time is only written with ``timing`` so that
    untimed campaigns stay byte-reproducible."""
    if not rows:
        raise UsageError("no rows to write")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(rows, timing))


def read_csv(path: Union[str, Path]) -> List[ResultRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [ResultRow(rec["experiment"], rec["param"], int(rec["value"]),
                          int(rec["seed"]), float(rec["f_initial"]), float(rec["f_final"]),
                          int(rec["evals"]), float(rec["ms"]) if rec["ms"] else None)
                for rec in reader]


# ---------------------------------------------------------------------------
# SVG

SERIES_COLORS = {"hs": "#1f77b4", "ga": "#d62728"}
TITLES = {
    "table1": "Final fitness vs container count",
    "table2": "Final fitness vs stagnation limit",
    "table3": "Final fitness vs harmony memory size",
    "table4": "Final fitness vs population size (matched evaluations)",
    "fig6": "HS vs GA by container count (matched evaluations)",
    "single": "Final fitness",
}


def _nice_ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0 if lo == 0 else lo + abs(lo) * 0.5
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 10))
        t += step
    if ticks[-1] < hi:
        ticks.append(round(t, 10))
    return ticks


def render_svg(rows: Sequence[ResultRow]) -> str:
    if not rows:
        raise UsageError("no rows to plot")
    stats = summarize(rows)
    algos = [a for a in ("hs", "ga") if any(k[0] == a for k in stats)]
    algos += sorted({k[0] for k in stats} - set(algos))
    xs = sorted({k[1] for k in stats})
    ys = [v["mean_f_final"] for v in stats.values() if not math.isnan(v["mean_f_final"])]
    kind = rows[0].experiment.rsplit("-", 1)[0]
    param = rows[0].param

    width, height = 640, 400
    left, right, top, bottom = 80, 110, 50, 60
    pw, ph = width - left - right, height - top - bottom
    yticks = _nice_ticks(min(ys) if ys else 0.0, max(ys) if ys else 1.0)
    y0, y1 = yticks[0], yticks[-1]

    def sx(v):
        if len(xs) == 1:
            return left + pw / 2
        return left + (v - xs[0]) / (xs[-1] - xs[0]) * pw

    def sy(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{left + pw / 2:.2f}" y="28" text-anchor="middle" font-size="15">'
        f'{TITLES.get(kind, kind)}</text>',
    ]
    for t in yticks:
        y = sy(t)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" '
                   f'stroke="#e0e0e0"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{t:g}</text>')
    for v in xs:
        x = sx(v)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" '
                   f'stroke="#333333"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 20}" text-anchor="middle">{v}</text>')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" '
               f'stroke="#333333"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#333333"/>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 15}" text-anchor="middle">'
               f'{param}</text>')
    out.append(f'<text x="20" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 20 {top + ph / 2:.2f})">mean final fitness</text>')

    for n, algo in enumerate(algos):
        color = SERIES_COLORS.get(algo, "#2ca02c")
        pts = [(sx(v), sy(stats[(algo, v)]["mean_f_final"])) for v in xs
               if (algo, v) in stats and not math.isnan(stats[(algo, v)]["mean_f_final"])]
        if len(pts) > 1:
            path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                       f'stroke-width="2"/>')
        for x, y in pts:
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="{color}"/>')
        ly = top + 10 + 20 * n
        out.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 40}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 46}" y="{ly + 4}">{algo.upper()}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(rows: Sequence[ResultRow], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_svg(rows))


# ---------------------------------------------------------------------------
# oracle suite

def small_instances(seeds: int = 20) -> List[Instance]:
    """Every bay with sides <= 2 and every fill level, dates drawn per seed.

    Odd seeds draw dates from 1..4 so that equal priorities are common.
    """
    out = []
    for n1, n2, n3 in itertools.product((1, 2), repeat=3):
        for nc in range(1, n1 * n2 * n3 + 1):
            for s in range(seeds):
                rng = np.random.default_rng(row_seed(s, n1 * 100 + n2 * 10 + n3, nc))
                high = 4 if s % 2 else DATE_RANGE[1]
                dates = rng.integers(1, high + 1, size=nc)
                out.append(Instance(n1, n2, n3, tuple(int(d) for d in dates)))
    return out


def verify_oracle(seeds: int = 20, tol: float = 1e-9) -> Tuple[int, List[Instance]]:
    """Compare the sorting oracle with exhaustive enumeration."""
    failures = []
    instances = small_instances(seeds)
    for inst in instances:
        layout = build_canonical_layout(inst)
        _, fast = oracle_optimal(inst, layout)
        _, brute = exhaustive_optimal(inst, layout)
        if abs(fast - brute) > tol:
            failures.append(inst)
    return len(instances), failures
