"""Exit criteria, one test per criterion; each prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""

import time

import numpy as np
import pytest

from conftest import random_instance
from portstow.bench import (generate_instance, preset, row_seed, run_experiment,
                            summarize, verify_oracle)
from portstow.cli import main
from portstow.engine import (EngineParams, HarmonyMemory, improvise, init_memory,
                             memory_consideration, pitch_adjust_discrete, run)
from portstow.ga import (roulette_select, selection_weights, swap_mutation,
                         two_point_crossover)
from portstow.storage import check_constraints, is_permutation, make_adapter, oracle_optimal

pytestmark = pytest.mark.slow

HMCR, PAR = 0.95, 0.1


def within_4_sigma(hits, n, p):
    return abs(hits - n * p) <= 4 * np.sqrt(n * p * (1 - p))


def test_c01_oracle_equivalence(acceptance_report):
    t0 = time.perf_counter()
    total, failures = verify_oracle(seeds=20, tol=1e-9)
    elapsed = time.perf_counter() - t0
    ok = total >= 60 and not failures and elapsed < 10
    acceptance_report(1, ok, f"{total - len(failures)}/{total} instances match exhaustive "
                             f"minimum within 1e-9 in {elapsed:.2f} s (< 10 s)")
    assert ok


def test_c02_desk_scale_optimality(acceptance_report):
    make_adapter(generate_instance(2, 2, 2, 8, 0))  # keep compile time out of the clock
    run(make_adapter(generate_instance(2, 2, 2, 8, 0)),
        EngineParams(hms=30, stagnation_limit=None, max_improvisations=10))
    t0 = time.perf_counter()
    hits = 0
    for k in range(100):
        inst = generate_instance(2, 2, 2, 8, row_seed(2, 0, k))
        ad = make_adapter(inst)
        params = EngineParams(hms=30, hmcr=HMCR, par=PAR, stagnation_limit=None,
                              max_improvisations=50_000 - 30, seed=k)
        trace = run(ad, params)
        _, optimum = oracle_optimal(inst, ad.layout)
        hits += abs(trace.f_final - optimum) <= 1e-9
    elapsed = time.perf_counter() - t0
    ok = hits >= 95 and elapsed < 30
    acceptance_report(2, ok, f"HS hit the oracle optimum on {hits}/100 instances "
                             f"(need >= 95) in {elapsed:.2f} s (< 30 s)")
    assert ok


def test_c03_table1_trend(acceptance_report):
    t0 = time.perf_counter()
    rows = run_experiment(preset("table1", reps=30, base_seed=3))
    elapsed = time.perf_counter() - t0
    stats = summarize(rows)
    improving = {nc: stats[("hs", nc)]["mean_f_final"] < stats[("hs", nc)]["mean_f_initial"]
                 for nc in (64, 125, 343, 729, 1000)}
    median64 = stats[("hs", 64)]["median_improvement"]
    ok = all(improving.values()) and median64 >= 0.15 and elapsed < 300
    detail = ", ".join(f"{nc}:{'yes' if v else 'no'}" for nc, v in improving.items())
    acceptance_report(3, ok, f"mean F_f < mean F_i per Nc [{detail}]; median relative "
                             f"improvement at Nc=64 = {median64:.4f} (need >= 0.15); "
                             f"{elapsed:.1f} s (< 300 s)")
    assert ok


def test_c04_table2_trend(acceptance_report):
    rows = run_experiment(preset("table2", reps=30, base_seed=4, values=(20, 50, 100, 200)))
    stats = summarize(rows)
    limits = (20, 50, 100, 200)
    ff = [stats[("hs", s)]["mean_f_final"] for s in limits]
    ev = [stats[("hs", s)]["mean_evals"] for s in limits]
    nonincreasing = all(b <= a * 1.02 for a, b in zip(ff, ff[1:]))
    increasing = all(b > a for a, b in zip(ev, ev[1:]))
    ok = nonincreasing and increasing
    acceptance_report(4, ok, "mean F_f " + " -> ".join(f"{v:.4f}" for v in ff)
                      + " (nonincreasing within 2%), mean evals "
                      + " -> ".join(f"{v:.1f}" for v in ev) + " (strictly increasing)")
    assert ok


def test_c05_table3_trend(acceptance_report):
    rows = run_experiment(preset("table3", reps=30, base_seed=5))
    stats = summarize(rows)
    f20, f100 = stats[("hs", 20)]["mean_f_final"], stats[("hs", 100)]["mean_f_final"]
    ok = f100 <= f20
    acceptance_report(5, ok, f"mean F_f at HMS=100 {f100:.4f} <= HMS=20 {f20:.4f}")
    assert ok


def test_c06_hs_vs_ga(acceptance_report):
    rows = run_experiment(preset("table4", reps=30, base_seed=6))
    stats = summarize(rows)
    parts, ok = [], True
    for size in (20, 50, 75, 100, 125):
        hs, ga = stats[("hs", size)], stats[("ga", size)]
        better = hs["mean_f_final"] <= ga["mean_f_final"]
        ok &= better
        parts.append(f"{size}: HS {hs['mean_f_final']:.4f} vs GA {ga['mean_f_final']:.4f} "
                     f"(evals {hs['mean_evals']:.0f}/{ga['mean_evals']:.0f})"
                     f"{'' if better else ' X'}")
    acceptance_report(6, ok, "HS <= GA at every population size; " + "; ".join(parts))
    assert ok


def test_c07_feasibility(acceptance_report):
    rng = np.random.default_rng(7)
    hs_fail = hs_total = 0
    while hs_total < 10_000:
        inst = random_instance(rng, max_side=4)
        ad = make_adapter(inst)
        params = EngineParams(hms=10, hmcr=HMCR, par=PAR)
        mem = init_memory(ad, params, rng)
        for _ in range(200):
            x = improvise(mem, ad, params, rng)
            hs_fail += not (is_permutation(x, inst.nc) and check_constraints(inst, ad.layout))
            hs_total += 1
    ga_fail = ga_total = 0
    while ga_total < 10_000:
        inst = random_instance(rng, max_side=4)
        ad = make_adapter(inst)
        for _ in range(100):
            a, b = ad.random_feasible(rng), ad.random_feasible(rng)
            for child in two_point_crossover(a, b, rng):
                child = swap_mutation(child, rng) if rng.random() < 0.5 else child
                ga_fail += not (is_permutation(child, inst.nc)
                                and check_constraints(inst, ad.layout))
                ga_total += 1
    ok = hs_fail == 0 and ga_fail == 0
    acceptance_report(7, ok, f"{hs_total} HS improvisations, {hs_fail} infeasible; "
                             f"{ga_total} GA children, {ga_fail} infeasible")
    assert ok


def test_c08_probability_calibration(acceptance_report):
    n = 20_000
    rng = np.random.default_rng(8)
    ad = make_adapter(generate_instance(4, 4, 4, 64, 8))
    params = EngineParams(hms=50, hmcr=HMCR, par=PAR)
    mem = init_memory(ad, params, rng)
    considered = adjusted = 0
    for t in range(n):
        i = t % 64
        value, from_memory = memory_consideration(mem, i, ad, params, rng)
        considered += from_memory
        if from_memory:
            k = ad.index_of(i, value)
            # interior index so every fired adjustment is observable as a move
            k = min(max(k, 1), 62)
            adjusted += pitch_adjust_discrete(k, 64, params, rng) != k
    ok_hmcr = within_4_sigma(considered, n, HMCR)
    ok_par = within_4_sigma(adjusted, n, HMCR * PAR)

    fit = [0.0, 1.0, 2.5, 4.0, 4.0, 7.0]
    share = selection_weights(fit)
    picks = np.bincount([roulette_select(range(len(fit)), fit, rng) for _ in range(n)],
                        minlength=len(fit))
    ok_roulette = all(within_4_sigma(picks[j], n, share[j]) or share[j] < 1e-6 and picks[j] <= 1
                      for j in range(len(fit)))
    ok = ok_hmcr and ok_par and ok_roulette
    acceptance_report(8, ok, f"HMCR {considered / n:.4f} (target {HMCR}), HMCR*PAR "
                             f"{adjusted / n:.4f} (target {HMCR * PAR:.3f}), roulette "
                             f"{'within' if ok_roulette else 'outside'} 4 sigma over {n} draws each")
    assert ok


def test_c09_determinism(acceptance_report, tmp_path, capsys):
    outputs = []
    for run_id in ("a", "b"):
        csv_path, svg_path = tmp_path / f"{run_id}.csv", tmp_path / f"{run_id}.svg"
        code = main(["bench", "--experiment", "table1", "--reps", "3", "--seed", "7",
                     "--csv", str(csv_path), "--plot", str(svg_path)])
        assert code == 0
        outputs.append((csv_path.read_bytes(), svg_path.read_bytes()))
    capsys.readouterr()
    ok = outputs[0] == outputs[1]
    acceptance_report(9, ok, f"two table1 campaigns (reps 3, seed 7): CSV "
                             f"{'identical' if outputs[0][0] == outputs[1][0] else 'DIFFER'}, SVG "
                             f"{'identical' if outputs[0][1] == outputs[1][1] else 'DIFFER'}")
    assert ok


def test_c10_scale(acceptance_report):
    inst = generate_instance(10, 10, 10, 1000, 10)
    t0 = time.perf_counter()
    trace = run(make_adapter(inst), EngineParams(hms=50, hmcr=HMCR, par=PAR,
                                                 stagnation_limit=20, seed=10))
    elapsed = time.perf_counter() - t0
    ok = elapsed < 60 and trace.f_final <= trace.f_initial
    acceptance_report(10, ok, f"Nc=1000 HS run: {trace.iterations} improvisations in "
                              f"{elapsed:.2f} s (< 60 s)")
    assert ok
