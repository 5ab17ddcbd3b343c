"""Time the compiled kernels against the numpy fallback.

Each mode runs in its own interpreter (the JIT switch is read at import).
The workload is solved once untimed to absorb compilation, then timed; the
two modes must produce identical traces.

    python benchmarks/bench_jit.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import hashlib, json, sys, time
from portstow import JIT_ENABLED
from portstow.bench import generate_instance
from portstow.engine import EngineParams, run
from portstow.ga import GAParams, run_ga
from portstow.storage import make_adapter

repeat = int(sys.argv[1])
cases = [("hs nc=125 stag=100", 5, 125), ("hs nc=343 stag=100", 7, 343),
         ("hs nc=1000 stag=20", 10, 1000), ("ga nc=125 evals=2000", 5, 125)]

def solve(label, side, nc, seed):
    inst = generate_instance(side, side, side, nc, seed)
    if label.startswith("ga"):
        return run_ga(inst, GAParams(population_size=50, max_evals=2000, seed=seed))
    stag = 20 if nc == 1000 else 100
    return run(make_adapter(inst), EngineParams(hms=50, stagnation_limit=stag, seed=seed))

out = {"jit": JIT_ENABLED, "cases": []}
for label, side, nc in cases:
    solve(label, side, nc, 0)
    digest = hashlib.sha256()
    t0 = time.perf_counter()
    for seed in range(1, repeat + 1):
        tr = solve(label, side, nc, seed)
        digest.update(tr.history.tobytes() + tr.best.tobytes())
    out["cases"].append([label, (time.perf_counter() - t0) / repeat, digest.hexdigest()])
json.dump(out, sys.stdout)
"""


def measure(flag, repeat):
    env = dict(os.environ, PORTSTOW_JIT=flag)
    res = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    jit = measure("1", args.repeat)
    plain = measure("0", args.repeat)
    print(f"{'workload':<24}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  same")
    for (label, t_jit, h_jit), (_, t_np, h_np) in zip(jit["cases"], plain["cases"]):
        print(f"{label:<24}{t_jit:>10.4f}{t_np:>10.4f}{t_np / t_jit:>8.1f}x  {h_jit == h_np}")
    if not jit["jit"]:
        print("warning: numba unavailable, both columns ran the fallback")


if __name__ == "__main__":
    main()
