"""Compare the numba and pure-numpy backends on the hot paths.

The backend is fixed at import time by ``OHMOPT_BACKEND``, so each backend is
timed in its own subprocess.  Besides wall time the script checks that both
backends produce the same results for the same seeds.

    python benchmarks/bench_backends.py [--nfe 30000] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from ohmopt import _backend
from ohmopt.benchmarks import make_benchmark
from ohmopt.core import Budget, make_rng
from ohmopt.ohm import ohm_run
from ohmopt.wcsp import power_iteration_pencil

nfe, repeat = int(sys.argv[1]), int(sys.argv[2])
out = {"backend": _backend.BACKEND}

def best_of(fn):
    fn()  # warm-up (JIT compilation, caches)
    ts = []
    for _ in range(repeat):
        t = time.perf_counter(); r = fn(); ts.append(time.perf_counter() - t)
    return min(ts), r

p = make_benchmark("F9", 3)
X = make_rng(1, 0).uniform(-5.12, 5.12, (100000, 3))
out["batch_eval_s"], v = best_of(lambda: p.batch_cost(X))
out["batch_eval_sum"] = float(np.sum(v))

for variant in ("OHMPSO", "OHMICA"):
    t, r = best_of(lambda: ohm_run(p, Budget(nfe), variant, rng=make_rng(7, 0)))
    out[f"{variant}_s"] = t
    out[f"{variant}_best"] = r.best_cost

rng = make_rng(3, 0)
G = rng.standard_normal((16, 32)); H = rng.standard_normal((16, 32))
A, B = G @ G.T, H @ H.T + 16 * np.eye(16)
out["power_s"], (lam, _) = best_of(lambda: [power_iteration_pencil(A, B, 100) for _ in range(2000)][-1])
out["power_lambda"] = lam
print(json.dumps(out))
"""


def run_backend(name, nfe, repeat):
    env = dict(os.environ, OHMOPT_BACKEND=name)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(nfe), str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nfe", type=int, default=30000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    res = {b: run_backend(b, args.nfe, args.repeat) for b in ("numba", "numpy")}
    nb, npy = res["numba"], res["numpy"]
    if nb["backend"] != "numba":
        print("numba is not installed; only the numpy backend is available")
    print(f"{'task':<28}{'numba [s]':>12}{'numpy [s]':>12}{'speed-up':>10}")
    for key, label in [("batch_eval_s", "Rastrigin 1e5 evaluations"),
                       ("OHMPSO_s", f"OHMPSO run, {args.nfe} NFE"),
                       ("OHMICA_s", f"OHMICA run, {args.nfe} NFE"),
                       ("power_s", "2000 pencil solves (16x16)")]:
        print(f"{label:<28}{nb[key]:>12.4f}{npy[key]:>12.4f}{npy[key] / nb[key]:>9.1f}x")
    print("\nparity (same seeds):")
    ok = True
    for key in ("batch_eval_sum", "OHMPSO_best", "OHMICA_best", "power_lambda"):
        a, b = nb[key], npy[key]
        same = abs(a - b) <= 1e-9 * max(1.0, abs(a))
        ok &= same
        print(f"  {key:<16} numba={a:.12g} numpy={b:.12g} {'ok' if same else 'MISMATCH'}")
    print(f"\ntotal {time.perf_counter() - t0:.1f}s")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
