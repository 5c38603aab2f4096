"""The numba kernels and their numpy fallbacks must agree.

The backend is chosen at import time, so each one runs in its own interpreter.
"""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

PROBE = r"""
import json
import numpy as np
from ohmopt import _backend
from ohmopt.benchmarks import make_benchmark
from ohmopt.core import Budget, make_rng
from ohmopt.ohm import ohm_run
from ohmopt.swarm import pso_run
from ohmopt.wcsp import synth_trials, wcsp_cost, power_iteration_pencil

out = {"backend": _backend.BACKEND}
X = make_rng(0).uniform(-5, 5, (500, 3))
out["batch"] = {f: make_benchmark(f, 3 if f != "F4" else 2).batch_cost(X[:, :3 if f != "F4" else 2]).tolist()
                for f in ("F1", "F4", "F7", "F9", "F10", "F12", "F13")}
out["ohmpso"] = ohm_run(make_benchmark("F9", 3), Budget(3000), "OHMPSO", rng=make_rng(4)).best_cost
out["ohmica"] = ohm_run(make_benchmark("F10", 3), Budget(3000), "OHMICA", rng=make_rng(5)).best_cost
out["pso"] = pso_run(make_benchmark("F12", 3), Budget(2000), rng=make_rng(6)).best_cost
T = synth_trials(1, 6, 5, 300)
r = make_rng(7)
out["wcsp"] = [wcsp_cost(T, r.random(6), r.random(6)) for _ in range(20)]
G = r.standard_normal((6, 12))
out["power"] = power_iteration_pencil(G @ G.T, np.eye(6) + 0.1 * G @ G.T, 50)[0]
print(json.dumps(out))
"""


def probe(backend):
    env = dict(os.environ, OHMOPT_BACKEND=backend)
    proc = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


@pytest.fixture(scope="module")
def results():
    return probe("numba"), probe("numpy")


def test_env_var_respected(results):
    nb, npy = results
    assert nb["backend"] == "numba" and npy["backend"] == "numpy"


def test_batch_costs_agree(results):
    nb, npy = results
    for f in nb["batch"]:
        np.testing.assert_allclose(nb["batch"][f], npy["batch"][f], rtol=1e-12, atol=1e-12, err_msg=f)


def test_runs_agree(results):
    nb, npy = results
    for key in ("ohmpso", "ohmica", "pso", "power"):
        np.testing.assert_allclose(nb[key], npy[key], rtol=1e-9, atol=1e-12, err_msg=key)
    np.testing.assert_allclose(nb["wcsp"], npy["wcsp"], rtol=1e-9)


def test_bad_backend_rejected():
    env = dict(os.environ, OHMOPT_BACKEND="fortran")
    proc = subprocess.run([sys.executable, "-c", "import ohmopt"], env=env, capture_output=True, text=True)
    assert proc.returncode != 0 and "OHMOPT_BACKEND" in proc.stderr
