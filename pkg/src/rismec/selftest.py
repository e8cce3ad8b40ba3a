"""Compact oracle and invariant suite behind the ``selftest`` CLI command."""
from __future__ import annotations

import numpy as np

from . import backend as backend_mod
from .config import SystemConfig
from .controller import Strategy
from .oracles import covariance_oracle, fd_gradient, lp_cpu_oracle, radio_objective
from .precoder import optimize_covariance, wf_objective
from .queues import QueueState, update_local_queue, update_remote_queue
from .ris import gradient_wrt_ris
from .scheduler import allocate_cpu
from .simulate import run_simulation
from .testing import random_radio_instance


def _check_gradient(rng) -> bool:
    inst = random_radio_instance(rng, n_users=2, ap_antennas=2, user_antennas=2, ris_elements=4)
    grad = gradient_wrt_ris(
        inst.queues, inst.triples, inst.effective, inst.covariances, inst.config
    )
    analytic = 2.0 * np.concatenate([grad.real, grad.imag])
    fd = fd_gradient(inst.objective, inst.ris.reflection)
    cos = float(analytic @ fd / (np.linalg.norm(analytic) * np.linalg.norm(fd)))
    return cos >= 0.999


def _check_waterfill(rng) -> bool:
    inst = random_radio_instance(rng, n_users=1, ap_antennas=3, user_antennas=3, ris_elements=4)
    inp = inst.precoder_inputs()[0]
    res = optimize_covariance(inp)
    ours = wf_objective(inp, res.covariance)
    best = covariance_oracle(inp)
    scale = max(1.0, abs(best))
    return ours <= best + 1e-6 * scale and res.tx_power <= inp.max_power + 1e-9


def _check_cpu(rng) -> bool:
    n = 4
    b_r = rng.uniform(0, 1e5, n)
    j = rng.uniform(100, 1000, n)
    alloc = allocate_cpu(b_r, j, 4.5e9, 0.01)
    ours = float(np.sum(b_r * alloc.frequencies / j))
    best = lp_cpu_oracle(b_r, j, 4.5e9, 0.01)
    return abs(ours - best) <= 1e-9 * max(1.0, abs(best))


def _check_queues() -> bool:
    state = QueueState(local=np.array([1000.0]), remote=np.array([500.0]))
    state, transferred = update_local_queue(state, np.array([40e3]), np.array([50.0]), 0.01)
    if not (state.local[0] == 650.0 and transferred[0] == 400.0):
        return False
    state = update_remote_queue(state, np.array([1e7]), np.array([500.0]), transferred, 0.01)
    return state.remote[0] == 500.0 - 200.0 + 400.0


def _check_determinism() -> bool:
    config = SystemConfig(num_users=2, ris_elements=8, pgm_iterations=5)
    a = run_simulation(config, Strategy(), seed=7, n_slots=20)
    b = run_simulation(config, Strategy(), seed=7, n_slots=20)
    return (
        np.array_equal(a.rates, b.rates)
        and np.array_equal(a.local, b.local)
        and np.array_equal(a.tx_power, b.tx_power)
    )


def _check_backends(rng) -> bool:
    if "cython" not in backend_mod.available_backends():
        return True
    inst = random_radio_instance(rng, n_users=2, ap_antennas=3, user_antennas=2, ris_elements=6)
    out = {}
    for name in ("python", "cython"):
        kern = backend_mod.make_kernel(2, 3, 2, 6, backend=name)
        out[name] = kern.solve(*inst.kernel_args())
    r_ok = np.allclose(out["python"][0], out["cython"][0], atol=1e-8)
    q_ok = np.allclose(out["python"][1], out["cython"][1], atol=1e-10)
    f_ok = np.allclose(out["python"][2][-1], out["cython"][2][-1], rtol=1e-9, atol=1e-6)
    return r_ok and q_ok and f_ok


def run_selftest() -> int:
    rng = np.random.default_rng(2024)
    checks = [
        ("gradient vs finite differences", lambda: _check_gradient(rng)),
        ("water-filling vs simplex oracle", lambda: _check_waterfill(rng)),
        ("greedy CPU vs LP oracle", lambda: _check_cpu(rng)),
        ("queue recursion hand trace", _check_queues),
        ("run determinism", _check_determinism),
        ("backend equivalence", lambda: _check_backends(rng)),
    ]
    failures = 0
    for name, fn in checks:
        try:
            ok = fn()
        except Exception as exc:  # pragma: no cover - defensive
            ok = False
            name = f"{name} ({exc})"
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1
    return 1 if failures else 0
