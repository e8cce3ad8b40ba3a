#!/usr/bin/env python3
"""Compare the compiled and pure-numpy slot kernels.

Times the raw kernel on one representative slot problem and then a full
simulation loop, at the desk scale (N=3, M=16) and the reference scale
(N=6, M=64).
"""
import time

import numpy as np

from rismec import Strategy, SystemConfig, run_simulation
from rismec import backend as backend_mod
from rismec.testing import random_radio_instance


def time_kernel(backend: str, n, na, k, m, repeats=200) -> float:
    rng = np.random.default_rng(0)
    inst = random_radio_instance(rng, n_users=n, ap_antennas=na, user_antennas=k,
                                 ris_elements=m)
    kern = backend_mod.make_kernel(n, na, k, m, backend=backend)
    args = inst.kernel_args()
    kern.solve(*args)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        kern.solve(*args)
    return (time.perf_counter() - start) / repeats


def time_simulation(backend: str, config: SystemConfig, slots=200) -> float:
    start = time.perf_counter()
    run_simulation(config, Strategy(), seed=0, n_slots=slots, backend=backend)
    return slots / (time.perf_counter() - start)


def main():
    backends = backend_mod.available_backends()
    print(f"available backends: {', '.join(backends)}\n")

    print("raw kernel, one slot (alternating loop, 20 iterations max):")
    for n, na, k, m in ((3, 4, 4, 16), (6, 4, 4, 64)):
        times = {b: time_kernel(b, n, na, k, m) for b in backends}
        line = "  ".join(f"{b}: {1e6 * t:8.1f} us" for b, t in times.items())
        extra = (f"  ({times['python'] / times['cython']:.1f}x)"
                 if len(times) == 2 else "")
        print(f"  N={n} M={m:3d}:  {line}{extra}")

    print("\nfull simulation loop (slots/s):")
    for n, m in ((3, 16), (6, 64)):
        config = SystemConfig(num_users=n, ris_elements=m, block_prob_direct=0.5)
        rates = {b: time_simulation(b, config) for b in backends}
        line = "  ".join(f"{b}: {r:8.1f}" for b, r in rates.items())
        extra = (f"  ({rates['cython'] / rates['python']:.1f}x)"
                 if len(rates) == 2 else "")
        print(f"  N={n} M={m:3d}:  {line}{extra}")


if __name__ == "__main__":
    main()
