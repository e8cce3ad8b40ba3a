"""Command-line harness: single runs, the two trade-off sweeps, a self test,
and a backend benchmark."""
from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import SystemConfig, load_config
from .controller import Strategy
from .simulate import (
    SweepSpec,
    run_simulation,
    sweep_fig1,
    sweep_fig2,
    write_manifest,
)


def _float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _build_config(args) -> SystemConfig:
    if args.config:
        return load_config(args.config)
    return SystemConfig()


def _build_strategy(name: str, args) -> Strategy:
    if name == "optimized":
        return Strategy(
            ris_mode="optimized",
            knowledge_mode=args.knowledge,
            phase_bits=args.phase_bits,
        )
    return Strategy(ris_mode=name)


def _add_common(parser):
    parser.add_argument("--config", type=Path, default=None, help="key=value config file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--slots", type=int, default=5000)
    parser.add_argument(
        "--strategy",
        default="optimized",
        help="comma-separated subset of optimized,random,absent",
    )
    parser.add_argument("--knowledge", choices=("instantaneous", "statistical"),
                        default="instantaneous")
    parser.add_argument("--phase-bits", type=int, default=0)
    parser.add_argument("--backend", choices=("python", "cython"), default=None)


def _add_sweep_args(parser):
    parser.add_argument("--v", type=_float_list, default=None,
                        help="comma-separated Lyapunov V values")
    parser.add_argument("--p-direct", type=_float_list, default=None,
                        help="comma-separated direct-link blocking probabilities")
    parser.add_argument("--seeds", type=int, default=3, help="seeds per sweep point")
    parser.add_argument("--delay-target", type=float, default=0.150,
                        help="E2E delay target in seconds (fig2)")


def cmd_run(args) -> int:
    config = _build_config(args)
    if getattr(args, "v", None):
        config = config.replace(lyapunov_v=args.v[0])
    if getattr(args, "p_direct", None) is not None:
        config = config.replace(block_prob_direct=args.p_direct[0])
    strategy = _build_strategy(args.strategy.split(",")[0], args)
    log = run_simulation(config, strategy, args.seed, args.slots, args.backend)
    print(f"strategy={strategy.label()} slots={args.slots} seed={args.seed}")
    print(f"mean power   : {1e3 * log.mean_power():.6g} mW")
    try:
        print(f"mean delay   : {1e3 * log.mean_delay():.6g} ms")
    except ValueError:
        print("mean delay   : undefined (users without arrivals)")
    print(f"queues stable: {log.plateau_stable()}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        _write_run_csv(args.out / "run.csv", log)
        write_manifest(args.out, config, args.seed, {"command": "run",
                                                     "strategy": strategy.label()})
        print(f"wrote {args.out / 'run.csv'}")
    return 0


def _write_run_csv(path: Path, log):
    cols = ("slot", "user", "rate_bps", "tx_power_w", "local_bits", "remote_bits",
            "cpu_hz", "arrivals_bits", "blocked_direct", "blocked_indirect",
            "lyapunov", "dpp")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        n = log.rates.shape[1]
        f = lambda x: repr(float(x))
        for t in range(log.n_slots):
            for u in range(n):
                writer.writerow([
                    t, u, f(log.rates[t, u]), f(log.tx_power[t, u]),
                    f(log.local[t, u]), f(log.remote[t, u]),
                    f(log.cpu[t, u]), f(log.arrivals[t, u]),
                    int(log.direct_blocked[t, u]), int(log.indirect_blocked[t, u]),
                    f(log.lyapunov[t]), f(log.dpp[t]),
                ])


def _make_spec(args, config) -> SweepSpec:
    kwargs = {"slots": args.slots, "seeds": args.seeds,
              "delay_target": args.delay_target}
    if args.v:
        kwargs["v_values"] = args.v
    if args.p_direct is not None:
        kwargs["p_direct_values"] = args.p_direct
    strategies = [_build_strategy(s.strip(), args) for s in args.strategy.split(",")]
    return SweepSpec(strategies=strategies, **kwargs)


def cmd_sweep_fig1(args) -> int:
    config = _build_config(args)
    path = sweep_fig1(_make_spec(args, config), config, args.out, args.seed, args.backend)
    print(f"wrote {path}")
    return 0


def cmd_sweep_fig2(args) -> int:
    config = _build_config(args)
    path = sweep_fig2(_make_spec(args, config), config, args.out, args.seed, args.backend)
    print(f"wrote {path}")
    return 0


def cmd_selftest(args) -> int:
    """Quick oracle and invariant suite; prints one line per check."""
    from . import selftest

    return selftest.run_selftest()


def cmd_bench(args) -> int:
    from . import backend as backend_mod

    config = SystemConfig(num_users=3, ris_elements=16, block_prob_direct=0.5)
    strategy = Strategy()
    results = {}
    for name in backend_mod.available_backends():
        start = time.perf_counter()
        run_simulation(config, strategy, args.seed, args.slots, backend=name)
        elapsed = time.perf_counter() - start
        results[name] = elapsed
        print(f"{name:8s}: {args.slots / elapsed:9.1f} slots/s ({elapsed:.2f} s)")
    if len(results) == 2:
        print(f"speedup : {results['python'] / results['cython']:.1f}x")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rismec",
        description="RIS-assisted MEC offloading simulator",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation run")
    _add_common(p_run)
    p_run.add_argument("--v", type=_float_list, default=None,
                       help="Lyapunov V override (first value used)")
    p_run.add_argument("--p-direct", type=_float_list, default=None,
                       help="direct-link blocking probability override")
    p_run.set_defaults(func=cmd_run)

    p_f1 = sub.add_parser("sweep-fig1", help="delay-power trade-off sweep")
    _add_common(p_f1)
    _add_sweep_args(p_f1)
    p_f1.set_defaults(func=cmd_sweep_fig1)

    p_f2 = sub.add_parser("sweep-fig2", help="power-at-delay-target vs blocking sweep")
    _add_common(p_f2)
    _add_sweep_args(p_f2)
    p_f2.set_defaults(func=cmd_sweep_fig2)

    p_self = sub.add_parser("selftest", help="oracle and invariant checks")
    p_self.set_defaults(func=cmd_selftest)

    p_bench = sub.add_parser("bench", help="compare kernel backends")
    p_bench.add_argument("--slots", type=int, default=200)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.set_defaults(func=cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
