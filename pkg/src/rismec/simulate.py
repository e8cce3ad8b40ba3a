"""Slotted simulation loop, metric aggregation, and the trade-off sweeps.

A run is a pure function of (config, strategy, seed): every randomness source
(geometry, fading, blockage, arrivals, random RIS draw) gets its own child
stream of the seed, so realizations are identical across strategies and V
values at the same seed and comparisons are paired.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import backend as backend_mod
from .channel import ChannelSampler, generate_geometry, sample_blocking
from .config import SystemConfig, config_to_dict
from .controller import Strategy, optimize_slot
from .queues import (
    QueueState,
    average_delay,
    dpp_objective,
    lyapunov,
    update_local_queue,
    update_remote_queue,
)
from .ris import RisConfig, random_phases

FIG1_COLUMNS = ("strategy", "V", "p_a", "mean_power_mW", "mean_delay_ms", "seed")
FIG2_COLUMNS = ("strategy", "p_a", "power_at_delay_target", "gain_dB_vs_no_ris")


@dataclass
class MetricsLog:
    """Per-slot trajectories of one run plus the knobs needed to summarize."""

    rates: np.ndarray  # (T, N) bits/s
    tx_power: np.ndarray  # (T, N) W
    local: np.ndarray  # (T, N) bits, backlog at slot start
    remote: np.ndarray  # (T, N) bits
    cpu: np.ndarray  # (T, N) cycles/s
    arrivals: np.ndarray  # (T, N) bits
    direct_blocked: np.ndarray  # (T, N)
    indirect_blocked: np.ndarray  # (T, N)
    lyapunov: np.ndarray  # (T,)
    dpp: np.ndarray  # (T,)
    slot_duration: float
    warmup_fraction: float

    @property
    def n_slots(self) -> int:
        return self.rates.shape[0]

    @property
    def warmup(self) -> int:
        return int(self.n_slots * self.warmup_fraction)

    def mean_power(self, skip: int | None = None) -> float:
        """Time-averaged total transmit power in W."""
        s = self.warmup if skip is None else skip
        return float(self.tx_power[s:].sum(axis=1).mean())

    def per_user_delay(self, skip: int | None = None) -> np.ndarray:
        s = self.warmup if skip is None else skip
        return average_delay(self, self.slot_duration, skip=s)

    def mean_delay(self, skip: int | None = None) -> float:
        return float(self.per_user_delay(skip).mean())

    def plateau_stable(self) -> bool:
        """Queue-stability proxy: the last quarter's mean total backlog must
        not exceed the second quarter's by more than 20%.

        The additive slack of half a slot's arrivals keeps runs whose queues
        hover near empty from tripping the ratio on noise.
        """
        t = self.n_slots
        total = (self.local + self.remote).sum(axis=1)
        second = float(total[t // 4 : t // 2].mean())
        last = float(total[3 * t // 4 :].mean())
        slack = 0.5 * float(self.arrivals.sum(axis=1).mean())
        return last <= 1.2 * second + slack


def sample_arrivals(
    rate: np.ndarray, slot_duration: float, rng: np.random.Generator
) -> np.ndarray:
    """Poisson bit arrivals with per-user mean rate * tau."""
    return rng.poisson(np.asarray(rate) * slot_duration).astype(float)


def run_simulation(
    config: SystemConfig,
    strategy: Strategy,
    seed: int,
    n_slots: int,
    backend: str | None = None,
) -> MetricsLog:
    """Simulate ``n_slots`` slots and log every per-slot quantity."""
    n = config.num_users
    root = np.random.SeedSequence(seed)
    ss_geom, ss_chan, ss_block, ss_arr, ss_ris = root.spawn(5)
    rng_geom = np.random.default_rng(ss_geom)
    rng_chan = np.random.default_rng(ss_chan)
    rng_block = np.random.default_rng(ss_block)
    rng_arr = np.random.default_rng(ss_arr)

    geometry = generate_geometry(config, rng_geom)
    sampler = ChannelSampler(geometry, config)
    kernel = backend_mod.make_kernel(
        n, config.ap_antennas, config.user_antennas, config.ris_elements, backend
    )

    if strategy.ris_mode == "random":
        warm = random_phases(config.ris_elements, np.random.default_rng(ss_ris))
    elif strategy.ris_mode == "optimized":
        warm = RisConfig.neutral(config.ris_elements)
    else:
        warm = None

    queues = QueueState.empty(n)
    log = MetricsLog(
        rates=np.zeros((n_slots, n)),
        tx_power=np.zeros((n_slots, n)),
        local=np.zeros((n_slots, n)),
        remote=np.zeros((n_slots, n)),
        cpu=np.zeros((n_slots, n)),
        arrivals=np.zeros((n_slots, n)),
        direct_blocked=np.zeros((n_slots, n)),
        indirect_blocked=np.zeros((n_slots, n)),
        lyapunov=np.zeros(n_slots),
        dpp=np.zeros(n_slots),
        slot_duration=config.slot_duration,
        warmup_fraction=config.warmup_fraction,
    )

    for t in range(n_slots):
        link = sample_blocking(config, rng_block)
        triples = [sampler.sample(u, rng_chan) for u in range(n)]
        decision = optimize_slot(queues, triples, link, strategy, config, warm, kernel)
        if strategy.ris_mode == "optimized":
            warm = decision.warm_ris
        arrivals = sample_arrivals(config.arrival_rate, config.slot_duration, rng_arr)

        log.rates[t] = decision.rates
        log.tx_power[t] = decision.tx_power
        log.local[t] = queues.local
        log.remote[t] = queues.remote
        log.cpu[t] = decision.cpu.frequencies
        log.arrivals[t] = arrivals
        log.direct_blocked[t] = link.direct_blocked
        log.indirect_blocked[t] = link.indirect_blocked
        log.lyapunov[t] = lyapunov(queues)
        log.dpp[t] = dpp_objective(
            queues,
            decision.rates,
            arrivals,
            decision.cpu.frequencies,
            decision.covariances,
            config,
        )

        queues, transferred = update_local_queue(
            queues, decision.rates, arrivals, config.slot_duration
        )
        queues = update_remote_queue(
            queues,
            decision.cpu.frequencies,
            config.cycles_per_bit,
            transferred,
            config.slot_duration,
        )
    return log


@dataclass
class SweepSpec:
    """What to sweep and how long to simulate each point."""

    v_values: list = field(default_factory=lambda: list(np.logspace(8.5, 11.5, 6)))
    p_direct_values: list = field(default_factory=lambda: [0.0, 0.5])
    strategies: list = field(default_factory=lambda: [Strategy()])
    slots: int = 5000
    seeds: int = 3
    delay_target: float = 0.150  # s
    delay_tol: float = 0.10  # relative acceptance band around the target
    v_bracket: tuple = (1e6, 1e14)
    bisect_iters: int = 12

    def __post_init__(self):
        if not (self.v_values and self.p_direct_values and self.strategies):
            raise ValueError("sweep lists must be nonempty")
        if self.slots < 1 or self.seeds < 1:
            raise ValueError("slots and seeds must be >= 1")


def _seed_ints(master_seed: int, count: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(master_seed).generate_state(count)]


def _fmt(value) -> str:
    # repr of a builtin float is shortest-round-trip and locale-independent;
    # numpy scalars are coerced so their verbose repr never leaks into CSVs
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, columns, rows):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_manifest(out_dir: Path, config: SystemConfig, master_seed: int, extra=None):
    manifest = {
        "version": __version__,
        "master_seed": master_seed,
        "config": config_to_dict(config),
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )


def sweep_fig1(
    spec: SweepSpec,
    config: SystemConfig,
    out_dir: str | Path,
    master_seed: int = 0,
    backend: str | None = None,
) -> Path:
    """Delay-power trade-off grid: one CSV row per (strategy, p, V, seed)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = _seed_ints(master_seed, spec.seeds)
    rows = []
    for strategy in spec.strategies:
        for p in spec.p_direct_values:
            for v in spec.v_values:
                cfg = config.replace(block_prob_direct=float(p), lyapunov_v=float(v))
                for seed in seeds:
                    log = run_simulation(cfg, strategy, seed, spec.slots, backend)
                    rows.append(
                        (
                            strategy.label(),
                            float(v),
                            float(p),
                            1e3 * log.mean_power(),
                            1e3 * log.mean_delay(),
                            seed,
                        )
                    )
    path = out_dir / "fig1.csv"
    _write_csv(path, FIG1_COLUMNS, rows)
    write_manifest(out_dir, config, master_seed, {"sweep": "fig1"})
    return path


def _evaluate_point(config, strategy, v, p, seeds, slots, backend):
    """Seed-averaged (delay, power) at one V; unstable runs give inf delay."""
    cfg = config.replace(block_prob_direct=float(p), lyapunov_v=float(v))
    delays, powers = [], []
    for seed in seeds:
        log = run_simulation(cfg, strategy, seed, slots, backend)
        if not log.plateau_stable():
            return math.inf, math.nan
        delays.append(log.mean_delay())
        powers.append(log.mean_power())
    return float(np.mean(delays)), float(np.mean(powers))


def find_v_for_delay(
    spec: SweepSpec,
    config: SystemConfig,
    strategy: Strategy,
    p: float,
    seeds,
    backend: str | None = None,
):
    """Bisect log V until the seed-averaged delay meets the target.

    Returns (v, power) or None when no V in the bracket lands within the
    acceptance band (the point is infeasible at this blocking level).
    """
    target = spec.delay_target
    lo, hi = (math.log10(b) for b in spec.v_bracket)
    best = None  # (relative error, v, power)

    def consider(v, delay, power):
        nonlocal best
        if math.isfinite(delay):
            err = abs(delay - target) / target
            if best is None or err < best[0]:
                best = (err, v, power)

    d_lo, p_lo = _evaluate_point(config, strategy, 10**lo, p, seeds, spec.slots, backend)
    consider(10**lo, d_lo, p_lo)
    if d_lo > target * (1 + spec.delay_tol):
        return None  # even the most aggressive setting misses the target
    d_hi, p_hi = _evaluate_point(config, strategy, 10**hi, p, seeds, spec.slots, backend)
    consider(10**hi, d_hi, p_hi)

    for _ in range(spec.bisect_iters):
        if best is not None and best[0] <= spec.delay_tol:
            break
        mid = 0.5 * (lo + hi)
        d_mid, p_mid = _evaluate_point(
            config, strategy, 10**mid, p, seeds, spec.slots, backend
        )
        consider(10**mid, d_mid, p_mid)
        if d_mid > target:
            hi = mid
        else:
            lo = mid
    if best is not None and best[0] <= spec.delay_tol:
        return best[1], best[2]
    return None


def sweep_fig2(
    spec: SweepSpec,
    config: SystemConfig,
    out_dir: str | Path,
    master_seed: int = 0,
    backend: str | None = None,
) -> Path:
    """Power at the delay target vs blocking probability, with dB gains
    against the no-RIS baseline."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = _seed_ints(master_seed, spec.seeds)

    powers = {}  # (label, p) -> power or None
    for p in spec.p_direct_values:
        for strategy in spec.strategies:
            found = find_v_for_delay(spec, config, strategy, p, seeds, backend)
            powers[(strategy.label(), float(p))] = None if found is None else found[1]

    rows = []
    for p in spec.p_direct_values:
        baseline = powers.get(("absent", float(p)))
        for strategy in spec.strategies:
            label = strategy.label()
            power = powers[(label, float(p))]
            if power is None:
                rows.append((label, float(p), math.nan, math.nan))
                continue
            if label == "absent":
                gain = 0.0
            elif baseline is None:
                gain = math.inf  # baseline cannot meet the target at all
            else:
                gain = 10.0 * math.log10(baseline / power)
            rows.append((label, float(p), power, gain))
    path = out_dir / "fig2.csv"
    _write_csv(path, FIG2_COLUMNS, rows)
    write_manifest(out_dir, config, master_seed, {"sweep": "fig2"})
    return path
