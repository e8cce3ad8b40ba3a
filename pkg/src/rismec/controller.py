"""Per-slot decision logic: RIS phases, transmit covariances, CPU split.

The radio part alternates a projected-gradient step on the reflection vector
with per-user water-filling, both executed by the selected kernel backend.
Under statistical knowledge the optimizer composes channels from blocking
probabilities instead of the realized flags, so the decision is measurable
w.r.t. the information the controller actually has; realized rates are always
evaluated on the true channel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import backend as backend_mod
from .channel import ChannelTriple, LinkState, achievable_rate, compose_channel
from .config import KNOWLEDGE_MODES, RIS_MODES, SystemConfig
from .queues import QueueState
from .ris import LN2, RisConfig, quantize_phases
from .scheduler import ComputeAllocation, allocate_cpu


@dataclass
class Strategy:
    """Which of the comparison schemes the controller runs."""

    ris_mode: str = "optimized"
    knowledge_mode: str = "instantaneous"
    phase_bits: int = 0

    def __post_init__(self):
        if self.ris_mode not in RIS_MODES:
            raise ValueError(f"ris_mode must be one of {RIS_MODES}")
        if self.knowledge_mode not in KNOWLEDGE_MODES:
            raise ValueError(f"knowledge_mode must be one of {KNOWLEDGE_MODES}")
        if self.phase_bits < 0:
            raise ValueError("phase_bits must be >= 0")
        if self.phase_bits > 0 and self.ris_mode != "optimized":
            raise ValueError("phase_bits only applies to the optimized RIS mode")

    @classmethod
    def from_config(cls, config: SystemConfig) -> "Strategy":
        return cls(
            ris_mode=config.ris_mode,
            knowledge_mode=config.knowledge_mode,
            phase_bits=config.phase_bits,
        )

    def label(self) -> str:
        if self.ris_mode != "optimized":
            return self.ris_mode
        parts = ["optimized"]
        if self.phase_bits > 0:
            parts.append(f"{self.phase_bits}bit")
        if self.knowledge_mode == "statistical":
            parts.append("statistical")
        return "-".join(parts)


@dataclass
class SlotDecision:
    covariances: np.ndarray  # (N, K, K)
    ris: RisConfig | None  # configuration actually applied this slot
    cpu: ComputeAllocation
    rates: np.ndarray  # (N,) realized bits/s
    tx_power: np.ndarray  # (N,) W
    warm_ris: RisConfig | None = None  # continuous iterate seeding the next slot
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(1))
    iterations: int = 0


def _optimizer_coeffs(strategy: Strategy, link_state: LinkState, config: SystemConfig):
    """(1 - blockage) multipliers the optimizer is allowed to see."""
    if strategy.knowledge_mode == "statistical":
        direct = 1.0 - config.block_prob_direct
        indirect = 1.0 - config.block_prob_indirect
    else:
        direct = 1.0 - link_state.direct_blocked.astype(float)
        indirect = 1.0 - link_state.indirect_blocked.astype(float)
    if strategy.ris_mode == "absent":
        indirect = np.zeros_like(indirect)
    return direct, indirect


def optimize_slot(
    queues: QueueState,
    triples: Sequence[ChannelTriple],
    link_state: LinkState,
    strategy: Strategy,
    config: SystemConfig,
    warm_ris: RisConfig | None,
    kernel=None,
) -> SlotDecision:
    """Run one slot of the controller and return every decision it made.

    ``warm_ris`` seeds the reflection vector (previous slot's optimum for the
    optimized mode, the fixed draw for the random mode, ignored when absent).
    Quantization, when requested, happens once after the alternating loop and
    the covariances are refreshed against the quantized channels.
    """
    n, k = config.num_users, config.user_antennas
    if kernel is None:
        kernel = backend_mod.make_kernel(
            n, config.ap_antennas, k, config.ris_elements
        )

    direct_c, indirect_c = _optimizer_coeffs(strategy, link_state, config)
    deff = np.empty((n, config.ap_antennas, k), dtype=np.complex128)
    t_ind = np.empty((n, config.ris_elements, k), dtype=np.complex128)
    h_ra = np.empty((n, config.ap_antennas, config.ris_elements), dtype=np.complex128)
    for u in range(n):
        np.multiply(triples[u].direct, direct_c[u], out=deff[u])
        np.multiply(triples[u].user_to_ris, indirect_c[u], out=t_ind[u])
        h_ra[u] = triples[u].ris_to_ap
    weights = (
        config.slot_duration
        * config.bandwidth_per_user
        * (queues.local - queues.remote)
        / LN2
    )

    r0 = (warm_ris.reflection if warm_ris is not None
          else np.ones(config.ris_elements, dtype=np.complex128))
    r_opt, q, trace = kernel.solve(
        deff,
        t_ind,
        h_ra,
        weights,
        config.noise_power,
        config.max_tx_power,
        config.lyapunov_v,
        r0,
        config.pgm_step,
        config.pgm_iterations,
        config.pgm_max_halvings,
        config.pgm_tol,
        strategy.ris_mode == "optimized",
    )

    ris = None if strategy.ris_mode == "absent" else RisConfig(r_opt)
    warm_out = ris
    if strategy.ris_mode == "optimized" and strategy.phase_bits > 0:
        quantized = quantize_phases(ris, strategy.phase_bits)
        _, q, _ = kernel.solve(
            deff,
            t_ind,
            h_ra,
            weights,
            config.noise_power,
            config.max_tx_power,
            config.lyapunov_v,
            quantized.reflection,
            config.pgm_step,
            1,
            config.pgm_max_halvings,
            config.pgm_tol,
            False,
        )
        ris = quantized

    rates = np.array(
        [
            achievable_rate(
                compose_channel(triples[u], ris, link_state, u),
                q[u],
                config.bandwidth_per_user[u],
                config.noise_power[u],
                check=False,
            )
            for u in range(n)
        ]
    )
    cpu = allocate_cpu(
        queues.remote, config.cycles_per_bit, config.max_cpu, config.slot_duration
    )
    tx_power = np.real(np.trace(q, axis1=-2, axis2=-1))
    return SlotDecision(
        covariances=q,
        ris=ris,
        cpu=cpu,
        rates=rates,
        tx_power=tx_power,
        warm_ris=warm_out,
        objective_trace=trace,
        iterations=len(trace) - 1,
    )
