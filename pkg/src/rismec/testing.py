"""Random problem instances shared by the test suite and the selftest command.

Instances use unit-scale channels and noise so finite-difference oracles stay
well conditioned; the physics-flavored scales are exercised by the simulator
tests instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelTriple, LinkState, _compose
from .config import SystemConfig
from .oracles import radio_objective
from .precoder import PrecoderInput
from .queues import QueueState
from .ris import LN2, RisConfig


@dataclass
class RadioInstance:
    """One randomly drawn slot subproblem with everything precomputed."""

    config: SystemConfig
    queues: QueueState
    triples: list
    ris: RisConfig
    covariances: np.ndarray  # (N, K, K)
    direct_coeffs: np.ndarray  # (N,)
    indirect_coeffs: np.ndarray  # (N,)
    link_state: LinkState = None
    effective: list = field(init=False)
    deff: np.ndarray = field(init=False)
    t_scaled: np.ndarray = field(init=False)
    h_ra: np.ndarray = field(init=False)

    def __post_init__(self):
        n = self.config.num_users
        self.deff = np.stack([self.direct_coeffs[k] * self.triples[k].direct for k in range(n)])
        self.t_scaled = np.stack(
            [self.indirect_coeffs[k] * self.triples[k].user_to_ris for k in range(n)]
        )
        self.h_ra = np.stack([self.triples[k].ris_to_ap for k in range(n)])
        self.effective = [
            _compose(self.triples[k], self.ris.reflection,
                     self.direct_coeffs[k], self.indirect_coeffs[k])
            for k in range(n)
        ]

    def objective(self, r: np.ndarray) -> float:
        """Slot radio objective at fixed covariances, channels recomposed at r."""
        cfg = self.config
        return radio_objective(
            np.asarray(r),
            self.deff,
            self.t_scaled,
            self.h_ra,
            self.covariances,
            cfg.slot_duration * (self.queues.local - self.queues.remote),
            cfg.bandwidth_per_user,
            cfg.noise_power,
            cfg.lyapunov_v,
        )

    def weights_nats(self) -> np.ndarray:
        cfg = self.config
        return (
            cfg.slot_duration
            * cfg.bandwidth_per_user
            * (self.queues.local - self.queues.remote)
            / LN2
        )

    def kernel_args(self, optimize_ris: bool = True) -> tuple:
        cfg = self.config
        return (
            self.deff,
            self.t_scaled,
            self.h_ra,
            self.weights_nats(),
            cfg.noise_power,
            cfg.max_tx_power,
            cfg.lyapunov_v,
            self.ris.reflection,
            cfg.pgm_step,
            cfg.pgm_iterations,
            cfg.pgm_max_halvings,
            cfg.pgm_tol,
            optimize_ris,
        )

    def precoder_inputs(self) -> list[PrecoderInput]:
        cfg = self.config
        return [
            PrecoderInput(
                effective_channel=self.effective[k],
                local_backlog=float(self.queues.local[k]),
                remote_backlog=float(self.queues.remote[k]),
                lyapunov_v=cfg.lyapunov_v,
                slot_duration=cfg.slot_duration,
                bandwidth=float(cfg.bandwidth_per_user[k]),
                noise_power=float(cfg.noise_power[k]),
                max_power=float(cfg.max_tx_power[k]),
            )
            for k in range(cfg.num_users)
        ]


def unit_config(n_users, ap_antennas, user_antennas, ris_elements, **overrides) -> SystemConfig:
    defaults = dict(
        num_users=n_users,
        ap_antennas=ap_antennas,
        user_antennas=user_antennas,
        ris_elements=ris_elements,
        bandwidth_per_user=1.0,
        noise_psd=1.0,
        slot_duration=1.0,
        max_tx_power=1.0,
        lyapunov_v=0.5,
        arrival_rate=1.0,
        block_prob_direct=0.3,
        block_prob_indirect=0.2,
    )
    defaults.update(overrides)
    return SystemConfig(**defaults)


def random_triple(rng, ap_antennas, user_antennas, ris_elements) -> ChannelTriple:
    def cn(rows, cols):
        return (rng.standard_normal((rows, cols))
                + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)

    return ChannelTriple(
        direct=cn(ap_antennas, user_antennas),
        user_to_ris=cn(ris_elements, user_antennas),
        ris_to_ap=cn(ap_antennas, ris_elements),
    )


def random_psd(rng, k: int, max_trace: float) -> np.ndarray:
    a = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    q = a @ a.conj().T
    return q * (rng.uniform(0.2, 1.0) * max_trace / np.real(np.trace(q)))


def random_radio_instance(
    rng: np.random.Generator,
    n_users: int = 2,
    ap_antennas: int = 2,
    user_antennas: int = 2,
    ris_elements: int = 4,
    statistical: bool = False,
    **config_overrides,
) -> RadioInstance:
    """Draw a generic slot subproblem with positive backlog gaps."""
    config = unit_config(n_users, ap_antennas, user_antennas, ris_elements,
                         **config_overrides)
    triples = [random_triple(rng, ap_antennas, user_antennas, ris_elements)
               for _ in range(n_users)]
    queues = QueueState(
        local=rng.uniform(1.0, 5.0, n_users),
        remote=rng.uniform(0.0, 1.0, n_users),
    )
    ris = RisConfig.from_phases(rng.uniform(0.0, 2.0 * np.pi, ris_elements))
    covariances = np.stack(
        [random_psd(rng, user_antennas, config.max_tx_power[k]) for k in range(n_users)]
    )
    if statistical:
        direct_c = 1.0 - config.block_prob_direct
        indirect_c = 1.0 - config.block_prob_indirect
    else:
        direct_c = np.ones(n_users)
        indirect_c = np.ones(n_users)
    link_state = LinkState(
        direct_blocked=np.zeros(n_users, dtype=np.int64),
        indirect_blocked=np.zeros(n_users, dtype=np.int64),
    )
    return RadioInstance(
        config=config,
        queues=queues,
        triples=triples,
        ris=ris,
        covariances=covariances,
        direct_coeffs=direct_c,
        indirect_coeffs=indirect_c,
        link_state=link_state,
    )
