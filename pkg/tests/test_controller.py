import numpy as np
import pytest

from rismec import QueueState, RisConfig, Strategy, SystemConfig, optimize_slot
from rismec.channel import LinkState, generate_geometry, sample_channel_triple
from rismec.testing import random_triple


def desk_config(**over):
    defaults = dict(num_users=2, user_antennas=2, ap_antennas=2, ris_elements=8,
                    pgm_iterations=10)
    defaults.update(over)
    return SystemConfig(**defaults)


def slot_inputs(config, seed=0, local_scale=3e4):
    rng = np.random.default_rng(seed)
    geom = generate_geometry(config, rng)
    triples = [
        sample_channel_triple(geom, config, u, rng) for u in range(config.num_users)
    ]
    queues = QueueState(
        local=rng.uniform(0.5, 1.0, config.num_users) * local_scale,
        remote=rng.uniform(0.0, 0.2, config.num_users) * local_scale,
    )
    link = LinkState(
        direct_blocked=np.zeros(config.num_users, dtype=np.int64),
        indirect_blocked=np.zeros(config.num_users, dtype=np.int64),
    )
    return queues, triples, link


class TestStrategy:
    def test_labels(self):
        assert Strategy().label() == "optimized"
        assert Strategy(phase_bits=2).label() == "optimized-2bit"
        assert Strategy(knowledge_mode="statistical").label() == "optimized-statistical"
        assert Strategy(ris_mode="absent").label() == "absent"

    def test_phase_bits_require_optimized(self):
        with pytest.raises(ValueError):
            Strategy(ris_mode="random", phase_bits=2)


class TestOptimizeSlot:
    def test_empty_queues_idle(self):
        config = desk_config()
        queues, triples, link = slot_inputs(config)
        queues = QueueState.empty(config.num_users)
        dec = optimize_slot(queues, triples, link, Strategy(), config, None)
        assert np.all(dec.covariances == 0)
        assert np.all(dec.cpu.frequencies == 0)
        assert np.all(dec.rates == 0)

    def test_fully_blocked_users_stay_silent(self):
        config = desk_config(lyapunov_v=0.0)  # even with no power penalty
        queues, triples, link = slot_inputs(config)
        link = LinkState(
            direct_blocked=np.ones(config.num_users, dtype=np.int64),
            indirect_blocked=np.ones(config.num_users, dtype=np.int64),
        )
        dec = optimize_slot(queues, triples, link, Strategy(), config, None)
        assert np.all(dec.covariances == 0)
        assert np.all(dec.tx_power == 0)

    def test_objective_trace_monotone_and_improving(self):
        config = desk_config()
        queues, triples, link = slot_inputs(config, seed=3)
        dec = optimize_slot(queues, triples, link, Strategy(), config, None)
        trace = dec.objective_trace
        tol = 1e-9 * (1.0 + np.abs(trace).max())
        assert np.all(np.diff(trace) <= tol)
        assert trace[-1] <= trace[0] + tol

    def test_constraints_hold(self):
        config = desk_config()
        queues, triples, link = slot_inputs(config, seed=4)
        for strategy in (Strategy(), Strategy(phase_bits=2), Strategy(ris_mode="random")):
            warm = (RisConfig.neutral(config.ris_elements)
                    if strategy.ris_mode != "absent" else None)
            dec = optimize_slot(queues, triples, link, strategy, config, warm)
            for u in range(config.num_users):
                q = dec.covariances[u]
                assert np.allclose(q, q.conj().T, atol=1e-12)
                assert np.linalg.eigvalsh(q).min() >= -1e-12
                assert np.real(np.trace(q)) <= config.max_tx_power[u] + 1e-9
            if dec.ris is not None:
                dec.ris.validate()
            assert np.all(dec.cpu.frequencies >= 0)
            assert dec.cpu.total <= config.max_cpu + 1e-6

    def test_quantized_phases_on_grid(self):
        config = desk_config()
        queues, triples, link = slot_inputs(config, seed=5)
        dec = optimize_slot(queues, triples, link, Strategy(phase_bits=2), config, None)
        levels = 2 * np.pi * np.arange(4) / 4
        assert all(
            any(abs(p - l) < 1e-9 or abs(p - l - 2 * np.pi) < 1e-9 for l in levels)
            for p in dec.ris.phases
        )
        # warm start for the next slot keeps the continuous iterate
        assert dec.warm_ris is not None

    def test_absent_mode_ignores_ris_channels(self):
        config = desk_config()
        queues, triples, link = slot_inputs(config, seed=6)
        strategy = Strategy(ris_mode="absent")
        dec1 = optimize_slot(queues, triples, link, strategy, config, None)
        rng = np.random.default_rng(99)
        fuzzed = []
        for t in triples:
            f = random_triple(rng, config.ap_antennas, config.user_antennas,
                              config.ris_elements)
            f.direct = t.direct  # only the RIS-side matrices change
            fuzzed.append(f)
        dec2 = optimize_slot(queues, fuzzed, link, strategy, config, None)
        assert np.array_equal(dec1.covariances, dec2.covariances)
        assert np.array_equal(dec1.rates, dec2.rates)
        assert np.array_equal(dec1.cpu.frequencies, dec2.cpu.frequencies)

    def test_statistical_mode_never_reads_flags(self):
        config = desk_config(block_prob_direct=0.4, block_prob_indirect=0.1)
        queues, triples, _ = slot_inputs(config, seed=7)
        strategy = Strategy(knowledge_mode="statistical")
        n = config.num_users
        clear = LinkState(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))
        blocked = LinkState(np.ones(n, dtype=np.int64), np.zeros(n, dtype=np.int64))
        dec1 = optimize_slot(queues, triples, clear, strategy, config, None)
        dec2 = optimize_slot(queues, triples, blocked, strategy, config, None)
        # decisions identical, realized rates differ
        assert np.array_equal(dec1.covariances, dec2.covariances)
        assert np.array_equal(dec1.ris.reflection, dec2.ris.reflection)
        assert np.array_equal(dec1.cpu.frequencies, dec2.cpu.frequencies)
        assert not np.array_equal(dec1.rates, dec2.rates)

    def test_warm_start_not_worse_than_initial(self):
        config = desk_config(num_users=1, ris_elements=4)
        queues, triples, link = slot_inputs(config, seed=8)
        warm = RisConfig.neutral(config.ris_elements)
        dec = optimize_slot(queues, triples, link, Strategy(), config, warm)
        assert dec.objective_trace[-1] <= dec.objective_trace[0] + 1e-9
