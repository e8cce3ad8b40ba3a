import numpy as np
import pytest

from rismec import (
    QueueState,
    RisConfig,
    gradient_wrt_ris,
    pgm_step,
    project_unit_circle,
    quantize_phases,
    random_phases,
)
from rismec.oracles import fd_gradient
from rismec.testing import random_radio_instance


class TestProjection:
    def test_rescales_to_unit(self):
        out = project_unit_circle(np.array([2.0 + 0.0j, 3.0 + 4.0j]))
        assert np.allclose(out.reflection, [1.0, 0.6 + 0.8j])

    def test_unit_inputs_unchanged(self):
        r = np.exp(1j * np.array([0.3, 2.2, 4.0]))
        assert np.allclose(project_unit_circle(r).reflection, r)

    def test_zero_maps_to_one(self):
        assert project_unit_circle(np.array([0.0 + 0.0j])).reflection[0] == 1.0 + 0.0j

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        r = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        once = project_unit_circle(r).reflection
        twice = project_unit_circle(once).reflection
        assert np.allclose(once, twice)
        RisConfig(twice).validate()


class TestPgmStep:
    def test_zero_gradient_is_identity(self):
        ris = RisConfig.from_phases(np.array([0.5, 1.5]))
        out = pgm_step(ris, np.zeros(2, dtype=complex), 0.1)
        assert np.allclose(out.reflection, ris.reflection)

    def test_hand_example(self):
        # r=1, grad=-j, rho=1: project(1+j) = e^{j pi/4}.
        out = pgm_step(RisConfig(np.array([1.0 + 0.0j])), np.array([-1j]), 1.0)
        assert np.allclose(out.reflection[0], np.exp(1j * np.pi / 4))

    def test_output_always_feasible(self):
        rng = np.random.default_rng(1)
        ris = RisConfig.from_phases(rng.uniform(0, 2 * np.pi, 8))
        grad = 10.0 * (rng.standard_normal(8) + 1j * rng.standard_normal(8))
        pgm_step(ris, grad, 3.7).validate()


class TestQuantize:
    def test_grid_point_unchanged(self):
        out = quantize_phases(RisConfig.from_phases(np.array([0.0])), 2)
        assert out.phases[0] == 0.0

    def test_nearest_level(self):
        out = quantize_phases(RisConfig.from_phases(np.array([np.pi / 3])), 2)
        assert out.phases[0] == pytest.approx(np.pi / 2)

    def test_tie_goes_to_lower_level(self):
        out = quantize_phases(RisConfig.from_phases(np.array([np.pi / 4])), 2)
        assert out.phases[0] == pytest.approx(0.0)

    @pytest.mark.parametrize("bits", [1, 2, 3])
    def test_error_bound(self, bits):
        rng = np.random.default_rng(2)
        phases = rng.uniform(0, 2 * np.pi, 64)
        out = quantize_phases(RisConfig.from_phases(phases), bits)
        err = np.abs(np.exp(1j * phases) - out.reflection)
        # chord length bound for phase error <= pi / 2^bits
        assert np.all(err <= 2 * np.sin(np.pi / 2 ** (bits + 1)) + 1e-12)
        levels = 2 * np.pi * np.arange(2**bits) / 2**bits
        assert all(any(abs(p - l) < 1e-12 for l in levels) for p in out.phases)


class TestRandomPhases:
    def test_unit_modulus_and_deterministic(self):
        a = random_phases(16, np.random.default_rng(3))
        b = random_phases(16, np.random.default_rng(3))
        a.validate()
        assert np.array_equal(a.reflection, b.reflection)

    def test_uniform_concentration(self):
        r = random_phases(100_000, np.random.default_rng(4)).reflection
        assert abs(r.mean()) < 0.02


class TestGradient:
    def analytic_as_real(self, inst):
        g = gradient_wrt_ris(
            inst.queues, inst.triples, inst.effective, inst.covariances,
            inst.config, inst.indirect_coeffs,
        )
        return 2.0 * np.concatenate([g.real, g.imag])

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_radio_instance(
            rng, n_users=1 + seed % 2, ap_antennas=2, user_antennas=2,
            ris_elements=4 + 4 * (seed % 2), statistical=seed % 3 == 0,
        )
        analytic = self.analytic_as_real(inst)
        fd = fd_gradient(inst.objective, inst.ris.reflection)
        cos = analytic @ fd / (np.linalg.norm(analytic) * np.linalg.norm(fd))
        assert cos >= 0.999
        # stacked-real convention: FD equals the analytic vector, not just its direction
        assert np.linalg.norm(analytic - fd) <= 1e-4 * np.linalg.norm(fd)

    def test_zero_covariances_give_zero(self):
        rng = np.random.default_rng(11)
        inst = random_radio_instance(rng)
        inst.covariances[:] = 0
        g = gradient_wrt_ris(
            inst.queues, inst.triples, inst.effective, inst.covariances, inst.config
        )
        assert np.all(g == 0)

    def test_balanced_queues_give_zero(self):
        rng = np.random.default_rng(12)
        inst = random_radio_instance(rng)
        queues = QueueState(local=inst.queues.remote.copy(), remote=inst.queues.remote.copy())
        g = gradient_wrt_ris(
            queues, inst.triples, inst.effective, inst.covariances, inst.config
        )
        assert np.all(g == 0)

    def test_blocked_indirect_contributes_nothing(self):
        rng = np.random.default_rng(13)
        inst = random_radio_instance(rng, n_users=2)
        coeffs = np.array([0.0, 1.0])
        g = gradient_wrt_ris(
            inst.queues, inst.triples, inst.effective, inst.covariances,
            inst.config, coeffs,
        )
        solo = np.array([1.0, 1.0])
        g_user1_only = gradient_wrt_ris(
            QueueState(
                local=np.array([inst.queues.remote[0], inst.queues.local[1]]),
                remote=inst.queues.remote,
            ),
            inst.triples, inst.effective, inst.covariances, inst.config, solo,
        )
        assert np.allclose(g, g_user1_only)

    def test_linear_in_backlog_gap(self):
        rng = np.random.default_rng(14)
        inst = random_radio_instance(rng, n_users=2)
        g1 = gradient_wrt_ris(
            inst.queues, inst.triples, inst.effective, inst.covariances, inst.config
        )
        scaled = QueueState(
            local=inst.queues.remote + 3.0 * (inst.queues.local - inst.queues.remote),
            remote=inst.queues.remote.copy(),
        )
        g3 = gradient_wrt_ris(
            scaled, inst.triples, inst.effective, inst.covariances, inst.config
        )
        assert np.allclose(g3, 3.0 * g1, rtol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_descent_direction(self, seed):
        # A small enough projected step must not increase the objective.
        rng = np.random.default_rng(100 + seed)
        inst = random_radio_instance(rng, n_users=2, ris_elements=6)
        g = gradient_wrt_ris(
            inst.queues, inst.triples, inst.effective, inst.covariances, inst.config
        )
        f0 = inst.objective(inst.ris.reflection)
        rho = 1.0 / max(np.abs(g).max(), 1e-30)
        ok = False
        for _ in range(20):
            cand = pgm_step(inst.ris, g, rho)
            if inst.objective(cand.reflection) <= f0 + 1e-12 * abs(f0):
                ok = True
                break
            rho *= 0.5
        assert ok
