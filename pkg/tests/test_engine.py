"""Unit tests for the time-stepping engine: determinism, boundary
invariance, scheme correctness, and the self-convergence estimator."""

import math

import numpy as np
import pytest

import npzsde.engine as engine
from npzsde.engine import (
    HYBRID_LOG_EULER,
    PLAIN_EULER,
    RngStream,
    SimConfig,
    run_paths,
    self_convergence_order,
    simulate_boundary2d,
    simulate_full3d,
    simulate_nutrient1d,
    step_hybrid,
)
from npzsde.errors import StepOverflow
from npzsde.model import ModelParams, constant, holling2


def params_a(**overrides):
    base = dict(
        lambda_input=2.0, alpha1=1.0, alpha2=1.0, alpha3=0.4,
        alpha4=0.5, alpha5=0.2, sigma1=1.0, sigma2=1.0, sigma3=0.2,
    )
    base.update(overrides)
    return ModelParams(**base)


RESP = (constant(1.0), constant(1.0))


class TestSimConfig:
    def test_bounds_enforced(self):
        SimConfig(dt=0.01, t_end=1.0)  # boundary value allowed
        with pytest.raises(ValueError):
            SimConfig(dt=0.02, t_end=1.0)
        with pytest.raises(ValueError):
            SimConfig(dt=0.0, t_end=1.0)
        with pytest.raises(ValueError):
            SimConfig(dt=1e-3, t_end=1.0, burn_in=1.0)
        with pytest.raises(ValueError):
            SimConfig(dt=1e-3, t_end=1.0, n_paths=0)
        with pytest.raises(ValueError):
            SimConfig(dt=1e-3, t_end=1.0, subsample_every=0)
        with pytest.raises(ValueError):
            SimConfig(dt=1e-3, t_end=1.0, scheme="Milstein")

    def test_default_burn_in_is_tenth_of_horizon(self):
        assert SimConfig(dt=1e-3, t_end=50.0).burn_in == 5.0


class TestRngStream:
    def test_identical_keys_reproduce(self):
        a = RngStream(7, 3, 2).generator().standard_normal(64)
        b = RngStream(7, 3, 2).generator().standard_normal(64)
        assert np.array_equal(a, b)

    def test_distinct_keys_differ(self):
        base = RngStream(7, 3, 2).generator().standard_normal(64)
        for other in (RngStream(8, 3, 2), RngStream(7, 4, 2), RngStream(7, 3, 1)):
            assert not np.array_equal(base, other.generator().standard_normal(64))

    def test_invalid_keys_rejected(self):
        with pytest.raises(ValueError):
            RngStream(-1, 0, 1)
        with pytest.raises(ValueError):
            RngStream(0, 0, 0)


class TestStepHybrid:
    def test_hand_computed_zero_noise_step(self):
        # drift_x = 2 - 1 - 1 + 0.5 + 0.2 = 0.7, ln-y drift = 1-1-1-0.5 = -1.5,
        # ln-z drift = 1 - 0.4 - 0.02 = 0.58, all times dt = 1e-3.
        out = step_hybrid(params_a(), RESP, (1.0, 1.0, 1.0), 1e-3, (0.0, 0.0, 0.0))
        assert abs(out.x - (1.0 + 0.7e-3)) < 1e-15
        assert abs(out.y - math.exp(-1.5e-3)) < 1e-15
        assert abs(out.z - math.exp(0.58e-3)) < 1e-15

    def test_boundary_absorption_is_exact(self):
        rng = np.random.default_rng(3)
        s = (1.3, 0.0, 0.0)
        for _ in range(20):
            s = step_hybrid(params_a(), RESP, s, 1e-3, rng.standard_normal(3))
            assert s.y == 0.0 and s.z == 0.0
            assert s.x > 0

    def test_noise_enters_log_linearly(self):
        p = params_a()
        g = (0.0, 1.7, -0.4)
        out = step_hybrid(p, RESP, (1.0, 1.0, 1.0), 1e-3, g)
        ref = step_hybrid(p, RESP, (1.0, 1.0, 1.0), 1e-3, (0.0, 0.0, 0.0))
        sq = math.sqrt(1e-3)
        assert np.isclose(math.log(out.y) - math.log(ref.y), p.sigma2 * sq * 1.7)
        assert np.isclose(math.log(out.z) - math.log(ref.z), p.sigma3 * sq * (-0.4))

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            step_hybrid(params_a(), RESP, (1.0, 1.0, 1.0), 0.0, (0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            step_hybrid(params_a(), RESP, (1.0, 1.0, 1.0), 1e-3, (0.0, 0.0))


class TestSimulate:
    CFG = SimConfig(dt=1e-3, t_end=5.0, subsample_every=10, seed=42)

    def test_deterministic_given_seed_and_path(self):
        a = simulate_full3d(params_a(), RESP, (1.0, 1.0, 1.0), self.CFG)
        b = simulate_full3d(params_a(), RESP, (1.0, 1.0, 1.0), self.CFG)
        assert np.array_equal(a.states, b.states)
        c = simulate_full3d(params_a(), RESP, (1.0, 1.0, 1.0), self.CFG, path_id=1)
        assert not np.array_equal(a.states, c.states)

    def test_block_boundaries_do_not_change_the_path(self, monkeypatch):
        a = simulate_full3d(params_a(), RESP, (1.0, 1.0, 1.0), self.CFG)
        monkeypatch.setattr(engine, "BLOCK_STEPS", 137)
        b = simulate_full3d(params_a(), RESP, (1.0, 1.0, 1.0), self.CFG)
        assert np.array_equal(a.states, b.states)

    def test_recording_grid(self):
        traj = simulate_full3d(params_a(), RESP, (1.0, 1.0, 1.0), self.CFG)
        assert len(traj) == 5000 // 10 + 1
        spacing = np.diff(traj.times)
        assert np.allclose(spacing, 0.01, rtol=0, atol=1e-14)
        assert traj.times[0] == 0.0
        assert np.array_equal(traj.states[0], [1.0, 1.0, 1.0])

    def test_positivity_and_rare_clamps(self):
        traj = simulate_full3d(params_a(), RESP, (0.5, 0.2, 3.0), self.CFG)
        assert np.all(traj.y > 0) and np.all(traj.z > 0)
        assert np.all(traj.x >= 0)
        assert traj.clamp_events / traj.config.n_steps < 1e-3

    def test_boundary_faces_absorb(self):
        traj = simulate_full3d(params_a(), RESP, (2.0, 0.0, 0.0), self.CFG)
        assert np.all(traj.y == 0.0) and np.all(traj.z == 0.0)
        assert np.all(traj.x > 0)

    def test_subsystem_embedding_is_exact(self):
        p = params_a()
        f1 = holling2(1.0, 0.3)
        full = simulate_full3d(p, (f1, constant(1.0)), (1.0, 2.0, 0.0), self.CFG)
        flat = simulate_boundary2d(p, f1, (1.0, 2.0), self.CFG)
        assert np.array_equal(full.states[:, :2], flat.states[:, :2])
        assert np.all(flat.z == 0.0)
        nut = simulate_nutrient1d(p, 1.0, self.CFG)
        flat0 = simulate_boundary2d(p, f1, (1.0, 0.0), self.CFG)
        assert np.array_equal(nut.x, flat0.x)

    def test_nutrient_run_tracks_stationary_mean(self):
        # Lambda/alpha1 = 2 with sigma1 = 0.5: long-run time average near 2.
        p = params_a(sigma1=0.5)
        cfg = SimConfig(dt=1e-3, t_end=400.0, subsample_every=10, seed=5)
        traj = simulate_nutrient1d(p, 1.0, cfg)
        mean = float(traj.x[traj.times >= 40.0].mean())
        assert abs(mean - 2.0) / 2.0 < 0.1

    def test_zero_noise_tends_to_fixed_point(self):
        p = params_a(sigma1=0.0, sigma2=0.0, sigma3=0.0)
        cfg = SimConfig(dt=1e-3, t_end=30.0, seed=0, subsample_every=100)
        traj = simulate_nutrient1d(p, 7.0, cfg)
        assert abs(traj.x[-1] - 2.0) < 1e-6

    def test_plain_euler_differs_but_agrees_at_boundary(self):
        cfg_h = self.CFG
        cfg_p = SimConfig(dt=1e-3, t_end=5.0, subsample_every=10, seed=42,
                          scheme=PLAIN_EULER)
        a = simulate_full3d(params_a(), RESP, (1.0, 1.0, 1.0), cfg_h)
        b = simulate_full3d(params_a(), RESP, (1.0, 1.0, 1.0), cfg_p)
        assert not np.array_equal(a.states, b.states)
        absorbed = simulate_full3d(params_a(), RESP, (1.0, 0.0, 0.0), cfg_p)
        assert np.all(absorbed.y == 0.0) and np.all(absorbed.z == 0.0)

    def test_overflow_reported_with_time(self):
        # Flipped washout sign: nutrient grows like e^{5t}, hits 1e300
        # near t = 138.
        p = params_a(alpha1=-5.0, sigma1=0.1)
        cfg = SimConfig(dt=0.01, t_end=200.0, subsample_every=100, seed=1)
        with pytest.raises(StepOverflow) as exc:
            simulate_nutrient1d(p, 1.0, cfg)
        assert exc.value.time is not None
        assert 100.0 < exc.value.time < 160.0

    def test_rejects_negative_or_non_finite_init(self):
        with pytest.raises(ValueError):
            simulate_full3d(params_a(), RESP, (-1.0, 1.0, 1.0), self.CFG)
        with pytest.raises(ValueError):
            simulate_full3d(params_a(), RESP, (math.nan, 1.0, 1.0), self.CFG)


class TestEnsemble:
    def test_threaded_equals_serial_in_order(self):
        cfg = SimConfig(dt=1e-3, t_end=2.0, subsample_every=10, seed=9, n_paths=6)

        def one(pid):
            return simulate_full3d(params_a(), RESP, (1.0, 1.0, 1.0), cfg, path_id=pid)

        serial = run_paths(one, cfg.n_paths)
        threaded = run_paths(one, cfg.n_paths, workers=3)
        assert [t.path_id for t in serial] == list(range(6))
        for s, t in zip(serial, threaded):
            assert np.array_equal(s.states, t.states)


class TestConvergenceOrder:
    def test_deterministic_limit_has_euler_order_one(self):
        p = params_a(sigma1=0.0, sigma2=0.0, sigma3=0.0)
        cfg = SimConfig(dt=0.004, t_end=4.0, seed=3, n_paths=1)
        order = self_convergence_order(p, RESP, (1.0, 1.0, 1.0), cfg, n_paths=1)
        assert abs(order - 1.0) <= 0.1

    def test_identical_levels_rejected(self):
        # With zero noise AND zero drift every level coincides.
        p = ModelParams(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        cfg = SimConfig(dt=0.004, t_end=0.4, seed=3)
        with pytest.raises(ValueError):
            self_convergence_order(p, (constant(0.0), constant(0.0)),
                                   (1.0, 1.0, 1.0), cfg, n_paths=1)
