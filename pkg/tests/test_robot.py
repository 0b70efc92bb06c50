import json
import math
from importlib import resources

import numpy as np
import pytest

from skilltransfer import robot, synth
from skilltransfer.robot import (
    IKError,
    SingularConfigurationError,
    check_singular,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    load_robot,
    resolved_rate,
    scale_task,
    transfer_prototype,
    transfer_velocities,
)

from skilltransfer.trajectory import finite_difference

from oracles import dh_chain, fd_jacobian

DEXTEROUS_DEG = (0, -60, 120, 90, -90, 30)
STRETCHED = np.radians([0, 0, 0, 0, -90, 0])


@pytest.fixture(scope="module")
def model():
    return load_robot()


def random_configs(n, seed):
    return np.random.default_rng(seed).uniform(-math.pi, math.pi, (n, 6))


def well_conditioned(model, n, seed, max_cond=1e3):
    qs = [q for q in random_configs(4 * n, seed) if np.linalg.cond(jacobian(model, q)) < max_cond]
    return qs[:n]


def segment(D=0.3, T=1.0, n=1, contact_at=0.9):
    traj = synth.generate_trial(synth.SynthSpec(n, D, T, contact_at=contact_at))
    return traj.positions[: traj.contact + 1]


class TestForwardKinematics:
    def test_zero_configuration_by_hand(self, model, backend):
        # chain of the bundled table at q = 0: links 2 and 3 reach out along x,
        # wrist offsets d4 = 0.11, d5 = 0.10, d6 = 0.08 follow the alternating alphas
        T = forward_kinematics(model, np.zeros(6))
        assert np.allclose(T[:3, 3], [0.85, -0.19, 0.05], atol=1e-12)
        assert np.allclose(T[:3, :3], [[1, 0, 0], [0, 0, -1], [0, 1, 0]], atol=1e-12)

    def test_matches_chain_oracle(self, model, backend):
        rows = [(r.a, r.alpha, r.d, r.theta_offset) for r in model.dh]
        for q in random_configs(20, 1):
            assert np.abs(forward_kinematics(model, q) - dh_chain(rows, q, model.base_pose)).max() < 1e-12

    def test_periodic(self, model, backend):
        q = random_configs(1, 2)[0]
        for j in range(6):
            q2 = q.copy()
            q2[j] += 2 * math.pi
            assert np.abs(forward_kinematics(model, q) - forward_kinematics(model, q2)).max() < 1e-10

    def test_dexterous_configuration(self, model):
        q = np.radians(DEXTEROUS_DEG)
        assert np.all(np.isfinite(forward_kinematics(model, q)))
        assert abs(np.linalg.det(jacobian(model, q))) > robot.DET_THRESHOLD

    def test_base_pose_applied(self):
        cfg = json.loads((resources.files("skilltransfer") / "data/generic6.json").read_text())
        cfg["base_pose"] = {"xyz": [1, 2, 3], "rpy_deg": [0, 0, 90]}
        moved = robot.robot_from_dict(cfg)
        T0 = forward_kinematics(load_robot(), np.zeros(6))
        T1 = forward_kinematics(moved, np.zeros(6))
        assert np.allclose(T1[:3, 3], [1 + 0.19, 2 + 0.85, 3 + 0.05], atol=1e-12)
        assert np.allclose(T1[:3, :3], robot.rpy_matrix(0, 0, math.pi / 2) @ T0[:3, :3])


class TestJacobian:
    def test_finite_differences(self, model, backend):
        fk = lambda q: forward_kinematics(model, q)
        for q in random_configs(50, 3):
            assert np.abs(jacobian(model, q) - fd_jacobian(fk, q)).max() < 1e-5

    def test_stretched_pose_singular(self, model):
        d = check_singular(jacobian(model, STRETCHED))
        assert d.singular and abs(d.det) < 1e-10

    def test_dexterous_not_singular(self, model):
        d = check_singular(jacobian(model, np.radians(DEXTEROUS_DEG)))
        assert not d.singular and d.condition < 100


class TestCheckSingular:
    def test_identity(self):
        d = check_singular(np.eye(6))
        assert not d.singular and d.det == 1.0

    def test_zero_row(self):
        J = np.eye(6)
        J[2] = 0
        assert check_singular(J).singular

    def test_tiny_determinant(self):
        J = np.diag([1e-12, 1, 1, 1, 1, 1])
        d = check_singular(J)
        assert d.singular and d.det == pytest.approx(1e-12)

    def test_square_required(self):
        with pytest.raises(ValueError):
            check_singular(np.zeros((3, 6)))


class TestInverseKinematics:
    def test_fixed_point(self, model):
        q = np.radians(DEXTEROUS_DEG)
        assert np.array_equal(inverse_kinematics(model, forward_kinematics(model, q), seed=q), q)

    def test_round_trip(self, model):
        rng = np.random.default_rng(5)
        for q in well_conditioned(model, 100, 4):
            target = forward_kinematics(model, q)
            seed = q + 0.1 * rng.choice([-1.0, 1.0], 6)
            err = robot.pose_error(target, forward_kinematics(model, inverse_kinematics(model, target, seed)))
            assert np.linalg.norm(err[:3]) < 1e-6 and np.linalg.norm(err[3:]) < 1e-6

    def test_unreachable(self, model):
        target = robot.make_pose((10.0, 0.0, 0.0))
        with pytest.raises(IKError, match="IK failed") as info:
            inverse_kinematics(model, target, retries=1)
        assert info.value.residual > 8


class TestResolvedRate:
    def test_zero_velocity(self, model):
        assert np.all(resolved_rate(model, model.q0, np.zeros(6)) == 0)

    def test_homogeneous(self, model):
        v = np.random.default_rng(6).normal(size=6)
        assert np.array_equal(resolved_rate(model, model.q0, 2 * v), 2 * resolved_rate(model, model.q0, v))

    def test_residual(self, model):
        rng = np.random.default_rng(7)
        for q in well_conditioned(model, 30, 8):
            v = rng.normal(size=6)
            qd = resolved_rate(model, q, v)
            assert np.linalg.norm(jacobian(model, q) @ qd - v) < 1e-9

    def test_singular_raises(self, model):
        with pytest.raises(SingularConfigurationError) as info:
            resolved_rate(model, STRETCHED, np.ones(6))
        assert info.value.diagnosis.singular


class TestTransfer:
    def test_single_point(self, model):
        res = transfer_prototype(model, np.zeros((1, 3)))
        assert res.qd_path.shape == (0, 6) and res.feasible and res.suggested_scale == 1.0

    def test_feasible_prototype(self, model):
        res = transfer_prototype(model, segment(), trial_id="p")
        assert res.feasible and res.suggested_scale == 1.0 and not res.singular
        assert res.qd_path.shape == (len(segment()), 6)

    def test_path_starts_at_q0(self, model):
        world = robot.mount_path(model, segment(), None, model.q0)
        assert np.allclose(world[0], forward_kinematics(model, model.q0)[:3, 3])

    def test_velocity_follows_segment(self, model):
        res = transfer_prototype(model, segment())
        J_v = [jacobian(model, q)[:3] @ qd for q, qd in zip(res.q_path, res.qd_path)]
        assert np.abs(np.array(J_v) - res.cartesian_velocity).max() < 1e-9

    def test_half_speed_halves_rates(self, model):
        vel = finite_difference(robot.mount_path(model, segment(), None, model.q0), 1 / 60)
        full = transfer_velocities(model, vel, 1 / 60, integrate=False)
        half = transfer_velocities(model, vel / 2, 2 / 60, integrate=False)
        assert np.abs(half.qd_path - full.qd_path / 2).max() < 1e-9

    def test_time_step_convergence(self, model):
        def peaks(rate):
            traj = synth.generate_trial(synth.SynthSpec(1, 0.3, 1.0, rate=rate, contact_at=0.9))
            return transfer_prototype(model, traj.positions[: traj.contact + 1], dt=1 / rate).peak_qd_per_joint
        coarse, fine = peaks(60.0), peaks(120.0)
        assert np.all(np.abs(fine - coarse) <= 0.01 * np.abs(fine).max())

    def test_singular_start(self, model):
        res = transfer_velocities(model, np.tile([0.1, 0, 0], (20, 1)), q0=STRETCHED)
        assert res.singular and not res.feasible
        assert res.singular_flags.tolist() == [True]
        assert np.all(np.isnan(res.qd_path[0]))

    def test_q0_outside_limits(self, model):
        with pytest.raises(IKError, match="limits"):
            transfer_prototype(model, segment(), q0=np.full(6, 7.0))

    def test_limit_report(self):
        ok, s = robot.limit_report(np.array([1.0, 4.0, 0.0]), np.array([2.0, 2.0, 2.0]))
        assert not ok and s == 0.5


class TestScaleTask:
    def test_half_scale_halves_peak(self, model):
        fast = segment(D=0.3 * 2.6)
        res = transfer_prototype(model, fast)
        res.suggested_scale = 0.5
        scaled = scale_task(res)
        assert np.linalg.norm(scaled.velocities, axis=1).max() == pytest.approx(res.peak_cartesian_speed / 2)
        assert scaled.dt == pytest.approx(2 * res.dt)

    def test_feasible_is_identity(self, model):
        res = transfer_prototype(model, segment())
        scaled = scale_task(res)
        assert scaled.scale == 1.0 and np.array_equal(scaled.velocities, res.cartesian_velocity)

    @pytest.mark.parametrize("integrate", [True, False])
    def test_rerun_passes(self, model, integrate):
        fast = segment() * 100
        res = transfer_prototype(model, fast, integrate=integrate)
        assert not res.feasible and res.suggested_scale < 1
        scaled = scale_task(res)
        rerun = transfer_velocities(model, scaled.velocities, scaled.dt, res.q0, integrate=False)
        assert np.all(rerun.peak_qd_per_joint <= model.qd_limits * (1 + 1e-9))


class TestRobotConfig:
    def test_bundled(self, model):
        assert model.name == "generic6" and len(model.dh) == 6
        assert np.allclose(np.degrees(model.q0), DEXTEROUS_DEG)

    def test_missing_field(self, tmp_path):
        (tmp_path / "r.json").write_text(json.dumps({"dh": []}))
        with pytest.raises(ValueError, match="qd_limits_rad_s"):
            load_robot(tmp_path / "r.json")

    def test_bad_json(self, tmp_path):
        (tmp_path / "r.json").write_text("{")
        with pytest.raises(ValueError, match="not valid JSON"):
            load_robot(tmp_path / "r.json")

    def test_convention(self, tmp_path):
        cfg = json.loads((resources.files("skilltransfer") / "data/generic6.json").read_text())
        cfg["convention"] = "modified"
        with pytest.raises(ValueError, match="convention"):
            robot.robot_from_dict(cfg)

    def test_within_limits(self, model):
        assert model.within_limits(model.q0)
        assert not model.within_limits(np.full(6, 7.0))
