"""6-DOF serial arm kinematics and resolved-rate transfer of Cartesian velocity.

Kinematics use the standard (distal) Denavit-Hartenberg convention with all
revolute joints. Joint rates reproducing an end-effector spatial velocity
``v = (vx, vy, vz, wx, wy, wz)`` come from solving ``J(q) qd = v`` at each
step, after gating on a singularity check.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import kernels
from .trajectory import Trajectory, finite_difference, resample_uniform

logger = logging.getLogger(__name__)

N_JOINTS = 6
DET_THRESHOLD = 1e-10
COND_THRESHOLD = 1e8
DEFAULT_DT = 1.0 / 60.0
# demonstration axes (x mediolateral, y vertical, z anteroposterior) -> robot world (z up, x forward)
DEMO_TO_ROBOT_RPY_DEG = (90.0, 0.0, 90.0)


class SingularConfigurationError(RuntimeError):
    def __init__(self, diagnosis: "SingularityDiagnosis"):
        super().__init__(f"singular Jacobian (det={diagnosis.det:.3e}, cond={diagnosis.condition:.3e})")
        self.diagnosis = diagnosis


class IKError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class DHRow:
    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0
    joint_type: str = "revolute"

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.alpha, self.d, self.theta_offset)):
            raise ValueError("DH parameters must be finite")
        if self.joint_type != "revolute":
            raise ValueError("only revolute joints are supported")


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation ``Rz(yaw) Ry(pitch) Rx(roll)``, angles in radians."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def make_pose(xyz=(0.0, 0.0, 0.0), rpy_deg=(0.0, 0.0, 0.0)) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = rpy_matrix(*np.radians(rpy_deg))
    T[:3, 3] = xyz
    return T


@dataclass(frozen=True, eq=False)
class RobotModel:
    name: str
    dh: tuple[DHRow, ...]
    qd_limits: np.ndarray
    q_limits: np.ndarray
    base_pose: np.ndarray = field(default_factory=lambda: np.eye(4))
    q0: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))

    def __post_init__(self):
        if len(self.dh) != N_JOINTS:
            raise ValueError(f"robot {self.name!r}: exactly {N_JOINTS} joints required, got {len(self.dh)}")
        qd = np.asarray(self.qd_limits, dtype=float)
        ql = np.asarray(self.q_limits, dtype=float)
        base = np.asarray(self.base_pose, dtype=float)
        q0 = np.asarray(self.q0, dtype=float)
        if qd.shape != (N_JOINTS,) or np.any(~(qd > 0)):
            raise ValueError(f"robot {self.name!r}: qd_limits must be 6 positive values")
        if ql.shape != (N_JOINTS, 2) or np.any(ql[:, 0] > ql[:, 1]):
            raise ValueError(f"robot {self.name!r}: q_limits must be 6 [min, max] pairs")
        if base.shape != (4, 4):
            raise ValueError(f"robot {self.name!r}: base_pose must be 4x4")
        if q0.shape != (N_JOINTS,):
            raise ValueError(f"robot {self.name!r}: q0 must have 6 entries")
        dh_array = np.array([[r.a, r.alpha, r.d, r.theta_offset] for r in self.dh])
        for name, arr in (("qd_limits", qd), ("q_limits", ql), ("base_pose", base), ("q0", q0), ("_dh", dh_array)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def within_limits(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.q_limits[:, 0]) and np.all(q <= self.q_limits[:, 1]))


def robot_from_dict(cfg: dict) -> RobotModel:
    """Build a model from the JSON robot-config schema (angles in degrees, rates in rad/s)."""
    try:
        convention = cfg.get("convention", "standard")
        if convention != "standard":
            raise ValueError(f"unsupported DH convention {convention!r} (only 'standard')")
        rows = tuple(
            DHRow(float(r["a"]), math.radians(float(r["alpha_deg"])), float(r["d"]),
                  math.radians(float(r.get("theta_offset_deg", 0.0))))
            for r in cfg["dh"]
        )
        base = cfg.get("base_pose", {})
        return RobotModel(
            name=str(cfg.get("name", "robot")),
            dh=rows,
            qd_limits=np.asarray(cfg["qd_limits_rad_s"], dtype=float),
            q_limits=np.radians(np.asarray(cfg.get("q_limits_deg", [[-360, 360]] * N_JOINTS), dtype=float)),
            base_pose=make_pose(base.get("xyz", (0, 0, 0)), base.get("rpy_deg", (0, 0, 0))),
            q0=np.radians(np.asarray(cfg.get("q0_deg", [0.0] * N_JOINTS), dtype=float)),
        )
    except KeyError as exc:
        raise ValueError(f"robot config missing field {exc.args[0]!r}") from None


def load_robot(path: Union[str, Path, None] = None) -> RobotModel:
    """Load a robot config file; ``None`` loads the bundled ``generic6`` arm."""
    if path is None:
        text = resources.files("skilltransfer").joinpath("data/generic6.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"robot config is not valid JSON: {exc}") from None
    return robot_from_dict(cfg)


def forward_kinematics(model: RobotModel, q) -> np.ndarray:
    """World-frame end-effector pose (4x4)."""
    return kernels.dh_frames(model._dh, np.asarray(q, dtype=float), model.base_pose)[-1]


def jacobian(model: RobotModel, q) -> np.ndarray:
    """Geometric Jacobian in the world frame, rows ``(v, w)``."""
    return kernels.dh_jacobian(model._dh, np.asarray(q, dtype=float), model.base_pose)[1]


def rotation_vector(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix (log map)."""
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = 0.5 * np.linalg.norm(w)
    c = 0.5 * (np.trace(R) - 1.0)
    angle = math.atan2(s, c)
    if s > 1e-7:
        return w * (angle / (2.0 * s))
    if c > 0:
        return 0.5 * w
    # angle close to pi: axis from the symmetric part
    B = 0.5 * (R + np.eye(3))
    axis = np.sqrt(np.clip(np.diag(B), 0.0, None))
    i = int(np.argmax(axis))
    for j in range(3):
        if j != i:
            axis[j] = math.copysign(axis[j], B[i, j])
    return angle * axis / np.linalg.norm(axis)


def pose_error(target: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Twist-like error ``(dp, dphi)`` taking ``current`` to ``target``, world frame."""
    err = np.empty(6)
    err[:3] = target[:3, 3] - current[:3, 3]
    err[3:] = rotation_vector(target[:3, :3] @ current[:3, :3].T)
    return err


@dataclass(frozen=True)
class SingularityDiagnosis:
    singular: bool
    det: float
    condition: float


def check_singular(J, det_threshold: float = DET_THRESHOLD,
                   cond_threshold: float = COND_THRESHOLD) -> SingularityDiagnosis:
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("check_singular needs a square matrix")
    det = float(np.linalg.det(J))
    cond = float(np.linalg.cond(J))
    if not math.isfinite(cond):
        cond = math.inf
    return SingularityDiagnosis(abs(det) < det_threshold or cond > cond_threshold, det, cond)


def _within(err, tol_pos, tol_rot) -> bool:
    return bool(np.linalg.norm(err[:3]) < tol_pos and np.linalg.norm(err[3:]) < tol_rot)


def _dls_solve(model, target, q, tol_pos, tol_rot, max_iters):
    lam = 1e-3
    T = forward_kinematics(model, q)
    err = pose_error(target, T)
    cost = float(err @ err)
    for _ in range(max_iters):
        # polish well past the tolerance while steps still make progress
        if _within(err, 1e-3 * tol_pos, 1e-3 * tol_rot):
            return q, err, True
        J = jacobian(model, q)
        dq = J.T @ np.linalg.solve(J @ J.T + lam * lam * np.eye(6), err)
        q_new = np.clip(q + dq, model.q_limits[:, 0], model.q_limits[:, 1])
        err_new = pose_error(target, forward_kinematics(model, q_new))
        cost_new = float(err_new @ err_new)
        if cost_new < cost:
            q, err, cost = q_new, err_new, cost_new
            lam = max(lam * 0.1, 1e-9)
        elif _within(err, tol_pos, tol_rot):
            return q, err, True
        else:
            lam = min(lam * 10.0, 1e3)
    return q, err, _within(err, tol_pos, tol_rot)


def inverse_kinematics(model: RobotModel, target: np.ndarray, seed=None, tol_pos: float = 1e-6,
                       tol_rot: float = 1e-6, max_iters: int = 200, retries: int = 3) -> np.ndarray:
    """Damped-least-squares IK for a full 6-D pose target.

    Joint limits are enforced by clamping every iterate. If the solve from
    ``seed`` stalls, it is retried from deterministic perturbations of the seed.
    """
    target = np.asarray(target, dtype=float)
    seed = model.q0 if seed is None else np.asarray(seed, dtype=float)
    start = np.clip(seed, model.q_limits[:, 0], model.q_limits[:, 1])
    rng = np.random.default_rng(0)
    best_residual = math.inf
    for attempt in range(retries + 1):
        q, err, ok = _dls_solve(model, target, start.copy(), tol_pos, tol_rot, max_iters)
        if ok:
            return q
        best_residual = min(best_residual, float(np.linalg.norm(err)))
        start = np.clip(seed + rng.uniform(-0.5, 0.5, N_JOINTS), model.q_limits[:, 0], model.q_limits[:, 1])
    raise IKError("IK failed", best_residual)


def resolved_rate(model: RobotModel, q, v, J: Optional[np.ndarray] = None) -> np.ndarray:
    """Joint rates ``qd`` with ``J(q) qd = v``; raises on a singular Jacobian."""
    if J is None:
        J = jacobian(model, q)
    diagnosis = check_singular(J)
    if diagnosis.singular:
        raise SingularConfigurationError(diagnosis)
    return np.linalg.solve(J, np.asarray(v, dtype=float))


@dataclass(eq=False)
class TransferResult:
    """Joint-rate trajectory reproducing one prototype, plus its limit check.

    A singular step is kept with NaN joint rates and ends the trajectory.
    """

    trial_id: str
    times: np.ndarray
    q_path: np.ndarray
    qd_path: np.ndarray
    singular_flags: np.ndarray
    peak_qd_per_joint: np.ndarray
    feasible: bool
    suggested_scale: float
    cartesian_velocity: np.ndarray
    dt: float
    q0: np.ndarray
    integrate: bool = True

    @property
    def singular(self) -> bool:
        return bool(self.singular_flags.any())

    @property
    def peak_cartesian_speed(self) -> float:
        if self.cartesian_velocity.size == 0:
            return 0.0
        return float(np.linalg.norm(self.cartesian_velocity, axis=1).max())


def limit_report(peaks: np.ndarray, limits: np.ndarray) -> tuple[bool, float]:
    """Feasibility and the largest uniform velocity scale keeping every peak within its limit."""
    feasible = bool(np.all(peaks <= limits))
    moving = peaks > 0
    scale = float(min(1.0, np.min(limits[moving] / peaks[moving]))) if moving.any() else 1.0
    return feasible, scale


def transfer_velocities(model: RobotModel, velocities, dt: float = DEFAULT_DT, q0=None,
                        integrate: bool = True, trial_id: str = "") -> TransferResult:
    """Resolved-rate joint trajectory for a world-frame translational velocity series.

    Angular velocity is held at zero (fixed tool orientation). With
    ``integrate=False`` every step is solved at ``q0`` (single-step mode).
    """
    vel = np.asarray(velocities, dtype=float).reshape(-1, 3)
    q = (model.q0 if q0 is None else np.asarray(q0, dtype=float)).copy()
    q_start = q.copy()
    n = vel.shape[0]
    q_path = np.empty((n, N_JOINTS))
    qd_path = np.empty((n, N_JOINTS))
    flags = np.zeros(n, dtype=bool)
    twist = np.zeros(6)
    steps = n
    for k in range(n):
        q_path[k] = q
        J = jacobian(model, q)
        diagnosis = check_singular(J)
        if diagnosis.singular:
            logger.warning("%s: singular configuration at step %d (det=%.3e)", trial_id, k, diagnosis.det)
            flags[k] = True
            qd_path[k] = np.nan
            steps = k + 1
            break
        twist[:3] = vel[k]
        qd_path[k] = np.linalg.solve(J, twist)
        if integrate:
            q = q + qd_path[k] * dt
    q_path, qd_path, flags = q_path[:steps], qd_path[:steps], flags[:steps]
    finite = qd_path[~flags]
    peaks = np.abs(finite).max(axis=0) if finite.size else np.zeros(N_JOINTS)
    feasible, scale = limit_report(peaks, model.qd_limits)
    return TransferResult(
        trial_id=trial_id,
        times=np.arange(steps) * dt,
        q_path=q_path,
        qd_path=qd_path,
        singular_flags=flags,
        peak_qd_per_joint=peaks,
        feasible=feasible and not flags.any(),
        suggested_scale=scale,
        cartesian_velocity=vel[:steps],
        dt=dt,
        q0=q_start,
        integrate=integrate,
    )


def mount_path(model: RobotModel, positions, mounting: Optional[np.ndarray], q0) -> np.ndarray:
    """Rotate a demonstration path into the robot world frame and start it at ``FK(q0)``."""
    p = np.asarray(positions, dtype=float).reshape(-1, 3)
    R = (make_pose(rpy_deg=DEMO_TO_ROBOT_RPY_DEG) if mounting is None else np.asarray(mounting))[:3, :3]
    world = p @ R.T
    if world.shape[0]:
        world += forward_kinematics(model, q0)[:3, 3] - world[0]
    return world


def transfer_prototype(model: RobotModel, segment: Union[Trajectory, np.ndarray],
                       mounting: Optional[np.ndarray] = None, q0=None, dt: float = DEFAULT_DT,
                       integrate: bool = True, trial_id: Optional[str] = None) -> TransferResult:
    """Joint velocities needed to replay a prototype's end-effector path.

    ``segment`` is either a trajectory (resampled at ``dt``) or an ``(n, 3)``
    array of positions already sampled at ``dt``. The start configuration is
    confirmed by IK on the mounted path's first point before stepping.
    """
    if isinstance(segment, Trajectory):
        trial_id = segment.trial_id if trial_id is None else trial_id
        positions = resample_uniform(segment, 1.0 / dt).positions
    else:
        positions = np.asarray(segment, dtype=float).reshape(-1, 3)
    q0 = model.q0 if q0 is None else np.asarray(q0, dtype=float)
    if not model.within_limits(q0):
        raise IKError("start configuration outside joint limits", math.nan)
    world = mount_path(model, positions, mounting, q0)
    if world.shape[0] < 2:
        empty = np.empty((0, N_JOINTS))
        return TransferResult(trial_id or "", np.empty(0), empty, empty.copy(), np.zeros(0, bool),
                              np.zeros(N_JOINTS), True, 1.0, np.empty((0, 3)), dt, q0.copy(), integrate)
    start_pose = forward_kinematics(model, q0).copy()
    start_pose[:3, 3] = world[0]
    q_start = inverse_kinematics(model, start_pose, seed=q0)
    velocities = finite_difference(world, dt)
    return transfer_velocities(model, velocities, dt, q_start, integrate, trial_id or "")


@dataclass(frozen=True, eq=False)
class ScaledTask:
    """Prototype velocity profile slowed by ``scale`` (time dilated by ``1/scale``)."""

    velocities: np.ndarray
    dt: float
    scale: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.velocities.shape[0]) * self.dt


def scale_task(result: TransferResult) -> ScaledTask:
    """Scale the Cartesian velocity profile so the joint peaks fit the limits.

    Velocities shrink by ``suggested_scale`` and the time step grows by its
    inverse, so the traversed path is unchanged.
    """
    s = result.suggested_scale
    return ScaledTask(result.cartesian_velocity * s, result.dt / s, s)
