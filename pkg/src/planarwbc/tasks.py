"""Task layer: errors, critically damped PD targets, reference trajectories.

A task regulates a function of the configuration (hand pose, CoM, posture,
foot poses) or of the contact forces to a target. Kinematic task errors use
plain subtraction on positions and wrapped differences on angles. Each task
linearizes to rows over the stacked decision variable x = [qdd, f_contact]:
residual = A x - b, with per-row weights carried separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Kinematics, RobotModel, RobotState, wrap_angle

HAND = "hand_pose"
COM = "com"
POSTURE = "posture"
FOOT_LEFT = "foot_left"
FOOT_RIGHT = "foot_right"
FORCE_REG = "force_reg"

# canonical stacking order: objectives first, then the foot equalities
KIND_ORDER = (HAND, COM, POSTURE, FORCE_REG, FOOT_LEFT, FOOT_RIGHT)

OBJECTIVE = "objective"
EQUALITY = "equality-constraint"

# velocity damper defaults: influence zone, safety margin [rad], gain [1/s]
DAMPER_XI = 1.0
DAMPER_INFLUENCE = 0.2
DAMPER_SAFETY = 0.02


class TaskError(ValueError):
    """Raised for invalid task specifications or evaluations."""


class LimitInfeasibleError(RuntimeError):
    """Raised when joint limits admit no feasible acceleration."""


@dataclass(frozen=True)
class SquareTrajectory:
    """Axis-aligned square traversed at constant speed, fixed frame angle.

    Traversal starts at the bottom-left corner and goes up first; the
    diagonally opposite corner is reached at half the period. Velocity is
    piecewise constant and jumps at the corners; the acceleration
    feedforward is zero everywhere.
    """

    center: np.ndarray
    side: float
    period: float
    angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.side <= 0:
            raise TaskError(f"square side must be positive, got {self.side}")
        if self.period <= 0:
            raise TaskError(f"square period must be positive, got {self.period}")


def square_trajectory(traj: SquareTrajectory, t: float):
    """Reference (pos, angle, vel, acc) on the square perimeter at time t."""
    if t < 0:
        raise TaskError(f"trajectory time must be non-negative, got {t}")
    s = traj.side
    half = 0.5 * s
    speed = 4.0 * s / traj.period
    u = (t % traj.period) * speed
    edge = min(int(u // s), 3)
    local = u - edge * s
    corners = (
        traj.center + np.array([-half, -half]),  # bottom-left
        traj.center + np.array([-half, half]),   # top-left
        traj.center + np.array([half, half]),    # top-right
        traj.center + np.array([half, -half]),   # bottom-right
    )
    dirs = (np.array([0.0, 1.0]), np.array([1.0, 0.0]),
            np.array([0.0, -1.0]), np.array([-1.0, 0.0]))
    pos = corners[edge] + dirs[edge] * local
    vel = dirs[edge] * speed
    return pos, traj.angle, vel, np.zeros(2)


@dataclass(frozen=True)
class TaskSpec:
    """One controller task.

    row_weights folds the task weight and any per-row shaping into a single
    vector; gain is the PD stiffness for kinematic tasks and None for the
    force-regularization task.
    """

    kind: str
    mode: str
    gain: float | None
    row_weights: np.ndarray
    target: object

    def __post_init__(self):
        object.__setattr__(self, "row_weights",
                           np.asarray(self.row_weights, dtype=float))
        if self.kind not in KIND_ORDER:
            raise TaskError(f"unknown task kind {self.kind!r}")
        if self.kind == FORCE_REG:
            if self.gain is not None:
                raise TaskError("force regularization has no PD gain")
        elif self.gain is None or self.gain <= 0:
            raise TaskError(f"task {self.kind} needs a positive gain")
        expected_mode = EQUALITY if self.kind in (FOOT_LEFT, FOOT_RIGHT) else OBJECTIVE
        if self.mode != expected_mode:
            raise TaskError(f"task {self.kind} must have mode {expected_mode!r}")


@dataclass(frozen=True)
class TaskBlock:
    """Linearized task rows: residual = A x - b with x = [qdd, f_contact]."""

    A: np.ndarray
    b: np.ndarray
    row_weights: np.ndarray


def pd_target(e, edot, k: float):
    """Critically damped PD acceleration target k e + 2 sqrt(k) edot.

    The controller drives task accelerations toward the negative of this
    value, closing the loop as edd + 2 sqrt(k) edot + k e = 0.
    """
    if k <= 0:
        raise TaskError(f"PD gain must be positive, got {k}")
    return k * np.asarray(e, dtype=float) + 2.0 * math.sqrt(k) * np.asarray(edot, dtype=float)


def _configuration(model: RobotModel, state: RobotState) -> np.ndarray:
    if model.floating:
        return np.concatenate([state.base_pose, state.joint_pos])
    return state.joint_pos.copy()


def _config_diff(model: RobotModel, q: np.ndarray, q_ref: np.ndarray) -> np.ndarray:
    d = q - q_ref
    if model.floating:
        d[2] = wrap_angle(d[2])
        d[3:] = wrap_angle(d[3:])
    else:
        d = wrap_angle(d)
    return d


def _pose_task_data(kin: Kinematics, frame: str, target, t: float):
    fk = kin.frame(frame)
    pos_ref, ang_ref, vel_ref, acc_ref = target if not isinstance(target, SquareTrajectory) \
        else square_trajectory(target, t)
    e = np.array([fk.position[0] - pos_ref[0],
                  fk.position[1] - pos_ref[1],
                  wrap_angle(fk.angle - ang_ref)])
    edot = fk.jacobian @ kin.state.gen_vel - np.array([vel_ref[0], vel_ref[1], 0.0])
    gddot = np.array([acc_ref[0], acc_ref[1], 0.0])
    return e, edot, fk, gddot


def task_error(model: RobotModel, state: RobotState, spec: TaskSpec, t: float,
               kin: Kinematics | None = None):
    """Task error e and its rate edot at the given state and time."""
    if spec.kind == FORCE_REG:
        raise TaskError("force regularization has no kinematic error")
    if kin is None:
        kin = Kinematics(model, state)
    if spec.kind == HAND:
        e, edot, _, _ = _pose_task_data(kin, "hand", spec.target, t)
        return e, edot
    if spec.kind in (FOOT_LEFT, FOOT_RIGHT):
        frame = "left_foot" if spec.kind == FOOT_LEFT else "right_foot"
        e, edot, _, _ = _pose_task_data(kin, frame, spec.target, t)
        return e, edot
    if spec.kind == COM:
        pos, J, _ = kin.com()
        return pos - np.asarray(spec.target, dtype=float), J @ state.gen_vel
    if spec.kind == POSTURE:
        q = _configuration(model, state)
        return _config_diff(model, q, np.asarray(spec.target, dtype=float)), state.gen_vel.copy()
    raise TaskError(f"unknown task kind {spec.kind!r}")


def task_dim(model: RobotModel, kind: str) -> int:
    return {HAND: 3, COM: 2, POSTURE: model.n_v,
            FOOT_LEFT: 3, FOOT_RIGHT: 3, FORCE_REG: 2 * model.n_c}[kind]


def linearize_task(model: RobotModel, state: RobotState, spec: TaskSpec, t: float,
                   kin: Kinematics | None = None) -> TaskBlock:
    """Rows A x = b whose residual is the task acceleration mismatch.

    For kinematic tasks the qdd columns are the task Jacobian, force columns
    are zero, and b = -pd_target(e, edot) - Jdot qdot + target acceleration.
    The force-regularization block selects the contact forces with b = f*.
    """
    if kin is None:
        kin = Kinematics(model, state)
    nv, nf = model.n_v, 2 * model.n_c
    d = task_dim(model, spec.kind)
    if spec.row_weights.shape != (d,):
        raise TaskError(f"task {spec.kind} expects {d} row weights, "
                        f"got {spec.row_weights.shape}")
    A = np.zeros((d, nv + nf))
    if spec.kind == FORCE_REG:
        A[:, nv:] = np.eye(nf)
        b = np.asarray(spec.target, dtype=float).copy()
        return TaskBlock(A=A, b=b, row_weights=spec.row_weights)

    if spec.kind == POSTURE:
        q = _configuration(model, state)
        e = _config_diff(model, q, np.asarray(spec.target, dtype=float))
        edot = state.gen_vel
        A[:, :nv] = np.eye(nv)
        b = -pd_target(e, edot, spec.gain)
        return TaskBlock(A=A, b=b, row_weights=spec.row_weights)

    if spec.kind == COM:
        pos, J, jdqd = kin.com()
        e = pos - np.asarray(spec.target, dtype=float)
        edot = J @ state.gen_vel
        A[:, :nv] = J
        b = -pd_target(e, edot, spec.gain) - jdqd
        return TaskBlock(A=A, b=b, row_weights=spec.row_weights)

    frame = {HAND: "hand", FOOT_LEFT: "left_foot", FOOT_RIGHT: "right_foot"}[spec.kind]
    e, edot, fk, gddot = _pose_task_data(kin, frame, spec.target, t)
    A[:, :nv] = fk.jacobian
    b = -pd_target(e, edot, spec.gain) - fk.jdot_qdot + gddot
    return TaskBlock(A=A, b=b, row_weights=spec.row_weights)


def velocity_damper_bounds(model: RobotModel, state: RobotState, dt: float,
                           xi: float = DAMPER_XI,
                           influence: float = DAMPER_INFLUENCE,
                           safety: float = DAMPER_SAFETY):
    """Effective joint acceleration bounds from accel/velocity/position limits.

    Near a position limit the admissible velocity toward it is capped
    linearly over the influence zone, reaching zero at the safety margin;
    the cap converts to an acceleration bound over one control period.
    """
    if dt <= 0:
        raise TaskError(f"dt must be positive, got {dt}")
    if influence <= safety:
        raise TaskError("damper influence zone must exceed the safety margin")
    lo, hi = model.acc_limits()
    lo, hi = lo.copy(), hi.copy()
    qd = state.gen_vel[model.n_base:]
    for j, joint in enumerate(model.joints):
        hi[j] = min(hi[j], (joint.vel_max - qd[j]) / dt)
        lo[j] = max(lo[j], (-joint.vel_max - qd[j]) / dt)
        dist_up = joint.pos_max - state.joint_pos[j]
        if dist_up < influence:
            v_cap = xi * (dist_up - safety) / (influence - safety)
            hi[j] = min(hi[j], (v_cap - qd[j]) / dt)
        dist_lo = state.joint_pos[j] - joint.pos_min
        if dist_lo < influence:
            v_cap = -xi * (dist_lo - safety) / (influence - safety)
            lo[j] = max(lo[j], (v_cap - qd[j]) / dt)
        if lo[j] > hi[j]:
            raise LimitInfeasibleError(
                f"joint {joint.name!r}: no feasible acceleration "
                f"(bounds [{lo[j]:.3g}, {hi[j]:.3g}])")
    return lo, hi


def weight_share_forces(model: RobotModel) -> np.ndarray:
    """Desired contact forces: weight split equally, zero tangentials."""
    f = np.zeros(2 * model.n_c)
    if model.n_c:
        f[1::2] = model.total_mass * model.gravity / model.n_c
    return f


def standing_task_set(model: RobotModel, state0: RobotState, *,
                      square_side: float, square_period: float,
                      hand_gain: float, com_gain: float = 100.0,
                      posture_gain: float = 100.0, feet_gain: float = 100.0,
                      hand_weight: float = 2000.0, com_weight: float = 2000.0,
                      posture_weight: float = 1000.0,
                      posture_weight_arm: float = 1.0,
                      force_weight: float = 0.01) -> tuple[TaskSpec, ...]:
    """Default task set: track a hand square while standing still.

    Targets are anchored at the given state: the square's bottom-left corner
    is the current hand pose, the CoM and posture targets hold their current
    values, and the feet are pinned where they stand.
    """
    kin = Kinematics(model, state0)
    hand0 = kin.frame("hand")
    square = SquareTrajectory(
        center=hand0.position + 0.5 * square_side,
        side=square_side, period=square_period, angle=hand0.angle)

    posture_rows = np.full(model.n_v, posture_weight)
    for j in model.arm_joints():
        posture_rows[model.n_base + j] = posture_weight_arm

    lf = kin.frame("left_foot")
    rf = kin.frame("right_foot")

    def static_pose(fk):
        return fk.position.copy(), fk.angle, np.zeros(2), np.zeros(2)

    return (
        TaskSpec(HAND, OBJECTIVE, hand_gain, np.full(3, hand_weight), square),
        TaskSpec(COM, OBJECTIVE, com_gain, np.full(2, com_weight), kin.com()[0]),
        TaskSpec(POSTURE, OBJECTIVE, posture_gain, posture_rows,
                 _configuration(model, state0)),
        TaskSpec(FORCE_REG, OBJECTIVE, None, np.full(2 * model.n_c, force_weight),
                 weight_share_forces(model)),
        TaskSpec(FOOT_LEFT, EQUALITY, feet_gain, np.ones(3), static_pose(lf)),
        TaskSpec(FOOT_RIGHT, EQUALITY, feet_gain, np.ones(3), static_pose(rf)),
    )
