"""Planar floating-base rigid-body model: kinematics, dynamics, integration.

Bodies live in the x-z plane with gravity along -z. A robot is a tree of
links connected by revolute joints; the root link is either welded to the
world or carried by a planar floating base with pose (x, z, angle). Angles
follow the counterclockwise convention and are kept wrapped to (-pi, pi].

Generalized coordinates are ordered base DOFs first (x, z, angle for a
floating base, nothing for a fixed one), then joint angles in model order.
All public operations are pure functions over immutable model/state values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# 90-degree CCW rotation; ROT90 @ v is the planar analog of omega x v.
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


class ModelError(ValueError):
    """Raised for malformed robot models or model files."""


class UnknownFrameError(ModelError):
    """Raised when a frame id does not exist on the model."""


def wrap_angle(a):
    """Wrap an angle (or array of angles) to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), TWO_PI)


def rot2(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def cross2(a: np.ndarray, b: np.ndarray) -> float:
    """Planar cross product a x b (scalar, out-of-plane component)."""
    return a[0] * b[1] - a[1] * b[0]


@dataclass(frozen=True)
class LinkSpec:
    name: str
    mass: float
    inertia: float  # rotational inertia about the link COM [kg m^2]
    com: np.ndarray  # COM offset in the link frame [m]


@dataclass(frozen=True)
class JointSpec:
    """Revolute joint connecting link `parent` to link `child`.

    The child link frame sits at the joint anchor (given in parent-frame
    coordinates) and rotates by the joint angle relative to the parent.
    """

    name: str
    parent: int
    child: int
    anchor: np.ndarray
    group: str = "leg"  # "leg" or "arm"; arm joints get low posture weight
    pos_min: float = -2.8
    pos_max: float = 2.8
    vel_max: float = 8.0
    acc_min: float = -50.0
    acc_max: float = 50.0
    tau_min: float = -150.0
    tau_max: float = 150.0


@dataclass(frozen=True)
class FramePlacement:
    link: int
    offset: np.ndarray
    angle: float = 0.0


@dataclass(frozen=True)
class RobotModel:
    """Kinematic/dynamic description of a planar tree-structured robot."""

    links: tuple[LinkSpec, ...]
    joints: tuple[JointSpec, ...]
    contact_points: tuple[FramePlacement, ...] = ()
    hand_frame: FramePlacement | None = None
    foot_frames: tuple[FramePlacement, ...] = ()
    friction_mu: float = 0.7
    gravity: float = 9.81
    floating: bool = True
    fixed_base_pose: tuple[float, float, float] = (0.0, 0.0, 0.0)
    name: str = "robot"

    @property
    def n_j(self) -> int:
        return len(self.joints)

    @property
    def n_base(self) -> int:
        return 3 if self.floating else 0

    @property
    def n_v(self) -> int:
        return self.n_base + self.n_j

    @property
    def n_c(self) -> int:
        return len(self.contact_points)

    @property
    def total_mass(self) -> float:
        return sum(l.mass for l in self.links)

    def joint_index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise ModelError(f"no joint named {name!r}")

    def arm_joints(self) -> tuple[int, ...]:
        return tuple(i for i, j in enumerate(self.joints) if j.group == "arm")

    def acc_limits(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([j.acc_min for j in self.joints])
        hi = np.array([j.acc_max for j in self.joints])
        return lo, hi

    def torque_limits(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([j.tau_min for j in self.joints])
        hi = np.array([j.tau_max for j in self.joints])
        return lo, hi


def validate_model(model: RobotModel) -> None:
    """Check tree structure and physical parameters; raise ModelError if bad."""
    nl = len(model.links)
    if nl == 0:
        raise ModelError("model has no links")
    if len(model.joints) != nl - 1:
        raise ModelError("tree needs exactly one joint per non-root link")
    for i, joint in enumerate(model.joints):
        if joint.child != i + 1:
            raise ModelError(f"joint {joint.name!r} must drive link {i + 1}")
        if not 0 <= joint.parent < joint.child:
            raise ModelError(f"joint {joint.name!r} parent must precede child")
        if joint.pos_min >= joint.pos_max:
            raise ModelError(f"joint {joint.name!r} position limits out of order")
        if joint.acc_min >= joint.acc_max:
            raise ModelError(f"joint {joint.name!r} acceleration limits out of order")
        if joint.tau_min >= joint.tau_max:
            raise ModelError(f"joint {joint.name!r} torque limits out of order")
        if joint.vel_max <= 0:
            raise ModelError(f"joint {joint.name!r} velocity limit must be positive")
    for link in model.links:
        if link.mass <= 0 or link.inertia <= 0:
            raise ModelError(f"link {link.name!r} needs positive mass and inertia")
    if model.friction_mu <= 0:
        raise ModelError("friction coefficient must be positive")
    for cp in model.contact_points:
        if not 0 <= cp.link < nl:
            raise ModelError("contact point attached to unknown link")


@dataclass(frozen=True)
class RobotState:
    """Base pose (x, z, angle), joint angles, and generalized velocity.

    Angles are wrapped to (-pi, pi] on construction. The generalized
    velocity stacks base velocity (world-frame linear, then angular) ahead
    of the joint rates; for fixed-base models it holds joint rates only.
    """

    base_pose: np.ndarray
    joint_pos: np.ndarray
    gen_vel: np.ndarray

    def __post_init__(self):
        base = np.asarray(self.base_pose, dtype=float).copy()
        base[2] = wrap_angle(base[2])
        object.__setattr__(self, "base_pose", base)
        object.__setattr__(self, "joint_pos", wrap_angle(np.asarray(self.joint_pos, dtype=float)))
        object.__setattr__(self, "gen_vel", np.asarray(self.gen_vel, dtype=float).copy())

    @property
    def n_j(self) -> int:
        return self.joint_pos.shape[0]


@dataclass(frozen=True)
class FrameKinematics:
    """World pose of a frame with its velocity mapping.

    jacobian maps generalized velocity to the planar twist (vx, vz, omega);
    jdot_qdot is the acceleration bias term (frame acceleration at zero
    generalized acceleration). Columns of joints off the root-to-frame path
    are zero.
    """

    position: np.ndarray
    angle: float
    jacobian: np.ndarray
    jdot_qdot: np.ndarray

    @property
    def pose(self) -> tuple[np.ndarray, float]:
        return self.position, self.angle


class Kinematics:
    """One forward pass over the tree; serves all frame/dynamics queries.

    Building this once per control step and reusing it across tasks avoids
    repeating the tree sweep. All arrays are world-frame.
    """

    def __init__(self, model: RobotModel, state: RobotState):
        nb = model.n_base
        if state.joint_pos.shape[0] != model.n_j:
            raise ModelError(
                f"state has {state.joint_pos.shape[0]} joints, model has {model.n_j}")
        if state.gen_vel.shape[0] != model.n_v:
            raise ModelError(
                f"generalized velocity has size {state.gen_vel.shape[0]}, expected {model.n_v}")
        self.model = model
        self.state = state
        nl = len(model.links)

        base = state.base_pose if model.floating else np.asarray(model.fixed_base_pose, float)
        qd = state.gen_vel

        self.link_ang = np.zeros(nl)
        self.link_pos = np.zeros((nl, 2))
        self.link_w = np.zeros(nl)
        self.link_vel = np.zeros((nl, 2))
        # linear acceleration of each link origin at zero generalized accel
        self.link_bias = np.zeros((nl, 2))
        self.joint_anchor = np.zeros((model.n_j, 2))

        self.link_ang[0] = base[2]
        self.link_pos[0] = base[:2]
        if model.floating:
            self.link_vel[0] = qd[:2]
            self.link_w[0] = qd[2]

        for j, joint in enumerate(model.joints):
            par, ch = joint.parent, joint.child
            pa = self.link_pos[par] + rot2(self.link_ang[par]) @ joint.anchor
            rel = pa - self.link_pos[par]
            self.joint_anchor[j] = pa
            self.link_ang[ch] = self.link_ang[par] + state.joint_pos[j]
            self.link_pos[ch] = pa
            self.link_w[ch] = self.link_w[par] + qd[nb + j]
            self.link_vel[ch] = self.link_vel[par] + self.link_w[par] * (ROT90 @ rel)
            # zero-accel pass: all angular accelerations vanish, only the
            # centripetal term survives
            self.link_bias[ch] = self.link_bias[par] - self.link_w[par] ** 2 * rel

        # per-link COM data (used by CoM queries, CRBA, and RNEA)
        self.com_pos = np.zeros((nl, 2))
        self.com_vel = np.zeros((nl, 2))
        self.com_bias = np.zeros((nl, 2))
        for i, link in enumerate(model.links):
            d = rot2(self.link_ang[i]) @ link.com
            self.com_pos[i] = self.link_pos[i] + d
            self.com_vel[i] = self.link_vel[i] + self.link_w[i] * (ROT90 @ d)
            self.com_bias[i] = self.link_bias[i] - self.link_w[i] ** 2 * d

        # DOF indices on the path from root to each link (base DOFs first)
        base_dofs = list(range(nb))
        paths: list[list[int]] = [list(base_dofs)]
        for j, joint in enumerate(model.joints):
            paths.append(paths[joint.parent] + [nb + j])
        self.path_dofs = [np.array(p, dtype=int) for p in paths]

    # -- frames ------------------------------------------------------------

    def frame_at(self, link: int, offset, angle: float = 0.0) -> FrameKinematics:
        model = self.model
        nb = model.n_base
        offset = np.asarray(offset, dtype=float)
        pf = self.link_pos[link] + rot2(self.link_ang[link]) @ offset
        ang = float(wrap_angle(self.link_ang[link] + angle))

        J = np.zeros((3, model.n_v))
        if model.floating:
            J[0, 0] = 1.0
            J[1, 1] = 1.0
            J[:2, 2] = ROT90 @ (pf - self.link_pos[0])
            J[2, 2] = 1.0
        for dof in self.path_dofs[link]:
            if dof < nb:
                continue
            j = dof - nb
            J[:2, dof] = ROT90 @ (pf - self.joint_anchor[j])
            J[2, dof] = 1.0

        rel = pf - self.link_pos[link]
        bias_lin = self.link_bias[link] - self.link_w[link] ** 2 * rel
        jdqd = np.array([bias_lin[0], bias_lin[1], 0.0])
        return FrameKinematics(position=pf, angle=ang, jacobian=J, jdot_qdot=jdqd)

    def frame(self, frame_id: str) -> FrameKinematics:
        place = resolve_frame(self.model, frame_id)
        return self.frame_at(place.link, place.offset, place.angle)

    def joint_center(self, joint: int) -> np.ndarray:
        return self.joint_anchor[joint]

    # -- aggregate quantities ----------------------------------------------

    def com(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        model = self.model
        masses = np.array([l.mass for l in model.links])
        total = masses.sum()
        pos = masses @ self.com_pos / total
        J = np.zeros((2, model.n_v))
        jdqd = masses @ self.com_bias / total
        for i, link in enumerate(model.links):
            Ji = self.frame_at(i, link.com).jacobian[:2]
            J += link.mass * Ji
        J /= total
        return pos, J, jdqd

    def mass_matrix(self) -> np.ndarray:
        """Generalized inertia via composite-rigid-body accumulation.

        Spatial quantities are referenced to the world origin so no frame
        transforms are needed: a planar twist is (v_origin, omega) and a
        planar wrench is (f, torque_about_origin).
        """
        model = self.model
        nb = model.n_base
        nl = len(model.links)
        nv = model.n_v

        inertia_o = np.zeros((nl, 3, 3))
        for i, link in enumerate(model.links):
            m = link.mass
            d = self.com_pos[i]
            msd = m * (ROT90 @ d)
            inertia_o[i, 0, 0] = m
            inertia_o[i, 1, 1] = m
            inertia_o[i, :2, 2] = msd
            inertia_o[i, 2, :2] = msd
            inertia_o[i, 2, 2] = link.inertia + m * (d @ d)

        composite = inertia_o.copy()
        for j in reversed(range(model.n_j)):
            joint = model.joints[j]
            composite[joint.parent] += composite[joint.child]

        phi = np.zeros((nv, 3))
        dof_link = np.zeros(nv, dtype=int)
        if model.floating:
            phi[0] = (1.0, 0.0, 0.0)
            phi[1] = (0.0, 1.0, 0.0)
            phi[2, :2] = -(ROT90 @ self.link_pos[0])
            phi[2, 2] = 1.0
        for j in range(model.n_j):
            dof = nb + j
            phi[dof, :2] = -(ROT90 @ self.joint_anchor[j])
            phi[dof, 2] = 1.0
            dof_link[dof] = model.joints[j].child

        M = np.zeros((nv, nv))
        for dof in range(nv):
            f = composite[dof_link[dof]] @ phi[dof]
            for anc in self.path_dofs[dof_link[dof]]:
                M[anc, dof] = M[dof, anc] = phi[anc] @ f
        return M

    def inverse_dynamics(self, qdd) -> np.ndarray:
        """Generalized forces realizing qdd (recursive Newton-Euler).

        Gravity enters through the standard fictitious base acceleration, so
        the result is M(q) qdd + h(q, qd) with gravity included in h.
        """
        model = self.model
        nb = model.n_base
        nl = len(model.links)
        qdd = np.asarray(qdd, dtype=float)
        if qdd.shape[0] != model.n_v:
            raise ModelError(f"qdd has size {qdd.shape[0]}, expected {model.n_v}")

        wdot = np.zeros(nl)
        acc = np.zeros((nl, 2))
        acc[0, 1] = model.gravity
        if model.floating:
            acc[0] += qdd[:2]
            wdot[0] = qdd[2]

        for j, joint in enumerate(model.joints):
            par, ch = joint.parent, joint.child
            rel = self.joint_anchor[j] - self.link_pos[par]
            a_anchor = acc[par] + wdot[par] * (ROT90 @ rel) - self.link_w[par] ** 2 * rel
            wdot[ch] = wdot[par] + qdd[nb + j]
            acc[ch] = a_anchor

        wrench = np.zeros((nl, 3))  # (fx, fz, torque about world origin)
        for i, link in enumerate(model.links):
            d = self.com_pos[i] - self.link_pos[i]
            a_com = acc[i] + wdot[i] * (ROT90 @ d) - self.link_w[i] ** 2 * d
            f = link.mass * a_com
            wrench[i, :2] = f
            wrench[i, 2] = link.inertia * wdot[i] + cross2(self.com_pos[i], f)

        subtree = wrench.copy()
        for j in reversed(range(model.n_j)):
            joint = model.joints[j]
            subtree[joint.parent] += subtree[joint.child]

        tau = np.zeros(model.n_v)
        if model.floating:
            tau[0] = subtree[0, 0]
            tau[1] = subtree[0, 1]
            # base rotation twist at the world origin is (-ROT90 @ p_base, 1)
            tau[2] = -(ROT90 @ self.link_pos[0]) @ subtree[0, :2] + subtree[0, 2]
        for j in range(model.n_j):
            phi_lin = -(ROT90 @ self.joint_anchor[j])
            ch = model.joints[j].child
            tau[nb + j] = phi_lin @ subtree[ch, :2] + subtree[ch, 2]
        return tau

    def energy(self) -> tuple[float, float]:
        """(kinetic, potential) energy of the full model."""
        model = self.model
        kin = 0.0
        pot = 0.0
        for i, link in enumerate(model.links):
            kin += 0.5 * link.mass * (self.com_vel[i] @ self.com_vel[i])
            kin += 0.5 * link.inertia * self.link_w[i] ** 2
            pot += link.mass * model.gravity * self.com_pos[i, 1]
        return kin, pot


def resolve_frame(model: RobotModel, frame_id: str) -> FramePlacement:
    """Map a frame id to its placement; raise UnknownFrameError otherwise.

    Supported ids: hand, left_foot, right_foot, contact_<i>,
    joint_center_<i>, link_com_<i>.
    """
    if frame_id == "hand":
        if model.hand_frame is None:
            raise UnknownFrameError(f"model {model.name!r} has no hand frame")
        return model.hand_frame
    if frame_id in ("left_foot", "right_foot"):
        idx = 0 if frame_id == "left_foot" else 1
        if len(model.foot_frames) <= idx:
            raise UnknownFrameError(f"model {model.name!r} has no {frame_id} frame")
        return model.foot_frames[idx]
    for prefix, count, make in (
        ("contact_", model.n_c, lambda i: model.contact_points[i]),
        ("joint_center_", model.n_j,
         lambda i: FramePlacement(model.joints[i].child, np.zeros(2))),
        ("link_com_", len(model.links),
         lambda i: FramePlacement(i, model.links[i].com)),
    ):
        if frame_id.startswith(prefix):
            tail = frame_id[len(prefix):]
            if tail.isdigit() and int(tail) < count:
                return make(int(tail))
            raise UnknownFrameError(f"unknown frame id: {frame_id!r}")
    raise UnknownFrameError(f"unknown frame id: {frame_id!r}")


# -- public operations -----------------------------------------------------


def forward_kinematics(model: RobotModel, state: RobotState, frame: str) -> FrameKinematics:
    """Pose, Jacobian, and acceleration bias of a named frame."""
    return Kinematics(model, state).frame(frame)


def mass_matrix(model: RobotModel, state: RobotState) -> np.ndarray:
    """Symmetric positive-definite generalized inertia matrix."""
    return Kinematics(model, state).mass_matrix()


def bias_forces(model: RobotModel, state: RobotState) -> np.ndarray:
    """Coriolis/centrifugal plus gravity terms h(q, qd)."""
    return Kinematics(model, state).inverse_dynamics(np.zeros(model.n_v))


def inverse_dynamics(model: RobotModel, state: RobotState, qdd) -> np.ndarray:
    """Generalized forces M qdd + h for a contact-free motion."""
    return Kinematics(model, state).inverse_dynamics(qdd)


def com(model: RobotModel, state: RobotState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center of mass position, its 2 x n_v Jacobian, and Jdot qdot term."""
    return Kinematics(model, state).com()


def integrate(state: RobotState, qdd, dt: float) -> RobotState:
    """Semi-implicit Euler step: update velocity first, then positions."""
    qdd = np.asarray(qdd, dtype=float)
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not np.all(np.isfinite(qdd)):
        raise ValueError("non-finite generalized acceleration")
    n_base = state.gen_vel.shape[0] - state.joint_pos.shape[0]
    vel = state.gen_vel + qdd * dt
    base = state.base_pose.copy()
    if n_base == 3:
        base = base + vel[:3] * dt
    joints = state.joint_pos + vel[n_base:] * dt
    return RobotState(base_pose=base, joint_pos=joints, gen_vel=vel)


def total_energy(model: RobotModel, state: RobotState) -> float:
    kin, pot = Kinematics(model, state).energy()
    return kin + pot


# -- model file format -------------------------------------------------------
#
# Plain text, one record per line, '#' comments. Units are stated in the
# file header. Records:
#   gravity <m/s^2>           friction_mu <->          floating <true|false>
#   link <name> <mass kg> <inertia kg*m^2> <com_x m> <com_z m>
#   joint <name> <group> <parent> <child> <ax m> <az m> \
#         <pos_min rad> <pos_max rad> <vel_max rad/s> \
#         <acc_min rad/s^2> <acc_max rad/s^2> <tau_min N*m> <tau_max N*m>
#   contact <link> <ox m> <oz m>
#   frame <hand|left_foot|right_foot> <link> <ox m> <oz m> <angle rad>
#   home_base <x m> <z m> <angle rad>
#   home_joint <name> <angle rad>


def load_model_file(path) -> tuple[RobotModel, RobotState]:
    """Parse a robot model file; returns the model and its home state."""
    links: list[LinkSpec] = []
    joints: list[JointSpec] = []
    contacts: list[FramePlacement] = []
    frames: dict[str, FramePlacement] = {}
    scalars = {"gravity": 9.81, "friction_mu": 0.7}
    floating = True
    home_base = np.zeros(3)
    home_joints: dict[str, float] = {}
    link_index: dict[str, int] = {}

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            kind, args = tok[0], tok[1:]
            try:
                if kind in scalars:
                    scalars[kind] = float(args[0])
                elif kind == "floating":
                    floating = args[0].lower() in ("true", "1", "yes")
                elif kind == "link":
                    link_index[args[0]] = len(links)
                    links.append(LinkSpec(
                        name=args[0], mass=float(args[1]), inertia=float(args[2]),
                        com=np.array([float(args[3]), float(args[4])])))
                elif kind == "joint":
                    name, group, parent, child = args[0], args[1], args[2], args[3]
                    nums = [float(v) for v in args[4:]]
                    joints.append(JointSpec(
                        name=name, parent=link_index[parent], child=link_index[child],
                        anchor=np.array(nums[0:2]), group=group,
                        pos_min=nums[2], pos_max=nums[3], vel_max=nums[4],
                        acc_min=nums[5], acc_max=nums[6],
                        tau_min=nums[7], tau_max=nums[8]))
                elif kind == "contact":
                    contacts.append(FramePlacement(
                        link=link_index[args[0]],
                        offset=np.array([float(args[1]), float(args[2])])))
                elif kind == "frame":
                    frames[args[0]] = FramePlacement(
                        link=link_index[args[1]],
                        offset=np.array([float(args[2]), float(args[3])]),
                        angle=float(args[4]))
                elif kind == "home_base":
                    home_base = np.array([float(v) for v in args[:3]])
                elif kind == "home_joint":
                    home_joints[args[0]] = float(args[1])
                else:
                    raise ModelError(f"unknown record {kind!r}")
            except (IndexError, KeyError, ValueError) as exc:
                raise ModelError(f"{path}:{lineno}: bad record: {exc}") from exc

    model = RobotModel(
        links=tuple(links), joints=tuple(joints),
        contact_points=tuple(contacts),
        hand_frame=frames.get("hand"),
        foot_frames=tuple(f for f in (frames.get("left_foot"), frames.get("right_foot"))
                          if f is not None),
        friction_mu=scalars["friction_mu"], gravity=scalars["gravity"],
        floating=floating, name=str(path))
    validate_model(model)

    q0 = np.zeros(model.n_j)
    for name, angle in home_joints.items():
        q0[model.joint_index(name)] = angle
    home = RobotState(base_pose=home_base, joint_pos=q0,
                      gen_vel=np.zeros(model.n_v))
    return model, home


def planar9_path() -> str:
    """Path of the bundled default model file."""
    from importlib.resources import files

    return str(files("planarwbc").joinpath("data/planar9.txt"))


def default_model() -> tuple[RobotModel, RobotState]:
    """Load the bundled 9-joint planar biped-with-arm model."""
    return load_model_file(planar9_path())
