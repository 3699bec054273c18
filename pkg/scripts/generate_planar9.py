#!/usr/bin/env python3
"""Regenerate the PLANAR9 model fixture.

Solves for a double-support home posture with flat feet, slightly bent
knees, and the whole-robot center of mass exactly midway between the feet
(the bent arm shifts the CoM, so the hips end up slightly asymmetric).
Writes src/planarwbc/data/planar9.txt with full float precision.
"""

import pathlib
import sys

import numpy as np
from scipy.optimize import fsolve

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from planarwbc.model import (  # noqa: E402
    FramePlacement,
    JointSpec,
    Kinematics,
    LinkSpec,
    RobotModel,
    RobotState,
)

KNEE_BEND = 0.3  # rad, symmetric knee flexion of the home posture
ARM_HOME = {"arm_shoulder": 0.5, "arm_elbow": -1.0, "arm_wrist": 0.5}

LEG = dict(pos_min=-2.0, pos_max=2.0, vel_max=8.0,
           acc_min=-50.0, acc_max=50.0, tau_min=-150.0, tau_max=150.0)
ARM = dict(vel_max=8.0, acc_min=-50.0, acc_max=50.0, tau_min=-50.0, tau_max=50.0)


def rod(mass, length):
    return mass * length ** 2 / 12.0


def build_model() -> RobotModel:
    links = (
        LinkSpec("torso", 20.0, rod(20.0, 0.6), np.array([0.0, 0.3])),
        LinkSpec("l_thigh", 5.0, rod(5.0, 0.4), np.array([0.0, -0.2])),
        LinkSpec("l_shank", 4.0, rod(4.0, 0.4), np.array([0.0, -0.2])),
        LinkSpec("l_foot", 1.0, rod(1.0, 0.2), np.array([0.0, -0.05])),
        LinkSpec("r_thigh", 5.0, rod(5.0, 0.4), np.array([0.0, -0.2])),
        LinkSpec("r_shank", 4.0, rod(4.0, 0.4), np.array([0.0, -0.2])),
        LinkSpec("r_foot", 1.0, rod(1.0, 0.2), np.array([0.0, -0.05])),
        LinkSpec("arm_upper", 2.0, rod(2.0, 0.3), np.array([0.0, -0.15])),
        LinkSpec("arm_lower", 1.5, rod(1.5, 0.3), np.array([0.0, -0.15])),
        LinkSpec("arm_hand", 0.5, rod(0.5, 0.1), np.array([0.0, -0.05])),
    )
    joints = (
        JointSpec("l_hip", 0, 1, np.array([-0.1, 0.0]), "leg", **LEG),
        JointSpec("l_knee", 1, 2, np.array([0.0, -0.4]), "leg", **LEG),
        JointSpec("l_ankle", 2, 3, np.array([0.0, -0.4]), "leg", **LEG),
        JointSpec("r_hip", 0, 4, np.array([0.1, 0.0]), "leg", **LEG),
        JointSpec("r_knee", 4, 5, np.array([0.0, -0.4]), "leg", **LEG),
        JointSpec("r_ankle", 5, 6, np.array([0.0, -0.4]), "leg", **LEG),
        JointSpec("arm_shoulder", 0, 7, np.array([0.0, 0.6]), "arm",
                  pos_min=-2.6, pos_max=2.6, **ARM),
        JointSpec("arm_elbow", 7, 8, np.array([0.0, -0.3]), "arm",
                  pos_min=-2.6, pos_max=-0.1, **ARM),
        JointSpec("arm_wrist", 8, 9, np.array([0.0, -0.3]), "arm",
                  pos_min=-2.6, pos_max=2.6, **ARM),
    )
    contacts = (
        FramePlacement(3, np.array([-0.1, -0.05])),   # l_heel
        FramePlacement(3, np.array([0.1, -0.05])),    # l_toe
        FramePlacement(6, np.array([-0.1, -0.05])),   # r_heel
        FramePlacement(6, np.array([0.1, -0.05])),    # r_toe
    )
    return RobotModel(
        links=links, joints=joints, contact_points=contacts,
        hand_frame=FramePlacement(9, np.array([0.0, -0.1])),
        foot_frames=(FramePlacement(3, np.array([0.0, -0.05])),
                     FramePlacement(6, np.array([0.0, -0.05]))),
        friction_mu=0.7, gravity=9.81, floating=True, name="PLANAR9")


def home_angles(model, lh, rh):
    q = np.zeros(model.n_j)
    q[model.joint_index("l_hip")] = lh
    q[model.joint_index("l_knee")] = -KNEE_BEND
    q[model.joint_index("l_ankle")] = KNEE_BEND - lh     # flat left foot
    q[model.joint_index("r_hip")] = rh
    q[model.joint_index("r_knee")] = KNEE_BEND
    q[model.joint_index("r_ankle")] = -KNEE_BEND - rh    # flat right foot
    for name, angle in ARM_HOME.items():
        q[model.joint_index(name)] = angle
    return q


def solve_home(model):
    """Find (l_hip, r_hip, com_shift, base_z, half_stance) for the home pose."""

    def residuals(u):
        lh, rh, shift, base_z, half = u
        state = RobotState(np.array([0.0, base_z, 0.0]), home_angles(model, lh, rh),
                           np.zeros(model.n_v))
        kin = Kinematics(model, state)
        lf = kin.frame("left_foot")
        rf = kin.frame("right_foot")
        com_x = kin.com()[0][0]
        return [
            lf.position[0] - (shift - half),
            lf.position[1],
            rf.position[0] - (shift + half),
            rf.position[1],
            com_x - shift,
        ]

    guess = [0.15, -0.15, 0.01, 0.84, 0.1]
    sol = fsolve(residuals, guess, xtol=1e-13)
    resid = np.max(np.abs(residuals(sol)))
    if resid > 1e-12:
        raise RuntimeError(f"home posture residual too large: {resid:.3e}")
    return sol


def fmt(x):
    return format(float(x), ".17g")


def write_file(model, base_z, q_home, path):
    lines = [
        "# PLANAR9: planar floating-base biped with one arm (9 actuated joints)",
        "# units: length m, mass kg, inertia kg*m^2, angle rad, velocity rad/s,",
        "#        acceleration rad/s^2, torque N*m, gravity m/s^2",
        "# link    name mass inertia com_x com_z",
        "# joint   name group parent child anchor_x anchor_z pos_min pos_max"
        " vel_max acc_min acc_max tau_min tau_max",
        "# contact link offset_x offset_z",
        "# frame   name link offset_x offset_z angle",
        "# home posture: flat feet, bent knees, CoM centered between the feet",
        f"gravity {fmt(model.gravity)}",
        f"friction_mu {fmt(model.friction_mu)}",
        "floating true",
    ]
    for link in model.links:
        lines.append(f"link {link.name} {fmt(link.mass)} {fmt(link.inertia)} "
                     f"{fmt(link.com[0])} {fmt(link.com[1])}")
    for j in model.joints:
        lines.append(
            f"joint {j.name} {j.group} {model.links[j.parent].name} "
            f"{model.links[j.child].name} {fmt(j.anchor[0])} {fmt(j.anchor[1])} "
            f"{fmt(j.pos_min)} {fmt(j.pos_max)} {fmt(j.vel_max)} "
            f"{fmt(j.acc_min)} {fmt(j.acc_max)} {fmt(j.tau_min)} {fmt(j.tau_max)}")
    for cp in model.contact_points:
        lines.append(f"contact {model.links[cp.link].name} "
                     f"{fmt(cp.offset[0])} {fmt(cp.offset[1])}")
    lines.append(f"frame hand {model.links[model.hand_frame.link].name} "
                 f"{fmt(model.hand_frame.offset[0])} {fmt(model.hand_frame.offset[1])} 0")
    for name, fr in zip(("left_foot", "right_foot"), model.foot_frames):
        lines.append(f"frame {name} {model.links[fr.link].name} "
                     f"{fmt(fr.offset[0])} {fmt(fr.offset[1])} 0")
    lines.append(f"home_base 0 {fmt(base_z)} 0")
    for j, joint in enumerate(model.joints):
        lines.append(f"home_joint {joint.name} {fmt(q_home[j])}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main():
    model = build_model()
    lh, rh, shift, base_z, half = solve_home(model)
    q_home = home_angles(model, lh, rh)
    out = pathlib.Path(__file__).resolve().parents[1] / "src/planarwbc/data/planar9.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_file(model, base_z, q_home, out)

    state = RobotState(np.array([0.0, base_z, 0.0]), q_home, np.zeros(model.n_v))
    kin = Kinematics(model, state)
    print(f"wrote {out}")
    print(f"  hips: l={lh:.6f} r={rh:.6f}  base_z={base_z:.6f}")
    print(f"  stance half-width={half:.6f}  com_shift={shift:.6f}")
    print(f"  com={kin.com()[0]}  hand={kin.frame('hand').position}")


if __name__ == "__main__":
    main()
