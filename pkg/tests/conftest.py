"""Shared fixtures: bundled PLANAR9 model and small hand-built test robots."""

import numpy as np
import pytest

from planarwbc.model import (
    FramePlacement,
    JointSpec,
    LinkSpec,
    RobotModel,
    RobotState,
    default_model,
)


@pytest.fixture(scope="session")
def planar9():
    model, home = default_model()
    return model, home


@pytest.fixture(scope="session")
def planar9_model(planar9):
    return planar9[0]


@pytest.fixture(scope="session")
def planar9_home(planar9):
    return planar9[1]


def _dummy_root():
    return LinkSpec("world", 1.0, 1.0, np.zeros(2))


def make_fixed_rod(mass=2.0, length=1.0, gravity=9.81, horizontal=True):
    """Fixed-base rod on one revolute joint at the world origin.

    The rod extends along +x of its own frame, so q=0 lays it horizontal
    and q=-pi/2 hangs it straight down.
    """
    rod = LinkSpec("rod", mass, mass * length ** 2 / 12.0,
                   np.array([length / 2.0, 0.0]))
    joint = JointSpec("pivot", 0, 1, np.zeros(2), pos_min=-3.0, pos_max=3.0)
    model = RobotModel(
        links=(_dummy_root(), rod), joints=(joint,),
        hand_frame=FramePlacement(1, np.array([length, 0.0])),
        gravity=gravity, floating=False, name="rod")
    q0 = 0.0 if horizontal else -np.pi / 2.0
    state = RobotState(np.zeros(3), np.array([q0]), np.zeros(1))
    return model, state


def make_vertical_link(length=1.0, mass=1.0):
    """Fixed-base link extending +z, tip frame at its end."""
    link = LinkSpec("link", mass, mass * length ** 2 / 12.0,
                    np.array([0.0, length / 2.0]))
    joint = JointSpec("pivot", 0, 1, np.zeros(2), pos_min=-3.0, pos_max=3.0)
    model = RobotModel(
        links=(_dummy_root(), link), joints=(joint,),
        hand_frame=FramePlacement(1, np.array([0.0, length])),
        floating=False, name="vertical-link")
    return model


def make_double_pendulum(gravity=9.81):
    """Fixed-base two-link pendulum, both links extending -z of their frames."""
    l1 = LinkSpec("upper", 1.2, 1.2 * 0.8 ** 2 / 12.0, np.array([0.0, -0.4]))
    l2 = LinkSpec("lower", 0.7, 0.7 * 0.6 ** 2 / 12.0, np.array([0.0, -0.3]))
    joints = (
        JointSpec("j0", 0, 1, np.zeros(2), pos_min=-3.1, pos_max=3.1),
        JointSpec("j1", 1, 2, np.array([0.0, -0.8]), pos_min=-3.1, pos_max=3.1),
    )
    return RobotModel(links=(_dummy_root(), l1, l2), joints=joints,
                      gravity=gravity, floating=False, name="double-pendulum")


def make_single_link_floating(mass=3.0):
    """Floating single rigid body, no joints."""
    link = LinkSpec("body", mass, 0.05, np.array([0.1, -0.2]))
    return RobotModel(links=(link,), joints=(), floating=True, name="free-body")


def random_state(model, rng, pos_scale=0.8, vel_scale=2.0):
    """Random state with angles clear of the wrap boundary."""
    base = np.zeros(3)
    if model.floating:
        base = rng.uniform(-0.5, 0.5, size=3)
    joints = np.array([
        rng.uniform(max(j.pos_min, -pos_scale), min(j.pos_max, pos_scale))
        for j in model.joints])
    vel = rng.uniform(-vel_scale, vel_scale, size=model.n_v)
    return RobotState(base_pose=base, joint_pos=joints, gen_vel=vel)
