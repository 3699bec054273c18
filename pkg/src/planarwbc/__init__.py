"""Planar whole-body QP control testbed.

A desk-scale study platform for how QP solution accuracy and stale QP
matrices affect task tracking on a planar floating-base robot: rigid-body
model, task layer, canonical QP assembly, a dual active-set solver with a
reusable factorization cache, a closed-loop simulator, and a benchmark CLI.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    RobotModel,
    RobotState,
    FrameKinematics,
    Kinematics,
    default_model,
    load_model_file,
)
