"""Tightly coupled lidar-inertial odometry and mapping, with a plane-world
simulator and an evaluation harness for desk-scale verification."""

from .geometry import Pose, compose, interpolate, retract

__all__ = ["Pose", "compose", "interpolate", "retract"]
__version__ = "0.1.0"
