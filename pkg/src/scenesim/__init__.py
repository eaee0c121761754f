"""Driving-scene editing simulator: collaborative-agent edits over a lane
map, exposure-normalized HDR rendering, lighting estimation, text-to-motion
planning, and depth-tested compositing."""

__version__ = "0.1.0"

from .scene import (EditAction, EditConfig, LaneMap, LaneNode, Pose6D,
                    SceneState, Trajectory, validate_scene)  # noqa: F401
from .orchestrator import Session, run_command  # noqa: F401
