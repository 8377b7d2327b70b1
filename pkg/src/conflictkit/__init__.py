"""conflictkit: two-agent conflict-resolution extraction and assessment.

Takes multi-agent trajectory logs recorded at 10 Hz, selects pairs of road
agents that resolve a crossing conflict, repairs and smooths the raw motion
data, classifies the conflict regime, and computes surrogate safety measures
(PET, PSD) together with the minimum recurrent clearance time (MRCT)
efficiency measure.
"""

from conflictkit.core import (
    AgentKind,
    KinematicProfile,
    Scenario,
    Track,
    TrackPoint,
)

__all__ = [
    "AgentKind",
    "KinematicProfile",
    "Scenario",
    "Track",
    "TrackPoint",
]

__version__ = "0.1.0"
