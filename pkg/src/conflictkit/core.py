"""Trajectory domain model and elementary kinematic/consistency computations.

Tracks are sampled on a uniform 0.1 s grid. Missing timesteps are kept as
explicit gaps; operations that need a contiguous grid raise ``GapError``
instead of interpolating silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

#: sampling interval of the source recordings (10 Hz)
DT = 0.1
#: tolerance for snapping timestamps onto the 0.1 s grid
GRID_TOL = 1e-6


class InsufficientData(ValueError):
    """Operation needs more samples than the track provides."""


class GapError(ValueError):
    """Operation requires a contiguous 0.1 s grid but the track has gaps."""


class ValidationError(ValueError):
    """Input data violates a structural invariant."""


class AgentKind(str, Enum):
    AV = "AV"
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"
    CYCLIST = "cyclist"
    OTHER = "other"


#: kinds that count as a vehicle for pair eligibility and vehicle-only metrics
VEHICLE_KINDS = frozenset({AgentKind.AV, AgentKind.VEHICLE})


def _readonly(a) -> np.ndarray:
    out = np.asarray(a, dtype=float).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TrackPoint:
    """One timestamped 2-D kinematic state."""

    t: float
    x: float
    y: float
    vx: float
    vy: float
    heading: float

    def __post_init__(self):
        if self.t < 0 or abs(self.t / DT - round(self.t / DT)) > GRID_TOL / DT:
            raise ValidationError(f"t={self.t} is not on the 0.1 s grid")
        for name in ("x", "y", "vx", "vy", "heading"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} is not finite at t={self.t}")


@dataclass(frozen=True)
class Track:
    """Time-ordered motion of one agent, stored as aligned arrays."""

    agent_id: str
    agent_kind: AgentKind
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    heading: np.ndarray

    def __post_init__(self):
        for name in ("t", "x", "y", "vx", "vy", "heading"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        n = len(self.t)
        for name in ("x", "y", "vx", "vy", "heading"):
            if len(getattr(self, name)) != n:
                raise ValidationError("track arrays must have equal length")
        if n == 0:
            raise ValidationError("empty track")
        idx = np.round(self.t / DT)
        if np.any(self.t < -GRID_TOL) or np.any(np.abs(self.t - idx * DT) > GRID_TOL):
            raise ValidationError(f"track {self.agent_id}: timestamps off the 0.1 s grid")
        if np.any(np.diff(idx) < 1):
            raise ValidationError(f"track {self.agent_id}: timestamps not strictly increasing")
        for name in ("x", "y", "vx", "vy"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"track {self.agent_id}: non-finite {name}")

    @classmethod
    def from_points(cls, agent_id: str, agent_kind: AgentKind, points) -> "Track":
        pts = list(points)
        return cls(
            agent_id,
            agent_kind,
            np.array([p.t for p in pts]),
            np.array([p.x for p in pts]),
            np.array([p.y for p in pts]),
            np.array([p.vx for p in pts]),
            np.array([p.vy for p in pts]),
            np.array([p.heading for p in pts]),
        )

    def __len__(self) -> int:
        return len(self.t)

    @property
    def points(self) -> tuple[TrackPoint, ...]:
        return tuple(
            TrackPoint(self.t[i], self.x[i], self.y[i], self.vx[i], self.vy[i], self.heading[i])
            for i in range(len(self))
        )

    @property
    def grid_index(self) -> np.ndarray:
        return np.round(self.t / DT).astype(int)

    @property
    def has_gaps(self) -> bool:
        return bool(np.any(np.diff(self.grid_index) > 1))

    @property
    def speed(self) -> np.ndarray:
        """Speed magnitude from the stored velocity components."""
        return np.hypot(self.vx, self.vy)

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def path_length(self) -> float:
        """Total polyline arc length of the position series."""
        return float(np.sum(np.hypot(np.diff(self.x), np.diff(self.y))))

    def is_vehicle(self) -> bool:
        return self.agent_kind in VEHICLE_KINDS

    def _require_contiguous(self, n_min: int, what: str):
        if len(self) < n_min:
            raise InsufficientData(f"{what}: track {self.agent_id} has {len(self)} points, needs {n_min}")
        if self.has_gaps:
            raise GapError(f"{what}: track {self.agent_id} has missing timesteps")


@dataclass(frozen=True)
class Scenario:
    """One recording: a bundle of tracks plus an optional lane graph."""

    scenario_id: str
    tracks: tuple[Track, ...]
    duration: float
    lane_graph: object | None = None  # mapproc.LaneGraph, kept untyped to avoid a cycle

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        n_av = sum(1 for tr in self.tracks if tr.agent_kind is AgentKind.AV)
        if n_av > 1:
            raise ValidationError(f"scenario {self.scenario_id}: {n_av} AV tracks, at most 1 allowed")
        if self.duration > 11.0 + GRID_TOL:
            raise ValidationError(f"scenario {self.scenario_id}: duration {self.duration} s exceeds 11 s")
        ids = [tr.agent_id for tr in self.tracks]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"scenario {self.scenario_id}: duplicate agent ids")

    def track(self, agent_id: str) -> Track:
        for tr in self.tracks:
            if tr.agent_id == agent_id:
                return tr
        raise KeyError(agent_id)

    @property
    def av_track(self) -> Track | None:
        for tr in self.tracks:
            if tr.agent_kind is AgentKind.AV:
                return tr
        return None


@dataclass(frozen=True)
class KinematicProfile:
    """Speed and its discrete derivatives on the track's time grid."""

    t: np.ndarray
    speed: np.ndarray
    acceleration: np.ndarray
    jerk: np.ndarray

    def __post_init__(self):
        for name in ("t", "speed", "acceleration", "jerk"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        n = len(self.t)
        if any(len(getattr(self, name)) != n for name in ("speed", "acceleration", "jerk")):
            raise ValidationError("profile arrays must have equal length")


def chord_speed(x: np.ndarray, y: np.ndarray, dt: float = DT) -> np.ndarray:
    """Central-difference speed of a position series on a uniform grid.

    Interior samples average the two adjacent chord lengths over 2*dt;
    the endpoints fall back to one-sided differences.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3:
        raise InsufficientData(f"chord_speed needs >= 3 points, got {len(x)}")
    seg = np.hypot(np.diff(x), np.diff(y))
    v = np.empty(len(x))
    v[1:-1] = (seg[:-1] + seg[1:]) / (2.0 * dt)
    v[0] = seg[0] / dt
    v[-1] = seg[-1] / dt
    return v


def position_based_speed(track: Track) -> np.ndarray:
    """Speed derived from the position series by central differences."""
    track._require_contiguous(3, "position_based_speed")
    return chord_speed(track.x, track.y, DT)


def speed_consistency_error(track: Track) -> float:
    """Mean absolute error between the given speed and the position-based speed."""
    vp = position_based_speed(track)
    return float(np.mean(np.abs(track.speed - vp)))


def length_inconsistency(track: Track) -> float:
    """|polyline arc length - integral of the given speed| in meters."""
    track._require_contiguous(2, "length_inconsistency")
    if track.has_gaps:
        raise GapError(f"length_inconsistency: track {track.agent_id} has missing timesteps")
    arc = track.path_length
    integral = float(np.trapezoid(track.speed, dx=DT))
    return abs(arc - integral)


def kinematic_profile(speed: np.ndarray, t: np.ndarray) -> KinematicProfile:
    """Acceleration and jerk by repeated central differences of the speed."""
    speed = np.asarray(speed, dtype=float)
    t = np.asarray(t, dtype=float)
    if len(speed) != len(t):
        raise ValidationError("speed and t must have equal length")
    if len(speed) < 3:
        raise InsufficientData(f"kinematic_profile needs >= 3 samples, got {len(speed)}")
    steps = np.diff(t)
    if np.any(np.abs(steps - steps[0]) > GRID_TOL):
        raise GapError("kinematic_profile requires a uniform time grid")
    acc = np.gradient(speed, t)
    jerk = np.gradient(acc, t)
    return KinematicProfile(t=t, speed=speed, acceleration=acc, jerk=jerk)
