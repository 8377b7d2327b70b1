"""Quality gates on vehicle kinematics and conflict-regime classification."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from conflictkit.core import (
    DT,
    InsufficientData,
    KinematicProfile,
    Track,
    kinematic_profile,
    speed_consistency_error,
)
from conflictkit.geometry import ConflictPoint


class DirectionUndefined(ValueError):
    """A static agent has no usable direction vector."""


@dataclass(frozen=True)
class AnomalyLimits:
    """Kinematic plausibility constraints for vehicle trajectories."""

    acc_min: float = -8.0     # m/s^2
    acc_max: float = 5.0      # m/s^2
    jerk_abs: float = 15.0    # m/s^3
    jsi_window: float = 1.0   # s, jerk sign may reverse at most once inside
    jerk_deadband: float = 0.05  # m/s^3, suppresses numerical sign chatter


@dataclass(frozen=True)
class AnomalyFlags:
    """Per-sample constraint violations for one kinematic profile."""

    acc: np.ndarray
    jerk: np.ndarray
    jsi: np.ndarray


@dataclass(frozen=True)
class AnomalyReport:
    """Aggregate anomaly shares over a set of conflicting vehicles."""

    delta_v: float   # m/s, mean speed/position consistency error
    acc_pct: float
    jerk_pct: float
    jsi_pct: float
    n_tracks: int = 0

    def __post_init__(self):
        for name in ("acc_pct", "jerk_pct", "jsi_pct"):
            val = getattr(self, name)
            if not 0.0 <= val <= 100.0:
                raise ValueError(f"{name}={val} outside [0, 100]")


class Motion(str, Enum):
    P = "P"  # parallel
    C = "C"  # crossing
    O = "O"  # opposite


class Side(str, Enum):
    LEFT_TO_RIGHT = "L"
    RIGHT_TO_LEFT = "R"


@dataclass(frozen=True)
class RegimeLabel:
    """Relative motion before/after the conflict point plus approach side."""

    before: Motion
    after: Motion
    side: Side

    def __str__(self) -> str:
        return f"{self.before.value}>{self.after.value}:{self.side.value}"

    @classmethod
    def parse(cls, text: str) -> "RegimeLabel":
        pair, side = text.split(":")
        before, after = pair.split(">")
        return cls(Motion(before), Motion(after), Side(side))


ALL_REGIME_LABELS = tuple(
    RegimeLabel(b, a, s) for b in Motion for a in Motion for s in Side
)


# ---------------------------------------------------------------------------
# anomaly constraints


def anomaly_flags(profile: KinematicProfile, limits: AnomalyLimits | None = None) -> AnomalyFlags:
    """Per-sample flags for the acceleration range, jerk range, and JSI rule."""
    limits = limits or AnomalyLimits()
    acc = (profile.acceleration < limits.acc_min) | (profile.acceleration > limits.acc_max)
    jerk = np.abs(profile.jerk) > limits.jerk_abs
    jsi = _jsi_flags(profile.jerk, limits)
    return AnomalyFlags(acc=acc, jerk=jerk, jsi=jsi)


def _jsi_flags(jerk: np.ndarray, limits: AnomalyLimits) -> np.ndarray:
    """Samples inside any 1 s window holding more than one jerk sign reversal.

    A reversal is a strict sign change between consecutive samples whose
    jerk magnitude exceeds the deadband; deadband samples are transparent.
    """
    n = len(jerk)
    signs = np.sign(jerk)
    signs[np.abs(jerk) <= limits.jerk_deadband] = 0
    nz = np.flatnonzero(signs)
    reversal_at = nz[1:][signs[nz[1:]] != signs[nz[:-1]]]

    flags = np.zeros(n, dtype=bool)
    if len(reversal_at) < 2:
        return flags
    w = int(round(limits.jsi_window / DT))
    for a, b in zip(reversal_at[:-1], reversal_at[1:]):
        if b - a <= w:  # two reversals within one window: flag that span
            lo = max(0, min(a, b - w))
            hi = min(n, max(b + 1, a + w + 1))
            flags[lo:hi] = True
    return flags


def anomaly_report(tracks: list[Track], limits: AnomalyLimits | None = None) -> AnomalyReport:
    """Aggregate consistency error and anomaly percentages over vehicle tracks."""
    limits = limits or AnomalyLimits()
    if not tracks:
        raise InsufficientData("anomaly report over an empty corpus")
    total = 0
    counts = np.zeros(3)
    dvs = []
    for tr in tracks:
        dvs.append(speed_consistency_error(tr))
        profile = kinematic_profile(tr.speed, tr.t)
        flags = anomaly_flags(profile, limits)
        total += len(tr)
        counts += [flags.acc.sum(), flags.jerk.sum(), flags.jsi.sum()]
    return AnomalyReport(
        delta_v=float(np.mean(dvs)),
        acc_pct=100.0 * counts[0] / total,
        jerk_pct=100.0 * counts[1] / total,
        jsi_pct=100.0 * counts[2] / total,
        n_tracks=len(tracks),
    )


# ---------------------------------------------------------------------------
# regime classification

_PARALLEL_MAX = np.deg2rad(45.0)
_OPPOSITE_MIN = np.deg2rad(135.0)


def _mean_direction(track: Track, window: str) -> np.ndarray:
    if window == "initial":
        mask = track.t <= track.t[0] + 1.0 + 1e-9
    else:
        mask = track.t >= track.t[-1] - 1.0 - 1e-9
    hx = np.cos(track.heading[mask])
    hy = np.sin(track.heading[mask])
    # only samples that actually move carry direction information
    moving = track.speed[mask] > 0.1
    if np.any(moving):
        hx, hy = hx[moving], hy[moving]
    elif np.all(track.speed < 0.1):
        raise DirectionUndefined(
            f"track {track.agent_id} is static, {window} direction undefined"
        )
    d = np.array([hx.mean(), hy.mean()])
    norm = np.linalg.norm(d)
    if norm < 1e-9:
        raise DirectionUndefined(f"track {track.agent_id}: {window} headings cancel out")
    return d / norm


def _motion_class(d1: np.ndarray, d2: np.ndarray) -> Motion:
    theta = float(np.arccos(np.clip(np.dot(d1, d2), -1.0, 1.0)))
    if theta <= _PARALLEL_MAX:
        return Motion.P
    if theta >= _OPPOSITE_MIN:
        return Motion.O
    return Motion.C


def _position_at(track: Track, t: float) -> np.ndarray:
    return np.array([
        np.interp(t, track.t, track.x),
        np.interp(t, track.t, track.y),
    ])


def classify_regime(conflict: ConflictPoint, first: Track, second: Track) -> RegimeLabel:
    """P/C/O label before and after the conflict point, plus the approach side.

    Directions are the mean unit headings over the first/last second of each
    track; the side is taken from where the second passer sits relative to
    the first passer's initial direction at the first passage moment.
    """
    d1_init = _mean_direction(first, "initial")
    d2_init = _mean_direction(second, "initial")
    d1_end = _mean_direction(first, "ending")
    d2_end = _mean_direction(second, "ending")

    rel = _position_at(second, conflict.t_first) - _position_at(first, conflict.t_first)
    cross = d1_init[0] * rel[1] - d1_init[1] * rel[0]
    side = Side.LEFT_TO_RIGHT if cross > 0 else Side.RIGHT_TO_LEFT

    return RegimeLabel(
        before=_motion_class(d1_init, d2_init),
        after=_motion_class(d1_end, d2_end),
        side=side,
    )
