"""Trajectory repair and reconstruction.

The chain trusts the recorded speed over the recorded positions: speed
outliers are repaired first, then positions are rebuilt from the corrected
speed (fully for perception agents, boundary windows only for the AV), and
kinematics are derived from the result. Tracks that are too short or too
inconsistent are preserved untouched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from conflictkit.core import (
    DT,
    AgentKind,
    GapError,
    InsufficientData,
    KinematicProfile,
    Track,
    kinematic_profile,
    length_inconsistency,
)
from conflictkit.geometry import DegenerateGeometry, Polyline, track_polyline
from conflictkit.numerics import cumulative_integral, wavelet_denoise

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnhanceParams:
    """Thresholds and smoothing settings; defaults follow the source study."""

    accel_jump: float = 10.0        # m/s^2, outlier derivative threshold
    zero_window: float = 0.3        # s, neighbourhood of a zero-filled sample
    fit_window: float = 1.0         # s, support window for the cubic repair
    boundary_window: float = 1.5    # s, AV position reconstruction at each end
    min_duration: float = 5.0       # s, preserve-raw gate
    min_length: float = 8.0         # m, preserve-raw gate (background agents)
    max_inconsistency: float = 2.0  # m, preserve-raw gate
    wavelet_sigma: float = 0.5      # m/s
    wavelet_level: int = 3
    wavelet_moments: int = 6        # db6
    min_wavelet_samples: int = 16
    static_speed: float = 0.1       # m/s, below this a track counts as static


class EnhanceStatus(str, Enum):
    ENHANCED = "enhanced"
    PRESERVED_RAW = "preserved_raw"


class SkipReason(str, Enum):
    TOO_SHORT_DURATION = "too_short_duration"
    TOO_SHORT_LENGTH = "too_short_length"
    TOO_INCONSISTENT = "too_inconsistent"


@dataclass(frozen=True)
class EnhancedTrack:
    """Raw track plus its repaired speed, rebuilt positions, and kinematics."""

    base: Track
    corrected_vx: np.ndarray
    corrected_vy: np.ndarray
    corrected_speed: np.ndarray
    positions: np.ndarray  # (N, 2)
    heading: np.ndarray
    profile: KinematicProfile
    status: EnhanceStatus
    skip_reason: SkipReason | None = None
    unrepaired_runs: int = 0
    notes: tuple[str, ...] = ()

    @property
    def agent_id(self) -> str:
        return self.base.agent_id

    @property
    def agent_kind(self) -> AgentKind:
        return self.base.agent_kind

    def as_track(self) -> Track:
        """The enhanced motion repackaged as a plain Track."""
        return Track(
            agent_id=self.base.agent_id,
            agent_kind=self.base.agent_kind,
            t=self.base.t,
            x=self.positions[:, 0],
            y=self.positions[:, 1],
            vx=self.corrected_vx,
            vy=self.corrected_vy,
            heading=self.heading,
        )


# ---------------------------------------------------------------------------
# speed outliers


def detect_speed_outliers(speed: np.ndarray, params: EnhanceParams | None = None) -> np.ndarray:
    """Mask of speed samples with an abnormal derivative or zero-filled gaps.

    The zero rule flags every sample within +-zero_window of an exact zero,
    but is suppressed when the whole track is static (parked agents have
    legitimate zero speed).
    """
    params = params or EnhanceParams()
    v = np.asarray(speed, dtype=float)
    if len(v) < 3:
        raise InsufficientData("outlier detection needs >= 3 samples")
    mask = np.zeros(len(v), dtype=bool)

    jump = np.abs(np.diff(v)) / DT > params.accel_jump
    mask[:-1] |= jump
    mask[1:] |= jump

    if np.any(v >= params.static_speed):
        zeros = v == 0.0
        if np.any(zeros):
            w = int(round(params.zero_window / DT))
            kernel = np.ones(2 * w + 1, dtype=bool)
            mask |= np.convolve(zeros, kernel, mode="same").astype(bool)
    return mask


def _true_runs(mask: np.ndarray):
    edges = np.flatnonzero(np.diff(np.concatenate([[False], mask, [False]]).astype(int)))
    return list(zip(edges[::2], edges[1::2]))  # [start, stop) pairs


def repair_outliers(speed: np.ndarray, mask: np.ndarray,
                    t: np.ndarray | None = None,
                    params: EnhanceParams | None = None) -> tuple[np.ndarray, int]:
    """Replace masked samples by a least-squares cubic fitted around each run.

    Support samples come from the unmasked neighbourhood within fit_window of
    the run. Runs with fewer than 4 support samples are left unrepaired;
    their count is returned alongside the repaired signal.
    """
    params = params or EnhanceParams()
    v = np.asarray(speed, dtype=float).copy()
    mask = np.asarray(mask, dtype=bool)
    if t is None:
        t = np.arange(len(v)) * DT
    t = np.asarray(t, dtype=float)
    unrepaired = 0
    for start, stop in _true_runs(mask):
        lo = t[start] - params.fit_window
        hi = t[stop - 1] + params.fit_window
        support = (~mask) & (t >= lo - 1e-9) & (t <= hi + 1e-9)
        if support.sum() < 4:
            unrepaired += 1
            continue
        t0 = 0.5 * (t[start] + t[stop - 1])
        coeffs = np.polyfit(t[support] - t0, v[support], 3)
        v[start:stop] = np.polyval(coeffs, t[start:stop] - t0)
    return v, unrepaired


# ---------------------------------------------------------------------------
# position reconstruction


def reconstruct_av_boundaries(track: Track, vx: np.ndarray, vy: np.ndarray,
                              params: EnhanceParams | None = None) -> np.ndarray:
    """Rebuild the first and last boundary window of positions from speed.

    Each boundary window is integrated (cumulative Simpson-family rule) from
    the nearest trusted interior anchor; interior positions are untouched.
    """
    params = params or EnhanceParams()
    k = int(round(params.boundary_window / DT))
    n = len(track)
    if n < 2 * k + 1:
        raise InsufficientData(
            f"track {track.agent_id}: {n} samples cannot anchor both boundary windows"
        )
    pos = track.positions.copy()
    # head: integrate backwards from the anchor at index k
    for comp, v in ((0, vx), (1, vy)):
        c = cumulative_integral(v[: k + 1], DT)
        pos[: k + 1, comp] = pos[k, comp] - (c[k] - c)
    # tail: integrate forwards from the anchor at index n-1-k
    for comp, v in ((0, vx), (1, vy)):
        c = cumulative_integral(v[n - 1 - k:], DT)
        pos[n - 1 - k:, comp] = pos[n - 1 - k, comp] + c
    return pos


def resegment_positions(track: Track, corrected_speed: np.ndarray) -> np.ndarray:
    """Re-space the raw polyline so arc steps follow the corrected speed.

    The raw polyline supplies the geometry; the corrected speed supplies the
    pacing. Consecutive points are separated (along the polyline) by the
    per-interval mean speed times the timestep, so the total arc length
    equals the integrated corrected speed.
    """
    poly, _ = track_polyline(track)  # raises DegenerateGeometry on static tracks
    v = np.asarray(corrected_speed, dtype=float)
    steps = 0.5 * (v[:-1] + v[1:]) * DT
    arcs = np.concatenate([[0.0], np.cumsum(steps)])
    return np.array([poly.point_at(s) for s in arcs])


def preserve_raw_gate(track: Track, is_conflicting: bool = False,
                      params: EnhanceParams | None = None) -> SkipReason | None:
    """First applicable skip reason, or None when the track is repairable."""
    params = params or EnhanceParams()
    if track.duration < params.min_duration:
        return SkipReason.TOO_SHORT_DURATION
    if not is_conflicting and track.path_length < params.min_length:
        return SkipReason.TOO_SHORT_LENGTH
    if track.has_gaps:
        return SkipReason.TOO_INCONSISTENT  # gaps cannot be verified, keep raw
    if length_inconsistency(track) > params.max_inconsistency:
        return SkipReason.TOO_INCONSISTENT
    return None


def smooth_av_speed(speed: np.ndarray, params: EnhanceParams | None = None) -> np.ndarray:
    """Wavelet-denoise an AV speed signal (db6, soft threshold, level 3)."""
    params = params or EnhanceParams()
    v = np.asarray(speed, dtype=float)
    if len(v) < params.min_wavelet_samples:
        log.warning("speed signal too short for wavelet smoothing (%d samples), left as-is", len(v))
        return v.copy()
    return wavelet_denoise(v, params.wavelet_sigma,
                           level=params.wavelet_level,
                           vanishing_moments=params.wavelet_moments)


def derive_heading(positions: np.ndarray, fallback: np.ndarray | None = None,
                   min_displacement: float = 0.01) -> np.ndarray:
    """Tangent direction of the trajectory from local chords.

    Where the local chord is shorter than min_displacement the last
    well-defined heading is held. A fully static trajectory falls back to
    the provided raw headings (and raises without a fallback).
    """
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    if n < 2:
        raise InsufficientData("derive_heading needs >= 2 points")
    chords = np.empty((n, 2))
    chords[0] = pos[1] - pos[0]
    chords[-1] = pos[-1] - pos[-2]
    chords[1:-1] = pos[2:] - pos[:-2]
    ok = np.hypot(chords[:, 0], chords[:, 1]) >= min_displacement
    if not np.any(ok):
        if fallback is not None:
            return np.asarray(fallback, dtype=float).copy()
        raise DegenerateGeometry("static trajectory has no tangent heading")
    heading = np.arctan2(chords[:, 1], chords[:, 0])
    # hold the last well-defined value; backfill before the first one
    idx = np.where(ok, np.arange(n), -1)
    idx = np.maximum.accumulate(idx)
    first = int(np.argmax(ok))
    idx[idx < 0] = first
    return heading[idx]


def _travel_direction(track: Track, outlier_mask: np.ndarray,
                      params: EnhanceParams) -> np.ndarray:
    """Direction of travel per sample from the raw velocity components.

    Samples flagged as outliers (or near-zero) borrow their direction by
    linear interpolation of the unwrapped angle over trusted neighbours;
    falls back to the recorded heading when nothing is trusted.
    """
    speed = track.speed
    trusted = (~outlier_mask) & (speed > params.static_speed)
    if not np.any(trusted):
        return track.heading.copy()
    theta = np.arctan2(track.vy, track.vx)
    idx = np.flatnonzero(trusted)
    unwrapped = np.unwrap(theta[idx])
    return np.interp(np.arange(len(track)), idx, unwrapped)


# ---------------------------------------------------------------------------
# full chain


def _preserved(track: Track, reason: SkipReason | None, notes=()) -> EnhancedTrack:
    speed = track.speed
    try:
        profile = kinematic_profile(speed, track.t)
    except (InsufficientData, GapError):
        n = len(track)
        profile = KinematicProfile(track.t, speed, np.zeros(n), np.zeros(n))
    return EnhancedTrack(
        base=track,
        corrected_vx=track.vx.copy(),
        corrected_vy=track.vy.copy(),
        corrected_speed=speed,
        positions=track.positions,
        heading=track.heading.copy(),
        profile=profile,
        status=EnhanceStatus.PRESERVED_RAW,
        skip_reason=reason,
        notes=tuple(notes),
    )


def enhance_track(track: Track, is_conflicting: bool = False,
                  params: EnhanceParams | None = None) -> EnhancedTrack:
    """Gate, repair, reconstruct, and re-derive kinematics for one track."""
    params = params or EnhanceParams()
    notes: list[str] = []

    reason = preserve_raw_gate(track, is_conflicting, params)
    if reason is not None:
        return _preserved(track, reason)

    # repair and smoothing act on the scalar speed: turning modulates the
    # velocity components with real signal that must not be mistaken for
    # an outlier or for noise
    mask = detect_speed_outliers(track.speed, params)
    speed, unrepaired = repair_outliers(track.speed, mask, track.t, params)
    if unrepaired:
        notes.append(f"{unrepaired} outlier run(s) left unrepaired")

    if track.agent_kind is AgentKind.AV:
        speed = smooth_av_speed(speed, params)
        direction = _travel_direction(track, mask, params)
        vx = speed * np.cos(direction)
        vy = speed * np.sin(direction)
        try:
            positions = reconstruct_av_boundaries(track, vx, vy, params)
        except InsufficientData:
            return _preserved(track, SkipReason.TOO_SHORT_DURATION,
                             notes=["cannot anchor boundary reconstruction"])
        heading = derive_heading(positions, fallback=track.heading)
    else:
        try:
            positions = resegment_positions(track, speed)
        except DegenerateGeometry:
            return _preserved(track, None, notes=["degenerate raw polyline"])
        heading = derive_heading(positions, fallback=track.heading)
        vx = speed * np.cos(heading)
        vy = speed * np.sin(heading)

    profile = kinematic_profile(speed, track.t)
    return EnhancedTrack(
        base=track,
        corrected_vx=vx,
        corrected_vy=vy,
        corrected_speed=speed,
        positions=positions,
        heading=heading,
        profile=profile,
        status=EnhanceStatus.ENHANCED,
        skip_reason=None,
        unrepaired_runs=unrepaired,
        notes=tuple(notes),
    )
