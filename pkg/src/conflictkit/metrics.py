"""Safety and efficiency measures: PSD, deceleration timing, and MRCT.

MRCT (minimum recurrent clearance time) is the smallest period with which
the observed two-vehicle conflict resolution could repeat indefinitely under
alternate passing: the shifted copy of each vehicle must keep a critical
headway to its predecessor on the same stream, and the shifted first passer
must still be far enough from the conflict point when the current second
passer crosses it (critical gap).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from conflictkit.core import DT, Track, ValidationError, kinematic_profile
from conflictkit.geometry import ConflictPoint

#: default maximum acceptable deceleration magnitude for PSD, m/s^2
PSD_A_MAX = 3.35
#: speed guard below which PSD is undefined (division blow-up), m/s
PSD_SPEED_MIN = 0.5


class MrctNoSolution(ValueError):
    """Trajectory coverage too short to certify any candidate period."""


class MrctInfeasible(ValueError):
    """No period up to the search bound satisfies the constraints."""


class OffPathConflict(ValueError):
    """The conflict point does not lie on the track's polyline."""


@dataclass(frozen=True)
class CurvilinearProfile:
    """Signed arc length to the conflict point and speed, per timestamp.

    s is negative while approaching the conflict point and crosses zero at
    the passage time t_pass.
    """

    t: np.ndarray
    s: np.ndarray
    v: np.ndarray
    t_pass: float

    def __post_init__(self):
        for name in ("t", "s", "v"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.t) == len(self.s) == len(self.v)):
            raise ValidationError("curvilinear profile arrays must align")

    def s_at(self, t) -> np.ndarray:
        return np.interp(t, self.t, self.s)

    def v_at(self, t) -> np.ndarray:
        return np.interp(t, self.t, self.v)


@dataclass(frozen=True)
class MrctParams:
    """Critical headway/gap coefficients and search controls."""

    headway_slope: float = 2.0    # s, d_h(v) = slope*v + offset
    headway_offset: float = 8.0   # m
    gap_slope: float = 2.0        # s, d_g(v) = max(slope*v, floor)
    gap_floor: float = 8.0        # m
    search_resolution: float = 0.01  # s, coarse scan step
    search_max: float = 30.0      # s
    refine_resolution: float = 0.001  # s, bisection target

    def __post_init__(self):
        for name in ("headway_slope", "headway_offset", "gap_slope", "gap_floor",
                     "search_resolution", "search_max", "refine_resolution"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"MrctParams.{name} must be positive")


@dataclass(frozen=True)
class MetricsRecord:
    """All measures for one conflict case; absent values stay None."""

    pet: float
    min_sep: float
    psd_min: float | None = None
    max_decel: float | None = None
    decel_lead_time: float | None = None
    mrct: float | None = None
    pre_conflict: float | None = None
    flow: float | None = None
    mrct_failure: str | None = None  # "no_solution" / "infeasible" when absent

    def __post_init__(self):
        if self.mrct is not None:
            if self.mrct < self.pet - 1e-6:
                raise ValidationError("MRCT must not be smaller than PET")
            if self.pre_conflict is None or self.flow is None:
                raise ValidationError("mrct present requires pre_conflict and flow")


def critical_headway(v, params: MrctParams | None = None):
    """Speed-dependent minimum same-stream spacing d_h(v)."""
    params = params or MrctParams()
    return params.headway_slope * np.asarray(v, dtype=float) + params.headway_offset


def critical_gap(v, params: MrctParams | None = None):
    """Speed-dependent minimum cross-stream clearance d_g(v)."""
    params = params or MrctParams()
    return np.maximum(params.gap_slope * np.asarray(v, dtype=float), params.gap_floor)


# ---------------------------------------------------------------------------
# curvilinear profiles


def curvilinear_profile(track: Track, conflict: ConflictPoint,
                        off_path_tol: float = 0.5) -> CurvilinearProfile:
    """Signed arc length to the conflict point along the track's own path."""
    if track.agent_id == conflict.first_agent:
        t_pass = conflict.t_first
    elif track.agent_id == conflict.second_agent:
        t_pass = conflict.t_second
    else:
        raise ValidationError(f"track {track.agent_id} is not part of the conflict")

    pts = track.positions
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])

    target = np.asarray(conflict.location)
    best = (np.inf, 0.0)
    for i in range(len(seg)):
        if seg_len[i] < 1e-12:
            continue
        f = float(np.clip(np.dot(target - pts[i], seg[i]) / seg_len[i] ** 2, 0.0, 1.0))
        p = pts[i] + f * seg[i]
        d = float(np.hypot(*(p - target)))
        if d < best[0]:
            best = (d, cum[i] + f * seg_len[i])
    dist, arc_cp = best
    if dist > off_path_tol:
        raise OffPathConflict(
            f"conflict point {dist:.2f} m off the path of track {track.agent_id}"
        )
    return CurvilinearProfile(t=track.t, s=cum - arc_cp, v=track.speed, t_pass=t_pass)


# ---------------------------------------------------------------------------
# PSD and deceleration timing


def psd_min(second_profile: CurvilinearProfile, a_max: float = PSD_A_MAX) -> float | None:
    """Minimum proportion-of-stopping-distance of the second passer.

    Evaluated while approaching (s < 0) before its passage, only where the
    speed exceeds the guard. None when no sample qualifies.
    """
    p = second_profile
    valid = (p.t < p.t_pass) & (p.s < 0.0) & (p.v > PSD_SPEED_MIN)
    if not np.any(valid):
        return None
    stopping = p.v[valid] ** 2 / (2.0 * abs(a_max))
    return float(np.min(-p.s[valid] / stopping))


def decel_stats(second_profile: CurvilinearProfile) -> tuple[float, float] | None:
    """(most negative acceleration before passage, lead time to passage).

    Ties in the argmin break to the earliest sample. None without
    pre-passage samples.
    """
    p = second_profile
    mask = p.t < p.t_pass
    if not np.any(mask):
        return None
    prof = kinematic_profile(p.v, p.t)
    acc = prof.acceleration[mask]
    t_pre = p.t[mask]
    i = int(np.argmin(acc))
    return float(acc[i]), float(p.t_pass - t_pre[i])


# ---------------------------------------------------------------------------
# MRCT


def _feasible(dt_shift: float, first: CurvilinearProfile,
              second: CurvilinearProfile | None, params: MrctParams) -> bool:
    """Check the recurrence constraints for one candidate period."""
    # same-stream headway for the shifted first passer, for all t <= t_pass1
    for prof in (first,) if second is None else (first, second):
        t_hi = prof.t_pass
        ts = prof.t[(prof.t <= t_hi) & (prof.t - dt_shift >= prof.t[0] - 1e-9)]
        ts = np.append(ts, t_hi) if (t_hi - dt_shift) >= prof.t[0] - 1e-9 else ts
        if len(ts):
            gap = prof.s_at(ts) - prof.s_at(ts - dt_shift)
            if np.any(gap < critical_headway(prof.v_at(ts - dt_shift), params) - 1e-12):
                return False
    if second is not None:
        # cross-stream gap: the shifted first passer must still be short of
        # the conflict point by d_g when the current second passer crosses it
        t_eval = second.t_pass - dt_shift
        dist_to_go = -first.s_at(t_eval)
        if dist_to_go < float(critical_gap(first.v_at(t_eval), params)) - 1e-12:
            return False
    return True


def _evaluable(dt_shift: float, first: CurvilinearProfile,
               second: CurvilinearProfile | None) -> bool:
    if second is not None and second.t_pass - dt_shift < first.t[0] - 1e-9:
        return False
    if first.t_pass - dt_shift < first.t[0] - 1e-9:
        return False
    if second is not None and second.t_pass - dt_shift < second.t[0] - 1e-9:
        return False
    return True


def mrct(first: CurvilinearProfile, second: CurvilinearProfile | None,
         params: MrctParams | None = None) -> float:
    """Smallest recurrence period satisfying the headway and gap constraints.

    Coarse scan at search_resolution followed by bisection refinement to
    refine_resolution inside the bracketing interval. With ``second`` None
    the gap constraint is dropped and the result is the pure car-following
    clearance of the first passer.

    Raises MrctNoSolution when the profiles cannot certify any candidate,
    MrctInfeasible when nothing up to search_max works.
    """
    params = params or MrctParams()
    if second is not None:
        pre = second.t[second.t < second.t_pass - 1e-9]
        if len(pre) < 2:
            raise MrctNoSolution("second passer has no pre-conflict trajectory")
    if np.any(np.diff(first.t) > DT + 1e-6) or (
        second is not None and np.any(np.diff(second.t) > DT + 1e-6)
    ):
        raise MrctNoSolution("profile has missing segments")

    pet = 0.0 if second is None else second.t_pass - first.t_pass
    step = params.search_resolution
    lo = max(step, pet)  # MRCT >= PET by construction

    candidate = lo
    prev = None
    found = None
    while candidate <= params.search_max + 1e-12:
        if not _evaluable(candidate, first, second):
            raise MrctNoSolution(
                "trajectory coverage ends before any feasible period was found"
            )
        if _feasible(candidate, first, second, params):
            found = candidate
            break
        prev = candidate
        candidate += step
    if found is None:
        raise MrctInfeasible(f"no feasible period up to {params.search_max} s")
    if prev is None:
        return found

    # bisection inside (prev, found]; feasibility is monotone above the bracket
    lo_b, hi_b = prev, found
    while hi_b - lo_b > params.refine_resolution:
        mid = 0.5 * (lo_b + hi_b)
        if _evaluable(mid, first, second) and _feasible(mid, first, second, params):
            hi_b = mid
        else:
            lo_b = mid
    return hi_b


def case_metrics(pet: float, min_sep: float,
                 first_profile: CurvilinearProfile | None,
                 second_profile: CurvilinearProfile | None,
                 second_is_vehicle: bool,
                 both_vehicles: bool,
                 params: MrctParams | None = None,
                 a_max: float = PSD_A_MAX) -> MetricsRecord:
    """Assemble the per-case record; metrics that do not apply stay None.

    PSD and deceleration stats need a vehicle second passer; the MRCT family
    needs a vehicle pair with usable profiles.
    """
    params = params or MrctParams()
    psd = decel = lead = None
    if second_is_vehicle and second_profile is not None:
        psd = psd_min(second_profile, a_max)
        ds = decel_stats(second_profile)
        if ds is not None:
            decel, lead = ds

    mrct_val = pre = flow = None
    failure = None
    if both_vehicles and first_profile is not None and second_profile is not None:
        try:
            mrct_val = mrct(first_profile, second_profile, params)
            pre = mrct_val - pet
            flow = 1.0 / mrct_val
        except MrctNoSolution:
            failure = "no_solution"
        except MrctInfeasible:
            failure = "infeasible"
    elif both_vehicles:
        failure = "no_solution"

    return MetricsRecord(
        pet=pet, min_sep=min_sep, psd_min=psd,
        max_decel=decel, decel_lead_time=lead,
        mrct=mrct_val, pre_conflict=pre, flow=flow,
        mrct_failure=failure,
    )
