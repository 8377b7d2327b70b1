"""Heuristic conflict-case selection and surrounding-agent extraction."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from conflictkit import geometry
from conflictkit.core import AgentKind, Scenario, Track, ValidationError
from conflictkit.geometry import ConflictPoint, Polyline, track_polyline


class Category(str, Enum):
    AV_FIRST = "AV_first"
    AV_SECOND = "AV_second"
    AV_FREE = "AV_free"


class PairKind(str, Enum):
    VEH_VEH = "veh_veh"
    VEH_PED = "veh_ped"
    VEH_CYC = "veh_cyc"
    VEH_OTHER = "veh_other"


@dataclass(frozen=True)
class SelectionConfig:
    """Thresholds of the selection rules. Defaults follow the source study."""

    buffer_vehicle: float = 3.0   # m, lane-width buffer for vehicles
    buffer_vru: float = 1.5      # m, pedestrians/cyclists need less road space
    pet_max: float = 5.0         # s, exclusion threshold (with min_sep_max)
    min_sep_max: float = 8.0     # m
    travel_min: float = 8.0      # m, at least one agent must travel this far
    pet_soft: float = 3.0        # s, above this a speed variation is required
    speed_var_min: float = 3.0   # m/s
    surround_radius: float = 30.0  # m

    def __post_init__(self):
        for name in (
            "buffer_vehicle", "buffer_vru", "pet_max", "min_sep_max",
            "travel_min", "pet_soft", "speed_var_min", "surround_radius",
        ):
            if getattr(self, name) <= 0:
                raise ValidationError(f"SelectionConfig.{name} must be positive")
        if self.pet_soft >= self.pet_max:
            raise ValidationError("pet_soft must be smaller than pet_max")

    def buffer_for(self, kind: AgentKind) -> float:
        if kind in (AgentKind.PEDESTRIAN, AgentKind.CYCLIST):
            return self.buffer_vru
        return self.buffer_vehicle


@dataclass(frozen=True)
class ConflictCase:
    """A selected agent pair with its conflict anchor and labels."""

    scenario_id: str
    first_agent: str
    second_agent: str
    conflict: ConflictPoint
    pet: float
    min_sep: float
    category: Category
    pair_kind: PairKind
    surrounding: frozenset[str] = field(default_factory=frozenset)
    regime: object | None = None  # assess.RegimeLabel for vehicle pairs

    def __post_init__(self):
        if self.pet < 0:
            raise ValidationError("pet must be non-negative")
        object.__setattr__(self, "surrounding", frozenset(self.surrounding))

    @property
    def case_id(self) -> str:
        return f"{self.scenario_id}_{self.first_agent}_{self.second_agent}"


def pet(conflict: ConflictPoint) -> float:
    """Post-encroachment time: second passage minus first passage."""
    return conflict.t_second - conflict.t_first


def _speed_variation_before(track: Track, t_pass: float) -> float:
    mask = track.t <= t_pass + 1e-9
    if not np.any(mask):
        return 0.0
    v = track.speed[mask]
    return float(v.max() - v.min())


def behaviour_change_ok(case_pet: float, conflict: ConflictPoint,
                        first: Track, second: Track, cfg: SelectionConfig) -> bool:
    """Rule 3: enough travelled distance, and for long PETs a speed change.

    True iff at least one agent's path is longer than ``travel_min`` and,
    unless the PET is at most ``pet_soft``, at least one agent varies its
    speed by more than ``speed_var_min`` before its own passage.
    """
    if max(first.path_length, second.path_length) <= cfg.travel_min:
        return False
    if case_pet <= cfg.pet_soft:
        return True
    var_first = _speed_variation_before(first, conflict.t_first)
    var_second = _speed_variation_before(second, conflict.t_second)
    return max(var_first, var_second) > cfg.speed_var_min


def _pair_kind(a: Track, b: Track) -> PairKind | None:
    kinds = {a.agent_kind, b.agent_kind}
    n_veh = sum(1 for tr in (a, b) if tr.is_vehicle())
    if n_veh == 0:
        return None  # pairs without a vehicle are out of scope
    if n_veh == 2:
        return PairKind.VEH_VEH
    other = next(k for k in kinds if k not in (AgentKind.AV, AgentKind.VEHICLE))
    return {
        AgentKind.PEDESTRIAN: PairKind.VEH_PED,
        AgentKind.CYCLIST: PairKind.VEH_CYC,
        AgentKind.OTHER: PairKind.VEH_OTHER,
    }[other]


def _category(first: Track, second: Track) -> Category:
    if first.agent_kind is AgentKind.AV:
        return Category.AV_FIRST
    if second.agent_kind is AgentKind.AV:
        return Category.AV_SECOND
    return Category.AV_FREE


def surrounding_agents(scenario: Scenario, conflict: ConflictPoint, r: float) -> frozenset[str]:
    """Ids of non-conflicting tracks whose polyline meets the disc of radius r."""
    if r <= 0:
        raise ValidationError("surround radius must be positive")
    center = np.asarray(conflict.location)
    involved = {conflict.first_agent, conflict.second_agent}
    out = set()
    for tr in scenario.tracks:
        if tr.agent_id in involved:
            continue
        if _polyline_meets_disc(tr.positions, center, r):
            out.add(tr.agent_id)
    return frozenset(out)


def _polyline_meets_disc(pts: np.ndarray, center: np.ndarray, r: float) -> bool:
    d = pts - center
    if np.any(np.hypot(d[:, 0], d[:, 1]) <= r):
        return True
    # a segment can clip the disc even when both endpoints are outside
    a = pts[:-1]
    seg = np.diff(pts, axis=0)
    seg_len2 = np.sum(seg * seg, axis=1)
    nz = seg_len2 > 0
    if not np.any(nz):
        return False
    a, seg, seg_len2 = a[nz], seg[nz], seg_len2[nz]
    tproj = np.clip(np.sum((center - a) * seg, axis=1) / seg_len2, 0.0, 1.0)
    closest = a + tproj[:, None] * seg
    dd = closest - center
    return bool(np.any(np.hypot(dd[:, 0], dd[:, 1]) <= r))


def select_conflicts(scenario: Scenario, cfg: SelectionConfig | None = None) -> list[ConflictCase]:
    """Apply the three selection rules to every eligible unordered agent pair.

    Returns at most one case per pair, in deterministic order regardless of
    the scenario's track ordering.
    """
    cfg = cfg or SelectionConfig()
    cases: list[ConflictCase] = []
    tracks = sorted(scenario.tracks, key=lambda tr: tr.agent_id)
    for a, b in combinations(tracks, 2):
        kind = _pair_kind(a, b)
        if kind is None:
            continue
        case = _examine_pair(scenario, a, b, kind, cfg)
        if case is not None:
            cases.append(case)
    cases.sort(key=lambda c: (c.first_agent, c.second_agent))
    return cases


def _examine_pair(scenario: Scenario, a: Track, b: Track,
                  kind: PairKind, cfg: SelectionConfig) -> ConflictCase | None:
    try:
        pa, _ = track_polyline(a)
        pb, _ = track_polyline(b)
    except geometry.DegenerateGeometry:
        return None
    if not geometry.crossing_test(pa, cfg.buffer_for(a.agent_kind),
                                  pb, cfg.buffer_for(b.agent_kind)):
        return None
    try:
        conflict = geometry.conflict_point(a, b)
        sep = geometry.min_separation(a, b)
    except (geometry.NoIntersection, geometry.NoTemporalOverlap):
        return None
    case_pet = pet(conflict)
    if case_pet > cfg.pet_max and sep > cfg.min_sep_max:
        return None
    first = scenario.track(conflict.first_agent)
    second = scenario.track(conflict.second_agent)
    if not behaviour_change_ok(case_pet, conflict, first, second, cfg):
        return None
    return ConflictCase(
        scenario_id=scenario.scenario_id,
        first_agent=conflict.first_agent,
        second_agent=conflict.second_agent,
        conflict=conflict,
        pet=case_pet,
        min_sep=sep,
        category=_category(first, second),
        pair_kind=kind,
        surrounding=surrounding_agents(scenario, conflict, cfg.surround_radius),
    )
