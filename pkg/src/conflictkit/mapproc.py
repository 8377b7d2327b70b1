"""Lane-graph compaction: merge chained segments, fixed-size vector series,
endpoint adjacency."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from conflictkit.geometry import DegenerateGeometry, Polyline

log = logging.getLogger(__name__)

#: every merged lane is re-segmented into this many tail-to-head vectors
VECTORS_PER_LANE = 20
#: endpoint coincidence tolerance for the adjacency matrix, meters
ADJACENCY_TOL = 0.1


@dataclass(frozen=True)
class LaneSegment:
    """One raw centerline piece with its connectivity."""

    id: str
    centerline: Polyline
    successors: frozenset[str] = frozenset()
    predecessors: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "successors", frozenset(self.successors))
        object.__setattr__(self, "predecessors", frozenset(self.predecessors))


@dataclass(frozen=True)
class MergedLane:
    """A compacted lane as exactly 20 tail-to-head vectors."""

    id: str
    breakpoints: np.ndarray  # (21, 2), head of vector k == tail of vector k+1

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).copy()
        if bp.shape != (VECTORS_PER_LANE + 1, 2):
            raise ValueError(f"merged lane needs {VECTORS_PER_LANE + 1} breakpoints")
        bp.flags.writeable = False
        object.__setattr__(self, "breakpoints", bp)

    @property
    def vectors(self) -> np.ndarray:
        """(20, 2, 2) array of (tail, head) point pairs."""
        return np.stack([self.breakpoints[:-1], self.breakpoints[1:]], axis=1)

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.breakpoints, axis=0).T)))

    @property
    def start(self) -> np.ndarray:
        return self.breakpoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.breakpoints[-1]


@dataclass(frozen=True)
class LaneGraph:
    """Compact lane collection plus its endpoint adjacency matrix."""

    lanes: tuple[MergedLane, ...]
    adjacency: np.ndarray  # boolean, (n, n)

    def __post_init__(self):
        object.__setattr__(self, "lanes", tuple(self.lanes))
        adj = np.asarray(self.adjacency, dtype=bool).copy()
        n = len(self.lanes)
        if adj.shape != (n, n):
            raise ValueError("adjacency shape does not match lane count")
        adj.flags.writeable = False
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_segments(cls, segments) -> "LaneGraph":
        lanes = [resegment_lane(poly, lane_id) for lane_id, poly in merge_lanes(segments)]
        return cls(tuple(lanes), build_adjacency(lanes))


def validate_connectivity(segments: list[LaneSegment]) -> dict[str, LaneSegment]:
    by_id = {s.id: s for s in segments}
    if len(by_id) != len(segments):
        raise ValueError("duplicate lane segment ids")
    for s in segments:
        for succ in s.successors:
            if succ in by_id and s.id not in by_id[succ].predecessors:
                raise ValueError(f"connectivity mismatch between {s.id} and {succ}")
    return by_id


def merge_lanes(segments) -> list[tuple[str, Polyline]]:
    """Merge segments into maximal chains under the sole-link rule.

    A is glued to B iff B is A's only successor and A is B's only
    predecessor, so every merged lane starts and ends at a map boundary,
    a diverging point, or a merging point. Output order is deterministic
    (sorted by the chain's first segment id); the merged id joins the chain
    ids with '+'.
    """
    segments = sorted(segments, key=lambda s: s.id)
    by_id = validate_connectivity(segments)

    glue: dict[str, str] = {}
    for s in segments:
        if len(s.successors) != 1:
            continue
        (succ,) = s.successors
        if succ in by_id and by_id[succ].predecessors == {s.id}:
            glue[s.id] = succ

    glued_into = set(glue.values())
    heads = [s.id for s in segments if s.id not in glued_into]

    # sole-successor cycles have no head; open each at its lowest id
    visited: set[str] = set()
    for sid in heads:
        cur: str | None = sid
        while cur is not None and cur not in visited:
            visited.add(cur)
            cur = glue.get(cur)
    for s in segments:
        if s.id in visited:
            continue
        cycle = [s.id]
        cur = glue.get(s.id)
        while cur is not None and cur != s.id:
            cycle.append(cur)
            cur = glue.get(cur)
        cut = min(cycle)
        pred = next(p for p in cycle if glue.get(p) == cut)
        del glue[pred]
        heads.append(cut)
        visited.update(cycle)
        log.warning("cyclic lane chain cut at segment %s", cut)

    out = []
    for head in sorted(heads):
        chain = [head]
        cur = glue.get(head)
        while cur is not None:
            chain.append(cur)
            cur = glue.get(cur)
        pts = [by_id[chain[0]].centerline.vertices]
        for sid in chain[1:]:
            pts.append(by_id[sid].centerline.vertices[1:])
        out.append(("+".join(chain), Polyline(np.vstack(pts))))
    return out


def resegment_lane(polyline: Polyline, lane_id: str = "lane") -> MergedLane:
    """Split a merged centerline into 20 vectors of equal arc length."""
    total = polyline.length
    if total <= 0:
        raise DegenerateGeometry("cannot resegment a zero-length lane")
    arcs = np.linspace(0.0, total, VECTORS_PER_LANE + 1)
    bp = np.array([polyline.point_at(s) for s in arcs])
    return MergedLane(id=lane_id, breakpoints=bp)


def build_adjacency(lanes) -> np.ndarray:
    """Entry (i, j) true iff lane i's end coincides with lane j's start."""
    lanes = list(lanes)
    n = len(lanes)
    adj = np.zeros((n, n), dtype=bool)
    if n == 0:
        return adj
    ends = np.array([lane.end for lane in lanes])
    starts = np.array([lane.start for lane in lanes])
    d = np.hypot(
        ends[:, None, 0] - starts[None, :, 0],
        ends[:, None, 1] - starts[None, :, 1],
    )
    adj = d <= ADJACENCY_TOL
    np.fill_diagonal(adj, False)
    return adj


def export_arrays(graph: LaneGraph) -> tuple[list[tuple[str, np.ndarray]], np.ndarray]:
    """Compact export: (id, 21x2 breakpoints) per lane plus adjacency index pairs."""
    lanes = [(lane.id, lane.breakpoints) for lane in graph.lanes]
    pairs = np.argwhere(graph.adjacency)
    return lanes, pairs
