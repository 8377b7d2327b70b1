"""Planar polyline machinery: buffer offsets, crossing tests, conflict points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from conflictkit.core import Track

_EPS = 1e-12


class DegenerateGeometry(ValueError):
    """Polyline too short or collapsed for the requested construction."""


class NoIntersection(ValueError):
    """The two paths do not cross although a crossing was required."""


class NoTemporalOverlap(ValueError):
    """The two tracks share no common timestep."""


@dataclass(frozen=True)
class Polyline:
    """Ordered planar vertex chain with distinct consecutive vertices."""

    vertices: np.ndarray  # (N, 2)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).copy()
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise DegenerateGeometry("polyline needs >= 2 planar vertices")
        if np.any(np.hypot(*np.diff(v, axis=0).T) < _EPS):
            raise DegenerateGeometry("polyline has duplicate consecutive vertices")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_xy(cls, x, y) -> "Polyline":
        return cls(np.column_stack([np.asarray(x, float), np.asarray(y, float)]))

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.vertices, axis=0).T)

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    @property
    def cumulative_arc(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths)])

    def point_at(self, s: float) -> np.ndarray:
        """Point at arc length s; extrapolates along the end segments."""
        cum = self.cumulative_arc
        v = self.vertices
        if s <= 0.0:
            d = v[1] - v[0]
            return v[0] + d / np.linalg.norm(d) * s
        if s >= cum[-1]:
            d = v[-1] - v[-2]
            return v[-1] + d / np.linalg.norm(d) * (s - cum[-1])
        i = int(np.searchsorted(cum, s, side="right")) - 1
        frac = (s - cum[i]) / (cum[i + 1] - cum[i])
        return v[i] + frac * (v[i + 1] - v[i])


def track_polyline(track: Track) -> tuple[Polyline, np.ndarray]:
    """Polyline of a track's positions plus the per-vertex timestamps.

    Consecutive (near-)duplicate positions are collapsed, keeping the
    earliest timestamp, so standing intervals do not produce zero-length
    segments.
    """
    pts = track.positions
    t = track.t
    keep = [0]
    for i in range(1, len(pts)):
        if np.hypot(*(pts[i] - pts[keep[-1]])) >= 1e-9:
            keep.append(i)
    if len(keep) < 2:
        raise DegenerateGeometry(f"track {track.agent_id} is static, no polyline")
    return Polyline(pts[keep]), t[keep]


@dataclass(frozen=True)
class ConflictPoint:
    """Crossing location of two trajectories with interpolated passage times."""

    location: tuple[float, float]
    t_first: float
    t_second: float
    first_agent: str
    second_agent: str

    def __post_init__(self):
        if self.t_first > self.t_second:
            raise ValueError("t_first must not exceed t_second")

    @property
    def pet(self) -> float:
        return self.t_second - self.t_first


# ---------------------------------------------------------------------------
# segment intersection primitives


def _segments_cross_mask(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Boolean (n, m) mask of segment-pair intersections (touching counts).

    a: (n, 2, 2), b: (m, 2, 2) as (start, end) point pairs.
    """
    p, q = a[:, None, 0], a[:, None, 1]
    r, s = b[None, :, 0], b[None, :, 1]

    def cross(u, v):
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

    d1 = cross(s - r, p - r)
    d2 = cross(s - r, q - r)
    d3 = cross(q - p, r - p)
    d4 = cross(q - p, s - p)
    proper = (d1 * d2 <= _EPS) & (d3 * d4 <= _EPS)
    # collinear overlap guard: require bounding boxes to overlap
    amin = np.minimum(p, q)
    amax = np.maximum(p, q)
    bmin = np.minimum(r, s)
    bmax = np.maximum(r, s)
    boxes = np.all((amin <= bmax + _EPS) & (bmin <= amax + _EPS), axis=-1)
    return proper & boxes


def polylines_intersect(pa: Polyline, pb: Polyline) -> bool:
    """True when any segment of pa touches or crosses any segment of pb."""
    a = np.stack([pa.vertices[:-1], pa.vertices[1:]], axis=1)
    b = np.stack([pb.vertices[:-1], pb.vertices[1:]], axis=1)
    return bool(_segments_cross_mask(a, b).any())


def polyline_intersections(pa: Polyline, pb: Polyline):
    """All transversal intersection points with fractional segment positions.

    Returns a list of (point, fa, fb) where fa is segment-index + fraction
    along pa (likewise fb). Collinear overlaps contribute no points.
    """
    va, vb = pa.vertices, pb.vertices
    a = np.stack([va[:-1], va[1:]], axis=1)
    b = np.stack([vb[:-1], vb[1:]], axis=1)
    mask = _segments_cross_mask(a, b)
    out = []
    for i, j in zip(*np.nonzero(mask)):
        p, q = va[i], va[i + 1]
        r, s = vb[j], vb[j + 1]
        d = q - p
        e = s - r
        denom = d[0] * e[1] - d[1] * e[0]
        if abs(denom) < _EPS:
            continue  # parallel or collinear touch
        w = r - p
        ta = (w[0] * e[1] - w[1] * e[0]) / denom
        tb = (w[0] * d[1] - w[1] * d[0]) / denom
        if -1e-9 <= ta <= 1 + 1e-9 and -1e-9 <= tb <= 1 + 1e-9:
            ta = min(max(ta, 0.0), 1.0)
            tb = min(max(tb, 0.0), 1.0)
            out.append((p + ta * d, i + ta, j + tb))
    return out


# ---------------------------------------------------------------------------
# buffer offsets and the crossing test


def offset_polylines(path: Polyline, d: float) -> tuple[Polyline, Polyline]:
    """Left and right parallel curves at perpendicular distance d.

    Joins are mitered; a miter longer than 4*d is clamped to a bevel to
    avoid spikes at sharp turns.
    """
    if d <= 0:
        raise ValueError("offset distance must be positive")
    return _offset_one_side(path, d), _offset_one_side(path, -d)


def _offset_one_side(path: Polyline, d: float) -> Polyline:
    v = path.vertices
    dirs = np.diff(v, axis=0)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    normals = np.column_stack([-dirs[:, 1], dirs[:, 0]])  # left of travel
    dist = abs(d)
    sign = 1.0 if d > 0 else -1.0

    out = [v[0] + sign * dist * normals[0]]
    for i in range(1, len(v) - 1):
        n0, n1 = normals[i - 1], normals[i]
        m = n0 + n1
        norm_m = np.linalg.norm(m)
        if norm_m < 1e-9:  # 180-degree turnback: plain bevel
            out.append(v[i] + sign * dist * n0)
            out.append(v[i] + sign * dist * n1)
            continue
        m_unit = m / norm_m
        cos_half = float(np.dot(m_unit, n1))
        miter_len = dist / max(cos_half, 1e-9)
        if miter_len > 4.0 * dist:
            out.append(v[i] + sign * dist * n0)
            out.append(v[i] + sign * dist * n1)
        else:
            out.append(v[i] + sign * miter_len * m_unit)
    out.append(v[-1] + sign * dist * normals[-1])

    pts = [out[0]]
    for p in out[1:]:
        if np.hypot(*(p - pts[-1])) >= 1e-9:
            pts.append(p)
    if len(pts) < 2:
        raise DegenerateGeometry("offset collapsed to a point")
    return Polyline(np.asarray(pts))


def _crosses_corridor(path: Polyline, d: float, other: Polyline) -> bool:
    left, right = offset_polylines(path, d)
    return polylines_intersect(other, left) and polylines_intersect(other, right)


def crossing_test(path_a: Polyline, d_a: float, path_b: Polyline, d_b: float) -> bool:
    """Symmetric buffer-crossing test.

    True iff path_b intersects both parallel offsets of path_a AND path_a
    intersects both offsets of path_b. Merging or parallel geometries touch
    at most one offset and fail.
    """
    return _crosses_corridor(path_a, d_a, path_b) and _crosses_corridor(path_b, d_b, path_a)


# ---------------------------------------------------------------------------
# conflict point and separation


def _time_at_fraction(t: np.ndarray, f: float) -> float:
    i = int(np.floor(f))
    i = min(i, len(t) - 2)
    frac = f - i
    return float(t[i] + frac * (t[i + 1] - t[i]))


def conflict_point(track_a: Track, track_b: Track) -> ConflictPoint:
    """Crossing of the two trajectory polylines with interpolated passage times.

    When the paths cross more than once, the crossing minimizing the passage
    time difference |tA - tB| is kept; exact ties break on the agent-id order.
    """
    pa, ta = track_polyline(track_a)
    pb, tb = track_polyline(track_b)
    hits = polyline_intersections(pa, pb)
    if not hits:
        raise NoIntersection(f"tracks {track_a.agent_id}/{track_b.agent_id} do not cross")

    ordered = track_a.agent_id <= track_b.agent_id
    best = None
    for point, fa, fb in hits:
        t_a = _time_at_fraction(ta, fa)
        t_b = _time_at_fraction(tb, fb)
        key = (abs(t_a - t_b), round(t_a, 9) if ordered else round(t_b, 9))
        if best is None or key < best[0]:
            best = (key, point, t_a, t_b)
    _, point, t_a, t_b = best

    if t_a < t_b or (t_a == t_b and ordered):
        first, second = track_a.agent_id, track_b.agent_id
        t_first, t_second = t_a, t_b
    else:
        first, second = track_b.agent_id, track_a.agent_id
        t_first, t_second = t_b, t_a
    return ConflictPoint(
        location=(float(point[0]), float(point[1])),
        t_first=min(t_first, t_second),
        t_second=max(t_first, t_second),
        first_agent=first,
        second_agent=second,
    )


def min_separation(track_a: Track, track_b: Track) -> float:
    """Minimum centroid distance over the common timesteps."""
    ia, ib = track_a.grid_index, track_b.grid_index
    common, ka, kb = np.intersect1d(ia, ib, return_indices=True)
    if len(common) == 0:
        raise NoTemporalOverlap(
            f"tracks {track_a.agent_id}/{track_b.agent_id} share no timestep"
        )
    dx = track_a.x[ka] - track_b.x[kb]
    dy = track_a.y[ka] - track_b.y[kb]
    return float(np.min(np.hypot(dx, dy)))
