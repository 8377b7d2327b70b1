"""Shared builders and independent brute-force oracles for the test suite.

Everything here is deliberately written from the definitions, without
calling the library internals it is meant to check: oracle disagreements
must point at the implementation, not at a shared bug.
"""

from __future__ import annotations

import numpy as np

from conflictkit.core import DT, AgentKind, Track
from conflictkit.geometry import Polyline
from conflictkit.mapproc import LaneSegment
from conflictkit.metrics import CurvilinearProfile

# ---------------------------------------------------------------------------
# track builders


def straight_track(agent_id="a", kind=AgentKind.VEHICLE, v=10.0, heading=0.0,
                   start=(-50.0, 0.0), n=110) -> Track:
    """Constant-speed straight mover, consistent positions/speed/heading."""
    t = np.arange(n) * DT
    ux, uy = np.cos(heading), np.sin(heading)
    return Track(
        agent_id=agent_id, agent_kind=kind,
        t=t,
        x=start[0] + v * ux * t,
        y=start[1] + v * uy * t,
        vx=np.full(n, v * ux), vy=np.full(n, v * uy),
        heading=np.full(n, heading),
    )


def speed_profile_track(agent_id, speed, heading=0.0, start=(0.0, 0.0),
                        kind=AgentKind.VEHICLE) -> Track:
    """Straight mover following an arbitrary speed series (trapezoid pacing)."""
    speed = np.asarray(speed, dtype=float)
    n = len(speed)
    t = np.arange(n) * DT
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * DT)])
    ux, uy = np.cos(heading), np.sin(heading)
    return Track(
        agent_id=agent_id, agent_kind=kind,
        t=t, x=start[0] + arc * ux, y=start[1] + arc * uy,
        vx=speed * ux, vy=speed * uy, heading=np.full(n, heading),
    )


# ---------------------------------------------------------------------------
# curvilinear profiles for the MRCT / PSD oracles


def make_profile(speed, t_pass, t0=0.0) -> CurvilinearProfile:
    """Profile with the given sampled speed; arc length anchored at t_pass."""
    speed = np.asarray(speed, dtype=float)
    t = t0 + np.arange(len(speed)) * DT
    s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * DT)])
    s -= np.interp(t_pass, t, s)
    return CurvilinearProfile(t=t, s=s, v=speed, t_pass=t_pass)


def random_profile_pair(rng: np.random.Generator):
    """Seeded vehicle pair spanning accelerating/decelerating profiles.

    Sixteen seconds of coverage with passages in the second half, so most
    pairs admit a feasible recurrence period before coverage runs out.
    """
    n = 160
    t = np.arange(n) * DT

    def one_speed():
        v0 = rng.uniform(5.0, 13.0)
        shape = rng.integers(0, 3)
        if shape == 0:  # constant
            v = np.full(n, v0)
        elif shape == 1:  # linear accel/decel
            a = rng.uniform(-1.2, 1.2)
            v = v0 + a * t
        else:  # smooth slow-down-and-recover
            amp = rng.uniform(0.0, 0.45) * v0
            center = rng.uniform(3.0, 8.0)
            v = v0 - amp * np.exp(-(((t - center) / 1.2) ** 2))
        return np.clip(v, 2.0, 16.0)

    t1 = rng.uniform(6.5, 9.0)
    pet = rng.uniform(0.5, 3.0)
    first = make_profile(one_speed(), t_pass=t1)
    second = make_profile(one_speed(), t_pass=t1 + pet)
    return first, second, pet


def oracle_mrct(first: CurvilinearProfile, second: CurvilinearProfile,
                search_max: float = 30.0, step: float = 0.001):
    """Exhaustive feasibility scan at 0.001 s over candidate periods.

    Direct transcription of the recurrence constraints: same-stream spacing
    of at least 2 v + 8 behind the shifted predecessor up to each passage,
    and a cross-stream clearance of at least max(2 v, 8) for the shifted
    first passer at the second passage. Returns None when nothing up to
    ``search_max`` is feasible, and the string "no_solution" when coverage
    runs out first.
    """
    pet = second.t_pass - first.t_pass
    for dt_shift in np.arange(max(step, pet), search_max + 0.5 * step, step):
        evaluable = True
        for prof in (first, second):
            if prof.t_pass - dt_shift < prof.t[0] - 1e-9:
                evaluable = False
        if second.t_pass - dt_shift < first.t[0] - 1e-9:
            evaluable = False
        if not evaluable:
            return "no_solution"
        ok = True
        for prof in (first, second):
            ts = prof.t[(prof.t <= prof.t_pass) & (prof.t - dt_shift >= prof.t[0] - 1e-9)]
            ts = np.append(ts, prof.t_pass)
            spacing = np.interp(ts, prof.t, prof.s) - np.interp(ts - dt_shift, prof.t, prof.s)
            needed = 2.0 * np.interp(ts - dt_shift, prof.t, prof.v) + 8.0
            if np.any(spacing < needed - 1e-12):
                ok = False
                break
        if ok:
            t_eval = second.t_pass - dt_shift
            clearance = -np.interp(t_eval, first.t, first.s)
            needed = max(2.0 * np.interp(t_eval, first.t, first.v), 8.0)
            if clearance < needed - 1e-12:
                ok = False
        if ok:
            return float(dt_shift)
    return None


def oracle_psd_min(profile: CurvilinearProfile, a_max: float = 3.35,
                   speed_min: float = 0.5):
    """Per-sample scan of distance-to-go over stopping distance."""
    best = None
    for i in range(len(profile.t)):
        if profile.t[i] >= profile.t_pass or profile.s[i] >= 0.0:
            continue
        v = profile.v[i]
        if v <= speed_min:
            continue
        value = -profile.s[i] / (v * v / (2.0 * a_max))
        if best is None or value < best:
            best = value
    return best


# ---------------------------------------------------------------------------
# crossing-test fixture corpus


def _line(p0, p1, n=8) -> Polyline:
    f = np.linspace(0.0, 1.0, n)[:, None]
    return Polyline(np.asarray(p0) + f * (np.asarray(p1) - np.asarray(p0)))


def crossing_fixtures():
    """(name, path_a, d_a, path_b, d_b, expected) covering crossing, merging,
    parallel, buffer-grazing, and double-crossing geometries."""
    fixtures = []
    base = _line((-40.0, 0.0), (40.0, 0.0))

    # transversal crossings at various angles and buffer widths: True
    for angle in (90.0, 75.0, 60.0, 45.0, 30.0, 20.0):
        for sign in (1.0, -1.0):
            rad = np.deg2rad(sign * angle)
            other = _line((-40.0 * np.cos(rad), -40.0 * np.sin(rad)),
                          (40.0 * np.cos(rad), 40.0 * np.sin(rad)))
            fixtures.append((f"cross_{int(angle)}_{'l' if sign > 0 else 'r'}",
                             base, 3.0, other, 3.0, True))
    fixtures.append(("cross_vru_buffer", base, 3.0,
                     _line((0.0, -30.0), (0.0, 30.0)), 1.5, True))

    # parallel lanes at several separations: False
    for sep in (3.5, 5.0, 8.0, 12.0):
        fixtures.append((f"parallel_{sep}", base, 3.0,
                         _line((-40.0, sep), (40.0, sep)), 3.0, False))
    fixtures.append(("antiparallel_4", base, 3.0,
                     _line((40.0, 4.0), (-40.0, 4.0)), 3.0, False))

    # merging: approach from the side, then join and follow the base path
    for off in (6.0, 10.0, 14.0):
        for sgn in (1.0, -1.0):
            approach = np.array([[-40.0, sgn * off], [-10.0, sgn * off]])
            f = np.linspace(0.0, 1.0, 6)[:, None]
            blend = approach[1] + f * (np.array([5.0, 0.0]) - approach[1])
            tail = np.array([[20.0, 0.0], [40.0, 0.0]])
            merged = Polyline(np.vstack([approach, blend[1:], tail]))
            fixtures.append((f"merge_{off}_{'u' if sgn > 0 else 'd'}",
                             base, 3.0, merged, 3.0, False))

    # buffer-grazing: dip into the corridor and leave on the same side
    for depth in (0.5, 1.5, 2.5):
        x = np.linspace(-30.0, 30.0, 61)
        y = (6.0 + depth) - (3.0 + 2.0 * depth) * np.exp(-((x / 8.0) ** 2))
        fixtures.append((f"graze_in_{depth}", base, 3.0,
                         Polyline(np.column_stack([x, y])), 3.0, False))
    # near misses that stay outside the buffer entirely
    for clearance in (0.3, 1.0, 2.0):
        x = np.linspace(-30.0, 30.0, 61)
        y = (8.0 + clearance) - 5.0 * np.exp(-((x / 8.0) ** 2))
        fixtures.append((f"graze_out_{clearance}", base, 3.0,
                         Polyline(np.column_stack([x, y])), 3.0, False))

    # double-crossing S-curves: True
    for amp in (6.0, 9.0, 12.0):
        x = np.linspace(-30.0, 30.0, 61)
        y = amp * np.sin(x / 30.0 * np.pi)
        fixtures.append((f"double_cross_{amp}", base, 3.0,
                         Polyline(np.column_stack([x, y])), 3.0, True))
    # short hook: crosses once, turns back, crosses again
    hook = Polyline(np.array([
        [0.0, -15.0], [0.0, 6.0], [6.0, 10.0], [12.0, 6.0], [12.0, -15.0],
    ]))
    fixtures.append(("double_cross_hook", base, 3.0, hook, 3.0, True))

    # one-sided stub: starts inside the corridor, exits one side only
    for x0 in (-5.0, 5.0, 15.0):
        stub = _line((x0, 0.0), (x0 + 4.0, 20.0), n=5)
        fixtures.append((f"stub_{x0}", base, 3.0, stub, 3.0, False))

    # crossing with asymmetric buffers both ways
    for d_b in (1.5, 2.0, 3.0):
        diag = _line((-25.0, -25.0), (25.0, 25.0))
        fixtures.append((f"cross_diag_db{d_b}", base, 3.0, diag, d_b, True))

    # termination sensitivity: the same transversal stub, ending just past
    # versus just short of the far buffer curve
    fixtures.append(("stub_past_far", base, 3.0,
                     _line((0.0, -20.0), (0.0, 4.5), n=5), 3.0, True))
    fixtures.append(("stub_short_far", base, 3.0,
                     _line((0.0, -20.0), (0.0, 1.0), n=5), 3.0, False))
    return fixtures


# ---------------------------------------------------------------------------
# four-leg intersection network with hand-derived compaction truth


def four_leg_network():
    """Segments of a 4-leg intersection plus the expected compaction.

    Per leg: a 2-segment approach chain, 3 single-segment connectors fanning
    out to the other legs' exits, and a 2-segment exit chain. Expected:
    20 merged lanes (4 + 12 + 4) and 24 adjacency links (approach end to
    its 3 connectors, connector end to its exit chain).
    """
    entry = {"W": (-10.0, -2.0), "E": (10.0, 2.0), "S": (2.0, -10.0), "N": (-2.0, 10.0)}
    exit_ = {"W": (-10.0, 2.0), "E": (10.0, -2.0), "S": (-2.0, -10.0), "N": (2.0, 10.0)}
    far_in = {"W": ((-50.0, -2.0), (-30.0, -2.0)), "E": ((50.0, 2.0), (30.0, 2.0)),
              "S": ((2.0, -50.0), (2.0, -30.0)), "N": ((-2.0, 50.0), (-2.0, 30.0))}
    far_out = {"W": ((-30.0, 2.0), (-50.0, 2.0)), "E": ((30.0, -2.0), (50.0, -2.0)),
               "S": ((-2.0, -30.0), (-2.0, -50.0)), "N": ((2.0, 30.0), (2.0, 50.0))}
    legs = ("E", "N", "S", "W")

    segments = []
    for leg in legs:
        p0, p1 = far_in[leg]
        targets = tuple(sorted(d for d in legs if d != leg))
        segments.append(LaneSegment(
            id=f"in{leg}0", centerline=Polyline(np.array([p0, p1])),
            successors={f"in{leg}1"},
        ))
        segments.append(LaneSegment(
            id=f"in{leg}1", centerline=Polyline(np.array([p1, entry[leg]])),
            predecessors={f"in{leg}0"},
            successors={f"c{leg}{d}" for d in targets},
        ))
        for d in targets:
            segments.append(LaneSegment(
                id=f"c{leg}{d}",
                centerline=Polyline(np.array([entry[leg], exit_[d]])),
                predecessors={f"in{leg}1"},
                successors={f"out{d}0"},
            ))
        q0, q1 = far_out[leg]
        sources = tuple(sorted(d for d in legs if d != leg))
        segments.append(LaneSegment(
            id=f"out{leg}0", centerline=Polyline(np.array([exit_[leg], q0])),
            predecessors={f"c{d}{leg}" for d in sources},
            successors={f"out{leg}1"},
        ))
        segments.append(LaneSegment(
            id=f"out{leg}1", centerline=Polyline(np.array([q0, q1])),
            predecessors={f"out{leg}0"},
        ))

    expected_ids = sorted(
        [f"in{leg}0+in{leg}1" for leg in legs]
        + [f"c{leg}{d}" for leg in legs for d in legs if d != leg]
        + [f"out{leg}0+out{leg}1" for leg in legs]
    )
    # every merged lane here is a straight chain: its 21 equal-arc
    # breakpoints are an even subdivision of the start-to-end chord
    endpoints = {}
    for leg in legs:
        endpoints[f"in{leg}0+in{leg}1"] = (far_in[leg][0], entry[leg])
        endpoints[f"out{leg}0+out{leg}1"] = (exit_[leg], far_out[leg][1])
        for d in legs:
            if d != leg:
                endpoints[f"c{leg}{d}"] = (entry[leg], exit_[d])
    expected_breakpoints = {
        lane_id: np.asarray(p0) + np.linspace(0.0, 1.0, 21)[:, None]
        * (np.asarray(p1) - np.asarray(p0))
        for lane_id, (p0, p1) in endpoints.items()
    }
    expected_links = sorted(
        [(f"in{leg}0+in{leg}1", f"c{leg}{d}") for leg in legs for d in legs if d != leg]
        + [(f"c{leg}{d}", f"out{d}0+out{d}1") for leg in legs for d in legs if d != leg]
    )
    return segments, expected_ids, expected_breakpoints, expected_links
