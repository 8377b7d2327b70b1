"""Tabular scenario interchange: one CSV file per scenario.

Columns: scenario_id, track_id, agent_kind, t, x, y, vx, vy, heading.
UTF-8, header row, 6-decimal fixed precision. Export and ingest round-trip
to the same in-memory model (up to the write precision).
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from conflictkit.core import DT, GRID_TOL, AgentKind, Scenario, Track

COLUMNS = ("scenario_id", "track_id", "agent_kind", "t", "x", "y", "vx", "vy", "heading")


class IngestError(ValueError):
    """Malformed scenario file; the message carries file/row context."""


def write_scenario(scenario: Scenario, path: str | Path) -> Path:
    """Write one scenario to a CSV file, rows grouped by track."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for tr in scenario.tracks:
            for i in range(len(tr)):
                writer.writerow([
                    scenario.scenario_id,
                    tr.agent_id,
                    tr.agent_kind.value,
                    f"{tr.t[i]:.6f}",
                    f"{tr.x[i]:.6f}",
                    f"{tr.y[i]:.6f}",
                    f"{tr.vx[i]:.6f}",
                    f"{tr.vy[i]:.6f}",
                    f"{tr.heading[i]:.6f}",
                ])
    return path


def read_scenario(path: str | Path) -> Scenario:
    """Parse and validate one scenario file.

    Raises IngestError naming the file, row, and offending value for unknown
    columns, bad kinds, off-grid timestamps, and duplicate (track, t) keys.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise IngestError(f"{path.name}: empty file") from None
        if header != COLUMNS:
            unknown = set(header) - set(COLUMNS)
            missing = set(COLUMNS) - set(header)
            raise IngestError(
                f"{path.name}: bad header (unknown columns {sorted(unknown)}, "
                f"missing {sorted(missing)})"
            )

        scenario_id: str | None = None
        kinds: dict[str, AgentKind] = {}
        rows: dict[str, dict[int, tuple]] = {}  # track -> grid index -> row
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(COLUMNS):
                raise IngestError(f"{path.name}:{lineno}: expected {len(COLUMNS)} fields, got {len(row)}")
            sid, tid, kind_str, *nums = row
            if scenario_id is None:
                scenario_id = sid
            elif sid != scenario_id:
                raise IngestError(
                    f"{path.name}:{lineno}: second scenario id {sid!r} in a "
                    f"one-scenario file (first was {scenario_id!r})"
                )
            try:
                kind = AgentKind(kind_str)
            except ValueError:
                raise IngestError(f"{path.name}:{lineno}: unknown agent_kind {kind_str!r}") from None
            if kinds.setdefault(tid, kind) is not kind:
                raise IngestError(f"{path.name}:{lineno}: track {tid} changes agent_kind")
            try:
                t, x, y, vx, vy, heading = (float(v) for v in nums)
            except ValueError:
                raise IngestError(f"{path.name}:{lineno}: non-numeric field in {nums}") from None
            gi = round(t / DT)
            if t < -GRID_TOL or abs(t - gi * DT) > GRID_TOL:
                raise IngestError(
                    f"{path.name}:{lineno}: scenario {sid} track {tid}: "
                    f"t={t} is not on the 0.1 s grid"
                )
            track_rows = rows.setdefault(tid, {})
            if gi in track_rows:
                raise IngestError(
                    f"{path.name}:{lineno}: scenario {sid} track {tid}: "
                    f"duplicate timestamp t={t}"
                )
            track_rows[gi] = (t, x, y, vx, vy, heading)

    if scenario_id is None:
        raise IngestError(f"{path.name}: no data rows")

    tracks = []
    t_max = 0.0
    t_min = np.inf
    for tid in rows:  # insertion order = file order
        ordered = [rows[tid][gi] for gi in sorted(rows[tid])]
        arr = np.array(ordered)
        try:
            tracks.append(Track(
                agent_id=tid, agent_kind=kinds[tid],
                t=arr[:, 0], x=arr[:, 1], y=arr[:, 2],
                vx=arr[:, 3], vy=arr[:, 4], heading=arr[:, 5],
            ))
        except ValueError as exc:
            raise IngestError(f"{path.name}: track {tid}: {exc}") from exc
        t_max = max(t_max, float(arr[-1, 0]))
        t_min = min(t_min, float(arr[0, 0]))
    try:
        return Scenario(scenario_id=scenario_id, tracks=tuple(tracks), duration=t_max - t_min)
    except ValueError as exc:
        raise IngestError(f"{path.name}: {exc}") from exc


def ingest(path: str | Path) -> list[Scenario]:
    """Read all scenario files under a directory (or a single file).

    Files are processed in sorted name order so the result is deterministic.
    An empty directory yields an empty list.
    """
    path = Path(path)
    if path.is_file():
        return [read_scenario(path)]
    if not path.is_dir():
        raise IngestError(f"input path {path} does not exist")
    return [read_scenario(p) for p in sorted(path.glob("*.csv"))]
