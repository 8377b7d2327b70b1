"""Batch orchestration: ingest, select, enhance, assess, metrics, artifacts.

Per scenario the stages run in order: conflict pairs are selected on the
raw tracks (the selection thresholds target raw data), every track is then
enhanced (conflicting tracks bypass the short-length gate), the conflict
anchor is rebuilt on the enhanced pair, and regimes plus metrics are
computed from the enhanced motion. Scenarios are independent, so the corpus
fans out over a process pool; outputs are sorted by scenario id before any
write, which makes the artifact bytes independent of the worker count.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from conflictkit import geometry
from conflictkit.assess import (
    ALL_REGIME_LABELS,
    AnomalyReport,
    DirectionUndefined,
    RegimeLabel,
    anomaly_report,
    classify_regime,
)
from conflictkit.config import PipelineConfig
from conflictkit.core import AgentKind, InsufficientData, Scenario, Track
from conflictkit.dataio import ingest
from conflictkit.enhance import enhance_track
from conflictkit.geometry import ConflictPoint
from conflictkit.metrics import (
    MetricsRecord,
    OffPathConflict,
    case_metrics,
    curvilinear_profile,
)
from conflictkit.selection import Category, ConflictCase, PairKind, select_conflicts

log = logging.getLogger(__name__)

METRICS_COLUMNS = (
    "case_id", "category", "pair_kind", "regime", "pet_s", "min_sep_m",
    "psd_min", "max_decel_mps2", "decel_lead_s", "mrct_s", "preconf_s", "flow_vps",
)

CASES_COLUMNS = (
    "case_id", "scenario_id", "first_agent", "second_agent", "first_kind",
    "second_kind", "conflict_x_m", "conflict_y_m", "t_first_s", "t_second_s",
    "n_surrounding", "mrct_failure",
)

ANOMALY_COLUMNS = ("stage", "n_tracks", "delta_v_mps", "acc_pct", "jerk_pct", "jsi_pct")


class PipelineError(RuntimeError):
    """A stage failed; the message is prefixed with the stage name."""


@dataclass(frozen=True)
class CaseResult:
    """One selected pair after enhancement, regime labelling, and metrics."""

    case: ConflictCase          # as selected on the raw tracks
    conflict: ConflictPoint     # rebuilt on the enhanced tracks
    category: Category          # passage order re-derived after enhancement
    first_kind: AgentKind
    second_kind: AgentKind
    regime: RegimeLabel | None
    record: MetricsRecord


@dataclass(frozen=True)
class ScenarioOutput:
    scenario_id: str
    cases: tuple[CaseResult, ...]
    raw_conflicting: tuple[Track, ...]       # conflicting vehicle tracks
    enhanced_conflicting: tuple[Track, ...]  # same tracks after enhancement


@dataclass(frozen=True)
class CorpusResult:
    outputs: tuple[ScenarioOutput, ...]
    raw_anomaly: AnomalyReport | None
    enhanced_anomaly: AnomalyReport | None
    regime_counts: dict[str, int]


# ---------------------------------------------------------------------------
# per-scenario processing


def _passage_category(first: Track, second: Track) -> Category:
    if first.agent_kind is AgentKind.AV:
        return Category.AV_FIRST
    if second.agent_kind is AgentKind.AV:
        return Category.AV_SECOND
    return Category.AV_FREE


def _profile_or_none(track: Track, conflict: ConflictPoint):
    try:
        return curvilinear_profile(track, conflict)
    except (OffPathConflict, ValueError):
        return None


def evaluate_case(case: ConflictCase, first: Track, second: Track,
                  config: PipelineConfig) -> CaseResult:
    """Rebuild the conflict anchor on the enhanced pair and compute metrics.

    When the enhanced paths no longer cross (reconstruction can nudge a
    grazing geometry apart), the raw anchor is kept so the case is still
    reported.
    """
    try:
        conflict = geometry.conflict_point(first, second)
        min_sep = geometry.min_separation(first, second)
    except (geometry.NoIntersection, geometry.NoTemporalOverlap,
            geometry.DegenerateGeometry):
        conflict, min_sep = case.conflict, case.min_sep
    if conflict.first_agent != first.agent_id:
        first, second = second, first  # enhancement flipped the passage order

    regime = None
    if case.pair_kind is PairKind.VEH_VEH:
        try:
            regime = classify_regime(conflict, first, second)
        except DirectionUndefined:
            pass

    record = case_metrics(
        pet=conflict.pet,
        min_sep=min_sep,
        first_profile=_profile_or_none(first, conflict),
        second_profile=_profile_or_none(second, conflict),
        second_is_vehicle=second.is_vehicle(),
        both_vehicles=case.pair_kind is PairKind.VEH_VEH,
        params=config.mrct,
        a_max=config.a_max,
    )
    return CaseResult(
        case=case,
        conflict=conflict,
        category=_passage_category(first, second),
        first_kind=first.agent_kind,
        second_kind=second.agent_kind,
        regime=regime,
        record=record,
    )


def process_scenario(scenario: Scenario, config: PipelineConfig) -> ScenarioOutput:
    """Select on raw tracks, enhance, and evaluate every case of one scenario."""
    cases = select_conflicts(scenario, config.selection)
    conflicting = sorted({a for c in cases for a in (c.first_agent, c.second_agent)})

    enhanced: dict[str, Track] = {}
    for tr in scenario.tracks:
        enhanced[tr.agent_id] = enhance_track(
            tr, is_conflicting=tr.agent_id in conflicting, params=config.enhance
        ).as_track()

    results = tuple(
        evaluate_case(case, enhanced[case.first_agent], enhanced[case.second_agent], config)
        for case in cases
    )
    conf_veh = [a for a in conflicting if scenario.track(a).is_vehicle()]
    return ScenarioOutput(
        scenario_id=scenario.scenario_id,
        cases=results,
        raw_conflicting=tuple(scenario.track(a) for a in conf_veh),
        enhanced_conflicting=tuple(enhanced[a] for a in conf_veh),
    )


def _worker(args) -> ScenarioOutput:
    scenario, config = args
    return process_scenario(scenario, config)


# ---------------------------------------------------------------------------
# corpus aggregation


def run_corpus(scenarios: list[Scenario], config: PipelineConfig) -> CorpusResult:
    """Process all scenarios (optionally in parallel) and aggregate."""
    jobs = max(1, config.jobs)
    if jobs == 1 or len(scenarios) <= 1:
        outputs = [process_scenario(s, config) for s in scenarios]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_worker, [(s, config) for s in scenarios]))
    outputs.sort(key=lambda o: o.scenario_id)

    raw_tracks = [tr for o in outputs for tr in o.raw_conflicting]
    enh_tracks = [tr for o in outputs for tr in o.enhanced_conflicting]
    try:
        raw_rep = anomaly_report(raw_tracks)
        enh_rep = anomaly_report(enh_tracks)
    except InsufficientData:
        raw_rep = enh_rep = None

    counts = {str(label): 0 for label in ALL_REGIME_LABELS}
    counts["unclassified"] = 0
    for o in outputs:
        for res in o.cases:
            key = str(res.regime) if res.regime is not None else "unclassified"
            counts[key] += 1
    return CorpusResult(
        outputs=tuple(outputs),
        raw_anomaly=raw_rep,
        enhanced_anomaly=enh_rep,
        regime_counts=counts,
    )


# ---------------------------------------------------------------------------
# artifacts


def _fmt(value, spec: str = ".4f") -> str:
    return "" if value is None else format(value, spec)


def metrics_row(res: CaseResult) -> list[str]:
    r = res.record
    return [
        res.case.case_id,
        res.category.value,
        res.case.pair_kind.value,
        "" if res.regime is None else str(res.regime),
        _fmt(r.pet), _fmt(r.min_sep), _fmt(r.psd_min), _fmt(r.max_decel),
        _fmt(r.decel_lead_time), _fmt(r.mrct), _fmt(r.pre_conflict),
        _fmt(r.flow, ".6f"),
    ]


def write_artifacts(corpus: CorpusResult, out_dir: str | Path) -> list[Path]:
    """Write metrics.csv, cases.csv, anomaly.csv, and regimes.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def _open(name: str):
        path = out / name
        written.append(path)
        return open(path, "w", encoding="utf-8", newline="")

    with _open("metrics.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for o in corpus.outputs:
            for res in o.cases:
                writer.writerow(metrics_row(res))

    with _open("cases.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CASES_COLUMNS)
        for o in corpus.outputs:
            for res in o.cases:
                conflict = res.conflict
                writer.writerow([
                    res.case.case_id, res.case.scenario_id,
                    conflict.first_agent, conflict.second_agent,
                    res.first_kind.value, res.second_kind.value,
                    _fmt(conflict.location[0]), _fmt(conflict.location[1]),
                    _fmt(conflict.t_first), _fmt(conflict.t_second),
                    str(len(res.case.surrounding)),
                    res.record.mrct_failure or "",
                ])

    with _open("anomaly.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ANOMALY_COLUMNS)
        for stage, rep in (("raw", corpus.raw_anomaly), ("enhanced", corpus.enhanced_anomaly)):
            if rep is None:
                continue
            writer.writerow([
                stage, str(rep.n_tracks), f"{rep.delta_v:.4f}",
                f"{rep.acc_pct:.4f}", f"{rep.jerk_pct:.4f}", f"{rep.jsi_pct:.4f}",
            ])

    with _open("regimes.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["regime", "count"])
        for key, count in corpus.regime_counts.items():
            writer.writerow([key, str(count)])

    return written


def run_pipeline(config: PipelineConfig, make_figures: bool = True) -> list[Path]:
    """Ingest, process, and write all artifacts; returns the written paths.

    Any stage failure removes the partial outputs and raises PipelineError
    with a stage-tagged message.
    """
    from conflictkit import report  # imported lazily: pulls in matplotlib

    try:
        scenarios = ingest(config.input_dir)
    except ValueError as exc:
        raise PipelineError(f"[ingest] {exc}") from exc
    log.info("ingested %d scenarios from %s", len(scenarios), config.input_dir)

    try:
        corpus = run_corpus(scenarios, config)
    except Exception as exc:
        raise PipelineError(f"[process] {exc}") from exc

    written: list[Path] = []
    try:
        written += write_artifacts(corpus, config.out_dir)
        written += report.write_report(config.out_dir, make_figures=make_figures)
    except Exception as exc:
        for path in written:
            path.unlink(missing_ok=True)
        raise PipelineError(f"[report] {exc}") from exc
    n_cases = sum(len(o.cases) for o in corpus.outputs)
    log.info("wrote %d artifacts for %d cases to %s", len(written), n_cases, config.out_dir)
    return written
