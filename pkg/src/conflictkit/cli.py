"""Command-line entry point.

Subcommands mirror the pipeline stages (ingest, select, enhance, assess,
metrics, report) plus the synthetic generator (synth) and the end-to-end
run (pipeline). Exit codes: 0 success, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from conflictkit.config import ConfigError, PipelineConfig, load_config
from conflictkit.core import ValidationError
from conflictkit.dataio import IngestError, ingest, write_scenario
from conflictkit.pipeline import (
    PipelineError,
    run_corpus,
    run_pipeline,
    write_artifacts,
)
from conflictkit.selection import select_conflicts
from conflictkit.synth import NoiseModel, corpus_specs, synth

log = logging.getLogger("conflictkit")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conflictkit",
        description="Extract, repair, and assess two-agent conflict cases "
                    "from 10 Hz trajectory logs.",
    )
    parser.add_argument("--config", metavar="PATH", help="flat key=value config file")
    parser.add_argument("--seed", type=int, metavar="N", help="random seed override")
    parser.add_argument("--jobs", type=int, metavar="N", help="worker process count")
    parser.add_argument("--out", metavar="DIR", help="output directory override")
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")

    sub = parser.add_subparsers(dest="command", required=True)

    for name, doc in (
        ("ingest", "validate scenario files and summarize them"),
        ("select", "list the conflict cases found in each scenario"),
        ("enhance", "repair all tracks and export the enhanced scenarios"),
        ("assess", "report anomaly shares of the conflicting vehicles, raw vs enhanced"),
        ("metrics", "compute per-case metrics and write the CSV artifacts"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("input", help="scenario file or directory")

    p = sub.add_parser("report", help="render histogram CSVs and figures from pipeline output")
    p.add_argument("input", help="pipeline output directory holding metrics.csv")

    p = sub.add_parser("synth", help="generate a seeded synthetic scenario corpus")
    p.add_argument("--count", type=int, default=18, help="number of scenarios (default 18)")
    p.add_argument("--sigma", type=float, default=0.0, help="speed noise sd in m/s")
    p.add_argument("--zero-fill-prob", type=float, default=0.0,
                   help="per-track probability of a zero-filled speed run")
    p.add_argument("--boundary", action="store_true",
                   help="corrupt the first/last 1.5 s of the position series")

    p = sub.add_parser("pipeline", help="run ingest through report end to end")
    p.add_argument("input", nargs="?", help="scenario directory (overrides pipeline.input)")
    return parser


def _load(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.out is not None:
        overrides["out_dir"] = args.out
    # `report` consumes an output directory, not scenario input
    if getattr(args, "input", None) and args.command != "report":
        overrides["input_dir"] = args.input
    return replace(cfg, **overrides) if overrides else cfg


# ---------------------------------------------------------------------------
# subcommands


def _cmd_ingest(cfg: PipelineConfig) -> int:
    scenarios = ingest(cfg.input_dir)
    n_tracks = sum(len(s.tracks) for s in scenarios)
    print(f"{len(scenarios)} scenario(s), {n_tracks} track(s), all valid")
    return EXIT_OK


def _cmd_select(cfg: PipelineConfig) -> int:
    total = 0
    for scenario in ingest(cfg.input_dir):
        for case in select_conflicts(scenario, cfg.selection):
            total += 1
            print(f"{case.case_id}\t{case.category.value}\t{case.pair_kind.value}"
                  f"\tpet={case.pet:.2f}s\tmin_sep={case.min_sep:.2f}m")
    print(f"{total} case(s)")
    return EXIT_OK


def _cmd_enhance(cfg: PipelineConfig) -> int:
    from conflictkit.core import Scenario
    from conflictkit.enhance import enhance_track

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for scenario in ingest(cfg.input_dir):
        conflicting = {
            a for c in select_conflicts(scenario, cfg.selection)
            for a in (c.first_agent, c.second_agent)
        }
        tracks = tuple(
            enhance_track(tr, is_conflicting=tr.agent_id in conflicting,
                          params=cfg.enhance).as_track()
            for tr in scenario.tracks
        )
        enhanced = Scenario(scenario.scenario_id, tracks, scenario.duration)
        path = write_scenario(enhanced, out / f"{scenario.scenario_id}.csv")
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_assess(cfg: PipelineConfig) -> int:
    corpus = run_corpus(ingest(cfg.input_dir), cfg)
    print("stage\tn_tracks\tdelta_v_mps\tacc_pct\tjerk_pct\tjsi_pct")
    for stage, rep in (("raw", corpus.raw_anomaly), ("enhanced", corpus.enhanced_anomaly)):
        if rep is None:
            print(f"{stage}\t0\t-\t-\t-\t-")
        else:
            print(f"{stage}\t{rep.n_tracks}\t{rep.delta_v:.4f}"
                  f"\t{rep.acc_pct:.2f}\t{rep.jerk_pct:.2f}\t{rep.jsi_pct:.2f}")
    return EXIT_OK


def _cmd_metrics(cfg: PipelineConfig) -> int:
    corpus = run_corpus(ingest(cfg.input_dir), cfg)
    for path in write_artifacts(corpus, cfg.out_dir):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_report(cfg: PipelineConfig, out_dir: str) -> int:
    from conflictkit.report import write_report

    for path in write_report(out_dir):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_synth(cfg: PipelineConfig, args) -> int:
    noise = NoiseModel(
        speed_noise_sigma=args.sigma,
        zero_fill_probability=args.zero_fill_prob,
        boundary_corruption=args.boundary,
    )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    specs = corpus_specs(args.count, seed=cfg.seed, noise=noise)
    for i, spec in enumerate(specs):
        result = synth(spec, seed=cfg.seed + i)
        write_scenario(result.scenario, out / f"{spec.scenario_id}.csv")
    print(f"wrote {len(specs)} scenario(s) to {out}")
    return EXIT_OK


def _cmd_pipeline(cfg: PipelineConfig) -> int:
    if not cfg.input_dir:
        raise ConfigError("pipeline needs an input directory (argument or pipeline.input)")
    for path in run_pipeline(cfg):
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _load(args)
        if args.command == "synth":
            return _cmd_synth(cfg, args)
        if args.command == "report":
            return _cmd_report(cfg, args.input)
        handler = {
            "ingest": _cmd_ingest,
            "select": _cmd_select,
            "enhance": _cmd_enhance,
            "assess": _cmd_assess,
            "metrics": _cmd_metrics,
            "pipeline": _cmd_pipeline,
        }[args.command]
        return handler(cfg)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT if str(exc).startswith("[ingest]") else EXIT_INTERNAL
    except (IngestError, ConfigError, ValidationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # invariant violation: anything unanticipated
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
