"""End-to-end orchestration, artifacts, determinism, and CLI behaviour."""

import csv

import numpy as np
import pytest

from conflictkit import cli
from conflictkit.assess import RegimeLabel
from conflictkit.config import PipelineConfig
from conflictkit.dataio import write_scenario
from conflictkit.pipeline import (
    CASES_COLUMNS,
    METRICS_COLUMNS,
    PipelineError,
    process_scenario,
    run_corpus,
    run_pipeline,
    write_artifacts,
)
from conflictkit.synth import NoiseModel, SynthSpec, corpus_specs, synth


def _make_corpus(tmp_path, count=6, noise=None, seed=0):
    data = tmp_path / "data"
    data.mkdir(exist_ok=True)
    truths = {}
    for i, spec in enumerate(corpus_specs(count, seed=seed, noise=noise)):
        spec = SynthSpec(**{**spec.__dict__, "n_background": 0})
        res = synth(spec, seed=seed + i)
        write_scenario(res.scenario, data / f"{spec.scenario_id}.csv")
        truths[spec.scenario_id] = res.truth
    return data, truths


class TestProcessScenario:
    def test_ground_truth_case_recovered(self):
        res = synth(SynthSpec(regime=RegimeLabel.parse("C>C:L")), seed=1)
        out = process_scenario(res.scenario, PipelineConfig())
        assert len(out.cases) == 1
        case = out.cases[0]
        assert case.conflict.first_agent == res.truth.first_agent
        assert case.record.pet == pytest.approx(res.truth.pet, abs=0.05)
        assert str(case.regime) == str(res.truth.regime)
        assert case.record.mrct is not None

    def test_conflicting_vehicle_tracks_collected(self):
        res = synth(SynthSpec(regime=RegimeLabel.parse("C>C:L")), seed=1)
        out = process_scenario(res.scenario, PipelineConfig())
        assert [tr.agent_id for tr in out.raw_conflicting] == ["a1", "a2"]
        assert [tr.agent_id for tr in out.enhanced_conflicting] == ["a1", "a2"]


class TestRunCorpus:
    def test_case_count_matches_generator_bookkeeping(self, tmp_path):
        data, truths = _make_corpus(tmp_path, count=8)
        from conflictkit.dataio import ingest
        corpus = run_corpus(ingest(data), PipelineConfig())
        assert len(corpus.outputs) == len(truths)
        assert sum(len(o.cases) for o in corpus.outputs) == len(truths)

    def test_parallel_equals_serial(self, tmp_path):
        data, _ = _make_corpus(tmp_path, count=6,
                               noise=NoiseModel(speed_noise_sigma=0.5))
        from conflictkit.dataio import ingest
        scenarios = ingest(data)
        serial = run_corpus(scenarios, PipelineConfig(jobs=1))
        parallel = run_corpus(scenarios, PipelineConfig(jobs=4))
        assert [o.scenario_id for o in serial.outputs] == [o.scenario_id for o in parallel.outputs]
        for a, b in zip(serial.outputs, parallel.outputs):
            for ca, cb in zip(a.cases, b.cases):
                assert ca.record == cb.record

    def test_anomaly_direction_on_corrupted_corpus(self, tmp_path):
        noise = NoiseModel(speed_noise_sigma=0.5, zero_fill_probability=0.6,
                           boundary_corruption=True)
        data, _ = _make_corpus(tmp_path, count=8, noise=noise)
        from conflictkit.dataio import ingest
        corpus = run_corpus(ingest(data), PipelineConfig())
        assert corpus.raw_anomaly.jsi_pct > corpus.enhanced_anomaly.jsi_pct
        assert corpus.enhanced_anomaly.delta_v < corpus.raw_anomaly.delta_v


class TestArtifacts:
    def test_columns_and_empty_fields(self, tmp_path):
        data, _ = _make_corpus(tmp_path, count=6)
        from conflictkit.dataio import ingest
        corpus = run_corpus(ingest(data), PipelineConfig())
        out = tmp_path / "out"
        write_artifacts(corpus, out)
        with open(out / "metrics.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == METRICS_COLUMNS
        assert len(rows) > 1
        for row in rows[1:]:
            assert len(row) == len(METRICS_COLUMNS)
            for field in row:
                # undefined values are empty, never sentinel numbers
                assert field != "nan" and field != "-1"
        with open(out / "cases.csv", newline="") as fh:
            assert tuple(next(csv.reader(fh))) == CASES_COLUMNS

    def test_empty_input_writes_empty_reports(self, tmp_path):
        data = tmp_path / "data"
        data.mkdir()
        cfg = PipelineConfig(input_dir=str(data), out_dir=str(tmp_path / "out"))
        run_pipeline(cfg, make_figures=False)
        with open(tmp_path / "out" / "metrics.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1  # header only

    def test_missing_input_is_stage_tagged(self, tmp_path):
        cfg = PipelineConfig(input_dir=str(tmp_path / "nope"),
                             out_dir=str(tmp_path / "out"))
        with pytest.raises(PipelineError, match=r"\[ingest\]"):
            run_pipeline(cfg, make_figures=False)

    def test_rerun_is_byte_identical(self, tmp_path):
        data, _ = _make_corpus(tmp_path, count=6)
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        for out in (out1, out2):
            run_pipeline(PipelineConfig(input_dir=str(data), out_dir=str(out)),
                         make_figures=False)
        for name in ("metrics.csv", "cases.csv", "anomaly.csv", "regimes.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestCli:
    def test_synth_then_pipeline_exit_zero(self, tmp_path, capsys):
        data = tmp_path / "data"
        out = tmp_path / "out"
        assert cli.main(["--seed", "3", "--out", str(data), "synth",
                         "--count", "4"]) == 0
        assert cli.main(["--out", str(out), "pipeline", str(data)]) == 0
        assert (out / "metrics.csv").is_file()
        assert (out / "pet_hist.png").is_file()

    def test_report_subcommand_reuses_pipeline_output(self, tmp_path):
        data = tmp_path / "data"
        out = tmp_path / "out"
        cli.main(["--seed", "3", "--out", str(data), "synth", "--count", "3"])
        cli.main(["--out", str(out), "metrics", str(data)])
        assert cli.main(["report", str(out)]) == 0
        assert (out / "regimes.png").is_file()

    def test_input_error_exit_code(self, tmp_path, capsys):
        assert cli.main(["ingest", str(tmp_path / "missing")]) == 1
        bad = tmp_path / "bad"
        bad.mkdir()
        (bad / "x.csv").write_text("not,a,header\n")
        assert cli.main(["ingest", str(bad)]) == 1

    def test_bad_config_exit_code(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("selection.nosuch = 1\n")
        assert cli.main(["--config", str(cfg), "ingest", str(tmp_path)]) == 1

    def test_ingest_and_select_outputs(self, tmp_path, capsys):
        data, _ = _make_corpus(tmp_path, count=3)
        assert cli.main(["ingest", str(data)]) == 0
        assert "3 scenario(s)" in capsys.readouterr().out
        assert cli.main(["select", str(data)]) == 0
        assert "case(s)" in capsys.readouterr().out

    def test_assess_prints_contrast(self, tmp_path, capsys):
        noise = NoiseModel(speed_noise_sigma=0.5, boundary_corruption=True)
        data, _ = _make_corpus(tmp_path, count=4, noise=noise)
        assert cli.main(["assess", str(data)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[1].startswith("raw") and lines[2].startswith("enhanced")

    def test_enhance_writes_scenarios(self, tmp_path):
        data, _ = _make_corpus(tmp_path, count=2)
        out = tmp_path / "enh"
        assert cli.main(["--out", str(out), "enhance", str(data)]) == 0
        assert len(list(out.glob("*.csv"))) == 2
