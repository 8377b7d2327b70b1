"""Outlier repair, position reconstruction, and the preserve-raw gates."""

import numpy as np
import pytest

from conflictkit.core import DT, AgentKind, Track, position_based_speed
from conflictkit.enhance import (
    EnhanceParams,
    EnhanceStatus,
    SkipReason,
    detect_speed_outliers,
    derive_heading,
    enhance_track,
    preserve_raw_gate,
    reconstruct_av_boundaries,
    repair_outliers,
    resegment_positions,
    smooth_av_speed,
)
from conflictkit.synth import NoiseModel, SynthSpec, synth
from conflictkit.assess import RegimeLabel
from helpers import speed_profile_track, straight_track


class TestOutlierDetection:
    def test_zero_fill_flagged_with_window(self):
        v = np.full(60, 9.0)
        v[30] = 0.0
        mask = detect_speed_outliers(v)
        # the zero and +-0.3 s around it
        assert mask[27:34].all()
        assert not mask[:26].any() and not mask[35:].any()

    def test_derivative_jump_flagged(self):
        v = np.full(60, 9.0)
        v[40] = 11.0  # 20 m/s^2 jumps on both flanks
        assert detect_speed_outliers(v)[39:42].all()

    def test_static_track_zeros_are_legitimate(self):
        assert not detect_speed_outliers(np.zeros(60)).any()


class TestCubicRepair:
    @pytest.mark.parametrize("seed", range(5))
    def test_exact_on_cubic_speed_signals(self, seed):
        rng = np.random.default_rng(seed)
        t = np.arange(110) * DT
        coeffs = rng.uniform(-0.4, 0.4, 4)
        v = 9.0 + np.polyval(coeffs, t - 5.0)
        corrupted = v.copy()
        start = int(rng.integers(20, 80))
        corrupted[start:start + 3] = 0.0
        mask = np.zeros(110, dtype=bool)
        mask[start:start + 3] = True
        repaired, unrepaired = repair_outliers(corrupted, mask, t)
        assert unrepaired == 0
        assert np.max(np.abs(repaired - v)) < 1e-6

    def test_run_without_support_left_unrepaired(self):
        v = np.full(12, 8.0)
        mask = np.ones(12, dtype=bool)  # nothing trusted anywhere
        repaired, unrepaired = repair_outliers(v, mask)
        assert unrepaired == 1
        assert np.array_equal(repaired, v)


class TestPositionReconstruction:
    def test_av_boundary_windows_rebuilt_from_speed(self):
        # corrupt the first/last 1.5 s of positions; reconstruction from the
        # clean speed must restore them against the interior anchors
        tr = straight_track("av", kind=AgentKind.AV, v=8.0)
        x = tr.x.copy()
        x[:15] = x[15] - 0.5 * (x[15] - x[:15])  # compressed boundary
        x[-15:] = x[-16] + 0.5 * (x[-15:] - x[-16])
        bad = Track("av", AgentKind.AV, tr.t, x, tr.y, tr.vx, tr.vy, tr.heading)
        pos = reconstruct_av_boundaries(bad, bad.vx, bad.vy)
        assert np.allclose(pos[:, 0], tr.x, atol=1e-9)

    def test_resegment_arc_length_follows_corrected_speed(self):
        tr = straight_track("a", v=10.0)
        corrected = np.full(len(tr), 8.0)
        pos = resegment_positions(tr, corrected)
        arc = float(np.sum(np.hypot(np.diff(pos[:, 0]), np.diff(pos[:, 1]))))
        assert arc == pytest.approx(np.trapezoid(corrected, dx=DT), abs=1e-9)

    def test_resegment_keeps_the_raw_geometry(self):
        # curved path: resegmented points stay on the raw polyline
        t = np.arange(110) * DT
        x = 10.0 * t
        y = 5.0 * np.sin(x / 20.0)
        vx = np.full(110, 10.0)
        vy = 10.0 * 0.25 * np.cos(x / 20.0)
        speed = np.hypot(vx, vy)
        tr = Track("a", AgentKind.VEHICLE, t, x, y, vx, vy, np.arctan2(vy, vx))
        pos = resegment_positions(tr, speed)
        expected_y = 5.0 * np.sin(pos[:, 0] / 20.0)
        assert np.max(np.abs(pos[:, 1] - expected_y)) < 0.05


class TestPreserveRawGate:
    def test_short_duration(self):
        tr = straight_track("a", n=30)
        assert preserve_raw_gate(tr) is SkipReason.TOO_SHORT_DURATION

    def test_short_length_only_for_non_conflicting(self):
        tr = speed_profile_track("a", np.full(110, 0.5))  # 5.45 m travelled
        assert preserve_raw_gate(tr, is_conflicting=False) is SkipReason.TOO_SHORT_LENGTH
        assert preserve_raw_gate(tr, is_conflicting=True) is None

    def test_inconsistent_track(self):
        tr = straight_track("a", v=10.0)
        biased = Track("a", AgentKind.VEHICLE, tr.t, tr.x, tr.y,
                       tr.vx * 0.5, tr.vy, tr.heading)
        assert preserve_raw_gate(biased) is SkipReason.TOO_INCONSISTENT

    def test_gap_means_unverifiable(self):
        keep = np.concatenate([np.arange(0, 50), np.arange(55, 110)])
        base = straight_track("a")
        tr = Track("a", AgentKind.VEHICLE, base.t[keep], base.x[keep], base.y[keep],
                   base.vx[keep], base.vy[keep], base.heading[keep])
        assert preserve_raw_gate(tr) is SkipReason.TOO_INCONSISTENT

    def test_clean_track_passes(self):
        assert preserve_raw_gate(straight_track("a")) is None


class TestDeriveHeading:
    def test_straight_and_held_through_stop(self):
        pos = np.column_stack([np.concatenate([np.arange(20.0), np.full(10, 19.0)]),
                               np.zeros(30)])
        h = derive_heading(pos)
        assert np.allclose(h, 0.0, atol=1e-9)

    def test_static_needs_fallback(self):
        pos = np.zeros((10, 2))
        fallback = np.full(10, 0.7)
        assert np.allclose(derive_heading(pos, fallback=fallback), 0.7)


class TestEnhanceChain:
    def test_preserved_track_reports_reason(self):
        out = enhance_track(straight_track("a", n=30))
        assert out.status is EnhanceStatus.PRESERVED_RAW
        assert out.skip_reason is SkipReason.TOO_SHORT_DURATION

    def test_corrupted_track_becomes_self_consistent(self):
        noise = NoiseModel(speed_noise_sigma=0.5, zero_fill_probability=1.0,
                           boundary_corruption=True)
        res = synth(SynthSpec(regime=RegimeLabel.parse("C>C:L"), noise=noise),
                    seed=123)
        raw = res.scenario.track("a2")
        out = enhance_track(raw, is_conflicting=True)
        assert out.status is EnhanceStatus.ENHANCED
        rebuilt = out.as_track()
        mae = np.mean(np.abs(position_based_speed(rebuilt) - rebuilt.speed))
        assert mae < 0.05

    def test_av_smoothing_removes_sensor_jitter(self):
        rng = np.random.default_rng(9)
        clean = np.full(110, 9.0)
        jitter = rng.normal(0.0, 0.04, 110)
        out = smooth_av_speed(clean + jitter)
        assert np.std(out - clean) < 0.5 * np.std(jitter)

    def test_enhancement_is_deterministic(self):
        noise = NoiseModel(speed_noise_sigma=0.5, boundary_corruption=True)
        res = synth(SynthSpec(regime=RegimeLabel.parse("P>C:R"), noise=noise), seed=5)
        raw = res.scenario.track("a1")
        a = enhance_track(raw, is_conflicting=True)
        b = enhance_track(raw, is_conflicting=True)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.corrected_speed, b.corrected_speed)
