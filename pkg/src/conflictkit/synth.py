"""Seeded synthetic conflict scenarios with known ground truth.

Each scenario realizes one conflict regime: two agents whose paths cross at
the origin, passing it ``pet_target`` seconds apart. Optional corruption
reproduces the flaw modes seen in AV fleet recordings: compressed boundary
positions (terminal speed drop to about half), zero-filled speed runs, and
measurement noise on the reported speed.

Noise composition: the ego (AV) speed carries slow drift plus white sensor
noise and its positions integrate the drifting speed (onboard records keep
positions and speed consistent); perception agents carry slow drift only,
while their positions follow the clean motion, which reproduces the
speed/position inconsistency of perception pipelines.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from conflictkit.assess import ALL_REGIME_LABELS, Motion, RegimeLabel, Side
from conflictkit.core import DT, AgentKind, Scenario, Track

_N_SAMPLES = 110  # 11 s recording at 10 Hz
_T_PASS_FIRST = 5.0
_TURN_HALF_LENGTH = 6.0  # m, heading blend window around the conflict point

_BEFORE_ANGLE = {Motion.P: 20.0, Motion.C: 90.0, Motion.O: 160.0}
_AFTER_ANGLE = {Motion.P: 20.0, Motion.C: 90.0, Motion.O: 160.0}


@dataclass(frozen=True)
class NoiseModel:
    """Corruption settings for one synthetic scenario."""

    speed_noise_sigma: float = 0.0     # m/s, total sd of the speed noise
    zero_fill_probability: float = 0.0  # per track
    boundary_corruption: bool = False
    #: white sensor-noise share of the ego speed noise (rest is slow drift)
    white_sigma_cap: float = 0.04
    #: ego drift cap, m/s; onboard odometry drifts far less than perception
    ego_drift_cap: float = 0.05
    #: drift correlation time, seconds; slow enough that the drift reads as
    #: genuine speed variation rather than noise to the repair chain
    drift_time: float = 6.0
    #: arc length removed per corrupted track end, meters
    boundary_deficit: float = 0.6


@dataclass(frozen=True)
class SynthSpec:
    """Blueprint of one two-agent conflict scenario."""

    regime: RegimeLabel
    speeds: tuple[float, float] = (10.0, 10.0)
    pet_target: float = 2.0
    first_kind: AgentKind = AgentKind.VEHICLE
    second_kind: AgentKind = AgentKind.VEHICLE
    noise: NoiseModel = field(default_factory=NoiseModel)
    n_background: int = 0
    scenario_id: str = "synth"

    def __post_init__(self):
        if self.pet_target < 0:
            raise ValueError("pet_target must be non-negative")
        if any(v <= 0 for v in self.speeds):
            raise ValueError("speeds must be positive")


@dataclass(frozen=True)
class SynthTruth:
    """Generator bookkeeping for oracle tests."""

    regime: RegimeLabel
    pet: float
    t_first: float
    t_second: float
    first_agent: str
    second_agent: str
    conflict_xy: tuple[float, float]
    clean_tracks: dict[str, Track]


@dataclass(frozen=True)
class SynthResult:
    scenario: Scenario
    truth: SynthTruth


# ---------------------------------------------------------------------------
# geometric path: heading blends from psi_in to psi_out around arc zero


class _Path:
    def __init__(self, psi_in: float, psi_out: float, s_min: float, s_max: float):
        h = _TURN_HALF_LENGTH
        grid = np.arange(s_min - 2.0, s_max + 2.0 + 0.05, 0.05)
        blend = np.clip((grid + h) / (2.0 * h), 0.0, 1.0)
        ramp = blend * blend * (3.0 - 2.0 * blend)  # smoothstep, C1 heading
        psi = psi_in + (psi_out - psi_in) * ramp
        dx = np.cos(psi)
        dy = np.sin(psi)
        x = np.concatenate([[0.0], np.cumsum(0.5 * (dx[1:] + dx[:-1]) * np.diff(grid))])
        y = np.concatenate([[0.0], np.cumsum(0.5 * (dy[1:] + dy[:-1]) * np.diff(grid))])
        x -= np.interp(0.0, grid, x)  # anchor the conflict point at the origin
        y -= np.interp(0.0, grid, y)
        self.grid, self.x, self.y, self.psi = grid, x, y, psi

    def sample(self, s: np.ndarray):
        return (
            np.interp(s, self.grid, self.x),
            np.interp(s, self.grid, self.y),
            np.interp(s, self.grid, self.psi),
        )


def _smooth_noise(rng: np.random.Generator, n: int, sigma: float, tau: float) -> np.ndarray:
    """Band-limited Gaussian drift with marginal sd sigma and zero integral.

    The zero trapezoid integral keeps the travelled-distance bookkeeping of a
    corrupted track consistent with its clean counterpart.
    """
    if sigma <= 0:
        return np.zeros(n)
    # 6 tau support: kernel truncation would otherwise leak white noise that
    # survives differentiation
    m = int(round(6 * tau / DT))
    white = rng.normal(0.0, 1.0, n + 2 * m)
    k = np.exp(-0.5 * (np.arange(-m, m + 1) * DT / tau) ** 2)
    smooth = np.convolve(white, k / np.sqrt(np.sum(k * k)), mode="same")[m:-m]
    if n > 1:
        # centering absorbs the DC part of the noise, which a finite window
        # could never distinguish from the true speed anyway
        w = np.full(n, DT)
        w[0] = w[-1] = 0.5 * DT
        smooth -= np.sum(w * smooth) / np.sum(w)
    return sigma * smooth


def _sensor_noise(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    """Sample-to-sample sensor jitter with sd sigma.

    Second-difference filtering pushes the energy toward the Nyquist band,
    the signature of per-sample measurement jitter on an otherwise smooth
    quantity.
    """
    if sigma <= 0:
        return np.zeros(n)
    white = rng.normal(0.0, 1.0, n + 2)
    hp = np.convolve(white, [1.0, -2.0, 1.0], mode="valid") / np.sqrt(6.0)
    hp -= hp.mean()
    return sigma * hp


def _agent_motion(spec: SynthSpec, which: int, rng: np.random.Generator):
    """Clean kinematics for one agent: time, positions, speed, heading."""
    v0 = spec.speeds[which]
    t = np.arange(_N_SAMPLES) * DT
    t_pass = _T_PASS_FIRST + (spec.pet_target if which == 1 else 0.0)

    speed = np.full(_N_SAMPLES, v0)
    if which == 1 and spec.pet_target > 3.0:
        # long-PET cases need a behaviour change: brake-and-recover pulse
        amp = min(4.0, 0.8 * v0)
        speed = v0 - amp * np.exp(-(((t - (t_pass - 2.5)) / 0.8) ** 2))

    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * DT)])
    arc -= np.interp(t_pass, t, arc)  # s = 0 at passage

    if which == 0:
        psi_in = psi_out = 0.0
    else:
        sign = -1.0 if spec.regime.side is Side.LEFT_TO_RIGHT else 1.0
        psi_in = sign * np.deg2rad(_BEFORE_ANGLE[spec.regime.before])
        psi_out = sign * np.deg2rad(_AFTER_ANGLE[spec.regime.after])
    path = _Path(psi_in, psi_out, float(arc[0]), float(arc[-1]))
    x, y, psi = path.sample(arc)
    return t, x, y, speed, psi, t_pass


def _corrupt(track: Track, noise: NoiseModel, rng: np.random.Generator,
             avoid_time: float | None = None) -> Track:
    """Apply the requested corruption modes to one clean track.

    ``avoid_time`` shields a neighbourhood (a deliberate manoeuvre) from
    zero-fills, whose cubic repair assumes locally mild speed curvature.
    """
    t = track.t.copy()
    x, y = track.x.copy(), track.y.copy()
    vx, vy = track.vx.copy(), track.vy.copy()
    n = len(t)
    heading = track.heading.copy()
    speed = np.hypot(vx, vy)
    ux = np.where(speed > 1e-9, vx / np.maximum(speed, 1e-9), np.cos(heading))
    uy = np.where(speed > 1e-9, vy / np.maximum(speed, 1e-9), np.sin(heading))

    sigma = noise.speed_noise_sigma
    if sigma > 0:
        if track.agent_kind is AgentKind.AV:
            white_sd = min(noise.white_sigma_cap, 0.5 * sigma)
            drift_sd = min(np.sqrt(max(sigma ** 2 - white_sd ** 2, 0.0)),
                           noise.ego_drift_cap)
            drift = _smooth_noise(rng, n, drift_sd, noise.drift_time)
            white = _sensor_noise(rng, n, white_sd)
            consistent = speed + drift  # onboard positions follow the drift
            x = x[0] + np.concatenate(
                [[0.0], np.cumsum(0.5 * ((consistent * ux)[1:] + (consistent * ux)[:-1]) * DT)])
            y = y[0] + np.concatenate(
                [[0.0], np.cumsum(0.5 * ((consistent * uy)[1:] + (consistent * uy)[:-1]) * DT)])
            noisy = consistent + white
        else:
            noisy = speed + _smooth_noise(rng, n, sigma, noise.drift_time)
        noisy = np.maximum(noisy, 0.001)  # exact zeros are reserved for fills
        vx, vy = noisy * ux, noisy * uy

    # the two structural flaws stay mutually exclusive per track so that each
    # corrupted track still clears the travelled-distance consistency gate
    zero_filled = False
    can_zero_fill = track.agent_kind is not AgentKind.AV  # ego speed never drops out
    if can_zero_fill and noise.zero_fill_probability > 0 and rng.random() < noise.zero_fill_probability:
        run = 1 if np.median(speed) > 6.0 else int(rng.integers(1, 4))
        candidates = np.arange(16, 3 * n // 4 - run)
        if avoid_time is not None:
            # keep the repair's support window (1 s each side of the run)
            # clear of the manoeuvre's onset as well
            candidates = candidates[np.abs(candidates * DT - avoid_time) > 3.5]
        if len(candidates):
            start = int(rng.choice(candidates))
            vx[start:start + run] = 0.0
            vy[start:start + run] = 0.0
            zero_filled = True

    if noise.boundary_corruption and not zero_filled:
        k = 15  # 1.5 s at 10 Hz
        if n > 2 * k + 2:
            # halve displacement steps from each end inward, up to a bounded
            # arc deficit, re-accumulating from the interior anchors so the
            # interior positions stay put
            steps = np.column_stack([np.diff(x), np.diff(y)])
            lengths = np.hypot(steps[:, 0], steps[:, 1])
            for order in (range(k), range(n - 2, n - 2 - k, -1)):
                deficit = 0.0
                for i in order:
                    if deficit + 0.5 * lengths[i] > noise.boundary_deficit:
                        break
                    steps[i] *= 0.5
                    deficit += 0.5 * lengths[i]
            head = np.cumsum(steps[:k][::-1], axis=0)[::-1]
            x[:k] = x[k] - head[:, 0]
            y[:k] = y[k] - head[:, 1]
            tail = np.cumsum(steps[n - 1 - k:], axis=0)
            x[n - k:] = x[n - 1 - k] + tail[:, 0]
            y[n - k:] = y[n - 1 - k] + tail[:, 1]

    return Track(track.agent_id, track.agent_kind, t, x, y, vx, vy, heading)


def _background_track(i: int, duration_samples: int, rng: np.random.Generator) -> Track:
    """Straight mover parallel to the first agent, offset from the conflict."""
    offset = 15.0 if i % 2 == 0 else 40.0
    v = float(rng.uniform(6.0, 10.0))
    t = np.arange(duration_samples) * DT
    x = -30.0 + v * t
    y = np.full_like(t, offset if i % 4 < 2 else -offset)
    return Track(
        agent_id=f"bg{i}",
        agent_kind=AgentKind.VEHICLE,
        t=t, x=x, y=y,
        vx=np.full_like(t, v), vy=np.zeros_like(t),
        heading=np.zeros_like(t),
    )


def synth(spec: SynthSpec, seed: int) -> SynthResult:
    """Generate one scenario (possibly corrupted) plus its ground truth."""
    rng = np.random.default_rng(seed)
    ids = ("a1", "a2")
    kinds = (spec.first_kind, spec.second_kind)

    clean: dict[str, Track] = {}
    passes = {}
    for which in (0, 1):
        t, x, y, speed, psi, t_pass = _agent_motion(spec, which, rng)
        clean[ids[which]] = Track(
            agent_id=ids[which], agent_kind=kinds[which],
            t=t, x=x, y=y,
            vx=speed * np.cos(psi), vy=speed * np.sin(psi),
            heading=psi,
        )
        passes[ids[which]] = t_pass

    brake_time = passes["a2"] - 2.5 if spec.pet_target > 3.0 else None
    tracks = [
        _corrupt(clean["a1"], spec.noise, rng),
        _corrupt(clean["a2"], spec.noise, rng, avoid_time=brake_time),
    ]
    for i in range(spec.n_background):
        tracks.append(_background_track(i, _N_SAMPLES, rng))

    scenario = Scenario(
        scenario_id=spec.scenario_id,
        tracks=tuple(tracks),
        duration=(_N_SAMPLES - 1) * DT,
    )
    truth = SynthTruth(
        regime=spec.regime,
        pet=spec.pet_target,
        t_first=passes["a1"],
        t_second=passes["a2"],
        first_agent="a1",
        second_agent="a2",
        conflict_xy=(0.0, 0.0),
        clean_tracks=clean,
    )
    return SynthResult(scenario=scenario, truth=truth)


def corpus_specs(count: int, seed: int,
                 noise: NoiseModel | None = None,
                 av_share: float = 0.5,
                 ped_share: float = 0.15) -> list[SynthSpec]:
    """Deterministic corpus blueprint cycling through all 18 regimes."""
    rng = np.random.default_rng(seed)
    noise = noise or NoiseModel()
    specs = []
    for i in range(count):
        regime = ALL_REGIME_LABELS[i % len(ALL_REGIME_LABELS)]
        v1 = float(rng.uniform(7.0, 13.0))
        is_ped = rng.random() < ped_share
        v2 = 1.5 if is_ped else float(rng.uniform(7.0, 13.0))
        pet = float(rng.uniform(0.8, 2.8)) if i % 6 else float(rng.uniform(3.2, 4.2))
        first_kind = AgentKind.VEHICLE
        second_kind = AgentKind.PEDESTRIAN if is_ped else AgentKind.VEHICLE
        if rng.random() < av_share and not is_ped:
            # braking-pulse cases keep the AV in front: the pulse rides the
            # second passer and should stay clear of the ego smoothing path
            if rng.random() < 0.5 or pet > 3.0:
                first_kind = AgentKind.AV
            else:
                second_kind = AgentKind.AV
        specs.append(SynthSpec(
            regime=regime,
            speeds=(v1, v2),
            pet_target=pet,
            first_kind=first_kind,
            second_kind=second_kind,
            noise=noise,
            n_background=int(rng.integers(0, 3)),
            scenario_id=f"synth{i:04d}",
        ))
    return specs
