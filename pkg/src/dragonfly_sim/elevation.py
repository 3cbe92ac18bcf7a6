"""Elevation from time-divided Tx pairs with Doppler disambiguation.

Each chirp yields a radial phase (mod pi).  Differences across the two
alternating Tx channels mix the wanted elevation phase with the phase the
tag's radial motion accrues between transmissions; second differences
within one Tx channel isolate the motion term, but only modulo pi, leaving
two candidates per chirp.  This module implements the candidate selection
(constant-velocity trajectory pairing, the quarter-turn proximity rule for
accelerating tags, and the Kalman-filter hypothesis test for outliers),
the unwrapping of the resulting elevation phase, and its conversion to an
elevation angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chirp2d import Detection
from .core import RadarConfig, SPEED_OF_LIGHT, max_acceleration
from .dsp import wrap_pi, wrap_pm_pi
from .kalman import KalmanFilter, make_tracking_filter

TWO_PI = 2.0 * math.pi


class GapError(RuntimeError):
    """The recurrence needs detections at k-1 and k-2 that are missing."""


class TrackingLost(RuntimeError):
    """The unwrapped elevation phase left the physical domain."""


def velocity_per_radian(cfg: RadarConfig) -> float:
    """Radial velocity corresponding to one radian of velocity phase."""
    return SPEED_OF_LIGHT / (8.0 * math.pi * cfg.f0 * cfg.tx_period)


def velocity_modulus(cfg: RadarConfig) -> float:
    """Velocity ambiguity after candidate selection (a full 2*pi of phase)."""
    return TWO_PI * velocity_per_radian(cfg)


def radial_phase(det: Detection) -> float:
    """Radial phase of one detection: half the peak phase difference, mod pi."""
    return float(wrap_pi(0.5 * (det.phi_plus - det.phi_minus)))


def elevation_from_delta(cfg: RadarConfig, delta_unwrapped: float) -> float:
    """Elevation angle (rad) from the unwrapped elevation phase.

    The sign follows from the phase conventions of the synthesizer: a tag
    above the horizon makes the odd-chirp radial phase lead, which drives
    delta negative.
    """
    arg = -delta_unwrapped * cfg.wavelength / (TWO_PI * cfg.d_tx)
    if abs(arg) > 1.0:
        raise TrackingLost(f"elevation phase {delta_unwrapped:g} rad outside the physical domain")
    return math.asin(arg)


def delta_from_elevation(cfg: RadarConfig, elevation: float) -> float:
    """Inverse of :func:`elevation_from_delta` (exact on the principal branch)."""
    return -TWO_PI * cfg.d_tx * math.sin(elevation) / cfg.wavelength


def principal_elevation_interval(cfg: RadarConfig) -> float:
    """Half-width (rad) of the elevation interval unambiguous without unwrapping."""
    return math.asin(cfg.wavelength / (4.0 * cfg.d_tx))


@dataclass
class PhaseRow:
    """Per-chirp elevation-pipeline state for one tag."""

    k: int
    t: float
    tx_channel: int
    phi_r: float                    # rad, mod pi
    range_m: float
    snr_db: float = math.inf
    alpha: float | None = None      # rad, mod pi
    beta_lo: float | None = None    # lower beta candidate, mod pi
    beta_chosen: float | None = None  # selected candidate, mod 2*pi
    delta: float | None = None      # rad, mod pi
    delta_unwrapped: float | None = None
    elevation: float | None = None  # rad
    v_r_est: float | None = None    # m/s, wrapped into +-velocity_modulus/2
    exception: bool = False
    valid: bool = False


@dataclass
class PhaseSeries:
    """Ordered per-chirp rows, possibly with gaps in k."""

    rows: dict[int, PhaseRow] = field(default_factory=dict)
    ambiguous: bool = False

    def add(self, row: PhaseRow) -> None:
        self.rows[row.k] = row

    def ks(self) -> list[int]:
        return sorted(self.rows)

    def __getitem__(self, k: int) -> PhaseRow:
        return self.rows[k]

    def __len__(self) -> int:
        return len(self.rows)

    def valid_rows(self) -> list[PhaseRow]:
        return [self.rows[k] for k in self.ks() if self.rows[k].valid]

    @classmethod
    def from_detections(cls, dets: list[Detection], cfg: RadarConfig) -> "PhaseSeries":
        s = cls()
        for d in dets:
            s.add(
                PhaseRow(
                    k=d.chirp_index,
                    t=d.chirp_index * cfg.tx_period,
                    tx_channel=d.tx_channel,
                    phi_r=radial_phase(d),
                    range_m=d.range_m,
                    snr_db=d.snr_db,
                )
            )
        return s


def alpha_beta(series: PhaseSeries, k: int) -> tuple[float, tuple[float, float]]:
    """First difference across parity (alpha) and the two second-difference
    candidates (beta, consistently pi apart), all from mod-pi radial phases.

    Raises GapError if k-1 or k-2 is missing.
    """
    if k not in series.rows or (k - 1) not in series.rows or (k - 2) not in series.rows:
        raise GapError(f"chirps {k - 2}..{k} not all present")
    phi_k = series.rows[k].phi_r
    phi_k1 = series.rows[k - 1].phi_r
    phi_k2 = series.rows[k - 2].phi_r
    if k % 2 == 1:
        alpha = float(wrap_pi(phi_k1 - phi_k))
    else:
        alpha = float(wrap_pi(phi_k - phi_k1))
    beta_lo = float(wrap_pi(phi_k - phi_k2))
    return alpha, (beta_lo, beta_lo + math.pi)


def delta_value(
    k: int,
    alpha: float,
    beta_chosen: float,
    prev_beta_chosen: float | None,
    accel_correction: bool = True,
) -> float:
    """Doppler-corrected elevation phase for chirp k, mod pi.

    The base recurrence removes the velocity phase assuming it constant
    over the three chirps involved.  Under acceleration the two-chirp
    average lags the one-chirp step by a quarter of the beta increment,
    with a parity-dependent sign; the correction removes that bias exactly
    for constant acceleration.
    """
    if k % 2 == 1:
        d = alpha + beta_chosen / 2.0
        sign = +1.0
    else:
        d = alpha - beta_chosen / 2.0
        sign = -1.0
    if accel_correction and prev_beta_chosen is not None:
        d += sign * float(wrap_pm_pi(beta_chosen - prev_beta_chosen)) / 4.0
    return float(wrap_pi(d))


def candidate_velocities(cfg: RadarConfig, candidates: tuple[float, float]) -> np.ndarray:
    """Wrapped radial velocities implied by the two beta candidates (m/s)."""
    v_unit = velocity_per_radian(cfg)
    return np.array([float(wrap_pm_pi(c)) * v_unit for c in candidates])


def _nearest_candidate(candidates: tuple[float, float], reference: float) -> int:
    """Index of the candidate circularly closest (mod 2*pi) to the reference."""
    d0 = abs(float(wrap_pm_pi(candidates[0] - reference)))
    d1 = abs(float(wrap_pm_pi(candidates[1] - reference)))
    return 0 if d0 <= d1 else 1


def disambiguate_accelerating(
    candidates: tuple[float, float], prev_beta_chosen: float
) -> float:
    """Proximity rule: pick the candidate nearer the previous choice.

    The two candidates are pi apart, so exactly one of them is within a
    quarter turn whenever the acceleration stays below the configuration's
    limit; ties (at exactly the limit) resolve to the first candidate.
    """
    return candidates[_nearest_candidate(candidates, prev_beta_chosen)]


def unwrap_step(prev_mod: float, new_mod: float) -> float:
    """Increment between two mod-pi phases, wrapped into [-pi/2, pi/2)."""
    return float(np.mod(new_mod - prev_mod + math.pi / 2, math.pi) - math.pi / 2)


def anchor_delta(delta_mod: float) -> float:
    """Initial unwrapped delta, assuming the tag starts in the principal interval."""
    return float(np.mod(delta_mod + math.pi / 2, math.pi) - math.pi / 2)


# --- constant-velocity batch solver ----------------------------------------


def range_rate_estimate(series: PhaseSeries, cfg: RadarConfig) -> float:
    """Coarse radial velocity from the range track (least-squares slope)."""
    ks = series.ks()
    if len(ks) < 2:
        return 0.0
    t = np.array([series.rows[k].t for k in ks])
    r = np.array([series.rows[k].range_m for k in ks])
    t = t - t.mean()
    denom = float(t @ t)
    if denom == 0.0:
        return 0.0
    return float(t @ (r - r.mean())) / denom


def disambiguate_constant_velocity(
    series: PhaseSeries,
    cfg: RadarConfig,
    prior: str = "range_rate",
    accel_correction: bool = True,
    naive: bool = False,
) -> PhaseSeries:
    """Resolve the candidate pair under the constant-radial-velocity model.

    Both maintained trajectories (one per initial candidate) are walked by
    proximity, then one is selected by the prior:

    * ``range_rate`` (default): trajectory whose implied velocity is
      circularly closest to the slope of the range track.
    * ``min_speed``: trajectory with the smaller implied |v|; flags the
      series ambiguous when the two are indistinguishable.

    With ``naive`` the velocity phase is deliberately not removed
    (delta = alpha), for comparison plots of the motion-induced error.

    Requires at least 3 consecutive detections.
    """
    ks = series.ks()
    if len(ks) < 3:
        raise ValueError("need at least 3 detections")

    # Walk both trajectories over every k with a full (k-2, k-1, k) triple.
    usable: list[int] = []
    alphas: dict[int, float] = {}
    betas: dict[int, tuple[float, float]] = {}
    for k in ks:
        try:
            a, cands = alpha_beta(series, k)
        except GapError:
            continue
        usable.append(k)
        alphas[k] = a
        betas[k] = cands
    if not usable:
        raise ValueError("no chirp has both predecessors present")

    trajectories = []
    for seed_idx in (0, 1):
        chosen: dict[int, float] = {}
        prev: float | None = None
        for k in usable:
            cands = betas[k]
            if prev is None:
                c = cands[seed_idx]
            else:
                c = disambiguate_accelerating(cands, prev)
            chosen[k] = c
            prev = c
        # circular mean keeps trajectories near the wrap boundary well-defined
        mean_phase = float(np.angle(np.mean(np.exp(1j * np.array(list(chosen.values()))))))
        v_mean = mean_phase * velocity_per_radian(cfg)
        trajectories.append((chosen, v_mean))

    modulus = velocity_modulus(cfg)
    if prior == "range_rate":
        v_ref = range_rate_estimate(series, cfg)
        scores = [
            abs(float(wrap_pm_pi((v - v_ref) * TWO_PI / modulus))) * modulus / TWO_PI
            for _, v in trajectories
        ]
    elif prior == "min_speed":
        scores = [abs(v) for _, v in trajectories]
    else:
        raise ValueError(f"unknown prior {prior!r}")
    pick = int(np.argmin(scores))
    if abs(scores[0] - scores[1]) < 1e-3:
        series.ambiguous = True
    chosen, _ = trajectories[pick]

    v_unit = velocity_per_radian(cfg)
    prev_beta: float | None = None
    prev_delta_mod: float | None = None
    delta_u = 0.0
    for k in usable:
        row = series.rows[k]
        row.alpha = alphas[k]
        row.beta_lo = betas[k][0]
        row.beta_chosen = chosen[k]
        if naive:
            d = float(wrap_pi(alphas[k]))
        else:
            d = delta_value(k, alphas[k], chosen[k], prev_beta, accel_correction)
        row.delta = d
        if prev_delta_mod is None:
            delta_u = anchor_delta(d)
        else:
            delta_u += unwrap_step(prev_delta_mod, d)
        prev_delta_mod = d
        row.delta_unwrapped = delta_u
        row.elevation = elevation_from_delta(cfg, delta_u)
        row.v_r_est = float(wrap_pm_pi(chosen[k])) * v_unit
        row.valid = True
        prev_beta = chosen[k]
    return series


# --- exception handling (outlier-robust selection) ---------------------------


@dataclass
class ExceptionState:
    """Two Kalman filters and the thresholds of the outlier handler.

    kf_radial tracks [radial velocity, radial acceleration]; kf_elev tracks
    [elevation, elevation rate].  A chirp whose proximity-rule candidate
    implies an acceleration above ``accel_threshold`` (or an elevation jump
    beyond the innovation gate) triggers the hypothesis test; if even the
    best hypothesis lies outside ``gate_sigma`` the measurement is rejected
    and the filters coast.
    """

    kf_radial: KalmanFilter
    kf_elev: KalmanFilter
    accel_threshold: float
    gate_sigma: float = 5.0
    warmup_updates: int = 8
    updates: int = 0

    @property
    def ready(self) -> bool:
        return self.updates >= self.warmup_updates

    def predict(self) -> None:
        self.kf_radial.predict()
        self.kf_elev.predict()

    def update(self, v_meas: float, elev_meas: float) -> None:
        self.kf_radial.update([v_meas])
        self.kf_elev.update([elev_meas])
        self.updates += 1


def make_exception_state(
    cfg: RadarConfig,
    *,
    accel_threshold: float | None = None,
    velocity_noise_std: float = 0.01,
    elevation_noise_std: float = 0.005,
    gate_sigma: float = 5.0,
    initial_velocity: float = 0.0,
    initial_elevation: float = 0.0,
) -> ExceptionState:
    """Build the handler with process noise scaled to the acceleration limit."""
    a_max = max_acceleration(cfg)
    t = cfg.tx_period
    # Velocity filter: white jerk sized so 3 sigma of the per-chirp velocity
    # change matches the acceleration limit.
    q_radial = a_max**2 / (3.0 * t)
    kf_radial = make_tracking_filter(
        t, q_radial, velocity_noise_std,
        initial_value=initial_velocity, initial_std=(0.5, a_max),
    )
    # Elevation filter: constant-rate model with modest rate drive.
    kf_elev = make_tracking_filter(
        t, 1.0, elevation_noise_std,
        initial_value=initial_elevation, initial_std=(0.2, 2.0),
    )
    return ExceptionState(
        kf_radial=kf_radial,
        kf_elev=kf_elev,
        accel_threshold=accel_threshold if accel_threshold is not None else 0.9 * a_max,
        gate_sigma=gate_sigma,
    )


def score_hypotheses(
    state: ExceptionState,
    v_candidates: np.ndarray,
    elev_candidates: np.ndarray,
    modulus: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Log-likelihood scores of the two beta hypotheses.

    Each candidate's implied radial velocity (known modulo the velocity
    modulus) and implied elevation are scored under the filters' predictive
    Gaussians; the combined score is the product of the likelihoods, i.e.
    the sum of log densities.  Returns (log_scores, mahalanobis_sq).
    """
    v_pred = state.kf_radial.predicted_measurement
    s_v = state.kf_radial.innovation_variance
    e_pred = state.kf_elev.predicted_measurement
    s_e = state.kf_elev.innovation_variance
    log_scores = np.empty(2)
    maha = np.empty(2)
    for i in range(2):
        dv = float(wrap_pm_pi((v_candidates[i] - v_pred) * TWO_PI / modulus)) * modulus / TWO_PI
        de = elev_candidates[i] - e_pred
        m2 = dv * dv / s_v + de * de / s_e
        maha[i] = m2
        log_scores[i] = -0.5 * m2 - 0.5 * math.log(s_v * s_e)
    return log_scores, maha


def handle_exception(
    state: ExceptionState,
    beta_candidates: tuple[float, float],
    v_candidates: np.ndarray,
    elev_candidates: np.ndarray,
    modulus: float,
    prev_beta_chosen: float | None,
) -> tuple[int, bool]:
    """Pick a hypothesis; returns (index, accepted).

    ``accepted`` is False when even the better hypothesis fails the
    innovation gate (the measurement is an outlier and should be coasted
    over).  A tie between scores falls back to the proximity rule.
    """
    log_scores, maha = score_hypotheses(state, v_candidates, elev_candidates, modulus)
    if abs(log_scores[0] - log_scores[1]) < 1e-12 and prev_beta_chosen is not None:
        idx = _nearest_candidate(beta_candidates, prev_beta_chosen)
    else:
        idx = int(np.argmax(log_scores))
    accepted = bool(maha[idx] <= state.gate_sigma**2 * 2.0)  # 2 degrees of freedom
    return idx, accepted


# --- streaming tracker --------------------------------------------------------


def local_range_rate(rows: list[PhaseRow], center_idx: int, halfwidth: int) -> float:
    """Least-squares range slope over rows near center_idx.

    A window symmetric about its center estimates the velocity at the
    center with no bias under constant acceleration.
    """
    lo = max(0, center_idx - halfwidth)
    hi = min(len(rows), center_idx + halfwidth + 1)
    window = rows[lo:hi]
    if len(window) < 2:
        return 0.0
    t = np.array([r.t for r in window])
    rng = np.array([r.range_m for r in window])
    t = t - t.mean()
    denom = float(t @ t)
    if denom == 0.0:
        return 0.0
    return float(t @ (rng - rng.mean())) / denom


class ElevationTracker:
    """Turns one tag's ordered Detection stream into elevation rows.

    The first ``warmup_rows`` detections are buffered; the velocity-phase
    trajectory is then seeded from a local range-rate fit at the buffer
    center and walked outward in both directions, after which the tracker
    streams chirp by chirp with the proximity rule and (optionally) the
    Kalman exception handler.  ``push`` returns the rows it can emit, which
    is the whole buffer on the flushing call; ``finalize`` flushes a buffer
    that never filled.
    """

    def __init__(
        self,
        cfg: RadarConfig,
        *,
        warmup_rows: int = 49,
        enable_exception_handler: bool = True,
        accel_correction: bool = True,
        accel_threshold: float | None = None,
        phase_noise_floor: float = 2e-3,
        gate_sigma: float = 5.0,
        gap_reset: int = 8,
    ):
        self.cfg = cfg
        self.warmup_rows = max(5, warmup_rows)
        self.enable_handler = enable_exception_handler
        self.accel_correction = accel_correction
        self.accel_threshold = (
            accel_threshold if accel_threshold is not None else 0.9 * max_acceleration(cfg)
        )
        # Radial-phase noise floor (rad): interpolation and model residuals
        # keep measurement noise from ever being assumed zero.
        self.phase_noise_floor = phase_noise_floor
        self.gate_sigma = gate_sigma
        self.gap_reset = gap_reset

        self.series = PhaseSeries()
        self._buffer: list[PhaseRow] = []
        self._flushed = False
        self._state: ExceptionState | None = None
        self._prev_beta: float | None = None
        self._prev_delta_mod: float | None = None
        self._delta_u: float = 0.0
        self._last_valid_k: int | None = None
        self._v_unit = velocity_per_radian(cfg)
        self._modulus = velocity_modulus(cfg)
        self._coast_run = 0
        self.max_coast = 8
        # Rolling range history anchors the modular phase velocity to the
        # absolute range rate; a persistent half-modulus disagreement means
        # the candidate chain is on the wrong branch and must re-seed.
        self._range_hist: list[tuple[float, float]] = []
        self._range_hist_len = 33
        self._drift_run = 0
        self._drift_limit = 5

    # -- public API -----------------------------------------------------------

    def push(self, det: Detection) -> list[PhaseRow]:
        row = PhaseRow(
            k=det.chirp_index,
            t=det.chirp_index * self.cfg.tx_period,
            tx_channel=det.tx_channel,
            phi_r=radial_phase(det),
            range_m=det.range_m,
            snr_db=det.snr_db,
        )
        self.series.add(row)
        if not self._flushed:
            self._buffer.append(row)
            if len(self._buffer) >= self.warmup_rows:
                return self._flush()
            return []
        return [self._step(row)]

    def finalize(self) -> list[PhaseRow]:
        if not self._flushed and self._buffer:
            return self._flush()
        return []

    # -- warmup ----------------------------------------------------------------

    def _flush(self) -> list[PhaseRow]:
        rows = self._buffer
        self._buffer = []
        self._flushed = True
        usable = [r for r in rows if self._has_triple(r.k)]
        if len(usable) >= 1:
            self._walk_buffer(rows, usable)
        if self.enable_handler:
            self._init_filters(usable)
        return rows

    def _has_triple(self, k: int) -> bool:
        return (k - 1) in self.series.rows and (k - 2) in self.series.rows

    def _walk_buffer(self, rows: list[PhaseRow], usable: list[PhaseRow]) -> None:
        center_idx = len(usable) // 2
        center = usable[center_idx]
        idx_in_all = rows.index(center)
        v_seed = local_range_rate(rows, idx_in_all, halfwidth=len(rows))
        _, cands = alpha_beta(self.series, center.k)
        vc = candidate_velocities(self.cfg, cands)
        dists = [
            abs(float(wrap_pm_pi((v - v_seed) * TWO_PI / self._modulus)))
            for v in vc
        ]
        chosen: dict[int, float] = {center.k: cands[int(np.argmin(dists))]}

        # proximity-walk outward from the seeded center
        prev = chosen[center.k]
        for r in usable[center_idx + 1 :]:
            _, cands = alpha_beta(self.series, r.k)
            prev = disambiguate_accelerating(cands, prev)
            chosen[r.k] = prev
        prev = chosen[center.k]
        for r in reversed(usable[:center_idx]):
            _, cands = alpha_beta(self.series, r.k)
            prev = disambiguate_accelerating(cands, prev)
            chosen[r.k] = prev

        prev_beta: float | None = None
        prev_delta: float | None = None
        delta_u = 0.0
        for i, r in enumerate(usable):
            alpha, cands = alpha_beta(self.series, r.k)
            c = chosen[r.k]
            r.alpha = alpha
            r.beta_lo = cands[0]
            r.beta_chosen = c
            if prev_beta is None and len(usable) > i + 1:
                # no predecessor for the first row: the forward difference
                # carries the same acceleration step, so mirror it back
                c_next = chosen[usable[i + 1].k]
                prev_for_corr = c - float(wrap_pm_pi(c_next - c))
            else:
                prev_for_corr = prev_beta
            d = delta_value(r.k, alpha, c, prev_for_corr, self.accel_correction)
            r.delta = d
            if prev_delta is None:
                delta_u = anchor_delta(d)
            else:
                delta_u += unwrap_step(prev_delta, d)
            prev_delta = d
            r.delta_unwrapped = delta_u
            r.elevation = elevation_from_delta(self.cfg, delta_u)
            r.v_r_est = float(wrap_pm_pi(c)) * self._v_unit
            r.valid = True
            prev_beta = c
            self._last_valid_k = r.k
        self._prev_beta = prev_beta
        self._prev_delta_mod = prev_delta
        self._delta_u = delta_u

    def _phase_sigma(self, row: PhaseRow) -> float:
        """Radial-phase noise implied by the detection's own SNR."""
        if not math.isfinite(row.snr_db):
            return self.phase_noise_floor
        snr = 10.0 ** (row.snr_db / 10.0)
        return max(self.phase_noise_floor, 0.5 / math.sqrt(max(snr, 1.0)))

    def _set_measurement_noise(self, row: PhaseRow) -> None:
        """Scale both filters' R to the current chirp's phase noise."""
        sp = self._phase_sigma(row)
        sigma_v = math.sqrt(2.0) * sp * self._v_unit
        sigma_e = 1.3 * sp * self.cfg.wavelength / (TWO_PI * self.cfg.d_tx)
        self._state.kf_radial.R = np.array([[sigma_v**2]])
        self._state.kf_elev.R = np.array([[sigma_e**2]])

    def _init_filters(self, usable: list[PhaseRow]) -> None:
        valid = [r for r in usable if r.valid]
        if not valid:
            return
        mid = len(valid) // 2
        v0 = local_range_rate(valid, mid, halfwidth=len(valid))
        self._state = make_exception_state(
            self.cfg,
            accel_threshold=self.accel_threshold,
            gate_sigma=self.gate_sigma,
            initial_velocity=v0,
            initial_elevation=valid[0].elevation,
        )
        for r in valid:
            self._set_measurement_noise(r)
            self._state.predict()
            v_meas = self._unwrap_velocity(r.v_r_est)
            self._state.update(v_meas, r.elevation)

    # -- streaming -------------------------------------------------------------

    def _unwrap_velocity(self, v_mod: float) -> float:
        """Nearest real-line representative of a wrapped velocity."""
        v_pred = self._state.kf_radial.predicted_measurement
        return v_pred + float(
            wrap_pm_pi((v_mod - v_pred) * TWO_PI / self._modulus)
        ) * self._modulus / TWO_PI

    def _range_rate_window(self) -> float | None:
        if len(self._range_hist) < self._range_hist_len:
            return None
        t = np.array([p[0] for p in self._range_hist])
        r = np.array([p[1] for p in self._range_hist])
        t = t - t.mean()
        denom = float(t @ t)
        if denom == 0.0:
            return None
        return float(t @ (r - r.mean())) / denom

    def _check_branch_drift(self) -> bool:
        """True when the chain was re-seeded due to range-rate disagreement."""
        if self._state is None:
            return False
        v_rr = self._range_rate_window()
        if v_rr is None:
            return False
        drift = self._state.kf_radial.x[0] - v_rr
        if abs(drift) > 0.4 * self._modulus:
            self._drift_run += 1
        else:
            self._drift_run = 0
            return False
        if self._drift_run < self._drift_limit:
            return False
        # Wrong branch: re-seed the velocity and let the phase chain and
        # elevation unwrap re-anchor on the next chirp.
        self._drift_run = 0
        self._prev_beta = None
        self._prev_delta_mod = None
        self._state.kf_radial.x[0] = v_rr
        self._state.kf_radial.P[0, 0] += (0.2 * self._modulus) ** 2
        self._state.kf_elev.P[0, 0] += 0.01
        return True

    def _step(self, row: PhaseRow) -> PhaseRow:
        k = row.k
        self._range_hist.append((row.t, row.range_m))
        if len(self._range_hist) > self._range_hist_len:
            self._range_hist.pop(0)
        self._check_branch_drift()
        if not self._has_triple(k):
            if self._last_valid_k is not None and k - self._last_valid_k > self.gap_reset:
                # long dropout: the phase chain is stale, re-anchor from scratch
                self._prev_beta = None
                self._prev_delta_mod = None
            return row
        if self._prev_beta is None:
            # re-anchor after a long gap: restart from a local seed
            alpha, cands = alpha_beta(self.series, k)
            recent = [
                self.series.rows[j]
                for j in range(k - 16, k + 1)
                if j in self.series.rows
            ]
            v_seed = local_range_rate(recent, len(recent) - 1, halfwidth=len(recent))
            vc = candidate_velocities(self.cfg, cands)
            dists = [
                abs(float(wrap_pm_pi((v - v_seed) * TWO_PI / self._modulus))) for v in vc
            ]
            chosen = cands[int(np.argmin(dists))]
            return self._emit(row, alpha, cands, chosen, exception=False)

        alpha, cands = alpha_beta(self.series, k)
        gap = k - self._last_valid_k if self._last_valid_k is not None else 1
        chosen = disambiguate_accelerating(cands, self._prev_beta)

        if self.enable_handler and self._state is not None:
            self._set_measurement_noise(row)
            for _ in range(max(1, gap)):
                self._state.predict()
            if self._state.ready:
                return self._handled_step(row, alpha, cands, chosen)
            # filters still warming: accept the proximity choice, learn from it
            emitted = self._emit(row, alpha, cands, chosen, exception=False)
            if emitted.valid:
                self._state.update(self._unwrap_velocity(emitted.v_r_est), emitted.elevation)
            return emitted
        return self._emit(row, alpha, cands, chosen, exception=False)

    def _candidate_outputs(self, row, alpha, cands):
        """Per-candidate (delta, delta_unwrapped, elevation) continuations."""
        out = []
        for c in cands:
            d = delta_value(row.k, alpha, c, self._prev_beta, self.accel_correction)
            du = self._delta_u + unwrap_step(self._prev_delta_mod, d)
            arg = -du * self.cfg.wavelength / (TWO_PI * self.cfg.d_tx)
            elev = math.asin(arg) if abs(arg) <= 1.0 else math.copysign(math.pi / 2, -du)
            out.append((d, du, elev))
        return out

    def _handled_step(self, row, alpha, cands, prox_choice) -> PhaseRow:
        st = self._state
        v_cands = candidate_velocities(self.cfg, cands)
        cand_out = self._candidate_outputs(row, alpha, cands)
        elevs = np.array([c[2] for c in cand_out])

        prox_idx = 0 if cands[0] == prox_choice else 1
        v_pred = st.kf_radial.predicted_measurement
        sig_v = math.sqrt(st.kf_radial.innovation_variance)
        dv = float(
            wrap_pm_pi((v_cands[prox_idx] - v_pred) * TWO_PI / self._modulus)
        ) * self._modulus / TWO_PI
        implied_accel = abs(dv) / self.cfg.tx_period
        e_pred = st.kf_elev.predicted_measurement
        sig_e = math.sqrt(st.kf_elev.innovation_variance)
        # Trigger only on statistically meaningful jumps: the raw acceleration
        # test alone would fire on prediction noise at low SNR.
        sus_v = implied_accel > st.accel_threshold and abs(dv) > 4.0 * sig_v
        sus_e = abs(elevs[prox_idx] - e_pred) > st.gate_sigma * sig_e

        if not (sus_v or sus_e):
            self._coast_run = 0
            emitted = self._emit(row, alpha, cands, cands[prox_idx], exception=False)
            st.update(self._unwrap_velocity(emitted.v_r_est), emitted.elevation)
            return emitted

        idx, accepted = handle_exception(
            st, cands, v_cands, elevs, self._modulus, self._prev_beta
        )
        # Override the proximity choice only on a decisive score margin.
        if idx != prox_idx:
            log_scores, _ = score_hypotheses(st, v_cands, elevs, self._modulus)
            if log_scores[idx] - log_scores[prox_idx] < 2.0:
                idx = prox_idx
        dv_idx = float(
            wrap_pm_pi((v_cands[idx] - v_pred) * TWO_PI / self._modulus)
        ) * self._modulus / TWO_PI
        # A transient phase outlier shifts both hypotheses' elevations off the
        # track; when neither is close there is nothing worth accepting.
        both_bad = bool(np.min(np.abs(elevs - e_pred)) > 3.0 * sig_e)
        accepted = (
            not both_bad
            and abs(dv_idx) <= st.gate_sigma * sig_v
            and abs(elevs[idx] - e_pred) <= st.gate_sigma * sig_e
        )
        if self._coast_run >= self.max_coast:
            accepted = True  # safety valve: do not coast forever
        if accepted:
            self._coast_run = 0
            emitted = self._emit(row, alpha, cands, cands[idx], exception=True)
            st.update(self._unwrap_velocity(emitted.v_r_est), emitted.elevation)
            return emitted
        self._coast_run += 1

        # outlier: coast on predictions and keep the chain anchored to them
        row.alpha = alpha
        row.beta_lo = cands[0]
        v_wrapped = float(
            wrap_pm_pi(v_pred * TWO_PI / self._modulus)
        ) * self._modulus / TWO_PI
        beta_pred = float(np.mod(v_pred / self._v_unit, TWO_PI))
        du_pred = delta_from_elevation(self.cfg, e_pred)
        row.beta_chosen = beta_pred
        row.delta = float(wrap_pi(du_pred))
        row.delta_unwrapped = du_pred
        row.elevation = e_pred
        row.v_r_est = v_wrapped
        row.exception = True
        row.valid = True
        self._prev_beta = beta_pred
        self._prev_delta_mod = row.delta
        self._delta_u = du_pred
        self._last_valid_k = row.k
        return row

    def _emit(self, row, alpha, cands, chosen, exception: bool) -> PhaseRow:
        row.alpha = alpha
        row.beta_lo = cands[0]
        row.beta_chosen = chosen
        d = delta_value(row.k, alpha, chosen, self._prev_beta, self.accel_correction)
        row.delta = d
        if self._prev_delta_mod is None:
            self._delta_u = anchor_delta(d)
        else:
            self._delta_u += unwrap_step(self._prev_delta_mod, d)
        self._prev_delta_mod = d
        row.delta_unwrapped = self._delta_u
        try:
            row.elevation = elevation_from_delta(self.cfg, self._delta_u)
        except TrackingLost:
            row.valid = False
            row.exception = exception
            return row
        row.v_r_est = float(wrap_pm_pi(chosen)) * self._v_unit
        row.exception = exception
        row.valid = True
        self._prev_beta = chosen
        self._last_valid_k = row.k
        return row
