"""Treatment-progress monitor: stage classification, decay fits, alarm.

Consumes the per-pulse amplitude stream and answers three questions in
real time: is the pigment still clearing (stage A), has the signal
plateaued into its oscillating hold (stage B), and has a renewed decline
set in that marks scorching (stage C)?  Detection is causal: a slope /
rolling-variance state machine with hysteresis, no lookahead, so a live
session and a replay of its file classify identically.

Stage transitions are one-way.  The B trigger is armed only after the
series has shown a sustained genuine fall (``slope_fall_threshold``), so
a baseline that drifts gently inside the flat band from the start is
never promoted out of A.  Transition times are backdated to the onset of
the sustained condition, not to when the hold elapsed, so hysteresis
delays confirmation but does not shift the reported boundary.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .dsp import AmplitudeSample
from .errors import InsufficientDataError, InvalidArgumentError, OrderingError

_MAX_FIT_ITERATIONS = 200

# A transition condition must hold in at least this fraction of the samples
# since its onset; a strict every-sample requirement would let single-sample
# dips of the noisy rolling statistics reset the hold clock indefinitely.
_SUSTAIN_MIN_FRACTION = 0.7


class StageLabel(enum.Enum):
    """Detected treatment stage; Insufficient until enough samples exist."""

    INSUFFICIENT = "insufficient"
    A = "A"
    B = "B"
    C = "C"

    def __str__(self) -> str:
        return self.value


class AlarmReason(enum.Enum):
    SCORCH_ONSET = "scorch_onset"
    PROLONGED_SCORCH = "prolonged_scorch"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MonitorConfig:
    """Detector thresholds; defaults calibrated on the built-in scenarios.

    ``smoothing_window`` (samples) sets the rolling mean/std support;
    ``slope_window`` (samples) sets the local-slope regression support,
    longer because a slope estimate needs it.  Holds are in seconds of
    irradiation time.
    """

    smoothing_window: int = 7
    slope_window: int = 35
    slope_fall_threshold: float = 0.02
    slope_flat_band: float = 0.005
    oscillation_std_threshold: float = 0.08
    stage_hold: float = 4.0
    alarm_hold: float = 10.0

    def __post_init__(self):
        if self.smoothing_window < 2:
            raise InvalidArgumentError(
                f"smoothing_window must be >= 2, got {self.smoothing_window}")
        if self.slope_window < 2:
            raise InvalidArgumentError(
                f"slope_window must be >= 2, got {self.slope_window}")
        for name in ("slope_fall_threshold", "slope_flat_band",
                     "oscillation_std_threshold", "stage_hold", "alarm_hold"):
            if getattr(self, name) <= 0:
                raise InvalidArgumentError(f"{name} must be > 0")
        if self.slope_flat_band >= self.slope_fall_threshold:
            raise InvalidArgumentError(
                "slope_flat_band must be below slope_fall_threshold")


@dataclass(frozen=True)
class StageEstimate:
    """Classifier output as of the latest appended sample (time ``at``)."""

    stage: StageLabel
    since: float
    at: float
    confidence: float
    slope: float
    rolling_std: float


@dataclass(frozen=True)
class Alarm:
    active: bool
    raised_at: float | None = None
    reason: AlarmReason | None = None

    def __post_init__(self):
        if self.active and self.raised_at is None:
            raise InvalidArgumentError("active alarm requires raised_at")


@dataclass(frozen=True)
class ExpFit:
    """Result of fitting y = a*exp(-k*t) + c over a time range."""

    a: float
    k: float
    c: float
    r_squared: float
    converged: bool
    iterations: int

    def __call__(self, t):
        return self.a * np.exp(-self.k * np.asarray(t)) + self.c


class AmplitudeSeries:
    """Strictly time-ordered amplitude samples with O(1) windowed stats.

    Prefix sums over amplitude and time make any trailing-window mean,
    std, and regression slope a constant-time query, and make the
    incremental and batch classifier paths numerically identical.
    """

    def __init__(self):
        self._samples: list[AmplitudeSample] = []
        self._times: list[float] = []
        # prefix sums, one leading zero each: y, y^2, t, t^2, t*y
        self._py = [0.0]
        self._pyy = [0.0]
        self._pt = [0.0]
        self._ptt = [0.0]
        self._pty = [0.0]

    def __len__(self) -> int:
        return len(self._samples)

    def __getitem__(self, i: int) -> AmplitudeSample:
        return self._samples[i]

    def __iter__(self):
        return iter(self._samples)

    @property
    def samples(self) -> tuple[AmplitudeSample, ...]:
        return tuple(self._samples)

    def append(self, sample: AmplitudeSample) -> "AmplitudeSeries":
        if not isinstance(sample, AmplitudeSample):
            raise InvalidArgumentError(f"expected AmplitudeSample, got {sample!r}")
        if self._samples and sample.irradiation_time <= self._times[-1]:
            raise OrderingError(
                f"sample at t={sample.irradiation_time} not after t={self._times[-1]}")
        t, y = sample.irradiation_time, sample.amplitude
        self._samples.append(sample)
        self._times.append(t)
        self._py.append(self._py[-1] + y)
        self._pyy.append(self._pyy[-1] + y * y)
        self._pt.append(self._pt[-1] + t)
        self._ptt.append(self._ptt[-1] + t * t)
        self._pty.append(self._pty[-1] + t * y)
        return self

    def window_mean(self, i: int, w: int) -> float:
        """Mean amplitude over the w samples ending at index i (clipped)."""
        lo = max(0, i - w + 1)
        n = i + 1 - lo
        return (self._py[i + 1] - self._py[lo]) / n

    def window_std(self, i: int, w: int) -> float:
        """Population std of amplitude over the window ending at index i."""
        lo = max(0, i - w + 1)
        n = i + 1 - lo
        sy = self._py[i + 1] - self._py[lo]
        syy = self._pyy[i + 1] - self._pyy[lo]
        var = syy / n - (sy / n) ** 2
        return math.sqrt(max(0.0, var))

    def window_slope(self, i: int, w: int) -> float:
        """Least-squares amplitude-vs-time slope over the trailing window."""
        lo = max(0, i - w + 1)
        n = i + 1 - lo
        if n < 2:
            return 0.0
        st = self._pt[i + 1] - self._pt[lo]
        sy = self._py[i + 1] - self._py[lo]
        stt = self._ptt[i + 1] - self._ptt[lo]
        sty = self._pty[i + 1] - self._pty[lo]
        denom = n * stt - st * st
        if denom <= 0.0:
            return 0.0
        return (n * sty - st * sy) / denom

    def index_range(self, t_lo: float, t_hi: float) -> tuple[int, int]:
        """Half-open index span of samples with t_lo <= time <= t_hi."""
        return bisect_left(self._times, t_lo), bisect_right(self._times, t_hi)


def append(series: AmplitudeSeries, sample: AmplitudeSample) -> AmplitudeSeries:
    """Functional spelling of :meth:`AmplitudeSeries.append`."""
    return series.append(sample)


class StageTracker:
    """Causal stage classifier; feed sample indices in order.

    The same fold backs both the live session (one ``update`` per pulse)
    and :func:`classify_stage` (fold over the whole series), which is what
    makes incremental and batch classification agree exactly.
    """

    def __init__(self, cfg: MonitorConfig):
        self.cfg = cfg
        self._stage = StageLabel.INSUFFICIENT
        self._since = 0.0
        self._armed = False
        self._arm_onset: float | None = None
        self._pending_onset: float | None = None
        self._pending_true = 0
        self._pending_total = 0
        self._estimate: StageEstimate | None = None

    @property
    def estimate(self) -> StageEstimate:
        if self._estimate is None:
            return StageEstimate(stage=StageLabel.INSUFFICIENT, since=0.0, at=0.0,
                                 confidence=0.0, slope=0.0, rolling_std=0.0)
        return self._estimate

    def update(self, series: AmplitudeSeries, i: int) -> StageEstimate:
        cfg = self.cfg
        t = series[i].irradiation_time
        slope = series.window_slope(i, cfg.slope_window)
        std = series.window_std(i, cfg.smoothing_window)

        if self._stage is StageLabel.INSUFFICIENT:
            if i + 1 >= cfg.smoothing_window:
                self._stage = StageLabel.A
                self._since = series[0].irradiation_time

        if self._stage is StageLabel.A:
            # arm the plateau trigger only after a sustained genuine fall,
            # so flat-from-the-start baselines stay in A
            if not self._armed:
                if slope < -cfg.slope_fall_threshold:
                    if self._arm_onset is None:
                        self._arm_onset = t
                    elif t - self._arm_onset >= cfg.stage_hold:
                        self._armed = True
                else:
                    self._arm_onset = None
            if self._armed:
                entered_flat = slope > -cfg.slope_flat_band
                oscillating = std > cfg.oscillation_std_threshold
                self._advance(entered_flat or oscillating, t, StageLabel.B)
        elif self._stage is StageLabel.B:
            # scorch: decline re-emerges while the oscillation is quenched
            declining = slope < -cfg.slope_flat_band
            quiet = std < cfg.oscillation_std_threshold
            self._advance(declining and quiet, t, StageLabel.C)

        confidence = self._confidence(t)
        self._estimate = StageEstimate(stage=self._stage, since=self._since, at=t,
                                       confidence=confidence, slope=slope,
                                       rolling_std=std)
        return self._estimate

    def _advance(self, condition: bool, t: float, target: StageLabel) -> None:
        if self._pending_onset is None:
            if condition:
                self._pending_onset = t
                self._pending_true = 1
                self._pending_total = 1
            return
        self._pending_total += 1
        self._pending_true += condition
        if self._pending_true / self._pending_total < _SUSTAIN_MIN_FRACTION:
            # support collapsed: restart the clock (at now if cond holds)
            self._pending_onset = t if condition else None
            self._pending_true = 1 if condition else 0
            self._pending_total = 1 if condition else 0
            return
        if t - self._pending_onset >= self.cfg.stage_hold:
            self._stage = target
            self._since = self._pending_onset  # backdate to condition onset
            self._pending_onset = None
            self._pending_true = 0
            self._pending_total = 0

    def _confidence(self, t: float) -> float:
        if self._stage is StageLabel.INSUFFICIENT:
            return 0.0
        if self._pending_onset is None:
            return 1.0
        # a transition is brewing: confidence in the current label decays
        frac = min(1.0, (t - self._pending_onset) / self.cfg.stage_hold)
        return 1.0 - 0.5 * frac


def classify_stage(series: AmplitudeSeries, cfg: MonitorConfig) -> StageEstimate:
    """Batch classification: fold the causal tracker over the whole series."""
    tracker = StageTracker(cfg)
    for i in range(len(series)):
        tracker.update(series, i)
    return tracker.estimate


def overtreatment_alarm(est: StageEstimate, cfg: MonitorConfig) -> Alarm:
    """Alarm state implied by a stage estimate.

    Stage transitions are irreversible, so once C appears the alarm stays
    active on every later estimate; it clears only when a session reset
    starts a fresh series.  ``raised_at`` is the backdated C onset.
    """
    if est.stage is not StageLabel.C:
        return Alarm(active=False)
    in_c = est.at - est.since
    reason = (AlarmReason.PROLONGED_SCORCH if in_c >= cfg.alarm_hold
              else AlarmReason.SCORCH_ONSET)
    return Alarm(active=True, raised_at=est.since, reason=reason)


def baseline_check(series: AmplitudeSeries, band: tuple[float, float],
                   cfg: MonitorConfig | None = None) -> bool:
    """True iff the smoothed series stays inside ``band`` and never rises.

    The trend test regresses the smoothed values against time and accepts
    slopes up to the configured flat band.
    """
    cfg = cfg or MonitorConfig()
    lo, hi = band
    if not lo < hi:
        raise InvalidArgumentError(f"band must satisfy lo < hi, got {band}")
    w = cfg.smoothing_window
    if len(series) < w:
        raise InsufficientDataError(
            f"need at least {w} samples, have {len(series)}")
    times = []
    smoothed = []
    for i in range(w - 1, len(series)):
        m = series.window_mean(i, w)
        if not lo <= m <= hi:
            return False
        times.append(series[i].irradiation_time)
        smoothed.append(m)
    if len(times) < 2:
        return True
    slope = float(np.polyfit(times, smoothed, 1)[0])
    return slope <= cfg.slope_flat_band


def _lm_refine(t: np.ndarray, y: np.ndarray, a: float, k: float, c: float
               ) -> tuple[float, float, float, int, bool]:
    """Damped least squares on (a, k, c); t is shifted to start at zero."""
    lam = 1e-3
    def sse(a_, k_, c_):
        r = y - (a_ * np.exp(-k_ * t) + c_)
        return float(r @ r)

    err = sse(a, k, c)
    iterations = 0
    converged = False
    for iterations in range(1, _MAX_FIT_ITERATIONS + 1):
        e = np.exp(-k * t)
        model = a * e + c
        r = y - model
        # jacobian of the model wrt (a, k, c)
        j = np.column_stack([e, -a * t * e, np.ones_like(t)])
        jtj = j.T @ j
        jtr = j.T @ r
        stepped = False
        for _ in range(25):
            damped = jtj + lam * np.diag(np.diag(jtj))
            try:
                delta = np.linalg.solve(damped, jtr)
            except np.linalg.LinAlgError:
                lam *= 7.0
                continue
            a2, k2, c2 = a + delta[0], k + delta[1], c + delta[2]
            err2 = sse(a2, k2, c2)
            if math.isfinite(err2) and err2 <= err:
                improvement = err - err2
                a, k, c, err = a2, k2, c2, err2
                lam = max(lam / 3.0, 1e-12)
                stepped = True
                if improvement <= 1e-14 * (err + 1e-30):
                    converged = True
                break
            lam *= 7.0
        if converged:
            break
        if not stepped:
            # no damping level improved: we are at a (local) optimum
            converged = math.isfinite(err)
            break
    return a, k, c, iterations, converged


def fit_exponential(series: AmplitudeSeries, time_range: tuple[float, float]) -> ExpFit:
    """Fit y = a*exp(-k*t) + c to the samples inside ``time_range``.

    Parameters are reported in absolute irradiation time.  A constant
    series (or any input with no amplitude spread) cannot support the
    model: it comes back with ``converged=False`` and ``r_squared=0``.
    """
    t_lo, t_hi = time_range
    if not t_lo < t_hi:
        raise InvalidArgumentError(f"time_range must satisfy lo < hi, got {time_range}")
    i_lo, i_hi = series.index_range(t_lo, t_hi)
    if i_hi - i_lo < 4:
        raise InsufficientDataError(
            f"need at least 4 samples in {time_range}, have {i_hi - i_lo}")

    t_abs = np.array([series[i].irradiation_time for i in range(i_lo, i_hi)])
    y = np.array([series[i].amplitude for i in range(i_lo, i_hi)])
    t0 = t_abs[0]
    t = t_abs - t0  # conditioning: fit in shifted time, report in absolute

    span = float(np.max(y) - np.min(y))
    eps = max(1e-6, 1e-3 * span)
    c0 = float(np.min(y)) - eps
    a0 = float(y[0]) - c0
    # log-linear initial decay rate, guarded to a sane bracket
    logr = np.log(np.maximum(y - c0, 1e-12))
    k0 = -float(np.polyfit(t, logr, 1)[0])
    k0 = min(max(k0, 1e-4), 10.0)

    a, k, c, iterations, converged = _lm_refine(t, y, a0, k0, c0)

    ss_res = float(np.sum((y - (a * np.exp(-k * t) + c)) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot <= 1e-12 * max(1.0, float(np.mean(y)) ** 2) * len(y):
        r_squared = 0.0
        converged = False
    else:
        r_squared = 1.0 - ss_res / ss_tot

    if k <= 1e-6 or a <= 0.0:
        converged = False
    a_abs = a * math.exp(min(k * t0, 700.0))
    return ExpFit(a=a_abs, k=k, c=c, r_squared=r_squared,
                  converged=converged, iterations=iterations)
