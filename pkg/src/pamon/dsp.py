"""Per-trace feature extraction: band-limited envelope peak amplitude.

The monitored scalar is the amplitude of one chosen envelope peak of the
trace after keeping only the wavelet bands that cover the receiver
passband.  Band selection uses the translation-averaged wavelet
projection (cycle spinning over the decimation lattice): averaging the
keep-these-bands reconstruction over all circular shifts turns the
shift-varying decimated transform into an exact circulant filter, so a
delayed arrival moves the detected peak by exactly the delay.  The
averaged operator is precomputed once as a convolution kernel and applied
per trace in the frequency domain.

Two selector modes exist because different samples put the informative
arrival in different places: a bare absorber's echo is the global
maximum, while layered skin shows a fixed surface echo first and the
treatment echo second.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks, hilbert

from .acoustics import Trace
from .errors import InvalidArgumentError
from .wavelets import (  # re-exported: this module owns the DSP surface
    WaveletBands,
    WaveletConfig,
    dwt_decompose,
    reconstruct_bands,
)

__all__ = [
    "AmplitudeSample",
    "PeakMode",
    "PeakSelector",
    "WaveletBands",
    "WaveletConfig",
    "band_filter",
    "dwt_decompose",
    "envelope",
    "extract_peak",
    "reconstruct_bands",
    "snr_db",
]

# Candidate peaks closer than this are treated as ringing of one arrival.
_MIN_PEAK_SEPARATION_S = 0.4e-6

# An envelope peak must exceed this multiple of the median envelope to
# count as a detection; below it the sample is flagged low-confidence.
_NOISE_FLOOR_FACTOR = 4.0

# Indexed peaks must also reach this fraction of the window maximum, so
# numerical ripple on clean traces never claims a peak slot.
_MIN_PEAK_FRACTION = 0.15


class PeakMode(enum.Enum):
    GLOBAL_MAX = "global_max"
    NTH_ENVELOPE_PEAK = "nth_envelope_peak"


@dataclass(frozen=True)
class PeakSelector:
    """Which envelope peak carries the monitored amplitude.

    ``peak_index`` is 1-based and counts detected peaks in time order;
    it only applies to ``NTH_ENVELOPE_PEAK`` mode.  ``search_window``
    restricts the hunt to a time span (seconds), default whole trace.
    """

    mode: PeakMode = PeakMode.GLOBAL_MAX
    peak_index: int = 1
    search_window: tuple[float, float] | None = None

    def __post_init__(self):
        if not isinstance(self.mode, PeakMode):
            raise InvalidArgumentError(f"mode must be a PeakMode, got {self.mode!r}")
        if self.peak_index < 1:
            raise InvalidArgumentError(f"peak_index must be >= 1, got {self.peak_index}")
        if self.search_window is not None:
            lo, hi = self.search_window
            if not (0 <= lo < hi):
                raise InvalidArgumentError(
                    f"search_window must satisfy 0 <= lo < hi, got {self.search_window}")
            object.__setattr__(self, "search_window", (float(lo), float(hi)))


@dataclass(frozen=True)
class AmplitudeSample:
    """One point of the amplitude-versus-irradiation-time curve."""

    irradiation_time: float
    amplitude: float
    pulse_index: int = 0
    peak_time_s: float = 0.0
    low_confidence: bool = False

    def __post_init__(self):
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise InvalidArgumentError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.irradiation_time < 0:
            raise InvalidArgumentError(
                f"irradiation_time must be >= 0, got {self.irradiation_time}")


def envelope(signal: np.ndarray) -> np.ndarray:
    """Magnitude of the analytic signal."""
    return np.abs(hilbert(np.asarray(signal, dtype=np.float64)))


@functools.lru_cache(maxsize=16)
def _spun_kernel(family: str, levels: int, bands: tuple[int, ...], n: int) -> np.ndarray:
    """Impulse response of the shift-averaged band projection, length ``n``."""
    cfg = WaveletConfig(family=family, levels=levels, selected_bands=bands)
    block = 2**levels
    delta = np.zeros(n)
    delta[0] = 1.0
    acc = np.zeros(n)
    for shift in range(block):
        rec = reconstruct_bands(dwt_decompose(np.roll(delta, -shift), cfg),
                                cfg.selected_bands)
        acc += np.roll(rec, shift)
    kernel = acc / block
    kernel.flags.writeable = False
    return kernel


def band_filter(signal: np.ndarray, cfg: WaveletConfig) -> np.ndarray:
    """Keep ``cfg.selected_bands``, averaged over the decimation lattice.

    Circular convolution with the cached kernel; exactly shift-covariant
    and linear, unlike a single decimated reconstruction.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgumentError(f"signal must be 1-D, got shape {x.shape}")
    n = len(x)
    block = 2**cfg.levels
    if n < block:
        raise InvalidArgumentError(
            f"signal of length {n} too short for {cfg.levels} levels")
    pad = -n % block
    if pad:
        x = np.concatenate([x, np.zeros(pad)])
    kernel = _spun_kernel(cfg.family, cfg.levels, cfg.selected_bands, len(x))
    y = np.fft.irfft(np.fft.rfft(x) * np.fft.rfft(kernel), len(x))
    return y[:n]


def _window_indices(trace: Trace, window: tuple[float, float] | None) -> tuple[int, int]:
    n = trace.num_samples
    if window is None:
        return 0, n
    lo_t, hi_t = window
    t_end = trace.t0 + n / trace.sample_rate
    if lo_t < trace.t0 or hi_t > t_end * (1 + 1e-12):
        raise InvalidArgumentError(
            f"search_window {window} outside trace span [{trace.t0}, {t_end}]")
    # nearest-sample boundaries: robust to float dust in second-valued windows
    lo = int(round((lo_t - trace.t0) * trace.sample_rate))
    hi = int(round((hi_t - trace.t0) * trace.sample_rate))
    return max(0, lo), min(n, hi)


def extract_peak(trace: Trace, wl: WaveletConfig, sel: PeakSelector) -> AmplitudeSample:
    """Monitored amplitude of one trace: band-limit, envelope, pick a peak.

    When nothing rises above the noise floor (or fewer peaks exist than
    ``peak_index`` asks for) the largest envelope sample in the window is
    returned with ``low_confidence`` set.
    """
    env = envelope(band_filter(trace.samples, wl))

    lo, hi = _window_indices(trace, sel.search_window)
    view = env[lo:hi]
    if len(view) == 0:
        raise InvalidArgumentError("search_window selects no samples")

    floor = _NOISE_FLOOR_FACTOR * float(np.median(env))

    if sel.mode is PeakMode.GLOBAL_MAX:
        idx = lo + int(np.argmax(view))
        amp = float(env[idx])
        low_conf = amp <= floor
    else:
        separation = max(1, int(round(_MIN_PEAK_SEPARATION_S * trace.sample_rate)))
        height = max(floor, _MIN_PEAK_FRACTION * float(np.max(view)))
        candidates, _ = find_peaks(view, height=height if height > 0 else None,
                                   distance=separation)
        if len(candidates) >= sel.peak_index:
            idx = lo + int(candidates[sel.peak_index - 1])
            amp = float(env[idx])
            low_conf = False
        else:
            idx = lo + int(np.argmax(view))
            amp = float(env[idx])
            low_conf = True

    return AmplitudeSample(
        irradiation_time=trace.irradiation_time,
        amplitude=amp,
        pulse_index=trace.pulse_index,
        peak_time_s=trace.t0 + idx / trace.sample_rate,
        low_confidence=low_conf,
    )


def snr_db(trace: Trace, noise_window: tuple[float, float],
           signal_window: tuple[float, float]) -> float:
    """20 log10 of (peak |signal window| / noise-window standard deviation).

    Returns ``math.inf`` when the noise window is exactly constant.
    """
    n_lo, n_hi = _window_indices(trace, noise_window)
    s_lo, s_hi = _window_indices(trace, signal_window)
    if n_lo < s_hi and s_lo < n_hi:
        raise InvalidArgumentError(
            f"windows overlap: noise {noise_window}, signal {signal_window}")
    noise = trace.samples[n_lo:n_hi]
    signal = trace.samples[s_lo:s_hi]
    if len(noise) < 2 or len(signal) == 0:
        raise InvalidArgumentError("windows too small")
    sigma = float(np.std(noise))
    peak = float(np.max(np.abs(signal)))
    if sigma == 0.0:
        return math.inf
    return 20.0 * math.log10(peak / sigma)
