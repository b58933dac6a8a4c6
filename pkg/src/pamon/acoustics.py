"""Acoustic acquisition chain: pressure pulse to averaged voltage trace.

Models the receive path of a single-element piezo transducer: a bipolar
pressure wavelet launched by the absorber arrives after ``depth / c``,
passes through a band-limited receiver centered at 5 MHz, is converted to
volts, amplified, corrupted by white noise on every raw shot, and averaged
over repeated shots.  Everything here is a pure function of its inputs;
the only randomness is the generator seeded from ``AcquisitionConfig``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, InvalidArgumentError
from .tissue import LaserPulseConfig, OpticalProperties, TissueState, initial_pressure

# Width parameter of the bipolar source pulse.  30 ns puts its spectral
# peak at 1/(2*pi*tau) = 5.3 MHz, inside the receiver passband.
SOURCE_TAU_S = 30e-9

# Half-width of the source kernel and the receiver impulse response, in
# units of their respective gaussian sigmas.
_KERNEL_HALF_SIGMAS = 4.0


@dataclass(frozen=True)
class TransducerModel:
    """Single-element receive transducer.

    ``fractional_bandwidth`` is the -6 dB amplitude bandwidth divided by
    the center frequency.  ``sensitivity`` converts pressure to volts at
    the element, before amplification.
    """

    center_frequency: float = 5e6
    fractional_bandwidth: float = 0.6
    sensitivity: float = 6.85e-7

    def __post_init__(self):
        if self.center_frequency <= 0:
            raise InvalidArgumentError(
                f"center_frequency must be > 0, got {self.center_frequency}")
        if not 0 < self.fractional_bandwidth < 2:
            raise InvalidArgumentError(
                f"fractional_bandwidth must be in (0, 2), got {self.fractional_bandwidth}")
        if self.sensitivity <= 0:
            raise InvalidArgumentError(
                f"sensitivity must be > 0, got {self.sensitivity}")


@dataclass(frozen=True)
class AcquisitionConfig:
    """Digitizer and averaging settings for one recorded trace."""

    sample_rate: float = 100e6
    num_samples: int = 2048
    gain_db: float = 46.0
    num_averages: int = 60
    noise_sigma: float = 0.0
    speed_of_sound: float = 1500.0
    seed: int = 0

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise InvalidArgumentError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.num_samples < 2:
            raise InvalidArgumentError(f"num_samples must be >= 2, got {self.num_samples}")
        if not math.isfinite(self.gain_db):
            raise InvalidArgumentError(f"gain_db must be finite, got {self.gain_db}")
        if self.num_averages < 1:
            raise InvalidArgumentError(f"num_averages must be >= 1, got {self.num_averages}")
        if self.noise_sigma < 0:
            raise InvalidArgumentError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.speed_of_sound <= 0:
            raise InvalidArgumentError(
                f"speed_of_sound must be > 0, got {self.speed_of_sound}")


@dataclass(frozen=True, eq=False)
class Trace:
    """One averaged voltage record as the oscilloscope stores it."""

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0
    irradiation_time: float = 0.0
    pulse_index: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidArgumentError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgumentError("samples must all be finite")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def num_samples(self) -> int:
        return len(self.samples)

    @property
    def time_axis(self) -> np.ndarray:
        return self.t0 + np.arange(self.num_samples) / self.sample_rate


def source_wavelet(p0: float, sample_rate: float) -> np.ndarray:
    """Bipolar pressure pulse with signed peak amplitude ``p0``.

    Derivative-of-gaussian shape: antisymmetric, zero-mean, compression
    lobe first.  Returned on an odd-length grid centered on the zero
    crossing.
    """
    if not math.isfinite(p0) or p0 < 0:
        raise InvalidArgumentError(f"p0 must be finite and >= 0, got {p0}")
    if sample_rate <= 0:
        raise InvalidArgumentError(f"sample_rate must be > 0, got {sample_rate}")
    half = max(1, int(math.ceil(_KERNEL_HALF_SIGMAS * SOURCE_TAU_S * sample_rate)))
    t = np.arange(-half, half + 1) / sample_rate
    u = t / SOURCE_TAU_S
    # peak normalized: |s| = 1 exactly at u = -1 (leading compression)
    return -p0 * u * np.exp(0.5 * (1.0 - u * u))


def propagation_delay(depth: float, speed_of_sound: float) -> float:
    """One-way acoustic travel time from the absorber to the element."""
    if not (depth > 0 and math.isfinite(depth)):
        raise InvalidArgumentError(f"depth must be > 0, got {depth}")
    if not (speed_of_sound > 0 and math.isfinite(speed_of_sound)):
        raise InvalidArgumentError(f"speed_of_sound must be > 0, got {speed_of_sound}")
    return depth / speed_of_sound


def transducer_impulse_response(model: TransducerModel, sample_rate: float) -> np.ndarray:
    """Gaussian-enveloped sinusoid, unit amplitude gain at center frequency."""
    # -6 dB amplitude FWHM of a gaussian envelope: fwhm = sqrt(2 ln2)/(pi*sigma_t)
    fwhm_hz = model.fractional_bandwidth * model.center_frequency
    sigma_t = math.sqrt(2.0 * math.log(2.0)) / (math.pi * fwhm_hz)
    half = max(1, int(math.ceil(_KERNEL_HALF_SIGMAS * sigma_t * sample_rate)))
    t = np.arange(-half, half + 1) / sample_rate
    h = np.sin(2 * np.pi * model.center_frequency * t) * np.exp(-t * t / (2 * sigma_t**2))
    # normalize to unit gain at f_c so sensitivity keeps physical meaning
    gain = abs(np.sum(h * np.exp(-2j * np.pi * model.center_frequency * t)))
    return h / gain


def transducer_filter(waveform: np.ndarray, model: TransducerModel,
                      sample_rate: float) -> np.ndarray:
    """Apply the receiver's band-limiting impulse response (zero-phase center)."""
    if sample_rate < 4.0 * model.center_frequency:
        raise ConfigurationError(
            f"sample_rate {sample_rate:g} Hz below Nyquist margin "
            f"4 x {model.center_frequency:g} Hz")
    x = np.asarray(waveform, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgumentError(f"waveform must be 1-D, got shape {x.shape}")
    return np.convolve(x, transducer_impulse_response(model, sample_rate), mode="same")


def apply_gain_db(waveform: np.ndarray, gain_db: float) -> np.ndarray:
    """Samplewise amplification by ``10**(gain_db / 20)``."""
    if not math.isfinite(gain_db):
        raise InvalidArgumentError(f"gain_db must be finite, got {gain_db}")
    return np.asarray(waveform, dtype=np.float64) * 10.0 ** (gain_db / 20.0)


def average_traces(traces: Sequence[Trace]) -> Trace:
    """Samplewise mean of equal-shape traces; metadata taken from the first."""
    if not traces:
        raise InvalidArgumentError("need at least one trace to average")
    first = traces[0]
    for tr in traces[1:]:
        if tr.num_samples != first.num_samples or tr.sample_rate != first.sample_rate:
            raise InvalidArgumentError(
                "traces must share length and sample rate to be averaged")
    mean = np.mean([tr.samples for tr in traces], axis=0)
    return Trace(samples=mean, sample_rate=first.sample_rate, t0=first.t0,
                 irradiation_time=first.irradiation_time, pulse_index=first.pulse_index)


def _inject(trace: np.ndarray, wavelet: np.ndarray, center: int) -> None:
    """Add ``wavelet`` into ``trace`` with its midpoint at sample ``center``."""
    half = len(wavelet) // 2
    lo, hi = center - half, center + half + 1
    w_lo = max(0, -lo)
    w_hi = len(wavelet) - max(0, hi - len(trace))
    lo, hi = max(0, lo), min(len(trace), hi)
    if lo < hi:
        trace[lo:hi] += wavelet[w_lo:w_hi]


def acquire(state: TissueState, props: OpticalProperties, laser: LaserPulseConfig,
            td: TransducerModel, acq: AcquisitionConfig,
            pulse_index: int = 0,
            extra_sources: Sequence[tuple[float, float]] = ()) -> Trace:
    """Record one averaged trace from the tissue in its current state.

    The absorber at ``state.depth_m`` radiates with the state's effective
    absorption; ``extra_sources`` adds static absorbers as
    ``(absorption_coeff, depth_m)`` pairs sharing the same illumination
    (used for layered samples with a pigmented surface).  Noise is drawn
    fresh per raw shot from a generator seeded by ``acq.seed``, so equal
    inputs give bit-identical traces.
    """
    fluence = laser.fluence()
    sources = [(state.effective_mu_a, state.depth_m)]
    for mu_a, depth in extra_sources:
        sources.append((float(mu_a), float(depth)))

    clean = np.zeros(acq.num_samples)
    for mu_a, depth in sources:
        if mu_a <= 0:
            continue
        p0 = initial_pressure(
            OpticalProperties(grueneisen=props.grueneisen,
                              conversion_efficiency=props.conversion_efficiency,
                              absorption_coeff=mu_a),
            fluence)
        delay = propagation_delay(depth, acq.speed_of_sound)
        center = int(round(delay * acq.sample_rate))
        _inject(clean, source_wavelet(p0, acq.sample_rate), center)

    clean = transducer_filter(clean, td, acq.sample_rate)
    clean = apply_gain_db(clean * td.sensitivity, acq.gain_db)

    if acq.noise_sigma > 0:
        rng = np.random.default_rng(acq.seed)
        noise = rng.normal(0.0, acq.noise_sigma,
                           size=(acq.num_averages, acq.num_samples))
        samples = clean + noise.mean(axis=0)
    else:
        samples = clean

    return Trace(samples=samples, sample_rate=acq.sample_rate, t0=0.0,
                 irradiation_time=state.elapsed_irradiation, pulse_index=pulse_index)
