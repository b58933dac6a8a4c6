"""Feature-extraction tests: band filtering, peak selection, SNR."""

import math

import numpy as np
import pytest

from pamon.acoustics import (
    AcquisitionConfig,
    Trace,
    TransducerModel,
    acquire,
    average_traces,
)
from pamon.dsp import (
    AmplitudeSample,
    PeakMode,
    PeakSelector,
    WaveletConfig,
    band_filter,
    envelope,
    extract_peak,
    snr_db,
)
from pamon.errors import InvalidArgumentError
from pamon.tissue import LaserPulseConfig, OpticalProperties, Stage, TissueState

FS = 100e6


def _state(mu_a: float, depth: float = 2.4e-3) -> TissueState:
    return TissueState(elapsed_irradiation=0.0, mu_a_current=mu_a,
                       effective_mu_a=mu_a, stage=Stage.SCATTERING, depth_m=depth)


def _chain_trace(mu_a: float = 100.0, noise: float = 0.0, seed: int = 0,
                 **kw) -> Trace:
    return acquire(_state(mu_a), OpticalProperties(absorption_coeff=mu_a),
                   LaserPulseConfig(), TransducerModel(),
                   AcquisitionConfig(noise_sigma=noise, seed=seed), **kw)


def _tone_burst(amplitude: float, center_idx: int, n: int = 2048,
                freq: float = 5e6, cycles: float = 6.0) -> np.ndarray:
    # narrowband burst whose spectrum sits inside the default passband;
    # envelope peak equals `amplitude` at `center_idx` by construction
    t = (np.arange(n) - center_idx) / FS
    width = cycles / freq / 2.355  # FWHM of `cycles` periods
    return amplitude * np.sin(2 * np.pi * freq * t) * np.exp(-t * t / (2 * width**2))


def test_known_amplitude_recovered_within_two_percent():
    amp = 1.37
    x = _tone_burst(amp, 700)
    tr = Trace(samples=x, sample_rate=FS)
    s = extract_peak(tr, WaveletConfig(), PeakSelector())
    assert s.amplitude == pytest.approx(amp, rel=0.02)
    assert abs(s.peak_time_s * FS - 700) <= 1.0
    assert not s.low_confidence


def test_default_chain_amplitude_anchor():
    # calibration contract: treated absorber at full pigment reads ~3 V
    s = extract_peak(_chain_trace(100.0), WaveletConfig(), PeakSelector())
    assert s.amplitude == pytest.approx(3.0, rel=0.01)
    assert s.peak_time_s == pytest.approx(1.6e-6, abs=1.0 / FS)


def test_all_zero_trace_flagged_low_confidence():
    tr = Trace(samples=np.zeros(2048), sample_rate=FS)
    for sel in (PeakSelector(),
                PeakSelector(mode=PeakMode.NTH_ENVELOPE_PEAK, peak_index=2)):
        s = extract_peak(tr, WaveletConfig(), sel)
        assert s.amplitude == 0.0
        assert s.low_confidence


def test_pure_noise_trace_flagged_low_confidence():
    tr = _chain_trace(0.0, noise=0.7, seed=5)
    s = extract_peak(tr, WaveletConfig(), PeakSelector())
    assert s.low_confidence


def test_global_max_equals_first_peak_on_single_arrival():
    tr = _chain_trace(100.0)
    a = extract_peak(tr, WaveletConfig(), PeakSelector())
    b = extract_peak(tr, WaveletConfig(),
                     PeakSelector(mode=PeakMode.NTH_ENVELOPE_PEAK, peak_index=1))
    assert a.amplitude == b.amplitude
    assert a.peak_time_s == b.peak_time_s
    assert not a.low_confidence and not b.low_confidence


def test_second_peak_selects_deeper_arrival():
    tr = _chain_trace(100.0, extra_sources=((30.0, 1.2e-3),))
    first = extract_peak(tr, WaveletConfig(),
                         PeakSelector(mode=PeakMode.NTH_ENVELOPE_PEAK, peak_index=1))
    second = extract_peak(tr, WaveletConfig(),
                          PeakSelector(mode=PeakMode.NTH_ENVELOPE_PEAK, peak_index=2))
    assert first.peak_time_s == pytest.approx(0.8e-6, abs=1.0 / FS)
    assert second.peak_time_s == pytest.approx(1.6e-6, abs=1.0 / FS)
    assert second.amplitude / first.amplitude == pytest.approx(100.0 / 30.0, rel=0.02)


def test_search_window_restricts_selection():
    tr = _chain_trace(100.0, extra_sources=((30.0, 1.2e-3),))
    surface_only = extract_peak(
        tr, WaveletConfig(), PeakSelector(search_window=(0.4e-6, 1.2e-6)))
    assert surface_only.peak_time_s == pytest.approx(0.8e-6, abs=1.0 / FS)
    with pytest.raises(InvalidArgumentError):
        extract_peak(tr, WaveletConfig(),
                     PeakSelector(search_window=(0.0, 1.0)))  # past trace end


def test_shift_covariance_is_exact():
    base_tr = _chain_trace(100.0)
    wl = WaveletConfig()
    base = extract_peak(base_tr, wl, PeakSelector())
    base_idx = round(base.peak_time_s * FS)
    for m in (1, 2, 3, 5, 8, 13, 16, 21, 32, 100):
        rolled = Trace(samples=np.roll(base_tr.samples, m), sample_rate=FS)
        s = extract_peak(rolled, wl, PeakSelector())
        assert round(s.peak_time_s * FS) - base_idx == m


def test_scale_equivariance():
    tr = _chain_trace(100.0)
    wl = WaveletConfig()
    s1 = extract_peak(tr, wl, PeakSelector())
    for factor in (0.25, 3.0, 1e3):
        scaled = Trace(samples=factor * tr.samples, sample_rate=FS)
        s2 = extract_peak(scaled, wl, PeakSelector())
        assert s2.amplitude == pytest.approx(factor * s1.amplitude, rel=1e-9)
        assert s2.peak_time_s == s1.peak_time_s


def test_passband_selection_retains_most_of_clean_arrival():
    tr = _chain_trace(100.0)
    raw_peak = float(np.max(envelope(tr.samples)))
    s = extract_peak(tr, WaveletConfig(selected_bands=(2, 3)), PeakSelector())
    assert s.amplitude >= 0.8 * raw_peak


def test_band_filter_is_linear():
    rng = np.random.default_rng(17)
    wl = WaveletConfig()
    x = rng.standard_normal(2048)
    y = rng.standard_normal(2048)
    fx = band_filter(x, wl)
    fy = band_filter(y, wl)
    fxy = band_filter(1.5 * x - 2.0 * y, wl)
    assert np.allclose(fxy, 1.5 * fx - 2.0 * fy, atol=1e-12)


def test_band_filter_reduces_out_of_band_noise():
    rng = np.random.default_rng(23)
    noise = rng.normal(0.0, 1.0, 4096)
    filtered = band_filter(noise, WaveletConfig(selected_bands=(2, 3)))
    # passband ~3.1-12.5 MHz is under a quarter of the white-noise band
    assert filtered.std() < 0.55 * noise.std()


def test_selector_validation():
    with pytest.raises(InvalidArgumentError):
        PeakSelector(mode="global_max")
    with pytest.raises(InvalidArgumentError):
        PeakSelector(peak_index=0)
    with pytest.raises(InvalidArgumentError):
        PeakSelector(search_window=(2e-6, 1e-6))


def test_amplitude_sample_validation():
    with pytest.raises(InvalidArgumentError):
        AmplitudeSample(irradiation_time=1.0, amplitude=-0.1)
    with pytest.raises(InvalidArgumentError):
        AmplitudeSample(irradiation_time=-1.0, amplitude=0.1)


def test_snr_db_by_definition():
    x = np.zeros(1000)
    x[:500] = np.random.default_rng(1).normal(0.0, 0.1, 500)
    x[:500] *= 0.1 / np.std(x[:500])  # pin noise std exactly
    x[750] = 1.0
    tr = Trace(samples=x, sample_rate=FS)
    got = snr_db(tr, noise_window=(0.0, 5e-6), signal_window=(6e-6, 9e-6))
    assert got == pytest.approx(20.0, abs=1e-9)


def test_snr_db_rejects_overlapping_windows():
    tr = Trace(samples=np.zeros(1000), sample_rate=FS)
    with pytest.raises(InvalidArgumentError):
        snr_db(tr, noise_window=(0.0, 5e-6), signal_window=(4e-6, 8e-6))


def test_snr_db_constant_noise_window_is_infinite():
    x = np.zeros(1000)
    x[800] = 2.0
    tr = Trace(samples=x, sample_rate=FS)
    assert snr_db(tr, (0.0, 5e-6), (7e-6, 9e-6)) == math.inf


def test_averaging_raises_snr_by_sqrt_n_in_db():
    # Monte-Carlo oracle: 60-fold averaging should buy ~10*log10(60) dB
    # weak noise keeps the signal-window max from being noise-inflated,
    # which would bias the single-shot term of the difference
    diffs = []
    for seed in range(40):
        single = acquire(_state(100.0), OpticalProperties(absorption_coeff=100.0),
                         LaserPulseConfig(), TransducerModel(),
                         AcquisitionConfig(noise_sigma=0.05, num_averages=1, seed=seed))
        averaged = acquire(_state(100.0), OpticalProperties(absorption_coeff=100.0),
                           LaserPulseConfig(), TransducerModel(),
                           AcquisitionConfig(noise_sigma=0.05, num_averages=60, seed=seed))
        windows = dict(noise_window=(4e-6, 14e-6), signal_window=(1.2e-6, 2.2e-6))
        diffs.append(snr_db(averaged, **windows) - snr_db(single, **windows))
    assert np.mean(diffs) == pytest.approx(10 * math.log10(60), abs=1.0)


def test_average_traces_then_extract_matches_extract_of_average():
    # averaging is linear, so the pipeline commutes with it on clean traces
    traces = [_chain_trace(mu) for mu in (80.0, 100.0, 120.0)]
    avg = average_traces(traces)
    s = extract_peak(avg, WaveletConfig(), PeakSelector())
    expected = np.mean([extract_peak(t, WaveletConfig(), PeakSelector()).amplitude
                        for t in traces])
    assert s.amplitude == pytest.approx(float(expected), rel=1e-6)
