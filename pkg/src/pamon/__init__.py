"""Photoacoustic treatment monitoring: simulation, DSP, and live telemetry.

The package splits into three layers. The physics layer (`tissue`,
`acoustics`) turns a tissue state into averaged voltage traces. The analysis
layer (`wavelets`, `dsp`, `monitor`) reduces traces to per-pulse amplitudes
and tracks treatment stages over them. The orchestration layer (`scenarios`,
`session`, `protocol`, `service`, `cli`) wires those into reproducible runs,
session files, and a line-JSON/WebSocket telemetry service.

Most day-to-day entry points are re-exported here; the wire protocol and
server live in :mod:`pamon.protocol` and :mod:`pamon.service`.
"""

from pamon.acoustics import (AcquisitionConfig, Trace, TransducerModel,
                             acquire, apply_gain_db, average_traces,
                             propagation_delay, source_wavelet,
                             transducer_filter)
from pamon.dsp import (AmplitudeSample, PeakMode, PeakSelector, band_filter,
                       envelope, extract_peak, snr_db)
from pamon.errors import (ConfigurationError, InsufficientDataError,
                          InvalidArgumentError, NotFoundError, OrderingError,
                          PamonError, ParseError, StateError)
from pamon.monitor import (Alarm, AlarmReason, AmplitudeSeries, ExpFit,
                           MonitorConfig, StageEstimate, StageLabel,
                           StageTracker, append, baseline_check,
                           classify_stage, fit_exponential,
                           overtreatment_alarm)
from pamon.scenarios import (ScenarioConfig, builtin_scenarios, get_scenario,
                             list_scenario_names, load_scenarios)
from pamon.session import (Ack, CommandKind, ControlCommand, Session,
                           SessionState, TelemetryRecord, create_session,
                           handle_control, read_session_file, record, replay,
                           simulate, tick)
from pamon.tissue import (LaserPulseConfig, OpticalProperties, Stage,
                          TissueState, TreatmentKinetics, advance,
                          ground_truth_stage, initial_pressure, stage_at)
from pamon.wavelets import (WaveletBands, WaveletConfig, dwt_decompose,
                            filter_pair, reconstruct_bands)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # physics
    "OpticalProperties", "LaserPulseConfig", "TreatmentKinetics",
    "TissueState", "Stage", "initial_pressure", "stage_at",
    "ground_truth_stage", "advance",
    "TransducerModel", "AcquisitionConfig", "Trace", "source_wavelet",
    "propagation_delay", "transducer_filter", "apply_gain_db",
    "average_traces", "acquire",
    # analysis
    "WaveletConfig", "WaveletBands", "filter_pair", "dwt_decompose",
    "reconstruct_bands",
    "PeakMode", "PeakSelector", "AmplitudeSample", "envelope", "band_filter",
    "extract_peak", "snr_db",
    "StageLabel", "AlarmReason", "MonitorConfig", "StageEstimate", "Alarm",
    "ExpFit", "AmplitudeSeries", "StageTracker", "append", "classify_stage",
    "overtreatment_alarm", "baseline_check", "fit_exponential",
    # orchestration
    "ScenarioConfig", "builtin_scenarios", "get_scenario",
    "list_scenario_names", "load_scenarios",
    "SessionState", "CommandKind", "ControlCommand", "Ack",
    "TelemetryRecord", "Session", "create_session", "tick", "handle_control",
    "record", "read_session_file", "replay", "simulate",
    # errors
    "PamonError", "InvalidArgumentError", "ConfigurationError",
    "OrderingError", "InsufficientDataError", "StateError", "NotFoundError",
    "ParseError",
]
