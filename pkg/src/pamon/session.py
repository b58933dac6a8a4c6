"""Stateful monitoring sessions: pulse scheduling, telemetry, record/replay.

A session owns one scenario run: the evolving tissue state, the amplitude
series, the stage tracker, and the control surface (laser on/off, reset,
scenario swap, shutdown).  ``tick`` advances wall time; every laser-on pulse
period fires one pulse through the full chain (kinetics step, acquisition,
peak extraction, stage classification, alarm check) and appends one
telemetry record.

Everything is reproducible: given the scenario, the seed, and the command
log, the telemetry stream is bit-exact.  Per-pulse randomness is derived
from ``(seed, pulse_index, stream)`` so the stream does not depend on how
wall time was sliced into ticks.

Session files are line-delimited JSON: a header line (format tag, session
id, seed, full scenario config) followed by one record per line.  ``replay``
re-emits records with their original relative timing scaled by a speed
factor; re-serializing a replayed record reproduces the stored line byte for
byte.
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, IO, Iterator, Mapping

import numpy as np

from .acoustics import acquire
from .dsp import extract_peak
from .errors import (InvalidArgumentError, NotFoundError, ParseError,
                     StateError)
from .monitor import (Alarm, AmplitudeSeries, StageEstimate, StageTracker,
                      append, overtreatment_alarm)
from .scenarios import ScenarioConfig, get_scenario
from .tissue import advance, ground_truth_stage

__all__ = [
    "FORMAT_TAG",
    "SessionState",
    "CommandKind",
    "ControlCommand",
    "Ack",
    "TelemetryRecord",
    "Session",
    "create_session",
    "tick",
    "handle_control",
    "record",
    "read_session_file",
    "replay",
    "simulate",
]

FORMAT_TAG = "pamon/1"

# Tolerance when comparing accumulated laser-on time against the pulse grid;
# keeps a pulse that lands exactly on a tick boundary from being dropped.
_TIME_EPS = 1e-9


class SessionState(enum.Enum):
    IDLE = "idle"
    RUNNING = "running"
    STOPPED = "stopped"


class CommandKind(enum.Enum):
    LASER_ON = "laser_on"
    LASER_OFF = "laser_off"
    SET_SCENARIO = "set_scenario"
    RESET = "reset"
    END_SESSION = "end_session"


@dataclass(frozen=True)
class ControlCommand:
    """One operator action; ``payload`` is the scenario name for SetScenario."""

    kind: CommandKind
    payload: str | None = None

    def __post_init__(self):
        if not isinstance(self.kind, CommandKind):
            raise InvalidArgumentError("kind must be a CommandKind")
        if self.kind is CommandKind.SET_SCENARIO and not self.payload:
            raise InvalidArgumentError("set_scenario requires a scenario name")


@dataclass(frozen=True)
class Ack:
    """Acknowledgment of a control command, echoing the resulting state."""

    command: CommandKind
    state: SessionState
    laser_on: bool
    session_id: str
    detail: str = ""


@dataclass(frozen=True)
class TelemetryRecord:
    """One pulse worth of monitoring output.

    ``stage`` is the detector's label ("insufficient", "A", "B", "C");
    ``ground_truth_stage`` is the simulator's actual stage and is present
    only for synthetic scenarios.
    """

    session_id: str
    pulse_index: int
    irradiation_time: float
    amplitude: float
    stage: str
    alarm_active: bool
    ground_truth_stage: str | None = None

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "session_id": self.session_id,
            "pulse_index": self.pulse_index,
            "irradiation_time": self.irradiation_time,
            "amplitude": self.amplitude,
            "stage": self.stage,
            "alarm_active": self.alarm_active,
        }
        if self.ground_truth_stage is not None:
            data["ground_truth_stage"] = self.ground_truth_stage
        return data

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str, line_number: int,
                       last_valid_line: int = 0) -> "TelemetryRecord":
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_number,
                             last_valid_line) from exc
        if not isinstance(data, dict):
            raise ParseError("record line must be a JSON object", line_number,
                             last_valid_line)
        required = {"session_id": str, "pulse_index": int,
                    "irradiation_time": (int, float), "amplitude": (int, float),
                    "stage": str, "alarm_active": bool}
        for key, types in required.items():
            if key not in data:
                raise ParseError(f"missing field {key!r}", line_number,
                                 last_valid_line)
            if not isinstance(data[key], types) or isinstance(data[key], bool) != (types is bool):
                raise ParseError(f"field {key!r} has wrong type", line_number,
                                 last_valid_line)
        gt = data.pop("ground_truth_stage", None)
        if gt is not None and not isinstance(gt, str):
            raise ParseError("field 'ground_truth_stage' has wrong type",
                             line_number, last_valid_line)
        unknown = set(data) - set(required)
        if unknown:
            raise ParseError(f"unknown fields {sorted(unknown)}", line_number,
                             last_valid_line)
        return cls(session_id=data["session_id"],
                   pulse_index=data["pulse_index"],
                   irradiation_time=float(data["irradiation_time"]),
                   amplitude=float(data["amplitude"]),
                   stage=data["stage"],
                   alarm_active=data["alarm_active"],
                   ground_truth_stage=gt)


_session_ids = itertools.count(1)


class Session:
    """Mutable run state; construct through :func:`create_session`."""

    def __init__(self, session_id: str, scenario: ScenarioConfig, seed: int,
                 registry: Mapping[str, ScenarioConfig] | None = None):
        if seed < 0:
            raise InvalidArgumentError("seed must be >= 0")
        self.id = session_id
        self.scenario = scenario
        self.seed = int(seed)
        self.registry = registry
        self.created_at = time.time()
        self.state = SessionState.IDLE
        self.laser_on = False
        self.records: list[TelemetryRecord] = []
        self._sinks: list[IO[str]] = []
        self._reset_run()

    def _reset_run(self) -> None:
        self.tissue = self.scenario.initial_tissue()
        self.series = AmplitudeSeries()
        self.tracker = StageTracker(self.scenario.monitor)
        self.pulse_count = 0
        self.laser_on_time = 0.0
        self.sim_time = 0.0
        self.records = []
        self.last_estimate: StageEstimate = self.tracker.estimate
        self.last_alarm: Alarm = Alarm(active=False)

    def _emit(self, line: str) -> None:
        for sink in self._sinks:
            sink.write(line + "\n")

    def _flush(self) -> None:
        for sink in self._sinks:
            sink.flush()


def create_session(scenario_name: str,
                   registry: Mapping[str, ScenarioConfig] | None = None,
                   seed: int | None = None,
                   session_id: str | None = None) -> Session:
    """New idle session for a named scenario.

    ``seed`` defaults to the scenario's own; ``session_id`` defaults to a
    process-unique counter name.
    """
    scenario = get_scenario(scenario_name, registry)
    if seed is None:
        seed = scenario.seed
    if session_id is None:
        session_id = f"session-{next(_session_ids)}"
    return Session(session_id, scenario, seed, registry)


def _pulse_seed(seed: int, pulse_index: int, stream: int) -> int:
    seq = np.random.SeedSequence((seed, pulse_index, stream))
    return int(seq.generate_state(1, np.uint64)[0])


def _fire_pulse(session: Session) -> TelemetryRecord:
    sc = session.scenario
    i = session.pulse_count
    period = sc.laser.pulse_period_s
    osc_rng = np.random.default_rng((session.seed, i, 0))
    session.tissue = advance(session.tissue, period, True, sc.kinetics, osc_rng)
    acq = dataclasses.replace(sc.acquisition, seed=_pulse_seed(session.seed, i, 1))
    trace = acquire(session.tissue, sc.optics, sc.laser, sc.transducer, acq,
                    pulse_index=i, extra_sources=sc.extra_sources)
    sample = extract_peak(trace, sc.wavelet, sc.selector)
    append(session.series, sample)
    est = session.tracker.update(session.series, len(session.series) - 1)
    alarm = overtreatment_alarm(est, sc.monitor)
    session.last_estimate = est
    session.last_alarm = alarm
    session.pulse_count = i + 1
    gt = ground_truth_stage(session.tissue, sc.kinetics).value if sc.synthetic else None
    rec = TelemetryRecord(session_id=session.id, pulse_index=i,
                          irradiation_time=session.tissue.elapsed_irradiation,
                          amplitude=sample.amplitude, stage=est.stage.value,
                          alarm_active=alarm.active, ground_truth_stage=gt)
    session.records.append(rec)
    session._emit(rec.to_json_line())
    return rec


def tick(session: Session, wall_dt: float) -> list[TelemetryRecord]:
    """Advance wall time; fire every pulse that falls due while lasing.

    Pulse ``i`` fires when accumulated laser-on time reaches
    ``(i + 1) * pulse_period``, so the records emitted for a given command
    log do not depend on tick granularity.
    """
    if session.state is not SessionState.RUNNING:
        raise StateError(f"cannot tick session in state {session.state.value!r}",
                         code="not-running")
    if not np.isfinite(wall_dt) or wall_dt < 0:
        raise InvalidArgumentError("wall_dt must be finite and >= 0")
    session.sim_time += wall_dt
    if not session.laser_on:
        return []
    period = session.scenario.laser.pulse_period_s
    target = session.laser_on_time + wall_dt
    out: list[TelemetryRecord] = []
    while (session.pulse_count + 1) * period <= target + _TIME_EPS:
        out.append(_fire_pulse(session))
    session.laser_on_time = target
    if out:
        session._flush()
    return out


def handle_control(session: Session, cmd: ControlCommand) -> Ack:
    """Apply one control command; invalid transitions raise ``StateError``."""
    kind = cmd.kind
    state = session.state
    if kind is CommandKind.LASER_ON:
        if state is SessionState.STOPPED:
            raise StateError("session is stopped", code="already-stopped")
        if session.laser_on:
            raise StateError("laser is already on", code="laser-already-on")
        session.state = SessionState.RUNNING
        session.laser_on = True
        detail = "laser on"
    elif kind is CommandKind.LASER_OFF:
        if state is not SessionState.RUNNING or not session.laser_on:
            raise StateError("laser is not on", code="laser-not-on")
        session.laser_on = False
        detail = "laser off"
    elif kind is CommandKind.SET_SCENARIO:
        if state is SessionState.RUNNING:
            raise StateError("cannot change scenario while running",
                             code="scenario-locked")
        session.scenario = get_scenario(cmd.payload, session.registry)
        session.state = SessionState.IDLE
        session.laser_on = False
        session._reset_run()
        detail = f"scenario set to {cmd.payload}"
    elif kind is CommandKind.RESET:
        session.state = SessionState.IDLE
        session.laser_on = False
        session._reset_run()
        detail = "reset to initial state"
    elif kind is CommandKind.END_SESSION:
        if state is SessionState.STOPPED:
            raise StateError("session already ended", code="already-stopped")
        session.state = SessionState.STOPPED
        session.laser_on = False
        session._flush()
        detail = "session ended"
    else:  # pragma: no cover - enum is exhaustive
        raise InvalidArgumentError(f"unknown command kind {kind!r}")
    return Ack(command=kind, state=session.state, laser_on=session.laser_on,
               session_id=session.id, detail=detail)


def _header_line(session: Session) -> str:
    data = {"format": FORMAT_TAG, "session_id": session.id,
            "seed": session.seed, "scenario": session.scenario.to_dict()}
    return json.dumps(data, separators=(",", ":"))


def record(session: Session, sink: IO[str]) -> None:
    """Attach a text sink; writes the header now, one line per pulse after."""
    sink.write(_header_line(session) + "\n")
    sink.flush()
    session._sinks.append(sink)


def _open_source(source: str | Path | IO[str]) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8"), True
    return source, False


def read_session_file(source: str | Path | IO[str]) -> tuple[dict, list[TelemetryRecord]]:
    """Parse a full session file into its header and records.

    Raises ``ParseError`` carrying the 1-based offending line number and the
    number of the last line that parsed cleanly.
    """
    fh, owned = _open_source(source)
    try:
        first = fh.readline()
        if not first:
            raise ParseError("empty file", 1)
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid header JSON: {exc.msg}", 1) from exc
        if not isinstance(header, dict) or header.get("format") != FORMAT_TAG:
            raise ParseError(f"not a {FORMAT_TAG} session file", 1)
        records = []
        last_valid = 1
        for number, line in enumerate(fh, start=2):
            stripped = line.strip()
            if not stripped:
                continue
            records.append(TelemetryRecord.from_json_line(stripped, number,
                                                          last_valid))
            last_valid = number
        return header, records
    finally:
        if owned:
            fh.close()


def replay(source: str | Path | IO[str], speed: float = 1.0) -> Iterator[TelemetryRecord]:
    """Yield a session file's records, pacing by original pulse spacing.

    ``speed`` scales time: 2.0 replays twice as fast.  The records are
    exactly the stored ones; serializing one back reproduces its line.
    """
    if not speed > 0:
        raise InvalidArgumentError("speed must be > 0")
    _, records = read_session_file(source)
    prev: float | None = None
    for rec in records:
        if prev is not None:
            dt = (rec.irradiation_time - prev) / speed
            if dt > 0:
                time.sleep(dt)
        prev = rec.irradiation_time
        yield rec


def simulate(scenario_name: str, duration: float,
             seed: int | None = None,
             on_times: tuple[float, ...] = (0.0,),
             off_times: tuple[float, ...] = (),
             registry: Mapping[str, ScenarioConfig] | None = None,
             session_id: str | None = None,
             sink: IO[str] | None = None,
             tick_step: float | None = None) -> Session:
    """Scripted run: toggle the laser at the given wall times, then stop.

    The default schedule turns the laser on at t=0 and leaves it on.  The
    session id defaults to a deterministic name so repeated runs with equal
    arguments produce byte-identical session files.
    """
    if duration < 0:
        raise InvalidArgumentError("duration must be >= 0")
    if tick_step is not None and tick_step <= 0:
        raise InvalidArgumentError("tick_step must be > 0")
    events = sorted([(t, CommandKind.LASER_ON) for t in on_times] +
                    [(t, CommandKind.LASER_OFF) for t in off_times],
                    key=lambda e: e[0])
    for t, _ in events:
        if t < 0 or t > duration:
            raise InvalidArgumentError("laser toggle times must lie in [0, duration]")
    if session_id is None:
        eff_seed = seed if seed is not None else get_scenario(scenario_name, registry).seed
        session_id = f"{scenario_name}-seed{eff_seed}"
    session = create_session(scenario_name, registry, seed, session_id)
    if sink is not None:
        record(session, sink)

    def advance_to(now: float, target: float) -> None:
        while now < target - _TIME_EPS:
            step = target - now
            if tick_step is not None:
                step = min(step, tick_step)
            if session.state is SessionState.RUNNING:
                tick(session, step)
            now += step

    now = 0.0
    for t, kind in events:
        advance_to(now, t)
        now = max(now, t)
        handle_control(session, ControlCommand(kind))
    advance_to(now, duration)
    handle_control(session, ControlCommand(CommandKind.END_SESSION))
    return session
