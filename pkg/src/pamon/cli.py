"""Batch command line: run scenarios headlessly, analyze and replay files.

Subcommands:

    simulate    run a scenario for a fixed duration, write a session file
    analyze     report stage-A fit, transitions, and alarm time for a file
    replay      print a session file's records at a pacing multiplier
    scenarios   list available scenario names
    serve       start the live telemetry service

Exit codes: 0 success, 1 usage error, 2 data error (bad files, unknown
names, invalid configuration).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import IO

from . import service as service_mod
from .errors import PamonError
from .monitor import AmplitudeSample, AmplitudeSeries, StageTracker, append, fit_exponential
from .scenarios import ScenarioConfig, builtin_scenarios, load_scenarios
from .session import read_session_file, replay, simulate

__all__ = ["main"]

CSV_HEADER = "pulse_index,irradiation_time_s,amplitude_v,stage,alarm_active"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting itself."""

    def error(self, message):
        raise _UsageError(message)


def _registry(args) -> dict | None:
    path = getattr(args, "scenarios_file", None) or os.environ.get("PAMON_SCENARIOS")
    return load_scenarios(path) if path else None


def _laser_schedule(ons: list[float] | None, offs: list[float] | None,
                    duration: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Pair repeated --laser-on/--laser-off flags into disjoint spans."""
    ons = list(ons or [])
    offs = list(offs or [])
    if not ons:
        if offs:
            raise _UsageError("--laser-off without a matching --laser-on")
        return (0.0,), ()
    if len(offs) > len(ons):
        raise _UsageError("more --laser-off than --laser-on flags")
    bound = [*ons, *offs, 0.0]
    if min(bound) < 0 or max(ons + offs) > duration:
        raise _UsageError("laser schedule times must lie within [0, duration]")
    previous_end = -1.0
    for i, on in enumerate(ons):
        off = offs[i] if i < len(offs) else duration
        if not on < off:
            raise _UsageError("each laser-on time must precede its laser-off")
        if on <= previous_end:
            raise _UsageError("laser intervals must be disjoint and increasing")
        previous_end = off
    return tuple(ons), tuple(offs)


def _write_csv(records, out: IO[str]) -> None:
    out.write(CSV_HEADER + "\n")
    for rec in records:
        out.write(f"{rec.pulse_index},{rec.irradiation_time!r},{rec.amplitude!r},"
                  f"{rec.stage},{str(rec.alarm_active).lower()}\n")


def _cmd_simulate(args) -> int:
    on_times, off_times = _laser_schedule(args.laser_on, args.laser_off,
                                          args.duration)
    registry = _registry(args)
    if args.out == "-":
        simulate(args.scenario, args.duration, seed=args.seed,
                 on_times=on_times, off_times=off_times, registry=registry,
                 sink=sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            simulate(args.scenario, args.duration, seed=args.seed,
                     on_times=on_times, off_times=off_times, registry=registry,
                     sink=fh)
    return 0


def _cmd_analyze(args) -> int:
    header, records = read_session_file(args.file)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            _write_csv(records, fh)
    if not records:
        print(json.dumps({"status": "insufficient data",
                          "records": 0}, indent=2))
        return 0

    scenario = ScenarioConfig.from_dict(header["scenario"])
    series = AmplitudeSeries()
    tracker = StageTracker(scenario.monitor)
    transition_b = transition_c = None
    for rec in records:
        append(series, AmplitudeSample(irradiation_time=rec.irradiation_time,
                                       amplitude=rec.amplitude,
                                       pulse_index=rec.pulse_index))
        est = tracker.update(series, len(series) - 1)
        if est.stage.value == "B" and transition_b is None:
            transition_b = est.since
        elif est.stage.value == "C" and transition_c is None:
            transition_c = est.since
    alarm_time = next((r.irradiation_time for r in records if r.alarm_active),
                      None)

    fit_end = transition_b if transition_b is not None \
        else records[-1].irradiation_time
    fit_report = {"status": "insufficient data"}
    try:
        fit = fit_exponential(series, (0.0, fit_end))
        fit_report = {"amplitude_v": fit.a, "decay_rate_per_s": fit.k,
                      "floor_v": fit.c, "r_squared": fit.r_squared,
                      "converged": fit.converged}
    except PamonError:
        pass

    report = {
        "scenario": scenario.name,
        "seed": header.get("seed"),
        "records": len(records),
        "duration_s": records[-1].irradiation_time,
        "stage_a_fit": fit_report,
        "transitions_s": {"B": transition_b, "C": transition_c},
        "alarm_time_s": alarm_time,
    }
    print(json.dumps(report, indent=2))
    return 0


def _cmd_replay(args) -> int:
    if args.speed == "max":
        _, records = read_session_file(args.file)
        stream = iter(records)
    else:
        try:
            speed = float(args.speed)
        except ValueError:
            raise _UsageError(f"--speed must be a number or 'max', "
                              f"got {args.speed!r}") from None
        if not speed > 0:
            raise _UsageError("--speed must be > 0")
        stream = replay(args.file, speed=speed)
    for rec in stream:
        sys.stdout.write(rec.to_json_line() + "\n")
        sys.stdout.flush()
    return 0


def _cmd_scenarios(args) -> int:
    registry = _registry(args) or builtin_scenarios()
    for name in sorted(registry):
        if args.long:
            print(f"{name}  {registry[name].description}")
        else:
            print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pamon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario, write a session file")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--duration", type=float, required=True,
                     help="total wall seconds to simulate")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--laser-on", type=float, action="append", metavar="T",
                     help="turn the laser on at T seconds (repeatable)")
    sim.add_argument("--laser-off", type=float, action="append", metavar="T",
                     help="turn the laser off at T seconds (repeatable)")
    sim.add_argument("--out", default="-", help="output path ('-' = stdout)")
    sim.add_argument("--scenarios-file", default=None,
                     help="extra scenario registry JSON (env PAMON_SCENARIOS)")
    sim.set_defaults(func=_cmd_simulate)

    ana = sub.add_parser("analyze", help="report on a recorded session file")
    ana.add_argument("file")
    ana.add_argument("--csv", default=None,
                     help="also write per-record CSV to this path")
    ana.set_defaults(func=_cmd_analyze)

    rep = sub.add_parser("replay", help="print a session file's records")
    rep.add_argument("file")
    rep.add_argument("--speed", default="1.0",
                     help="pacing multiplier, or 'max' for no pacing")
    rep.set_defaults(func=_cmd_replay)

    lst = sub.add_parser("scenarios", help="list scenario names")
    lst.add_argument("--long", action="store_true",
                     help="include scenario descriptions")
    lst.add_argument("--scenarios-file", default=None,
                     help="extra scenario registry JSON (env PAMON_SCENARIOS)")
    lst.set_defaults(func=_cmd_scenarios)

    srv = sub.add_parser("serve", help="start the live telemetry service")
    service_mod.add_serve_arguments(srv)
    srv.set_defaults(func=service_mod.serve_from_args)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # downstream pipe closed; nothing left to do
        try:
            sys.stdout.close()
        except (OSError, ValueError):
            pass
        return 0
    except PamonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
