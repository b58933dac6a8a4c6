/**
 * Console state and the reducer that folds server messages into it.
 *
 * Everything the UI shows lives here, and it changes only through
 * `reduce`, so the whole console is testable by replaying transcripts.
 * Two rules matter most:
 *
 *  - the laser toggle reflects the last server-acknowledged state, never
 *    an optimistic local one. Clicking the button sends a command; the
 *    switch moves when the `state` message comes back.
 *  - each session-scoped message is applied at most once. Reconnects
 *    replay history from the last seen sequence number, and anything at or
 *    below it is dropped here, so a point can never be plotted twice.
 */

import type {
  CommandName, ServerMessage, SessionLifecycle, Stage,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface Point {
  seq: number;
  pulseIndex: number;
  /** cumulative laser-on time, s */
  t: number;
  /** peak amplitude, V */
  v: number;
  stage: Stage;
  alarm: boolean;
}

export interface StageMark {
  stage: Stage;
  /** irradiation time at which the live stream first showed this label */
  t: number;
}

export interface Toast {
  code: string;
  message: string;
}

export interface ConsoleState {
  connection: ConnectionStatus;
  sessionId: string | null;
  scenario: string | null;
  seed: number | null;
  lifecycle: SessionLifecycle | null;
  /** last server-acknowledged laser state */
  laserOn: boolean;
  /** command sent and not yet acknowledged (disables the controls) */
  pendingCommand: CommandName | null;
  points: Point[];
  stage: Stage | null;
  stageMarks: StageMark[];
  /** latched once any record arrives with alarm_active */
  alarm: boolean;
  alarmSince: number | null;
  lastSeq: number;
  scenarios: string[];
  toasts: Toast[];
}

export function initialState(): ConsoleState {
  return {
    connection: "disconnected",
    sessionId: null,
    scenario: null,
    seed: null,
    lifecycle: null,
    laserOn: false,
    pendingCommand: null,
    points: [],
    stage: null,
    stageMarks: [],
    alarm: false,
    alarmSince: null,
    lastSeq: 0,
    scenarios: [],
    toasts: [],
  };
}

export type ConsoleEvent =
  | { kind: "socket"; status: ConnectionStatus }
  | { kind: "server"; message: ServerMessage }
  | { kind: "sent"; command: CommandName }
  | { kind: "violation"; reason: string }
  | { kind: "dismiss-toast"; index: number };

/** True when the laser button should be clickable. */
export function canToggleLaser(s: ConsoleState): boolean {
  return (
    s.connection === "connected" &&
    s.sessionId !== null &&
    s.pendingCommand === null &&
    (s.lifecycle === "idle" || s.lifecycle === "running")
  );
}

function toast(s: ConsoleState, code: string, message: string): ConsoleState {
  return { ...s, toasts: [...s.toasts, { code, message }] };
}

function applyServer(s: ConsoleState, m: ServerMessage): ConsoleState {
  if (m.type === "scenarios") {
    return { ...s, scenarios: m.scenarios };
  }
  if (m.type === "error") {
    // out-of-band (seq 0) or session-history errors both surface as toasts;
    // either way the in-flight command is answered
    const next = toast(s, m.code, m.message);
    next.pendingCommand = null;
    if (m.seq > 0 && m.session_id === s.sessionId && m.seq > s.lastSeq) {
      next.lastSeq = m.seq;
    }
    return next;
  }
  if (m.type === "created") {
    // a duplicate from a history replay must not wipe the session
    if (m.session_id === s.sessionId && m.seq <= s.lastSeq) return s;
    // adopting a new session resets every per-session buffer, the alarm
    // latch included
    return {
      ...initialState(),
      connection: s.connection,
      scenarios: s.scenarios,
      toasts: s.toasts,
      sessionId: m.session_id,
      scenario: m.scenario,
      seed: m.seed,
      lifecycle: m.state,
      laserOn: m.laser_on,
      lastSeq: m.seq,
    };
  }
  // state / telemetry: session-scoped and ordered
  if (m.session_id !== s.sessionId) return s;
  if (m.seq <= s.lastSeq) return s; // duplicate from a reconnect replay
  if (m.type === "state") {
    const next: ConsoleState = {
      ...s,
      lastSeq: m.seq,
      lifecycle: m.state,
      laserOn: m.laser_on,
      pendingCommand: null,
    };
    if (m.command === "reset") {
      // a reset starts a fresh series: clear the curve and release the latch
      next.points = [];
      next.stage = null;
      next.stageMarks = [];
      next.alarm = false;
      next.alarmSince = null;
    }
    return next;
  }
  const r = m.record;
  const point: Point = {
    seq: m.seq,
    pulseIndex: r.pulse_index,
    t: r.irradiation_time,
    v: r.amplitude,
    stage: r.stage,
    alarm: r.alarm_active,
  };
  const marks =
    s.stage === r.stage
      ? s.stageMarks
      : [...s.stageMarks, { stage: r.stage, t: r.irradiation_time }];
  return {
    ...s,
    lastSeq: m.seq,
    points: [...s.points, point],
    stage: r.stage,
    stageMarks: marks,
    alarm: s.alarm || r.alarm_active,
    alarmSince:
      s.alarmSince ?? (r.alarm_active ? r.irradiation_time : null),
  };
}

export function reduce(s: ConsoleState, e: ConsoleEvent): ConsoleState {
  switch (e.kind) {
    case "socket": {
      const next = { ...s, connection: e.status };
      if (e.status !== "connected") next.pendingCommand = null;
      return next;
    }
    case "server":
      return applyServer(s, e.message);
    case "sent":
      return { ...s, pendingCommand: e.command };
    case "violation":
      return toast(s, "protocol-violation", e.reason);
    case "dismiss-toast":
      return { ...s, toasts: s.toasts.filter((_, i) => i !== e.index) };
  }
}

export type Listener = (state: ConsoleState) => void;

/** Minimal observable wrapper; the client dispatches, views subscribe. */
export class Store {
  private state = initialState();
  private listeners: Listener[] = [];

  getState(): ConsoleState {
    return this.state;
  }

  dispatch(event: ConsoleEvent): void {
    this.state = reduce(this.state, event);
    for (const listener of this.listeners) listener(this.state);
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }
}
