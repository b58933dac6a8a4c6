/**
 * Wire message vocabulary for the telemetry service.
 *
 * One JSON object per WebSocket text frame. Session-scoped server messages
 * (created, state, telemetry, and errors tied to a session) carry a `seq`
 * that increases by one per message within that session; error messages that
 * answer only the offending client carry seq 0 and sit outside the ordered
 * history. Parsing is strict: a frame that does not match the vocabulary
 * throws, because silently skipping a malformed telemetry record would show
 * the operator a gap that looks like a laser pause.
 */

export type Stage = "insufficient" | "A" | "B" | "C";
export type SessionLifecycle = "idle" | "running" | "stopped";
export type CommandName =
  | "laser_on"
  | "laser_off"
  | "end_session"
  | "reset"
  | "set_scenario";

export interface TelemetryRecord {
  session_id: string;
  pulse_index: number;
  irradiation_time: number;
  amplitude: number;
  stage: Stage;
  alarm_active: boolean;
  ground_truth_stage?: Stage;
}

export interface CreatedMessage {
  type: "created";
  session_id: string;
  seq: number;
  scenario: string;
  seed: number;
  state: SessionLifecycle;
  laser_on: boolean;
}

export interface StateMessage {
  type: "state";
  session_id: string;
  seq: number;
  state: SessionLifecycle;
  laser_on: boolean;
  command: CommandName;
  detail: string;
}

export interface TelemetryMessage {
  type: "telemetry";
  session_id: string;
  seq: number;
  record: TelemetryRecord;
}

export interface ErrorMessage {
  type: "error";
  session_id: string | null;
  seq: number;
  code: string;
  message: string;
}

export interface ScenariosMessage {
  type: "scenarios";
  session_id: null;
  seq: 0;
  scenarios: string[];
}

export type ServerMessage =
  | CreatedMessage
  | StateMessage
  | TelemetryMessage
  | ErrorMessage
  | ScenariosMessage;

export class ProtocolViolation extends Error {}

const STAGES = new Set(["insufficient", "A", "B", "C"]);
const LIFECYCLES = new Set(["idle", "running", "stopped"]);
const COMMANDS = new Set([
  "laser_on", "laser_off", "end_session", "reset", "set_scenario",
]);

function fail(reason: string): never {
  throw new ProtocolViolation(reason);
}

function asObject(value: unknown, what: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    fail(`${what} must be a JSON object`);
  }
  return value as Record<string, unknown>;
}

function str(obj: Record<string, unknown>, key: string): string {
  const v = obj[key];
  if (typeof v !== "string") fail(`field '${key}' must be a string`);
  return v;
}

function num(obj: Record<string, unknown>, key: string): number {
  const v = obj[key];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    fail(`field '${key}' must be a finite number`);
  }
  return v;
}

function bool(obj: Record<string, unknown>, key: string): boolean {
  const v = obj[key];
  if (typeof v !== "boolean") fail(`field '${key}' must be a boolean`);
  return v;
}

function parseRecord(value: unknown): TelemetryRecord {
  const obj = asObject(value, "record");
  const stage = str(obj, "stage");
  if (!STAGES.has(stage)) fail(`unknown stage '${stage}'`);
  const record: TelemetryRecord = {
    session_id: str(obj, "session_id"),
    pulse_index: num(obj, "pulse_index"),
    irradiation_time: num(obj, "irradiation_time"),
    amplitude: num(obj, "amplitude"),
    stage: stage as Stage,
    alarm_active: bool(obj, "alarm_active"),
  };
  if (obj["ground_truth_stage"] !== undefined) {
    const gt = str(obj, "ground_truth_stage");
    if (!STAGES.has(gt)) fail(`unknown stage '${gt}'`);
    record.ground_truth_stage = gt as Stage;
  }
  return record;
}

/** Parse one server frame; throws ProtocolViolation when it is malformed. */
export function parseServerMessage(text: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    fail("frame is not valid JSON");
  }
  const obj = asObject(data, "message");
  const type = str(obj, "type");
  switch (type) {
    case "created": {
      const state = str(obj, "state");
      if (!LIFECYCLES.has(state)) fail(`unknown state '${state}'`);
      return {
        type, session_id: str(obj, "session_id"), seq: num(obj, "seq"),
        scenario: str(obj, "scenario"), seed: num(obj, "seed"),
        state: state as SessionLifecycle, laser_on: bool(obj, "laser_on"),
      };
    }
    case "state": {
      const state = str(obj, "state");
      if (!LIFECYCLES.has(state)) fail(`unknown state '${state}'`);
      const command = str(obj, "command");
      if (!COMMANDS.has(command)) fail(`unknown command '${command}'`);
      return {
        type, session_id: str(obj, "session_id"), seq: num(obj, "seq"),
        state: state as SessionLifecycle, laser_on: bool(obj, "laser_on"),
        command: command as CommandName,
        detail: typeof obj["detail"] === "string" ? (obj["detail"] as string) : "",
      };
    }
    case "telemetry":
      return {
        type, session_id: str(obj, "session_id"), seq: num(obj, "seq"),
        record: parseRecord(obj["record"]),
      };
    case "error":
      return {
        type,
        session_id: obj["session_id"] === null ? null : str(obj, "session_id"),
        seq: num(obj, "seq"),
        code: str(obj, "code"), message: str(obj, "message"),
      };
    case "scenarios": {
      const list = obj["scenarios"];
      if (!Array.isArray(list) || list.some((s) => typeof s !== "string")) {
        fail("field 'scenarios' must be a string array");
      }
      return { type, session_id: null, seq: 0, scenarios: list as string[] };
    }
    default:
      fail(`unknown message type '${type}'`);
  }
}

/** The only messages the console ever sends. */
export function encodeCreateSession(scenario: string, seed?: number): string {
  const msg: Record<string, unknown> = { type: "create_session", scenario };
  if (seed !== undefined) msg["seed"] = seed;
  return JSON.stringify(msg);
}

export function encodeControl(
  sessionId: string, command: CommandName, payload?: string,
): string {
  const msg: Record<string, unknown> = {
    type: "control", session_id: sessionId, command,
  };
  if (payload !== undefined) msg["payload"] = payload;
  return JSON.stringify(msg);
}

export function encodeSubscribe(sessionId: string, sinceSeq: number): string {
  return JSON.stringify({
    type: "subscribe", session_id: sessionId, since_seq: sinceSeq,
  });
}

export function encodeListScenarios(): string {
  return JSON.stringify({ type: "list_scenarios" });
}
