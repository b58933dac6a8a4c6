/**
 * Scripted stand-in for the telemetry service.
 *
 * Implements the server side of the wire protocol in-process: numbered
 * session history, subscribe-with-catch-up, control acknowledgments, and
 * issuer-only seq-0 errors. Tests drive it synchronously; nothing here
 * touches the network or the clock. It can also feed a transcript recorded
 * from the real service, pre-numbered messages included, which is what the
 * conformance suite replays.
 */

import type { SocketFactory, SocketLike } from "../src/client.js";

type Json = Record<string, unknown>;
type Lifecycle = "idle" | "running" | "stopped";

export class FakeSocket implements SocketLike {
  sent: string[] = [];
  closedByClient = false;
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  constructor(private readonly service: FakeService) {}

  send(data: string): void {
    this.sent.push(data);
    this.service.receive(this, data);
  }

  close(): void {
    this.closedByClient = true;
    this.service.forget(this);
  }

  /** server -> client delivery */
  deliver(message: Json | string): void {
    const data = typeof message === "string" ? message : JSON.stringify(message);
    this.onmessage?.({ data });
  }

  open(): void {
    this.onopen?.();
  }

  /** simulate the network dying under the client */
  breakConnection(): void {
    this.onclose?.();
  }

  /** frames of one message type this socket has sent */
  sentOfType(type: string): Json[] {
    return this.sent
      .map((frame) => JSON.parse(frame) as Json)
      .filter((msg) => msg["type"] === type);
  }
}

export class FakeService {
  scenarios = ["phantom_tattoo", "pigskin_tattoo_water", "pigskin_untattooed"];
  sockets: FakeSocket[] = [];
  private subscribers = new Set<FakeSocket>();
  history: Json[] = [];
  seq = 0;
  sessionId = "fake-session";
  lifecycle: Lifecycle = "idle";
  laserOn = false;
  private pulseIndex = 0;
  private time = 0;
  /** when set, the next control is refused with this error (once) */
  rejectNextControl: { code: string; message: string } | null = null;

  factory(): SocketFactory {
    return () => {
      const socket = new FakeSocket(this);
      this.sockets.push(socket);
      return socket;
    };
  }

  get latest(): FakeSocket {
    const socket = this.sockets[this.sockets.length - 1];
    if (!socket) throw new Error("no socket created yet");
    return socket;
  }

  openLatest(): void {
    this.latest.open();
  }

  /**
   * Mark a socket as the session's creator so broadcasts reach it. Needed
   * when a test feeds a recorded transcript instead of having the client
   * send create_session (which subscribes implicitly).
   */
  attach(socket: FakeSocket = this.latest): void {
    this.subscribers.add(socket);
  }

  forget(socket: FakeSocket): void {
    this.subscribers.delete(socket);
  }

  /** number, remember, and broadcast one session-scoped message */
  private push(message: Json): Json {
    this.seq += 1;
    const full = { ...message, session_id: this.sessionId, seq: this.seq };
    this.history.push(full);
    for (const socket of this.subscribers) socket.deliver(full);
    return full;
  }

  /**
   * Broadcast one pre-numbered message (a transcript line from the real
   * service). Keeps the history and seq counter consistent so subscribe
   * catch-up works over fed messages too.
   */
  feed(message: Json): void {
    if (message["type"] === "created") {
      this.sessionId = message["session_id"] as string;
      this.lifecycle = message["state"] as Lifecycle;
      this.laserOn = message["laser_on"] as boolean;
    }
    if (message["type"] === "state") {
      this.lifecycle = message["state"] as Lifecycle;
      this.laserOn = message["laser_on"] as boolean;
    }
    this.seq = message["seq"] as number;
    this.history.push(message);
    for (const socket of this.subscribers) socket.deliver(message);
  }

  /** every socket currently subscribed to the session stream */
  subscriberCount(): number {
    return this.subscribers.size;
  }

  /** emit one telemetry record; a gentle stage-A decay by default */
  pulse(overrides: Json = {}): Json {
    this.time = Math.round((this.time + 0.2) * 10) / 10;
    const index = this.pulseIndex++;
    const record = {
      session_id: this.sessionId,
      pulse_index: index,
      irradiation_time: this.time,
      amplitude: 3 * Math.exp(-0.05 * this.time) + 1.8,
      stage: "A",
      alarm_active: false,
      ...overrides,
    };
    return this.push({ type: "telemetry", record });
  }

  receive(socket: FakeSocket, frame: string): void {
    const msg = JSON.parse(frame) as Json;
    switch (msg["type"]) {
      case "list_scenarios":
        socket.deliver({
          type: "scenarios", session_id: null, seq: 0,
          scenarios: this.scenarios,
        });
        return;

      case "create_session": {
        // creator is auto-subscribed, like the real service
        this.subscribers.add(socket);
        this.lifecycle = "idle";
        this.laserOn = false;
        this.pulseIndex = 0;
        this.time = 0;
        this.push({
          type: "created",
          scenario: msg["scenario"],
          seed: msg["seed"] ?? 0,
          state: "idle",
          laser_on: false,
        });
        return;
      }

      case "subscribe": {
        if (msg["session_id"] !== this.sessionId) {
          socket.deliver({
            type: "error", session_id: null, seq: 0, code: "not-found",
            message: `unknown session '${String(msg["session_id"])}'`,
          });
          return;
        }
        this.subscribers.add(socket);
        const since = (msg["since_seq"] as number | undefined) ?? 0;
        for (const kept of this.history) {
          if ((kept["seq"] as number) > since) socket.deliver(kept);
        }
        return;
      }

      case "control": {
        if (msg["session_id"] !== this.sessionId) {
          socket.deliver({
            type: "error", session_id: null, seq: 0, code: "not-found",
            message: `unknown session '${String(msg["session_id"])}'`,
          });
          return;
        }
        if (this.rejectNextControl) {
          const { code, message } = this.rejectNextControl;
          this.rejectNextControl = null;
          socket.deliver({
            type: "error", session_id: this.sessionId, seq: 0, code, message,
          });
          return;
        }
        const command = msg["command"] as string;
        if (command === "laser_on") {
          this.lifecycle = "running";
          this.laserOn = true;
        } else if (command === "laser_off") {
          this.laserOn = false;
        } else if (command === "reset") {
          this.lifecycle = "idle";
          this.laserOn = false;
          this.pulseIndex = 0;
          this.time = 0;
        } else if (command === "end_session" || command === "set_scenario") {
          this.lifecycle = command === "end_session" ? "stopped" : "idle";
          this.laserOn = false;
        }
        this.push({
          type: "state", state: this.lifecycle, laser_on: this.laserOn,
          command, detail: "",
        });
        return;
      }

      default:
        socket.deliver({
          type: "error", session_id: null, seq: 0, code: "bad-message",
          message: `unknown message type '${String(msg["type"])}'`,
        });
    }
  }
}
