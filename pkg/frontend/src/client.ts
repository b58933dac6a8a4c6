/**
 * Connection management: one persistent stream, reconnect with catch-up.
 *
 * The client owns a Store and is the only thing that dispatches to it.
 * On reconnect it subscribes from the last sequence number the store saw,
 * so the server replays exactly the missed messages; the reducer drops
 * anything older, which together makes delivery exactly-once as far as the
 * UI is concerned.
 *
 * Control commands are serialized: one in flight, the rest queued until the
 * server answers with a `state` (or an error). Queued commands are dropped
 * on disconnect rather than replayed; a laser toggle from before a network
 * drop is not something to re-issue blindly.
 */

import {
  encodeControl, encodeCreateSession, encodeListScenarios, encodeSubscribe,
  parseServerMessage, ProtocolViolation,
} from "./protocol.js";
import type { CommandName } from "./protocol.js";
import { canToggleLaser, Store } from "./store.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  url: string;
  factory: SocketFactory;
  /** "disconnected" shows within this long of a dead connect attempt */
  connectTimeoutMs?: number;
  reconnectDelayMs?: number;
}

type Timer = ReturnType<typeof setTimeout>;

export class ConsoleClient {
  readonly store = new Store();

  private readonly url: string;
  private readonly factory: SocketFactory;
  private readonly connectTimeoutMs: number;
  private readonly reconnectDelayMs: number;

  private socket: SocketLike | null = null;
  private connectTimer: Timer | null = null;
  private reconnectTimer: Timer | null = null;
  private queue: string[] = [];
  private disposed = false;

  constructor(options: ClientOptions) {
    this.url = options.url;
    this.factory = options.factory;
    this.connectTimeoutMs = options.connectTimeoutMs ?? 3000;
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1000;
  }

  connect(): void {
    if (this.disposed || this.socket) return;
    this.clearTimer("reconnect");
    this.store.dispatch({ kind: "socket", status: "connecting" });
    const socket = this.factory(this.url);
    this.socket = socket;
    this.connectTimer = setTimeout(() => {
      if (this.socket === socket) this.drop(socket);
    }, this.connectTimeoutMs);
    socket.onopen = () => {
      if (this.socket !== socket) return;
      this.clearTimer("connect");
      this.store.dispatch({ kind: "socket", status: "connected" });
      socket.send(encodeListScenarios());
      const s = this.store.getState();
      if (s.sessionId !== null) {
        socket.send(encodeSubscribe(s.sessionId, s.lastSeq));
      }
    };
    socket.onmessage = (event) => {
      if (this.socket !== socket) return;
      this.receive(String(event.data));
    };
    socket.onclose = () => {
      if (this.socket === socket) this.drop(socket);
    };
    socket.onerror = socket.onclose;
  }

  dispose(): void {
    this.disposed = true;
    this.clearTimer("connect");
    this.clearTimer("reconnect");
    const socket = this.socket;
    this.socket = null;
    if (socket) socket.close();
  }

  /** Ask for a fresh session; allowed only while connected. */
  createSession(scenario: string, seed?: number): void {
    const socket = this.requireSocket();
    if (!socket) return;
    socket.send(encodeCreateSession(scenario, seed));
  }

  /** Send the opposite of the last acknowledged laser state. */
  toggleLaser(): void {
    const s = this.store.getState();
    if (!canToggleLaser(s)) return;
    this.sendControl(s.laserOn ? "laser_off" : "laser_on");
  }

  sendControl(command: CommandName, payload?: string): void {
    const s = this.store.getState();
    if (s.sessionId === null || s.connection !== "connected") return;
    const frame = encodeControl(s.sessionId, command, payload);
    if (s.pendingCommand !== null) {
      this.queue.push(frame);
      return;
    }
    this.store.dispatch({ kind: "sent", command });
    this.socket?.send(frame);
  }

  private receive(text: string): void {
    try {
      const message = parseServerMessage(text);
      this.store.dispatch({ kind: "server", message });
    } catch (err) {
      if (err instanceof ProtocolViolation) {
        this.store.dispatch({ kind: "violation", reason: err.message });
        return;
      }
      throw err;
    }
    // the answer may have freed the command slot; send the next queued one
    const s = this.store.getState();
    if (s.pendingCommand === null && this.queue.length > 0 && this.socket) {
      const frame = this.queue.shift()!;
      const command = JSON.parse(frame).command as CommandName;
      this.store.dispatch({ kind: "sent", command });
      this.socket.send(frame);
    }
  }

  private drop(socket: SocketLike): void {
    this.clearTimer("connect");
    this.socket = null;
    this.queue = [];
    socket.onopen = socket.onmessage = socket.onclose = socket.onerror = null;
    try {
      socket.close();
    } catch {
      // already closed
    }
    this.store.dispatch({ kind: "socket", status: "disconnected" });
    if (!this.disposed && this.reconnectTimer === null) {
      this.reconnectTimer = setTimeout(() => {
        this.reconnectTimer = null;
        this.connect();
      }, this.reconnectDelayMs);
    }
  }

  private requireSocket(): SocketLike | null {
    if (this.store.getState().connection !== "connected") return null;
    return this.socket;
  }

  private clearTimer(which: "connect" | "reconnect"): void {
    const timer = which === "connect" ? this.connectTimer : this.reconnectTimer;
    if (timer !== null) clearTimeout(timer);
    if (which === "connect") this.connectTimer = null;
    else this.reconnectTimer = null;
  }
}
