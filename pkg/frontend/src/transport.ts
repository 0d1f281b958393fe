// Socket plumbing for a session. Incoming messages are queued and only
// folded into the replica when pump() runs, so the application applies
// network events between frames, never mid-frame.

import {
  ClientReplica,
  Viewpoint,
  WireMessage,
  decodeMessage,
  encodeMessage,
} from "./protocol.js";

/** The part of a WebSocket this client needs; satisfied by the browser
 * WebSocket and by the `ws` package in tests. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
}

export type MessageHandler = (msg: WireMessage) => void;

export class SessionClient {
  readonly replica: ClientReplica;
  /** Every message applied so far, in order. */
  readonly log: WireMessage[] = [];

  private socket: SocketLike;
  private nextSeq = 1;
  private queue: WireMessage[] = [];
  private arrivalWaiters: Array<() => void> = [];
  private handlers = new Map<string, MessageHandler[]>();
  private waitCursor = 0;

  constructor(socket: SocketLike, userId: string) {
    this.socket = socket;
    this.replica = new ClientReplica(userId);
  }

  /** Wire this up to the socket's message event. */
  handleRaw(data: unknown): void {
    this.queue.push(decodeMessage(String(data)));
    const waiters = this.arrivalWaiters.splice(0);
    for (const w of waiters) w();
  }

  send(type: string, payload: Record<string, unknown> = {}): number {
    const seq = this.nextSeq++;
    this.socket.send(encodeMessage(type, seq, payload));
    return seq;
  }

  join(viewpoint?: Viewpoint): number {
    const payload: Record<string, unknown> = { user: this.replica.userId };
    if (viewpoint) payload.viewpoint = viewpoint;
    return this.send("join", payload);
  }

  on(type: string, handler: MessageHandler): void {
    const list = this.handlers.get(type) ?? [];
    list.push(handler);
    this.handlers.set(type, list);
  }

  /** Apply queued messages to the replica and dispatch handlers.
   * Returns the batch that was applied. */
  pump(): WireMessage[] {
    const batch = this.queue.splice(0);
    for (const msg of batch) {
      this.replica.apply(msg);
      this.log.push(msg);
      for (const handler of this.handlers.get(msg.type) ?? []) {
        handler(msg);
      }
    }
    return batch;
  }

  /** Pump until a message matching `pred` has been applied; rejects on
   * timeout. Messages are consumed once per waiter chain. */
  async waitFor(
    pred: (msg: WireMessage) => boolean,
    timeoutMs = 10_000,
  ): Promise<WireMessage> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      this.pump();
      while (this.waitCursor < this.log.length) {
        const msg = this.log[this.waitCursor++];
        if (pred(msg)) return msg;
      }
      const remaining = deadline - Date.now();
      if (remaining <= 0) {
        throw new Error(`timed out waiting for message (${timeoutMs} ms)`);
      }
      await this.nextArrival(remaining);
    }
  }

  waitForType(type: string, timeoutMs = 10_000): Promise<WireMessage> {
    return this.waitFor((m) => m.type === type, timeoutMs);
  }

  close(): void {
    this.socket.close();
  }

  private nextArrival(timeoutMs: number): Promise<void> {
    if (this.queue.length > 0) return Promise.resolve();
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("timed out waiting for message")),
        timeoutMs,
      );
      this.arrivalWaiters.push(() => {
        clearTimeout(timer);
        resolve();
      });
    });
  }
}
