// Session wire protocol: message envelope, the client-side replica of
// room state, and the outgoing viewpoint rate limiter.
//
// The server is authoritative; the replica only folds in what the
// server sends. Every server payload carries mapping_version.

import type { MappingJson } from "./format.js";

export interface Viewpoint {
  position: [number, number, number];
  orientation: [number, number, number, number];
  field_of_view: number;
}

export const DEFAULT_VIEWPOINT: Viewpoint = {
  position: [0.5, 0.5, 2.5],
  orientation: [1, 0, 0, 0],
  field_of_view: 60,
};

export interface WireMessage {
  type: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface AnnotationJson {
  row_id: number;
  author: string;
  text: string;
  server_seq: number;
}

export function encodeMessage(
  type: string,
  seq: number,
  payload: Record<string, unknown> = {},
): string {
  return JSON.stringify({ type, seq, payload });
}

export function decodeMessage(text: string): WireMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new Error("message is not valid JSON");
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error("message must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  if (typeof obj.type !== "string" || obj.type === "") {
    throw new Error("message needs a 'type' string");
  }
  const seq = obj.seq === undefined ? 0 : obj.seq;
  if (typeof seq !== "number" || !Number.isInteger(seq)) {
    throw new Error("'seq' must be an integer");
  }
  const payload = obj.payload === undefined ? {} : obj.payload;
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    throw new Error("'payload' must be an object");
  }
  return { type: obj.type, seq, payload: payload as Record<string, unknown> };
}

/** What one connected client knows about its room, rebuilt purely from
 * received server messages. */
export class ClientReplica {
  readonly userId: string;
  follow = true;
  joined = false;
  users = new Set<string>();
  mapping: MappingJson | null = null;
  mappingVersion = 0;
  annotations: AnnotationJson[] = [];
  broadcastNavigator: string | null = null;
  displayedViewpoint: Viewpoint | null = null;
  lastBcastSeq: number | null = null;
  lastError: Record<string, unknown> | null = null;
  links: Array<{ row_id: number; url: string }> = [];

  constructor(userId: string) {
    this.userId = userId;
  }

  apply(msg: WireMessage): void {
    const p = msg.payload;
    switch (msg.type) {
      case "welcome":
        this.joined = true;
        this.users = new Set(Object.keys(p.users as Record<string, unknown>));
        this.mapping = p.mapping as MappingJson;
        this.annotations = [...(p.annotations as AnnotationJson[])];
        this.broadcastNavigator = p.broadcast_navigator as string | null;
        // A (re)joined session starts with no followed viewpoint; it
        // picks up a broadcast at the next forwarded update.
        this.displayedViewpoint = null;
        this.lastBcastSeq = null;
        break;
      case "user_joined":
        this.users.add(p.user as string);
        break;
      case "user_left":
        this.users.delete(p.user as string);
        break;
      case "mapping_changed":
        this.mapping = p.mapping as MappingJson;
        break;
      case "broadcast_started":
        this.broadcastNavigator = p.navigator as string;
        break;
      case "broadcast_stopped":
        this.broadcastNavigator = null;
        this.displayedViewpoint = null;
        this.lastBcastSeq = null;
        break;
      case "annotation_added":
        this.annotations.push(p.annotation as AnnotationJson);
        break;
      case "viewpoint_bcast":
        if (this.follow) {
          this.displayedViewpoint = p.viewpoint as Viewpoint;
          this.lastBcastSeq = p.source_seq as number;
        }
        break;
      case "link":
        this.links.push({ row_id: p.row_id as number, url: p.url as string });
        break;
      case "error":
        this.lastError = p;
        break;
      default:
        break;
    }
    if (typeof p.mapping_version === "number") {
      this.mappingVersion = p.mapping_version;
    }
  }

  /** Projection compared across replicas (and against the server) to
   * check convergence: mapping, version, annotations, navigator,
   * membership. */
  stateKey(): string {
    return JSON.stringify([
      this.mapping,
      this.mappingVersion,
      this.annotations.map((a) => [a.server_seq, a.row_id, a.author, a.text]),
      this.broadcastNavigator,
      [...this.users].sort(),
    ]);
  }
}

/** Keep-latest limiter for outgoing navigator viewpoints.
 *
 * At most one viewpoint per 1/maxPerSecond interval is released; a
 * newer submission inside the window replaces the pending one, and
 * flush() releases it once the interval has passed.
 */
export class SendThrottle {
  readonly interval: number;
  private lastSent = -Infinity;
  private pendingItem: Viewpoint | null = null;

  constructor(maxPerSecond = 30) {
    if (!(maxPerSecond > 0)) {
      throw new Error("maxPerSecond must be positive");
    }
    this.interval = 1 / maxPerSecond;
  }

  get pending(): Viewpoint | null {
    return this.pendingItem;
  }

  /** Returns the viewpoint to send now, or null if it was buffered. */
  submit(now: number, vp: Viewpoint): Viewpoint | null {
    if (now - this.lastSent >= this.interval) {
      this.lastSent = now;
      this.pendingItem = null;
      return vp;
    }
    this.pendingItem = vp;
    return null;
  }

  /** Returns the buffered viewpoint once the interval has elapsed. */
  flush(now: number): Viewpoint | null {
    if (this.pendingItem !== null && now - this.lastSent >= this.interval) {
      const out = this.pendingItem;
      this.pendingItem = null;
      this.lastSent = now;
      return out;
    }
    return null;
  }
}
