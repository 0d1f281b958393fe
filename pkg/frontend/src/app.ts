// Headless viewer core: scene loading and reload-on-remap, lead/follow
// wiring, picking, annotation. Everything effectful comes in through
// injected dependencies so the whole flow is testable without a DOM.

import { capPoints, parseScene, SceneData } from "./format.js";
import { SendThrottle, Viewpoint } from "./protocol.js";
import { SessionClient } from "./transport.js";
import { OrbitCamera, rayThroughNdc } from "./camera.js";
import { pickPoint } from "./pickmath.js";

export const CLIENT_POINT_CAP = 200_000;
export const PICK_RADIUS = 0.02;

export interface SceneFetch {
  bytes: ArrayBuffer;
  mappingVersion: number;
}

export interface ViewerDeps {
  /** GET the room's current scene bytes plus their mapping version. */
  fetchScene(): Promise<SceneFetch>;
  /** Open a resolved archive link (new tab in the browser shell). */
  openLink(url: string): void;
  /** Pause between reload polls while the server is still rebuilding. */
  sleep?(ms: number): Promise<void>;
}

const defaultSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

export class ViewerApp {
  readonly client: SessionClient;
  readonly camera = new OrbitCamera();
  readonly throttle = new SendThrottle(30);
  scene: SceneData | null = null;
  /** Mapping version the displayed scene was built from. */
  sceneVersion = -1;
  banner: string | null = null;
  lastPickedIndex: number | null = null;
  pointCap = CLIENT_POINT_CAP;

  private readonly deps: ViewerDeps;
  private readonly sleep: (ms: number) => Promise<void>;
  private reloadTarget = -1;
  private reloadRunning: Promise<void> | null = null;

  constructor(client: SessionClient, deps: ViewerDeps) {
    this.client = client;
    this.deps = deps;
    this.sleep = deps.sleep ?? defaultSleep;
    client.on("mapping_changed", () => {
      this.scheduleReload(this.replica.mappingVersion);
    });
    client.on("link", (msg) => {
      const url = msg.payload.url;
      if (typeof url === "string" && url !== "") {
        this.deps.openLink(url);
      }
    });
    client.on("error", (msg) => {
      this.banner = `server error ${msg.payload.code}: ${msg.payload.detail}`;
    });
  }

  get replica() {
    return this.client.replica;
  }

  get leading(): boolean {
    return this.replica.broadcastNavigator === this.replica.userId;
  }

  /** Pose to render: the navigator's while following a broadcast,
   * otherwise the local camera. */
  get pose(): Viewpoint {
    const followed = this.replica.displayedViewpoint;
    if (this.replica.follow && followed !== null) {
      return followed;
    }
    return this.camera.viewpoint();
  }

  /** Join the room and load the initial scene. */
  async start(): Promise<void> {
    this.client.join(this.camera.viewpoint());
    await this.client.waitForType("welcome");
    await this.loadScene();
  }

  /** One fetch-and-parse attempt. A malformed file leaves the previous
   * scene in place and raises a banner instead of breaking the app. */
  async loadScene(): Promise<boolean> {
    let fetched: SceneFetch;
    try {
      fetched = await this.deps.fetchScene();
    } catch (err) {
      this.banner = `scene fetch failed: ${String(err)}`;
      return false;
    }
    try {
      const parsed = parseScene(fetched.bytes);
      this.scene = capPoints(parsed, this.pointCap);
      this.sceneVersion = fetched.mappingVersion;
      this.banner = null;
      return true;
    } catch (err) {
      this.banner = `scene load failed: ${err instanceof Error ? err.message : String(err)}`;
      return false;
    }
  }

  /** Reload until the displayed scene reaches at least `version`.
   * Rebuilds happen off the server's event path, so the first fetch
   * after a remap may still serve the old bytes; poll until the
   * version header catches up. */
  scheduleReload(version: number): void {
    this.reloadTarget = Math.max(this.reloadTarget, version);
    if (this.reloadRunning === null) {
      this.reloadRunning = this.reloadLoop().finally(() => {
        this.reloadRunning = null;
      });
    }
  }

  /** Resolves once any in-flight reload settles. */
  async idle(): Promise<void> {
    while (this.reloadRunning !== null) {
      await this.reloadRunning;
    }
  }

  private async reloadLoop(): Promise<void> {
    for (let attempt = 0; attempt < 200; attempt++) {
      const fetched = await this.fetchQuiet();
      if (fetched !== null && fetched.mappingVersion >= this.reloadTarget) {
        try {
          this.scene = capPoints(parseScene(fetched.bytes), this.pointCap);
          this.sceneVersion = fetched.mappingVersion;
          this.banner = null;
        } catch (err) {
          this.banner = `scene load failed: ${err instanceof Error ? err.message : String(err)}`;
        }
        return;
      }
      await this.sleep(50);
    }
    this.banner = "scene reload timed out";
  }

  private async fetchQuiet(): Promise<SceneFetch | null> {
    try {
      return await this.deps.fetchScene();
    } catch {
      return null;
    }
  }

  /** Frame step: apply queued network messages, release any throttled
   * viewpoint. `now` is in seconds. */
  tick(now: number): void {
    this.client.pump();
    const pending = this.throttle.flush(now);
    if (pending !== null) {
      this.sendViewpoint(pending);
    }
  }

  /** Call after the local camera moved. While leading, shares the pose
   * at the throttled rate (newest wins). */
  localMoved(now: number): void {
    if (!this.leading) {
      return;
    }
    const vp = this.throttle.submit(now, this.camera.viewpoint());
    if (vp !== null) {
      this.sendViewpoint(vp);
    }
  }

  startLead(): void {
    this.client.send("broadcast_start");
  }

  stopLead(): void {
    this.client.send("broadcast_stop");
  }

  setFollow(on: boolean): void {
    this.replica.follow = on;
    if (!on) {
      this.replica.displayedViewpoint = null;
      this.replica.lastBcastSeq = null;
    }
  }

  setMapping(mapping: Record<string, unknown>): void {
    this.client.send("set_mapping", { mapping });
  }

  /** Ray-pick at normalized device coordinates. A hit remembers the
   * point and asks the server to resolve its archive link. */
  clickPick(ndcX: number, ndcY: number, aspect: number): number | null {
    if (this.scene === null) {
      return null;
    }
    const ray = rayThroughNdc(this.pose, ndcX, ndcY, aspect);
    const idx = pickPoint(this.scene, ray, PICK_RADIUS);
    if (idx === null) {
      return null;
    }
    this.lastPickedIndex = idx;
    this.client.send("pick_link", { row_id: Number(this.scene.rowId[idx]) });
    return idx;
  }

  /** Attach a note to the most recently picked point. */
  annotate(text: string): boolean {
    if (this.scene === null || this.lastPickedIndex === null) {
      this.banner = "pick a point before annotating";
      return false;
    }
    const rowId = Number(this.scene.rowId[this.lastPickedIndex]);
    this.client.send("annotate", { row_id: rowId, text });
    return true;
  }

  private sendViewpoint(vp: Viewpoint): void {
    this.client.send("viewpoint", { viewpoint: vp });
  }
}
