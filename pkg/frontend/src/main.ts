// Browser entry point: canvas, control panel, socket, render loop.
// All logic lives in ViewerApp; this file only moves DOM events in and
// pixels out.

import { CHANNELS, MappingJson } from "./format.js";
import { ViewerApp } from "./app.js";
import { SessionClient } from "./transport.js";
import { PointRenderer } from "./renderer.js";
import { viewProjection } from "./camera.js";

const TRANSFORMS = ["linear", "log", "rank"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  parent: Element,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (text !== undefined) {
    node.textContent = text;
  }
  parent.appendChild(node);
  return node;
}

function roomFromLocation(): string {
  const hash = location.hash.replace(/^#/, "");
  return hash !== "" ? hash : "lobby";
}

function makeUserId(): string {
  return "user-" + Math.random().toString(36).slice(2, 8);
}

class MappingPanel {
  private readonly columnSelects = new Map<string, HTMLSelectElement>();
  private readonly transformSelects = new Map<string, HTMLSelectElement>();

  constructor(root: Element, private readonly app: ViewerApp) {
    const form = el("form", root);
    form.className = "mapping";
    for (const channel of CHANNELS) {
      const row = el("label", form, channel + " ");
      const col = el("select", row);
      el("option", col, "(none)").value = "";
      this.columnSelects.set(channel, col);
      const tr = el("select", row);
      for (const kind of TRANSFORMS) {
        el("option", tr, kind).value = kind;
      }
      this.transformSelects.set(channel, tr);
    }
    const apply = el("button", form, "apply mapping");
    apply.type = "submit";
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      this.app.setMapping(this.collect());
    });
  }

  /** Rebuild the column choices once scene metadata is known, keeping
   * the current selections where the columns still exist. */
  setColumns(names: string[]): void {
    for (const select of this.columnSelects.values()) {
      const current = select.value;
      while (select.options.length > 1) {
        select.remove(1);
      }
      for (const name of names) {
        const opt = document.createElement("option");
        opt.value = name;
        opt.textContent = name;
        select.appendChild(opt);
      }
      select.value = names.includes(current) ? current : "";
    }
  }

  /** Reflect the room's current mapping in the controls. */
  showMapping(mapping: MappingJson | null): void {
    const channels = mapping?.channels ?? {};
    for (const channel of CHANNELS) {
      const spec = channels[channel];
      const col = this.columnSelects.get(channel)!;
      const tr = this.transformSelects.get(channel)!;
      col.value = spec?.column ?? "";
      tr.value = spec?.transform?.kind ?? "linear";
    }
  }

  private collect(): Record<string, unknown> {
    const channels: Record<string, unknown> = {};
    for (const channel of CHANNELS) {
      const column = this.columnSelects.get(channel)!.value;
      if (column === "") {
        continue;
      }
      channels[channel] = {
        column,
        transform: { kind: this.transformSelects.get(channel)!.value },
      };
    }
    return { channels };
  }
}

function start(): void {
  const room = roomFromLocation();
  const userId = makeUserId();

  const canvas = el("canvas", document.body);
  canvas.id = "view";
  const panel = el("div", document.body);
  panel.id = "panel";
  el("h1", panel, `hyperviz - ${room}`);
  const banner = el("div", panel);
  banner.id = "banner";
  const roster = el("div", panel);
  roster.id = "roster";

  const gl = canvas.getContext("webgl");
  if (gl === null) {
    banner.textContent = "WebGL is not available";
    return;
  }
  const renderer = new PointRenderer(gl);

  const proto = location.protocol === "https:" ? "wss:" : "ws:";
  const socket = new WebSocket(`${proto}//${location.host}/ws/${room}`);
  const client = new SessionClient(
    { send: (data) => socket.send(data), close: () => socket.close() },
    userId,
  );
  socket.addEventListener("message", (ev) => client.handleRaw(String(ev.data)));

  const app = new ViewerApp(client, {
    fetchScene: async () => {
      const resp = await fetch(`/scene/${room}`);
      if (!resp.ok) {
        throw new Error(`scene request failed: ${resp.status}`);
      }
      return {
        bytes: await resp.arrayBuffer(),
        mappingVersion: Number(resp.headers.get("X-Mapping-Version") ?? "-1"),
      };
    },
    openLink: (url) => {
      window.open(url, "_blank", "noopener");
    },
  });

  const mappingPanel = new MappingPanel(panel, app);

  const leadBtn = el("button", panel, "lead");
  leadBtn.addEventListener("click", () => {
    if (app.leading) {
      app.stopLead();
    } else {
      app.startLead();
    }
  });
  const followLabel = el("label", panel, " follow broadcast ");
  const followBox = el("input", followLabel);
  followBox.type = "checkbox";
  followBox.checked = true;
  followBox.addEventListener("change", () => app.setFollow(followBox.checked));

  const noteForm = el("form", panel);
  const noteInput = el("input", noteForm);
  noteInput.placeholder = "annotate picked point";
  const noteBtn = el("button", noteForm, "annotate");
  noteBtn.type = "submit";
  noteForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (noteInput.value !== "" && app.annotate(noteInput.value)) {
      noteInput.value = "";
    }
  });

  client.on("mapping_changed", () => mappingPanel.showMapping(app.replica.mapping));
  client.on("welcome", () => mappingPanel.showMapping(app.replica.mapping));

  // Pointer controls: drag orbits, wheel dollies, a still click picks.
  let dragging = false;
  let moved = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener("mousedown", (ev) => {
    dragging = true;
    moved = false;
    lastX = ev.clientX;
    lastY = ev.clientY;
  });
  window.addEventListener("mouseup", () => {
    dragging = false;
  });
  window.addEventListener("mousemove", (ev) => {
    if (!dragging) {
      return;
    }
    const dx = ev.clientX - lastX;
    const dy = ev.clientY - lastY;
    lastX = ev.clientX;
    lastY = ev.clientY;
    if (Math.abs(dx) + Math.abs(dy) > 0) {
      moved = true;
      app.camera.orbit(-dx * 0.01, -dy * 0.01);
      app.localMoved(performance.now() / 1000);
    }
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    app.camera.dolly(Math.exp(ev.deltaY * 0.001));
    app.localMoved(performance.now() / 1000);
  });
  canvas.addEventListener("click", (ev) => {
    if (moved) {
      return;
    }
    const rect = canvas.getBoundingClientRect();
    const ndcX = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
    const ndcY = 1 - ((ev.clientY - rect.top) / rect.height) * 2;
    app.clickPick(ndcX, ndcY, rect.width / rect.height);
  });

  let sceneGeneration = -2;
  function frame(): void {
    app.tick(performance.now() / 1000);
    banner.textContent = app.banner ?? "";
    leadBtn.textContent = app.leading ? "stop leading" : "lead";
    const users = [...app.replica.users].sort().join(", ");
    const nav = app.replica.broadcastNavigator;
    roster.textContent =
      `in room: ${users || "-"}` + (nav !== null ? ` | leading: ${nav}` : "");

    canvas.width = canvas.clientWidth;
    canvas.height = canvas.clientHeight;
    if (app.scene !== null && app.sceneVersion !== sceneGeneration) {
      renderer.setScene(app.scene);
      sceneGeneration = app.sceneVersion;
      mappingPanel.setColumns(app.scene.columnNames);
    }
    const aspect = canvas.width / Math.max(canvas.height, 1);
    renderer.draw(viewProjection(app.pose, aspect), canvas.width, canvas.height);
    requestAnimationFrame(frame);
  }

  socket.addEventListener("open", () => {
    void app.start();
  });
  socket.addEventListener("close", () => {
    app.banner = "connection closed";
  });
  requestAnimationFrame(frame);
}

start();
