/**
 * Designer application: pattern canvas with live trail, timeline with
 * jump flags, keyframe editor, post-processing tab, external-parameter
 * sliders, library browser, and the engine connection.
 *
 * All engine effects flow through the wire protocol (update_pattern,
 * play, stop, set_params, set_transform); nothing touches engine state
 * directly.  Edits while disconnected never block; reconnecting replays
 * the current document via update_pattern.
 */

import { UiDocument } from "./document.js";
import { checkFormula, referencedParams } from "./formula.js";
import { TactonDoc, parseTacton, serializeTacton, tactonToObj } from "./model.js";
import { BUILTIN_SCENARIOS, runScenario } from "./scenarios.js";
import { TrailBuffer } from "./trail.js";
import { EngineClient, StatusMessage } from "./wsclient.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const CANVAS_SCALE = 2.2; // px per mm on the design canvas

class DesignerApp {
  ui = new UiDocument();
  client: EngineClient | null = null;
  trail = new TrailBuffer(0.25);
  lastStatus: StatusMessage | null = null;
  paramValues = new Map<string, number>();
  paramRanges = new Map<string, { min: number; max: number }>();
  dragging: number | null = null;
  cancelScenario: (() => void) | null = null;

  canvas = $("canvas") as unknown as HTMLCanvasElement;
  timeline = $("timeline") as unknown as HTMLCanvasElement;

  constructor() {
    this.ui.onChange = () => {
      this.pushPattern();
      this.renderAll();
    };
    this.bindHeader();
    this.bindCanvas();
    this.bindTabs();
    this.loadLibraryList();
    this.renderAll();
    const redraw = () => {
      this.drawCanvas();
      this.drawTimeline();
      requestAnimationFrame(redraw);
    };
    requestAnimationFrame(redraw);
  }

  // ------------------------------------------------------------- engine

  connect(url: string): void {
    this.client?.close();
    const client = new EngineClient(url);
    this.client = client;
    this.setConnectionState("connecting");
    client.onStatus = (msg) => {
      this.lastStatus = msg;
      this.renderStatus();
    };
    client.onTelemetry = (msg) => this.trail.push(msg);
    client.onProtocolError = (msg) => this.flash(`engine error [${msg.code}]: ${msg.message}`);
    client.onDisconnect = () => this.setConnectionState("disconnected");
    client
      .connect()
      .then(() => {
        this.setConnectionState("connected");
        this.pushPattern(); // replay the current document on reconnect
      })
      .catch((e) => {
        this.flash(`connect failed: ${(e as Error).message}`);
        this.setConnectionState("disconnected");
      });
  }

  pushPattern(): void {
    if (this.client?.connected) {
      this.client.updatePattern(tactonToObj(this.ui.doc));
    }
  }

  setConnectionState(state: "connected" | "connecting" | "disconnected"): void {
    $("#conn-state".slice(1)).textContent = state;
    document.body.dataset.connection = state;
    this.renderParams(); // sliders disable while disconnected
  }

  flash(message: string): void {
    const bar = $("flash");
    bar.textContent = message;
    bar.classList.add("visible");
    setTimeout(() => bar.classList.remove("visible"), 4000);
  }

  // ------------------------------------------------------------- header

  bindHeader(): void {
    const nameInput = $("doc-name") as HTMLInputElement;
    nameInput.addEventListener("change", () => this.ui.rename(nameInput.value));

    $("btn-connect").addEventListener("click", () => {
      this.connect(($("engine-url") as HTMLInputElement).value);
    });
    $("btn-play").addEventListener("click", () => this.client?.play());
    $("btn-stop").addEventListener("click", () => this.client?.stop());
    $("btn-undo").addEventListener("click", () => {
      this.ui.undo();
    });
    $("btn-redo").addEventListener("click", () => {
      this.ui.redo();
    });

    $("btn-save").addEventListener("click", () => this.saveFile());
    const fileInput = $("file-input") as HTMLInputElement;
    $("btn-open").addEventListener("click", () => fileInput.click());
    fileInput.addEventListener("change", () => {
      const file = fileInput.files?.[0];
      if (!file) return;
      file.text().then((text) => this.loadText(text, file.name));
      fileInput.value = "";
    });

    $("btn-library-load").addEventListener("click", () => {
      const name = ($("library-select") as HTMLSelectElement).value;
      if (!name) return;
      fetch(`/library/${encodeURIComponent(name)}`)
        .then((r) => {
          if (!r.ok) throw new Error(`HTTP ${r.status}`);
          return r.text();
        })
        .then((text) => this.loadText(text, name))
        .catch((e) => this.flash(`library load failed: ${(e as Error).message}`));
    });
  }

  loadText(text: string, label: string): void {
    try {
      this.ui = UiDocument.load(text);
    } catch (e) {
      this.flash(`cannot load ${label}: ${(e as Error).message}`);
      return;
    }
    this.ui.onChange = () => {
      this.pushPattern();
      this.renderAll();
    };
    this.paramValues.clear();
    this.paramRanges.clear();
    this.trail.clear();
    this.pushPattern();
    this.renderAll();
  }

  saveFile(): void {
    const text = this.ui.serialize();
    const blob = new Blob([text], { type: "application/json" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `${this.ui.doc.name || "tacton"}.adaptics`;
    a.click();
    URL.revokeObjectURL(a.href);
  }

  loadLibraryList(): void {
    fetch("/library")
      .then((r) => r.json())
      .then((data: { tactons: string[] }) => {
        const select = $("library-select") as HTMLSelectElement;
        select.innerHTML = "";
        for (const name of data.tactons) {
          const option = document.createElement("option");
          option.value = name;
          option.textContent = name;
          select.appendChild(option);
        }
      })
      .catch(() => {
        /* standalone mode: library browsing needs the engine's HTTP side */
      });
  }

  // ------------------------------------------------------------- canvas

  bindCanvas(): void {
    const pos = (ev: MouseEvent) => {
      const rect = this.canvas.getBoundingClientRect();
      return {
        x: (ev.clientX - rect.left - this.canvas.width / 2) / CANVAS_SCALE,
        y: -(ev.clientY - rect.top - this.canvas.height / 2) / CANVAS_SCALE,
      };
    };
    this.canvas.addEventListener("mousedown", (ev) => {
      const { x, y } = pos(ev);
      const hit = this.ui.doc.keyframes.findIndex(
        (k) => Math.hypot(k.coords.x - x, k.coords.y - y) < 8,
      );
      if (hit >= 0) {
        this.ui.selectedKeyframe = hit;
        this.dragging = hit;
        this.renderKeyframeEditor();
      }
    });
    this.canvas.addEventListener("mousemove", (ev) => {
      if (this.dragging === null) return;
      const { x, y } = pos(ev);
      this.ui.moveKeyframe(this.dragging, Math.round(x * 10) / 10, Math.round(y * 10) / 10);
    });
    window.addEventListener("mouseup", () => {
      this.dragging = null;
    });
    this.canvas.addEventListener("dblclick", (ev) => {
      const { x, y } = pos(ev);
      const time = this.ui.duration() + 0.1;
      this.ui.addKeyframe(Math.round(time * 1000) / 1000, Math.round(x), Math.round(y));
      this.ui.selectedKeyframe = this.ui.doc.keyframes.length - 1;
      this.renderKeyframeEditor();
    });
  }

  drawCanvas(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.strokeStyle = "#2d3748";
    ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
    ctx.beginPath();
    ctx.moveTo(width / 2, 0);
    ctx.lineTo(width / 2, height);
    ctx.moveTo(0, height / 2);
    ctx.lineTo(width, height / 2);
    ctx.strokeStyle = "#1c2431";
    ctx.stroke();

    this.trail.draw(ctx, width, height, CANVAS_SCALE);

    const kfs = this.ui.doc.keyframes;
    ctx.strokeStyle = "#4a5568";
    ctx.beginPath();
    kfs.forEach((k, i) => {
      const px = width / 2 + k.coords.x * CANVAS_SCALE;
      const py = height / 2 - k.coords.y * CANVAS_SCALE;
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
    kfs.forEach((k, i) => {
      const px = width / 2 + k.coords.x * CANVAS_SCALE;
      const py = height / 2 - k.coords.y * CANVAS_SCALE;
      ctx.beginPath();
      ctx.arc(px, py, i === this.ui.selectedKeyframe ? 7 : 5, 0, Math.PI * 2);
      ctx.fillStyle = i === this.ui.selectedKeyframe ? "#63b3ed" : "#a0aec0";
      ctx.fill();
      if (k.jumps.length > 0) {
        ctx.fillStyle = "#f6ad55";
        ctx.fillRect(px + 6, py - 14, 3, 10);
        ctx.beginPath();
        ctx.moveTo(px + 9, py - 14);
        ctx.lineTo(px + 17, py - 11);
        ctx.lineTo(px + 9, py - 8);
        ctx.fill();
      }
    });
  }

  drawTimeline(): void {
    const ctx = this.timeline.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.timeline;
    ctx.clearRect(0, 0, width, height);
    ctx.strokeStyle = "#2d3748";
    ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
    const duration = Math.max(this.ui.duration(), 1e-9);
    const toX = (t: number) => 10 + (t / duration) * (width - 20);

    ctx.strokeStyle = "#4a5568";
    ctx.beginPath();
    ctx.moveTo(10, height / 2);
    ctx.lineTo(width - 10, height / 2);
    ctx.stroke();

    for (const marker of this.ui.timelineKeyframes()) {
      const x = toX(marker.time);
      ctx.fillStyle = marker.index === this.ui.selectedKeyframe ? "#63b3ed" : "#a0aec0";
      ctx.beginPath();
      ctx.moveTo(x, height / 2 - 7);
      ctx.lineTo(x + 5, height / 2);
      ctx.lineTo(x, height / 2 + 7);
      ctx.lineTo(x - 5, height / 2);
      ctx.fill();
      if (marker.hasJumps) {
        ctx.strokeStyle = "#f6ad55";
        ctx.fillStyle = "#f6ad55";
        ctx.beginPath();
        ctx.moveTo(x, height / 2 - 8);
        ctx.lineTo(x, height / 2 - 18);
        ctx.stroke();
        ctx.beginPath();
        ctx.moveTo(x, height / 2 - 18);
        ctx.lineTo(x + 8, height / 2 - 15);
        ctx.lineTo(x, height / 2 - 12);
        ctx.fill();
        for (const target of marker.jumpTargets) {
          ctx.strokeStyle = "rgba(246, 173, 85, 0.5)";
          ctx.beginPath();
          ctx.moveTo(x, height / 2 + 10);
          ctx.bezierCurveTo(x, height - 4, toX(target), height - 4, toX(target), height / 2 + 10);
          ctx.stroke();
        }
      }
    }

    const playhead = this.trail.playhead;
    if (playhead !== null) {
      const x = toX(Math.min(Math.max(playhead, 0), duration));
      ctx.strokeStyle = "#68d391";
      ctx.beginPath();
      ctx.moveTo(x, 4);
      ctx.lineTo(x, height - 4);
      ctx.stroke();
    }
  }

  // ------------------------------------------------------------- editor

  bindTabs(): void {
    for (const tab of ["keyframe", "post"]) {
      $(`tab-${tab}`).addEventListener("click", () => {
        document.body.dataset.tab = tab;
      });
    }
    document.body.dataset.tab = "keyframe";
    $("btn-add-param").addEventListener("click", () => {
      const input = $("new-param-name") as HTMLInputElement;
      const name = input.value.trim();
      if (!name) return;
      const result = this.ui.addParam(name, 0);
      if (!result.ok) this.flash(result.error);
      input.value = "";
    });
    const scenarioSelect = $("scenario-select") as HTMLSelectElement;
    for (const scenario of BUILTIN_SCENARIOS) {
      const option = document.createElement("option");
      option.value = scenario.name;
      option.textContent = scenario.name;
      scenarioSelect.appendChild(option);
    }
    $("btn-scenario").addEventListener("click", () => {
      this.cancelScenario?.();
      const scenario = BUILTIN_SCENARIOS.find((s) => s.name === scenarioSelect.value);
      if (!scenario || !this.client?.connected) return;
      this.cancelScenario = runScenario(scenario, (param, value) => {
        this.paramValues.set(param, value);
        this.client?.paramSlider(param, value);
        this.renderParams();
      });
    });
  }

  formulaField(
    label: string,
    value: string,
    onEdit: (v: string) => { ok: boolean; error?: string; position?: number },
  ): HTMLElement {
    const wrap = document.createElement("label");
    wrap.className = "field";
    const span = document.createElement("span");
    span.textContent = label;
    const input = document.createElement("input");
    input.value = value;
    input.spellcheck = false;
    const error = document.createElement("em");
    error.className = "inline-error";
    const validate = () => {
      const checked = checkFormula(input.value);
      if (checked.ok) {
        error.textContent = "";
        input.classList.remove("invalid");
        const refs = [...referencedParams(input.value)];
        input.title = refs.length ? `parameters: ${refs.join(", ")}` : "";
        this.highlightParams(refs);
      } else {
        error.textContent = `syntax error at ${checked.position}: ${checked.message}`;
        input.classList.add("invalid");
      }
      return checked.ok;
    };
    input.addEventListener("input", validate);
    input.addEventListener("change", () => {
      if (!validate()) return; // inline marker only; engine keeps last valid copy
      const result = onEdit(input.value);
      if (!result.ok && result.error) {
        error.textContent = result.error;
        input.classList.add("invalid");
      }
    });
    wrap.append(span, input, error);
    return wrap;
  }

  highlightParams(names: string[]): void {
    for (const row of document.querySelectorAll<HTMLElement>("#params-panel .param-row")) {
      row.classList.toggle("highlight", names.includes(row.dataset.name ?? ""));
    }
  }

  numberField(label: string, value: number, onEdit: (v: number) => { ok: boolean; error?: string }): HTMLElement {
    const wrap = document.createElement("label");
    wrap.className = "field";
    const span = document.createElement("span");
    span.textContent = label;
    const input = document.createElement("input");
    input.type = "number";
    input.step = "any";
    input.value = String(value);
    const error = document.createElement("em");
    error.className = "inline-error";
    input.addEventListener("change", () => {
      const result = onEdit(Number(input.value));
      error.textContent = result.ok ? "" : result.error ?? "invalid";
      input.classList.toggle("invalid", !result.ok);
    });
    wrap.append(span, input, error);
    return wrap;
  }

  selectField(label: string, value: string, options: string[], onEdit: (v: string) => void): HTMLElement {
    const wrap = document.createElement("label");
    wrap.className = "field";
    const span = document.createElement("span");
    span.textContent = label;
    const select = document.createElement("select");
    for (const o of options) {
      const option = document.createElement("option");
      option.value = o;
      option.textContent = o;
      option.selected = o === value;
      select.appendChild(option);
    }
    select.addEventListener("change", () => onEdit(select.value));
    wrap.append(span, select);
    return wrap;
  }

  renderKeyframeEditor(): void {
    const panel = $("keyframe-editor");
    panel.innerHTML = "";
    const index = this.ui.selectedKeyframe;
    const k = index === null ? undefined : this.ui.doc.keyframes[index];
    if (index === null || !k) {
      panel.textContent = "Select a keyframe on the canvas or timeline.";
      return;
    }
    const title = document.createElement("h3");
    title.textContent = `Keyframe ${index} @ ${k.time}s`;
    panel.appendChild(title);

    panel.appendChild(this.numberField("time (s)", k.time, (v) => this.ui.editKeyframe(index, "time", v)));
    panel.appendChild(this.numberField("x (mm)", k.coords.x, (v) => this.ui.editKeyframe(index, "coords.x", v)));
    panel.appendChild(this.numberField("y (mm)", k.coords.y, (v) => this.ui.editKeyframe(index, "coords.y", v)));
    panel.appendChild(this.numberField("z (mm)", k.coords.z, (v) => this.ui.editKeyframe(index, "coords.z", v)));
    panel.appendChild(this.selectField("coords transition", k.coords_transition, ["linear", "step"],
      (v) => void this.ui.editKeyframe(index, "coords_transition", v)));
    panel.appendChild(this.selectField("brush kind", k.brush.kind, ["circle", "line"],
      (v) => void this.ui.editKeyframe(index, "brush.kind", v)));
    panel.appendChild(this.formulaField("brush size (mm)", k.brush.size, (v) => this.ui.editKeyframe(index, "brush.size", v)));
    panel.appendChild(this.formulaField("brush rotation (deg)", k.brush.rotation, (v) => this.ui.editKeyframe(index, "brush.rotation", v)));
    panel.appendChild(this.formulaField("AM frequency (Hz)", k.brush.am_freq, (v) => this.ui.editKeyframe(index, "brush.am_freq", v)));
    panel.appendChild(this.formulaField("STM frequency (Hz)", k.brush.stm_freq, (v) => this.ui.editKeyframe(index, "brush.stm_freq", v)));
    panel.appendChild(this.selectField("brush transition", k.brush_transition, ["linear", "step"],
      (v) => void this.ui.editKeyframe(index, "brush_transition", v)));
    panel.appendChild(this.formulaField("intensity", k.intensity, (v) => this.ui.editKeyframe(index, "intensity", v)));
    panel.appendChild(this.selectField("intensity transition", k.intensity_transition, ["linear", "step"],
      (v) => void this.ui.editKeyframe(index, "intensity_transition", v)));

    const jumps = document.createElement("div");
    jumps.className = "jumps";
    const jtitle = document.createElement("h4");
    jtitle.textContent = "Conditional jumps";
    jumps.appendChild(jtitle);
    k.jumps.forEach((j, ji) => {
      const row = document.createElement("div");
      row.className = "jump-row";
      row.textContent = `if ${j.param} ${j.op} ${j.threshold} jump to ${j.target}s`;
      const remove = document.createElement("button");
      remove.textContent = "remove";
      remove.addEventListener("click", () => {
        this.ui.removeJump(index, ji);
        this.renderKeyframeEditor();
      });
      row.appendChild(remove);
      jumps.appendChild(row);
    });
    const add = document.createElement("button");
    add.textContent = "add jump";
    add.addEventListener("click", () => {
      const param = this.ui.doc.params[0]?.name ?? "proximity";
      const result = this.ui.addJump(index, { param, op: "<", threshold: 1, target: 0 });
      if (!result.ok) this.flash(result.error);
      this.renderKeyframeEditor();
    });
    jumps.appendChild(add);
    panel.appendChild(jumps);

    const remove = document.createElement("button");
    remove.textContent = "delete keyframe";
    remove.addEventListener("click", () => {
      const result = this.ui.removeKeyframe(index);
      if (!result.ok) this.flash(result.error);
      this.ui.selectedKeyframe = null;
      this.renderKeyframeEditor();
    });
    panel.appendChild(remove);
  }

  renderPostEditor(): void {
    const panel = $("post-editor");
    panel.innerHTML = "";
    const post = this.ui.doc.post;
    panel.appendChild(this.formulaField("playback speed", post.playback_speed, (v) => this.ui.editPost("playback_speed", v)));
    panel.appendChild(this.formulaField("intensity factor", post.intensity_factor, (v) => this.ui.editPost("intensity_factor", v)));
    panel.appendChild(this.formulaField("translate x (mm)", post.translate.x, (v) => this.ui.editPost("translate.x", v)));
    panel.appendChild(this.formulaField("translate y (mm)", post.translate.y, (v) => this.ui.editPost("translate.y", v)));
    panel.appendChild(this.formulaField("translate z (mm)", post.translate.z, (v) => this.ui.editPost("translate.z", v)));
    panel.appendChild(this.formulaField("rotation z (deg)", post.rotation_z, (v) => this.ui.editPost("rotation_z", v)));
    panel.appendChild(this.formulaField("scale", post.scale, (v) => this.ui.editPost("scale", v)));
  }

  renderParams(): void {
    const panel = $("params-panel");
    panel.innerHTML = "";
    const connected = this.client?.connected ?? false;
    for (const p of this.ui.doc.params) {
      const range = this.paramRanges.get(p.name) ?? { min: 0, max: 1 };
      this.paramRanges.set(p.name, range);
      const value = this.paramValues.get(p.name) ?? p.default;

      const row = document.createElement("div");
      row.className = "param-row";
      row.dataset.name = p.name;
      const label = document.createElement("span");
      label.textContent = p.name;
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = String(range.min);
      slider.max = String(range.max);
      slider.step = "any";
      slider.value = String(Math.min(Math.max(value, range.min), range.max));
      slider.disabled = !connected;
      if (!connected) slider.title = "connect to the engine to test adaptations";
      const out = document.createElement("output");
      out.textContent = Number(slider.value).toFixed(2);
      slider.addEventListener("input", () => {
        const v = Number(slider.value);
        this.paramValues.set(p.name, v);
        out.textContent = v.toFixed(2);
        this.client?.paramSlider(p.name, v); // coalesced to <= 60 msg/s
      });
      const min = document.createElement("input");
      min.type = "number";
      min.className = "range-bound";
      min.value = String(range.min);
      min.addEventListener("change", () => {
        range.min = Number(min.value);
        slider.min = min.value;
      });
      const max = document.createElement("input");
      max.type = "number";
      max.className = "range-bound";
      max.value = String(range.max);
      max.addEventListener("change", () => {
        range.max = Number(max.value);
        slider.max = max.value;
      });
      const remove = document.createElement("button");
      remove.textContent = "x";
      remove.title = "remove parameter";
      remove.addEventListener("click", () => {
        const result = this.ui.removeParam(p.name);
        if (!result.ok) this.flash(result.error);
      });
      row.append(label, min, slider, max, out, remove);
      panel.appendChild(row);
    }
  }

  renderStatus(): void {
    const s = this.lastStatus;
    $("engine-status").textContent = s
      ? `${s.playing ? "playing" : "stopped"}${s.finished ? " (finished)" : ""} | ` +
        `pattern ${s.pattern ?? "-"} | t=${s.pattern_time.toFixed(3)}s | warnings ${s.warnings}`
      : "no status yet";
  }

  renderAll(): void {
    ($("doc-name") as HTMLInputElement).value = this.ui.doc.name;
    this.renderKeyframeEditor();
    this.renderPostEditor();
    this.renderParams();
    this.renderStatus();
  }
}

declare global {
  interface Window {
    designer: DesignerApp;
  }
}

window.addEventListener("DOMContentLoaded", () => {
  window.designer = new DesignerApp();
});

export { DesignerApp };
