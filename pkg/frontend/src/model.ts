/**
 * Tacton document model mirroring the `.adaptics` schema contract
 * (docs/adaptics-format.md in the repo root).
 *
 * Serialization is canonical within this tool: fixed key order, 2-space
 * indentation, trailing newline, so structurally equal documents produce
 * byte-identical text and save/load round-trips exactly.
 */

import { parseFormula, FormulaSyntaxError } from "./formula.js";

export type Transition = "linear" | "step";
export type BrushKind = "circle" | "line";
export type JumpOp = "<" | "<=" | ">" | ">=";

export interface ParamDecl {
  name: string;
  default: number;
}

export interface ConditionalJump {
  param: string;
  op: JumpOp;
  threshold: number;
  target: number;
}

export interface BrushSpec {
  kind: BrushKind;
  size: string;
  rotation: string;
  am_freq: string;
  stm_freq: string;
}

export interface Keyframe {
  time: number;
  coords: { x: number; y: number; z: number };
  coords_transition: Transition;
  brush: BrushSpec;
  brush_transition: Transition;
  intensity: string;
  intensity_transition: Transition;
  jumps: ConditionalJump[];
}

export interface PostProcessing {
  playback_speed: string;
  intensity_factor: string;
  translate: { x: string; y: string; z: string };
  rotation_z: string;
  scale: string;
}

export interface TactonDoc {
  format_version: number;
  name: string;
  params: ParamDecl[];
  keyframes: Keyframe[];
  post: PostProcessing;
}

export const FORMAT_VERSION = 1;
export const DEFAULT_Z_MM = 200;
const MAX_XY_MM = 500;
const MAX_Z_MM = 1000;

export interface Violation {
  code: string;
  message: string;
  path: string;
}

export function identityPost(): PostProcessing {
  return {
    playback_speed: "1",
    intensity_factor: "1",
    translate: { x: "0", y: "0", z: "0" },
    rotation_z: "0",
    scale: "1",
  };
}

export function defaultKeyframe(time: number, x = 0, y = 0): Keyframe {
  return {
    time,
    coords: { x, y, z: DEFAULT_Z_MM },
    coords_transition: "linear",
    brush: { kind: "circle", size: "10", rotation: "0", am_freq: "0", stm_freq: "100" },
    brush_transition: "linear",
    intensity: "1",
    intensity_transition: "linear",
    jumps: [],
  };
}

export function emptyTacton(name = "untitled"): TactonDoc {
  return {
    format_version: FORMAT_VERSION,
    name,
    params: [],
    keyframes: [defaultKeyframe(0)],
    post: identityPost(),
  };
}

function checkFormula(out: Violation[], src: unknown, path: string): void {
  if (typeof src !== "string") {
    out.push({ code: "formula-missing", message: "expected a formula string", path });
    return;
  }
  try {
    parseFormula(src);
  } catch (e) {
    if (e instanceof FormulaSyntaxError) {
      out.push({ code: "formula-syntax", message: e.message, path });
      return;
    }
    throw e;
  }
}

const finite = (v: unknown): v is number => typeof v === "number" && Number.isFinite(v);

/** Document invariants; an empty list means the tacton is valid. */
export function validateTacton(doc: TactonDoc): Violation[] {
  const out: Violation[] = [];
  if (doc.format_version !== FORMAT_VERSION) {
    out.push({
      code: "unsupported-format-version",
      message: `format_version ${doc.format_version} is not supported`,
      path: "format_version",
    });
  }
  const seen = new Set<string>();
  doc.params.forEach((p, i) => {
    if (!p.name || p.name.includes("`")) {
      out.push({ code: "invalid-param-name", message: `invalid parameter name ${JSON.stringify(p.name)}`, path: `params[${i}]` });
    }
    if (seen.has(p.name)) {
      out.push({ code: "duplicate-param", message: `duplicate parameter ${JSON.stringify(p.name)}`, path: `params[${i}]` });
    }
    seen.add(p.name);
    if (!finite(p.default)) {
      out.push({ code: "param-default-not-finite", message: "default must be finite", path: `params[${i}]` });
    }
  });
  if (doc.keyframes.length === 0) {
    out.push({ code: "no-keyframes", message: "a tacton needs at least one keyframe", path: "keyframes" });
    return out;
  }
  const lastTime = doc.keyframes[doc.keyframes.length - 1]!.time;
  let prev: number | null = null;
  doc.keyframes.forEach((k, i) => {
    const path = `keyframes[${i}]`;
    if (!finite(k.time) || k.time < 0) {
      out.push({ code: "time-out-of-range", message: "time must be finite and >= 0", path: `${path}.time` });
    }
    if (prev !== null && !(k.time > prev)) {
      out.push({ code: "keyframes-not-increasing", message: "keyframes not strictly increasing in time", path: `${path}.time` });
    }
    prev = k.time;
    const { x, y, z } = k.coords;
    if (!finite(x) || !finite(y) || !finite(z)) {
      out.push({ code: "coords-not-finite", message: "coordinates must be finite", path: `${path}.coords` });
    } else if (Math.abs(x) > MAX_XY_MM || Math.abs(y) > MAX_XY_MM || z < 0 || z > MAX_Z_MM) {
      out.push({ code: "coords-out-of-range", message: `coords (${x}, ${y}, ${z}) outside workspace`, path: `${path}.coords` });
    }
    if (k.brush.kind !== "circle" && k.brush.kind !== "line") {
      out.push({ code: "invalid-brush-kind", message: "brush kind must be circle or line", path: `${path}.brush.kind` });
    }
    checkFormula(out, k.brush.size, `${path}.brush.size`);
    checkFormula(out, k.brush.rotation, `${path}.brush.rotation`);
    checkFormula(out, k.brush.am_freq, `${path}.brush.am_freq`);
    checkFormula(out, k.brush.stm_freq, `${path}.brush.stm_freq`);
    checkFormula(out, k.intensity, `${path}.intensity`);
    k.jumps.forEach((j, ji) => {
      const jpath = `${path}.jumps[${ji}]`;
      if (!["<", "<=", ">", ">="].includes(j.op)) {
        out.push({ code: "invalid-jump-op", message: "bad comparison operator", path: `${jpath}.op` });
      }
      if (!finite(j.threshold)) {
        out.push({ code: "jump-threshold-not-finite", message: "threshold must be finite", path: `${jpath}.threshold` });
      }
      if (!j.param || j.param.includes("`")) {
        out.push({ code: "invalid-param-name", message: "bad jump parameter", path: `${jpath}.param` });
      }
      if (!finite(j.target) || j.target < 0 || j.target > lastTime) {
        out.push({ code: "jump-target-out-of-range", message: `jump target ${j.target} outside [0, ${lastTime}]`, path: `${jpath}.target` });
      }
    });
  });
  checkFormula(out, doc.post.playback_speed, "post.playback_speed");
  checkFormula(out, doc.post.intensity_factor, "post.intensity_factor");
  checkFormula(out, doc.post.translate.x, "post.translate.x");
  checkFormula(out, doc.post.translate.y, "post.translate.y");
  checkFormula(out, doc.post.translate.z, "post.translate.z");
  checkFormula(out, doc.post.rotation_z, "post.rotation_z");
  checkFormula(out, doc.post.scale, "post.scale");
  return out;
}

/** Canonical JSON object with the documented key order. */
export function tactonToObj(doc: TactonDoc): unknown {
  return {
    format_version: doc.format_version,
    name: doc.name,
    params: doc.params.map((p) => ({ name: p.name, default: p.default })),
    keyframes: doc.keyframes.map((k) => ({
      time: k.time,
      coords: { x: k.coords.x, y: k.coords.y, z: k.coords.z },
      coords_transition: k.coords_transition,
      brush: {
        kind: k.brush.kind,
        size: k.brush.size,
        rotation: k.brush.rotation,
        am_freq: k.brush.am_freq,
        stm_freq: k.brush.stm_freq,
      },
      brush_transition: k.brush_transition,
      intensity: k.intensity,
      intensity_transition: k.intensity_transition,
      jumps: k.jumps.map((j) => ({
        param: j.param,
        op: j.op,
        threshold: j.threshold,
        target: j.target,
      })),
    })),
    post: {
      playback_speed: doc.post.playback_speed,
      intensity_factor: doc.post.intensity_factor,
      translate: {
        x: doc.post.translate.x,
        y: doc.post.translate.y,
        z: doc.post.translate.z,
      },
      rotation_z: doc.post.rotation_z,
      scale: doc.post.scale,
    },
  };
}

export function serializeTacton(doc: TactonDoc): string {
  return JSON.stringify(tactonToObj(doc), null, 2) + "\n";
}

export class TactonParseError extends Error {}

function asNumber(v: unknown, path: string, fallback?: number): number {
  if (v === undefined && fallback !== undefined) return fallback;
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new TactonParseError(`${path}: expected a finite number`);
  }
  return v;
}

function asFormula(v: unknown, path: string, fallback?: string): string {
  if (v === undefined && fallback !== undefined) return fallback;
  if (typeof v === "number") return String(v);
  if (typeof v !== "string") throw new TactonParseError(`${path}: expected a formula string`);
  return v;
}

function asTransition(v: unknown, path: string): Transition {
  if (v === undefined) return "linear";
  if (v !== "linear" && v !== "step") throw new TactonParseError(`${path}: bad transition`);
  return v;
}

/** Parse + validate a decoded `.adaptics` document. */
export function tactonFromObj(raw: unknown): TactonDoc {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new TactonParseError("document root must be a JSON object");
  }
  const o = raw as Record<string, unknown>;
  if (typeof o.format_version !== "number" || !Number.isInteger(o.format_version)) {
    throw new TactonParseError("format_version: missing or non-integer");
  }
  const name = o.name === undefined ? "untitled" : o.name;
  if (typeof name !== "string") throw new TactonParseError("name: expected a string");

  const paramsRaw = (o.params ?? []) as unknown;
  if (!Array.isArray(paramsRaw)) throw new TactonParseError("params: expected a list");
  const params: ParamDecl[] = paramsRaw.map((p, i) => {
    const pr = p as Record<string, unknown>;
    if (typeof pr?.name !== "string") throw new TactonParseError(`params[${i}].name: expected a string`);
    return { name: pr.name, default: asNumber(pr.default, `params[${i}].default`, 0) };
  });

  if (!Array.isArray(o.keyframes)) throw new TactonParseError("keyframes: missing or not a list");
  const keyframes: Keyframe[] = o.keyframes.map((k, i) => {
    const kr = k as Record<string, unknown>;
    const path = `keyframes[${i}]`;
    const coords = kr?.coords as Record<string, unknown> | undefined;
    if (typeof coords !== "object" || coords === null) {
      throw new TactonParseError(`${path}.coords: expected an object`);
    }
    const brush = kr.brush as Record<string, unknown> | undefined;
    if (typeof brush !== "object" || brush === null) {
      throw new TactonParseError(`${path}.brush: expected an object`);
    }
    if (brush.kind !== "circle" && brush.kind !== "line") {
      throw new TactonParseError(`${path}.brush.kind: expected circle or line`);
    }
    const jumpsRaw = (kr.jumps ?? []) as unknown;
    if (!Array.isArray(jumpsRaw)) throw new TactonParseError(`${path}.jumps: expected a list`);
    return {
      time: asNumber(kr.time, `${path}.time`),
      coords: {
        x: asNumber(coords.x, `${path}.coords.x`),
        y: asNumber(coords.y, `${path}.coords.y`),
        z: asNumber(coords.z, `${path}.coords.z`, DEFAULT_Z_MM),
      },
      coords_transition: asTransition(kr.coords_transition, `${path}.coords_transition`),
      brush: {
        kind: brush.kind,
        size: asFormula(brush.size, `${path}.brush.size`),
        rotation: asFormula(brush.rotation, `${path}.brush.rotation`, "0"),
        am_freq: asFormula(brush.am_freq, `${path}.brush.am_freq`, "0"),
        stm_freq: asFormula(brush.stm_freq, `${path}.brush.stm_freq`, "0"),
      },
      brush_transition: asTransition(kr.brush_transition, `${path}.brush_transition`),
      intensity: asFormula(kr.intensity, `${path}.intensity`, "1"),
      intensity_transition: asTransition(kr.intensity_transition, `${path}.intensity_transition`),
      jumps: jumpsRaw.map((j, ji) => {
        const jr = j as Record<string, unknown>;
        const jpath = `${path}.jumps[${ji}]`;
        if (typeof jr?.param !== "string") throw new TactonParseError(`${jpath}.param: expected a string`);
        if (jr.op !== "<" && jr.op !== "<=" && jr.op !== ">" && jr.op !== ">=") {
          throw new TactonParseError(`${jpath}.op: bad comparison operator`);
        }
        return {
          param: jr.param,
          op: jr.op,
          threshold: asNumber(jr.threshold, `${jpath}.threshold`),
          target: asNumber(jr.target, `${jpath}.target`),
        };
      }),
    };
  });

  const postRaw = o.post as Record<string, unknown> | undefined;
  const translateRaw = (postRaw?.translate ?? {}) as Record<string, unknown>;
  const post: PostProcessing = postRaw === undefined ? identityPost() : {
    playback_speed: asFormula(postRaw.playback_speed, "post.playback_speed", "1"),
    intensity_factor: asFormula(postRaw.intensity_factor, "post.intensity_factor", "1"),
    translate: {
      x: asFormula(translateRaw.x, "post.translate.x", "0"),
      y: asFormula(translateRaw.y, "post.translate.y", "0"),
      z: asFormula(translateRaw.z, "post.translate.z", "0"),
    },
    rotation_z: asFormula(postRaw.rotation_z, "post.rotation_z", "0"),
    scale: asFormula(postRaw.scale, "post.scale", "1"),
  };

  const doc: TactonDoc = { format_version: o.format_version, name, params, keyframes, post };
  const violations = validateTacton(doc);
  if (violations.length > 0) {
    const v = violations[0]!;
    throw new TactonParseError(`${v.path}: ${v.message}`);
  }
  return doc;
}

export function parseTacton(text: string): TactonDoc {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new TactonParseError(`malformed JSON: ${(e as Error).message}`);
  }
  return tactonFromObj(raw);
}
