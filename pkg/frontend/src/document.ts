/**
 * Editable document store: the tacton being edited, selection, an undo
 * stack of serialized snapshots (so undo/redo restores byte-identical
 * documents), and the last engine-accepted copy.
 *
 * Edits that fail validation (formula syntax, document invariants) are
 * rejected and reported for inline display; the document, and therefore
 * the engine's copy, keeps its last valid state.
 */

import { checkFormula } from "./formula.js";
import {
  ConditionalJump,
  Keyframe,
  TactonDoc,
  Violation,
  defaultKeyframe,
  emptyTacton,
  parseTacton,
  serializeTacton,
  validateTacton,
} from "./model.js";

export type EditResult =
  | { ok: true }
  | { ok: false; error: string; position?: number; violations?: Violation[] };

export interface TimelineKeyframe {
  index: number;
  time: number;
  hasJumps: boolean;
  jumpTargets: number[];
}

const FORMULA_FIELDS = new Set([
  "brush.size",
  "brush.rotation",
  "brush.am_freq",
  "brush.stm_freq",
  "intensity",
]);

export class UiDocument {
  private snapshot: string;
  private undoStack: string[] = [];
  private redoStack: string[] = [];
  doc: TactonDoc;
  selectedKeyframe: number | null = null;
  /** Called with the serialized document after every accepted edit. */
  onChange: ((doc: TactonDoc) => void) | null = null;

  constructor(doc?: TactonDoc) {
    this.doc = doc ?? emptyTacton();
    this.snapshot = serializeTacton(this.doc);
  }

  static load(text: string): UiDocument {
    return new UiDocument(parseTacton(text));
  }

  serialize(): string {
    return serializeTacton(this.doc);
  }

  /** Apply `mutate` to a working copy; commit only if still valid. */
  private commit(mutate: (doc: TactonDoc) => void): EditResult {
    const working = parseTacton(this.snapshot); // deep, independent copy
    mutate(working);
    const violations = validateTacton(working);
    if (violations.length > 0) {
      const v = violations[0]!;
      return { ok: false, error: `${v.path}: ${v.message}`, violations };
    }
    this.undoStack.push(this.snapshot);
    this.redoStack.length = 0;
    this.doc = working;
    this.snapshot = serializeTacton(working);
    this.onChange?.(this.doc);
    return { ok: true };
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) return false;
    this.redoStack.push(this.snapshot);
    this.snapshot = prev;
    this.doc = parseTacton(prev);
    this.onChange?.(this.doc);
    return true;
  }

  redo(): boolean {
    const next = this.redoStack.pop();
    if (next === undefined) return false;
    this.undoStack.push(this.snapshot);
    this.snapshot = next;
    this.doc = parseTacton(next);
    this.onChange?.(this.doc);
    return true;
  }

  rename(name: string): EditResult {
    return this.commit((d) => {
      d.name = name;
    });
  }

  addKeyframe(time: number, x = 0, y = 0): EditResult {
    return this.commit((d) => {
      const kf = defaultKeyframe(time, x, y);
      const at = d.keyframes.findIndex((k) => k.time > time);
      if (at < 0) d.keyframes.push(kf);
      else d.keyframes.splice(at, 0, kf);
    });
  }

  removeKeyframe(index: number): EditResult {
    return this.commit((d) => {
      d.keyframes.splice(index, 1);
    });
  }

  /** Spatial drag on the canvas: coords change, the timeline does not. */
  moveKeyframe(index: number, x: number, y: number): EditResult {
    return this.commit((d) => {
      const k = d.keyframes[index];
      if (!k) throw new Error(`no keyframe ${index}`);
      k.coords.x = x;
      k.coords.y = y;
    });
  }

  /**
   * Set one keyframe field.  `field` is a dotted path such as
   * "brush.size", "coords.x", "time", "intensity_transition".  Formula
   * fields are syntax-checked first so bad input surfaces as an inline
   * error without touching the document.
   */
  editKeyframe(index: number, field: string, value: unknown): EditResult {
    if (FORMULA_FIELDS.has(field)) {
      const checked = checkFormula(String(value));
      if (!checked.ok) {
        return { ok: false, error: checked.message, position: checked.position };
      }
    }
    return this.commit((d) => {
      const k = d.keyframes[index];
      if (!k) throw new Error(`no keyframe ${index}`);
      setPath(k as unknown as Record<string, unknown>, field, value);
    });
  }

  editPost(field: string, value: string): EditResult {
    const checked = checkFormula(value);
    if (!checked.ok) {
      return { ok: false, error: checked.message, position: checked.position };
    }
    return this.commit((d) => {
      setPath(d.post as unknown as Record<string, unknown>, field, value);
    });
  }

  addJump(index: number, jump: ConditionalJump): EditResult {
    return this.commit((d) => {
      d.keyframes[index]?.jumps.push({ ...jump });
    });
  }

  removeJump(index: number, jumpIndex: number): EditResult {
    return this.commit((d) => {
      d.keyframes[index]?.jumps.splice(jumpIndex, 1);
    });
  }

  addParam(name: string, def = 0): EditResult {
    return this.commit((d) => {
      d.params.push({ name, default: def });
    });
  }

  removeParam(name: string): EditResult {
    return this.commit((d) => {
      d.params = d.params.filter((p) => p.name !== name);
    });
  }

  /** Timeline pane model: keyframe markers with jump flags. */
  timelineKeyframes(): TimelineKeyframe[] {
    return this.doc.keyframes.map((k: Keyframe, index: number) => ({
      index,
      time: k.time,
      hasJumps: k.jumps.length > 0,
      jumpTargets: k.jumps.map((j) => j.target),
    }));
  }

  duration(): number {
    return this.doc.keyframes[this.doc.keyframes.length - 1]?.time ?? 0;
  }
}

function setPath(target: Record<string, unknown>, path: string, value: unknown): void {
  const parts = path.split(".");
  let node: Record<string, unknown> = target;
  for (const part of parts.slice(0, -1)) {
    const next = node[part];
    if (typeof next !== "object" || next === null) throw new Error(`bad field path ${path}`);
    node = next as Record<string, unknown>;
  }
  const leaf = parts[parts.length - 1]!;
  if (!(leaf in node)) throw new Error(`bad field path ${path}`);
  node[leaf] = value;
}
