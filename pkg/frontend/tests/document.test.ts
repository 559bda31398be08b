import { describe, expect, it } from "vitest";

import { UiDocument } from "../src/document.js";
import { emptyTacton, serializeTacton, validateTacton } from "../src/model.js";

function threeKeyframeDoc(): UiDocument {
  const ui = new UiDocument(emptyTacton("demo"));
  ui.addParam("proximity", 0);
  ui.addKeyframe(0.3, 10, 0);
  ui.addKeyframe(0.6, -10, 5);
  ui.editKeyframe(1, "brush.size", "proximity * 15 + 15");
  ui.addJump(1, { param: "proximity", op: "<", threshold: 1, target: 0 });
  return ui;
}

describe("document store", () => {
  it("creates valid documents", () => {
    const ui = threeKeyframeDoc();
    expect(validateTacton(ui.doc)).toEqual([]);
    expect(ui.doc.keyframes).toHaveLength(3);
  });

  it("rejects formula syntax errors inline without touching the document", () => {
    const ui = threeKeyframeDoc();
    const before = ui.serialize();
    const result = ui.editKeyframe(0, "brush.size", "2 * (3");
    expect(result.ok).toBe(false);
    if (!result.ok) expect(result.position).toBe(6);
    expect(ui.serialize()).toBe(before); // engine copy keeps last valid state
  });

  it("rejects invariant-breaking edits with violations", () => {
    const ui = threeKeyframeDoc();
    const result = ui.editKeyframe(1, "time", 0.9); // beyond keyframe 2's 0.6
    expect(result.ok).toBe(false);
    const before = ui.serialize();
    expect(ui.serialize()).toBe(before);
  });

  it("undo and redo restore byte-identical documents", () => {
    const ui = threeKeyframeDoc();
    const v1 = ui.serialize();
    ui.editKeyframe(2, "intensity", "0.5");
    const v2 = ui.serialize();
    ui.moveKeyframe(2, 14, -3);
    const v3 = ui.serialize();

    expect(ui.undo()).toBe(true);
    expect(ui.serialize()).toBe(v2);
    expect(ui.undo()).toBe(true);
    expect(ui.serialize()).toBe(v1);
    expect(ui.redo()).toBe(true);
    expect(ui.serialize()).toBe(v2);
    expect(ui.redo()).toBe(true);
    expect(ui.serialize()).toBe(v3);
    expect(ui.redo()).toBe(false);
  });

  it("drag moves coordinates and leaves the timeline unchanged", () => {
    const ui = threeKeyframeDoc();
    const timesBefore = ui.timelineKeyframes().map((m) => m.time);
    ui.moveKeyframe(1, 42, -17);
    expect(ui.doc.keyframes[1]!.coords).toMatchObject({ x: 42, y: -17 });
    expect(ui.timelineKeyframes().map((m) => m.time)).toEqual(timesBefore);
  });

  it("timeline model exposes jump flags", () => {
    const ui = threeKeyframeDoc();
    const markers = ui.timelineKeyframes();
    expect(markers[1]).toMatchObject({ hasJumps: true, jumpTargets: [0] });
    expect(markers[0]!.hasJumps).toBe(false);
  });

  it("notifies onChange for every accepted edit only", () => {
    const ui = threeKeyframeDoc();
    let calls = 0;
    ui.onChange = () => {
      calls += 1;
    };
    ui.editKeyframe(0, "brush.size", "12");
    ui.editKeyframe(0, "brush.size", "broken ("); // rejected
    ui.undo();
    expect(calls).toBe(2); // edit + undo
  });

  it("rejects out-of-range jump targets", () => {
    const ui = threeKeyframeDoc();
    const result = ui.addJump(0, { param: "proximity", op: ">", threshold: 0, target: 99 });
    expect(result.ok).toBe(false);
  });

  it("serializes with a trailing newline and stable bytes", () => {
    const ui = threeKeyframeDoc();
    expect(ui.serialize().endsWith("\n")).toBe(true);
    expect(ui.serialize()).toBe(serializeTacton(ui.doc));
  });
});
