/**
 * Acceptance gate for the designer: document round-trip byte identity
 * and the live parameter loop against a real engine process, exercised
 * only through external interfaces (the CLI, the `.adaptics` format,
 * and the wire protocol).
 */

import { spawn, ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { UiDocument } from "../src/document.js";
import { emptyTacton, tactonToObj } from "../src/model.js";
import {
  EngineClient,
  PlaybackUpdate,
  StatusMessage,
  WebSocketLike,
} from "../src/wsclient.js";

const REPO_ROOT = fileURLToPath(new URL("../..", import.meta.url));
const RAINBENCH = fileURLToPath(
  new URL("../../src/adaptics/library/RainBench.adaptics", import.meta.url),
);

describe("UI round-trip", () => {
  it("saves and reloads a 3-keyframe tacton byte-identically", () => {
    const ui = new UiDocument(emptyTacton("press"));
    ui.addParam("proximity", 0);
    ui.addKeyframe(0.3, 12, -4);
    ui.addKeyframe(0.6, -9, 8);
    const edited = ui.editKeyframe(1, "brush.size", "proximity * 15 + 15"); // one formula
    expect(edited.ok).toBe(true);
    const jumped = ui.addJump(1, { param: "proximity", op: "<", threshold: 1, target: 0 }); // one jump
    expect(jumped.ok).toBe(true);
    expect(ui.doc.keyframes).toHaveLength(3);

    const saved = ui.serialize();
    const reloaded = UiDocument.load(saved);
    expect(reloaded.serialize()).toBe(saved); // byte-identical
  });

  it("loads RainBench with 62 timeline keyframes", () => {
    const ui = UiDocument.load(readFileSync(RAINBENCH, "utf-8"));
    expect(ui.timelineKeyframes()).toHaveLength(62);
    expect(ui.timelineKeyframes().at(-1)!.hasJumps).toBe(true);
  });
});

describe("live engine loop", () => {
  let server: ChildProcess | null = null;

  afterAll(() => {
    server?.kill();
  });

  async function startEngine(): Promise<number> {
    const port = 18000 + Math.floor(Math.random() * 2000);
    server = spawn("python3", ["-m", "adaptics", "serve", "--port", String(port)], {
      cwd: REPO_ROOT,
      stdio: "ignore",
    });
    const deadline = Date.now() + 20_000;
    while (Date.now() < deadline) {
      try {
        const res = await fetch(`http://127.0.0.1:${port}/library`);
        if (res.ok) return port;
      } catch {
        /* not up yet */
      }
      await new Promise((r) => setTimeout(r, 150));
    }
    throw new Error("engine did not come up");
  }

  it(
    "slider change reaches telemetry within two frames",
    { timeout: 40_000, retry: 1 },
    async () => {
      const port = await startEngine();
      const client = new EngineClient(`ws://127.0.0.1:${port}/ws`, {
        webSocketFactory: (url) => new WebSocket(url) as unknown as WebSocketLike,
      });
      const log: ({ kind: "status"; msg: StatusMessage } | { kind: "update"; msg: PlaybackUpdate })[] = [];
      client.onStatus = (msg) => log.push({ kind: "status", msg });
      client.onTelemetry = (msg) => log.push({ kind: "update", msg });
      await client.connect();

      // gate pattern: amplitude is literally the proximity parameter
      const ui = new UiDocument(emptyTacton("gate"));
      ui.addParam("proximity", 0);
      ui.addKeyframe(10, 0, 0);
      expect(ui.editKeyframe(0, "intensity", "proximity").ok).toBe(true);
      expect(ui.editKeyframe(1, "intensity", "proximity").ok).toBe(true);
      expect(ui.editKeyframe(0, "brush.am_freq", "0").ok).toBe(true);
      expect(ui.editKeyframe(1, "brush.am_freq", "0").ok).toBe(true);

      client.updatePattern(tactonToObj(ui.doc)); // engine must accept a UI save
      client.setParams({ proximity: 0 });
      client.play();

      const waitFor = async <T>(probe: () => T | undefined, what: string): Promise<T> => {
        const deadline = Date.now() + 15_000;
        while (Date.now() < deadline) {
          const got = probe();
          if (got !== undefined) return got;
          await new Promise((r) => setTimeout(r, 10));
        }
        throw new Error(`timed out waiting for ${what}`);
      };

      // the stream must be running and fully silent first
      await waitFor(
        () =>
          log.find(
            (e) => e.kind === "update" && e.msg.samples.length > 0 &&
              e.msg.samples.every((s) => s.amp === 0),
          ),
        "silent telemetry",
      );
      expect(log.some((e) => e.kind === "status" && e.msg.playing)).toBe(true);

      const sentAt = log.length;
      client.paramSlider("proximity", 1); // the slider move under test

      // find the ack for that set_params, then count telemetry frames
      const ackIndex = await waitFor(() => {
        const i = log.findIndex((e, idx) => idx >= sentAt && e.kind === "status");
        return i >= 0 ? i : undefined;
      }, "set_params ack");

      const changedIndex = await waitFor(() => {
        const i = log.findIndex(
          (e, idx) =>
            idx > ackIndex && e.kind === "update" && e.msg.samples.some((s) => s.amp > 0),
        );
        return i >= 0 ? i : undefined;
      }, "changed telemetry");

      const framesBetween = log
        .slice(ackIndex + 1, changedIndex)
        .filter((e) => e.kind === "update").length;
      // the change lands within 2 telemetry frames (<= 34 ms at 60 Hz)
      expect(framesBetween + 1).toBeLessThanOrEqual(2);

      client.close();
    },
  );
});
