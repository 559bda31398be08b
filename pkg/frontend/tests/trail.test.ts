import { describe, expect, it } from "vitest";

import { TrailBuffer } from "../src/trail.js";
import { PlaybackUpdate } from "../src/wsclient.js";

function update(deviceTime: number, count: number, amp = 1, pt = 0): PlaybackUpdate {
  return {
    type: "playback_update",
    device_time: deviceTime,
    samples: Array.from({ length: count }, (_, i) => ({
      x: i, y: -i, z: 200, amp, pt: pt + i / 1000,
    })),
  };
}

describe("trail buffer", () => {
  it("keeps only the configured window of samples", () => {
    const trail = new TrailBuffer(0.25);
    trail.push(update(0.0, 10));
    trail.push(update(0.1, 10));
    trail.push(update(0.2, 10));
    expect(trail.snapshot()).toHaveLength(30);
    trail.push(update(0.3, 10)); // samples stamped 0.0 age out
    expect(trail.snapshot()).toHaveLength(30);
    expect(trail.snapshot()[0]!.device_time).toBeCloseTo(0.1);
  });

  it("exposes the newest device time and playhead", () => {
    const trail = new TrailBuffer();
    expect(trail.latestDeviceTime).toBeNull();
    expect(trail.playhead).toBeNull();
    trail.push(update(1.5, 4, 1, 0.12));
    expect(trail.latestDeviceTime).toBe(1.5);
    expect(trail.playhead).toBeCloseTo(0.12 + 3 / 1000);
  });

  it("clears on demand", () => {
    const trail = new TrailBuffer();
    trail.push(update(0, 5));
    trail.clear();
    expect(trail.snapshot()).toHaveLength(0);
  });
});
