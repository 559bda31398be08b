/**
 * Focal-point trail: a sliding window over telemetry samples, rendered
 * as an x-y projected polyline with per-sample amplitude as opacity.
 */

import { PlaybackUpdate, WireSample } from "./wsclient.js";

export interface TrailPoint extends WireSample {
  device_time: number;
}

export class TrailBuffer {
  private points: TrailPoint[] = [];

  constructor(readonly windowSeconds = 0.25) {}

  push(update: PlaybackUpdate): void {
    for (const s of update.samples) {
      this.points.push({ ...s, device_time: update.device_time });
    }
    const cutoff = update.device_time - this.windowSeconds;
    let drop = 0;
    while (drop < this.points.length && this.points[drop]!.device_time < cutoff) {
      drop += 1;
    }
    if (drop > 0) this.points.splice(0, drop);
  }

  get latestDeviceTime(): number | null {
    return this.points.length ? this.points[this.points.length - 1]!.device_time : null;
  }

  /** Latest pattern time, for syncing the timeline playhead. */
  get playhead(): number | null {
    return this.points.length ? this.points[this.points.length - 1]!.pt : null;
  }

  snapshot(): readonly TrailPoint[] {
    return this.points;
  }

  clear(): void {
    this.points.length = 0;
  }

  /**
   * Draw onto a 2D canvas.  `scale` is pixels per millimeter; the
   * origin is the canvas center.  Samples fade with age and zero
   * amplitude is invisible.
   */
  draw(ctx: CanvasRenderingContext2D, width: number, height: number, scale: number): void {
    const pts = this.points;
    if (pts.length < 2) return;
    const newest = pts[pts.length - 1]!.device_time;
    const cx = width / 2;
    const cy = height / 2;
    for (let i = 1; i < pts.length; i++) {
      const a = pts[i - 1]!;
      const b = pts[i]!;
      const amp = Math.min(1, Math.max(0, b.amp));
      if (amp === 0) continue;
      const age = Math.min(1, (newest - b.device_time) / this.windowSeconds);
      ctx.strokeStyle = `rgba(64, 200, 255, ${(amp * (1 - 0.7 * age)).toFixed(3)})`;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(cx + a.x * scale, cy - a.y * scale);
      ctx.lineTo(cx + b.x * scale, cy - b.y * scale);
      ctx.stroke();
    }
  }
}
