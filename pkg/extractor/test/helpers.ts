/** Shared test fixtures: synthesized .y4m streams and clips. */

import type { Clip } from "../src/clips.js";

export interface YuvFill {
  y: number;
  u: number;
  v: number;
}

/** Build a YUV4MPEG2 stream of constant-color frames. */
export function makeY4m(
  width: number,
  height: number,
  frames: YuvFill[],
  colorspace: string | null = "C420",
): Uint8Array {
  const tag = colorspace === null ? "" : ` ${colorspace}`;
  const header = Buffer.from(`YUV4MPEG2 W${width} H${height} F30:1 Ip A1:1${tag}\n`, "latin1");
  const cs = colorspace ?? "C420";
  const shiftX = cs.startsWith("C420") ? 1 : cs === "C422" ? 1 : 0;
  const shiftY = cs.startsWith("C420") ? 1 : 0;
  const mono = cs === "Cmono";
  const lumaSize = width * height;
  const chromaSize = mono ? 0 : (width >> shiftX) * (height >> shiftY);
  const parts: Buffer[] = [header];
  for (const fill of frames) {
    parts.push(Buffer.from("FRAME\n", "latin1"));
    parts.push(Buffer.alloc(lumaSize, fill.y));
    if (!mono) {
      parts.push(Buffer.alloc(chromaSize, fill.u));
      parts.push(Buffer.alloc(chromaSize, fill.v));
    }
  }
  return new Uint8Array(Buffer.concat(parts));
}

/** n frames of increasing brightness: frame i is the constant Y=16+i. */
export function grayRamp(n: number): YuvFill[] {
  return Array.from({ length: n }, (_, i) => ({ y: 16 + i, u: 128, v: 128 }));
}

/** The BT.601 limited-range conversion used by the decoder, for oracles. */
export function expectedRgb(fill: YuvFill): [number, number, number] {
  const clamp = (x: number) => (x < 0 ? 0 : x > 255 ? 255 : Math.round(x));
  const c = 1.164383 * (fill.y - 16);
  const d = fill.u - 128;
  const e = fill.v - 128;
  return [
    clamp(c + 1.596027 * e),
    clamp(c - 0.391762 * d - 0.812968 * e),
    clamp(c + 2.017232 * d),
  ];
}

/** A deterministic synthetic clip for backbone tests. */
export function patternClip(frames: number, size: number, phase = 0): Clip {
  const data = new Float32Array(frames * 3 * size * size);
  for (let i = 0; i < data.length; i++) {
    data[i] = (Math.sin(0.37 * i + phase) + 1) / 2;
  }
  return { frames, height: size, width: size, data };
}
