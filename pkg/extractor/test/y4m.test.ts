import { describe, expect, it } from "vitest";

import { FormatError } from "../src/errors.js";
import { decodeY4m } from "../src/y4m.js";
import { expectedRgb, grayRamp, makeY4m, type YuvFill } from "./helpers.js";

const RED: YuvFill = { y: 81, u: 90, v: 240 };
const WHITE: YuvFill = { y: 235, u: 128, v: 128 };
const BLACK: YuvFill = { y: 16, u: 128, v: 128 };

function everyPixelIs(frame: Uint8Array, rgb: [number, number, number]): boolean {
  for (let i = 0; i < frame.length; i += 3) {
    if (frame[i] !== rgb[0] || frame[i + 1] !== rgb[1] || frame[i + 2] !== rgb[2]) {
      return false;
    }
  }
  return true;
}

describe("decodeY4m", () => {
  it("reads dimensions and frame count", () => {
    const video = decodeY4m(makeY4m(8, 4, grayRamp(3)));
    expect(video.width).toBe(8);
    expect(video.height).toBe(4);
    expect(video.frames).toHaveLength(3);
    expect(video.frames[0]).toHaveLength(3 * 8 * 4);
  });

  it("converts primary colors through the BT.601 matrix", () => {
    // hand-checked: (81, 90, 240) -> (254, 0, 0)
    expect(expectedRgb(RED)).toEqual([254, 0, 0]);
    const video = decodeY4m(makeY4m(4, 4, [RED, WHITE, BLACK]));
    expect(everyPixelIs(video.frames[0], [254, 0, 0])).toBe(true);
    expect(everyPixelIs(video.frames[1], [255, 255, 255])).toBe(true);
    expect(everyPixelIs(video.frames[2], [0, 0, 0])).toBe(true);
  });

  it.each(["C420", "C420jpeg", "C420mpeg2", "C422", "C444"])(
    "decodes %s chroma",
    (colorspace) => {
      const video = decodeY4m(makeY4m(4, 4, [RED], colorspace));
      expect(everyPixelIs(video.frames[0], expectedRgb(RED))).toBe(true);
    },
  );

  it("decodes monochrome streams as gray", () => {
    const video = decodeY4m(makeY4m(4, 2, [{ y: 128, u: 0, v: 0 }], "Cmono"));
    expect(everyPixelIs(video.frames[0], expectedRgb({ y: 128, u: 128, v: 128 }))).toBe(true);
  });

  it("defaults to 4:2:0 when the header names no colorspace", () => {
    const video = decodeY4m(makeY4m(6, 4, grayRamp(2), null));
    expect(video.frames).toHaveLength(2);
  });

  it("accepts a headers-only stream as zero frames", () => {
    expect(decodeY4m(makeY4m(4, 4, [])).frames).toHaveLength(0);
  });

  it("rejects a non-y4m stream", () => {
    const bytes = new Uint8Array(Buffer.from("RIFF....WEBP\n"));
    expect(() => decodeY4m(bytes)).toThrow(FormatError);
    expect(() => decodeY4m(bytes)).toThrow(/not a YUV4MPEG2 stream/);
  });

  it("rejects unsupported colorspaces", () => {
    expect(() => decodeY4m(makeY4m(4, 4, [], "C420p10"))).toThrow(/unsupported colorspace C420p10/);
  });

  it("rejects a header without dimensions", () => {
    const bytes = new Uint8Array(Buffer.from("YUV4MPEG2 F30:1\nFRAME\n"));
    expect(() => decodeY4m(bytes)).toThrow(/lacks valid W and H/);
  });

  it("rejects odd dimensions under 4:2:0 subsampling", () => {
    const bytes = new Uint8Array(Buffer.from("YUV4MPEG2 W5 H4 C420\n"));
    expect(() => decodeY4m(bytes)).toThrow(/not divisible by the chroma subsampling/);
  });

  it("rejects a truncated frame", () => {
    const whole = makeY4m(4, 4, grayRamp(2));
    expect(() => decodeY4m(whole.subarray(0, whole.length - 5))).toThrow(
      /truncated frame 1: expected 24 plane bytes, got 19/,
    );
  });

  it("rejects a corrupted frame marker", () => {
    const bytes = makeY4m(4, 4, grayRamp(1));
    const marker = Buffer.from(bytes).indexOf("FRAME");
    bytes[marker] = "G".charCodeAt(0);
    expect(() => decodeY4m(bytes)).toThrow(/bad frame 0 marker/);
  });
});
