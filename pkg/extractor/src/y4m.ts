/** Decoder for uncompressed YUV4MPEG2 (.y4m) video streams.
 *
 * The format is a plain-text stream header (`YUV4MPEG2 W.. H.. ...\n`)
 * followed by frames, each a `FRAME...\n` marker plus planar YUV data.
 * Frames decode to interleaved 8-bit RGB via the BT.601 limited-range
 * matrix; subsampled chroma is upsampled nearest-neighbor.
 */

import { FormatError } from "./errors.js";

export interface Video {
  width: number;
  height: number;
  /** One interleaved RGB buffer (3 * width * height bytes) per frame. */
  frames: Uint8Array[];
}

interface Colorspace {
  /** log2 horizontal / vertical chroma subsampling factors */
  shiftX: number;
  shiftY: number;
  mono: boolean;
}

const COLORSPACES: Record<string, Colorspace> = {
  C420: { shiftX: 1, shiftY: 1, mono: false },
  C420jpeg: { shiftX: 1, shiftY: 1, mono: false },
  C420mpeg2: { shiftX: 1, shiftY: 1, mono: false },
  C420paldv: { shiftX: 1, shiftY: 1, mono: false },
  C422: { shiftX: 1, shiftY: 0, mono: false },
  C444: { shiftX: 0, shiftY: 0, mono: false },
  Cmono: { shiftX: 0, shiftY: 0, mono: true },
};

const STREAM_MAGIC = "YUV4MPEG2";
const NEWLINE = 0x0a;

function readLine(bytes: Uint8Array, start: number, what: string): { text: string; next: number } {
  const end = bytes.indexOf(NEWLINE, start);
  if (end < 0) {
    throw new FormatError(`unterminated ${what} at byte ${start}`);
  }
  return { text: Buffer.from(bytes.subarray(start, end)).toString("latin1"), next: end + 1 };
}

function clamp8(v: number): number {
  return v < 0 ? 0 : v > 255 ? 255 : Math.round(v);
}

function yuvToRgb(
  y: Uint8Array,
  u: Uint8Array | null,
  v: Uint8Array | null,
  width: number,
  height: number,
  cs: Colorspace,
): Uint8Array {
  const rgb = new Uint8Array(3 * width * height);
  const chromaWidth = width >> cs.shiftX;
  for (let row = 0; row < height; row++) {
    const chromaRow = row >> cs.shiftY;
    for (let col = 0; col < width; col++) {
      const c = 1.164383 * (y[row * width + col] - 16);
      let d = 0;
      let e = 0;
      if (!cs.mono) {
        const ci = chromaRow * chromaWidth + (col >> cs.shiftX);
        d = u![ci] - 128;
        e = v![ci] - 128;
      }
      const o = 3 * (row * width + col);
      rgb[o] = clamp8(c + 1.596027 * e);
      rgb[o + 1] = clamp8(c - 0.391762 * d - 0.812968 * e);
      rgb[o + 2] = clamp8(c + 2.017232 * d);
    }
  }
  return rgb;
}

/** Parse a complete .y4m byte stream into RGB frames. */
export function decodeY4m(bytes: Uint8Array): Video {
  const header = readLine(bytes, 0, "stream header");
  const fields = header.text.split(" ");
  if (fields[0] !== STREAM_MAGIC) {
    throw new FormatError("not a YUV4MPEG2 stream");
  }
  let width = 0;
  let height = 0;
  let cs = COLORSPACES.C420;
  for (const field of fields.slice(1)) {
    if (field === "") continue;
    const tag = field[0];
    const value = field.slice(1);
    if (tag === "W") {
      width = Number(value);
    } else if (tag === "H") {
      height = Number(value);
    } else if (tag === "C") {
      const named = COLORSPACES[field];
      if (!named) {
        throw new FormatError(`unsupported colorspace ${field}`);
      }
      cs = named;
    }
    // F (frame rate), I (interlacing), A (aspect), X (comments) do not
    // affect decoding and are accepted unexamined
  }
  if (!Number.isInteger(width) || width < 1 || !Number.isInteger(height) || height < 1) {
    throw new FormatError(`stream header lacks valid W and H: ${header.text.trim()}`);
  }
  if (!cs.mono && ((width >> cs.shiftX) << cs.shiftX !== width || (height >> cs.shiftY) << cs.shiftY !== height)) {
    throw new FormatError(
      `frame size ${width}x${height} is not divisible by the chroma subsampling`,
    );
  }

  const lumaSize = width * height;
  const chromaSize = cs.mono ? 0 : (width >> cs.shiftX) * (height >> cs.shiftY);
  const frames: Uint8Array[] = [];
  let offset = header.next;
  while (offset < bytes.length) {
    const marker = readLine(bytes, offset, `frame ${frames.length} marker`);
    if (!marker.text.startsWith("FRAME")) {
      throw new FormatError(`bad frame ${frames.length} marker at byte ${offset}`);
    }
    const need = lumaSize + 2 * chromaSize;
    if (marker.next + need > bytes.length) {
      throw new FormatError(
        `truncated frame ${frames.length}: expected ${need} plane bytes, ` +
          `got ${bytes.length - marker.next}`,
      );
    }
    const y = bytes.subarray(marker.next, marker.next + lumaSize);
    const u = cs.mono
      ? null
      : bytes.subarray(marker.next + lumaSize, marker.next + lumaSize + chromaSize);
    const v = cs.mono
      ? null
      : bytes.subarray(marker.next + lumaSize + chromaSize, marker.next + need);
    frames.push(yuvToRgb(y, u, v, width, height, cs));
    offset = marker.next + need;
  }
  return { width, height, frames };
}
