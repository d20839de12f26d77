/** Slicing decoded video into fixed-length clips of resized frames. */

import { ConfigError } from "./errors.js";
import type { Video } from "./y4m.js";

export interface Roi {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface ClipSpec {
  /** Consecutive frames per clip; leftover frames are dropped. */
  framesPerClip: number;
  height: number;
  width: number;
  /** Optional crop rectangle applied before resizing. */
  roi?: Roi;
}

export function defaultClipSpec(): ClipSpec {
  return { framesPerClip: 16, height: 224, width: 224 };
}

/** A clip tensor: frames x 3 channels x height x width, values in [0, 1]. */
export interface Clip {
  frames: number;
  height: number;
  width: number;
  data: Float32Array;
}

function checkSpec(spec: ClipSpec, video: Video): void {
  for (const [name, value] of [
    ["framesPerClip", spec.framesPerClip],
    ["height", spec.height],
    ["width", spec.width],
  ] as const) {
    if (!Number.isInteger(value) || value < 1) {
      throw new ConfigError(`${name} must be a positive integer, got ${value}`);
    }
  }
  const roi = spec.roi;
  if (roi) {
    const ints = Number.isInteger(roi.x) && Number.isInteger(roi.y) &&
      Number.isInteger(roi.width) && Number.isInteger(roi.height);
    if (!ints || roi.width < 1 || roi.height < 1 || roi.x < 0 || roi.y < 0 ||
      roi.x + roi.width > video.width || roi.y + roi.height > video.height) {
      throw new ConfigError(
        `roi ${roi.x},${roi.y},${roi.width},${roi.height} does not fit in ` +
          `a ${video.width}x${video.height} frame`,
      );
    }
  }
}

/** Bilinear-resize one channel of an interleaved RGB frame into `out`. */
function resizeChannel(
  rgb: Uint8Array,
  frameWidth: number,
  roi: Roi,
  channel: number,
  out: Float32Array,
  outOffset: number,
  outHeight: number,
  outWidth: number,
): void {
  const scaleX = roi.width / outWidth;
  const scaleY = roi.height / outHeight;
  for (let oy = 0; oy < outHeight; oy++) {
    let sy = (oy + 0.5) * scaleY - 0.5;
    if (sy < 0) sy = 0;
    if (sy > roi.height - 1) sy = roi.height - 1;
    const y0 = Math.floor(sy);
    const y1 = Math.min(y0 + 1, roi.height - 1);
    const fy = sy - y0;
    for (let ox = 0; ox < outWidth; ox++) {
      let sx = (ox + 0.5) * scaleX - 0.5;
      if (sx < 0) sx = 0;
      if (sx > roi.width - 1) sx = roi.width - 1;
      const x0 = Math.floor(sx);
      const x1 = Math.min(x0 + 1, roi.width - 1);
      const fx = sx - x0;
      const at = (yy: number, xx: number) =>
        rgb[3 * ((roi.y + yy) * frameWidth + roi.x + xx) + channel];
      const top = at(y0, x0) * (1 - fx) + at(y0, x1) * fx;
      const bottom = at(y1, x0) * (1 - fx) + at(y1, x1) * fx;
      out[outOffset + oy * outWidth + ox] = (top * (1 - fy) + bottom * fy) / 255;
    }
  }
}

/** Group a video into floor(F / framesPerClip) non-overlapping clips,
 * cropping each frame to the ROI (when given) and resizing to the spec's
 * height x width. A video shorter than one clip yields none, with a
 * warning. */
export function sliceClips(video: Video, spec: ClipSpec): Clip[] {
  checkSpec(spec, video);
  const k = spec.framesPerClip;
  const total = video.frames.length;
  const count = Math.floor(total / k);
  if (count === 0) {
    console.warn(
      `video has ${total} frame${total === 1 ? "" : "s"}, fewer than the ` +
        `${k} one clip needs; no clips produced`,
    );
    return [];
  }
  const roi = spec.roi ?? { x: 0, y: 0, width: video.width, height: video.height };
  const planeSize = spec.height * spec.width;
  const clips: Clip[] = [];
  for (let c = 0; c < count; c++) {
    const data = new Float32Array(k * 3 * planeSize);
    for (let f = 0; f < k; f++) {
      const rgb = video.frames[c * k + f];
      for (let channel = 0; channel < 3; channel++) {
        resizeChannel(
          rgb,
          video.width,
          roi,
          channel,
          data,
          (f * 3 + channel) * planeSize,
          spec.height,
          spec.width,
        );
      }
    }
    clips.push({ frames: k, height: spec.height, width: spec.width, data });
  }
  return clips;
}
