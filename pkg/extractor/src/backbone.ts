/** Frozen video backbones that turn a clip into one feature vector.
 *
 * Pretrained model families are registered by name but their weights are
 * not downloadable in every environment; requesting one without a
 * provisioned weight source raises WeightsUnavailableError. The built-in
 * `seeded-projection` backbone needs no downloads: it pools each clip into
 * spatial-grid color statistics plus temporal differences and applies a
 * fixed seeded random projection, giving a deterministic embedding that
 * exercises the full pipeline.
 */

import { ConfigError, WeightsUnavailableError } from "./errors.js";
import type { Clip } from "./clips.js";

export interface BackboneChoice {
  name: string;
  /** Frozen pretrained weight identifier, e.g. "kinetics400" or "builtin:7". */
  weights: string;
  /** Declared feature dimension; must match what the backbone produces. */
  outputDim: number;
}

export interface Backbone {
  name: string;
  weights: string;
  outputDim: number;
  embed(clip: Clip): Float32Array;
}

export const SEEDED_PROJECTION = "seeded-projection";
export const SEEDED_PROJECTION_DIM = 32;

/** Downloadable model families and their native embedding widths. */
const PRETRAINED_DIMS: Record<string, number> = {
  r3d_18: 512,
  r2plus1d_18: 512,
  videomae_base: 768,
  xclip_base: 512,
};

export function knownBackbones(): string[] {
  return [SEEDED_PROJECTION, ...Object.keys(PRETRAINED_DIMS)].sort();
}

export function nativeDim(name: string): number {
  if (name === SEEDED_PROJECTION) return SEEDED_PROJECTION_DIM;
  const dim = PRETRAINED_DIMS[name];
  if (dim === undefined) {
    throw new ConfigError(`unknown backbone ${name}; known: ${knownBackbones().join(", ")}`);
  }
  return dim;
}

export function defaultWeights(name: string): string {
  return name === SEEDED_PROJECTION ? "builtin:0" : "kinetics400";
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Standard normals from Box-Muller over the seeded uniform stream. */
function seededNormals(seed: number, n: number): Float64Array {
  const uniform = mulberry32(seed);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i += 2) {
    const u1 = 1 - uniform(); // (0, 1]: keeps the log finite
    const u2 = uniform();
    const radius = Math.sqrt(-2 * Math.log(u1));
    out[i] = radius * Math.cos(2 * Math.PI * u2);
    if (i + 1 < n) out[i + 1] = radius * Math.sin(2 * Math.PI * u2);
  }
  return out;
}

const GRID = 4;
const DESCRIPTOR_DIM = 2 * 3 * GRID * GRID;

/** Per-channel 4x4 grid means, averaged over frames, plus the mean
 * absolute frame-to-frame change of each cell. */
function clipDescriptor(clip: Clip): Float64Array {
  const cells = 3 * GRID * GRID;
  const planeSize = clip.height * clip.width;
  const perFrame = new Float64Array(clip.frames * cells);
  for (let f = 0; f < clip.frames; f++) {
    for (let channel = 0; channel < 3; channel++) {
      const base = (f * 3 + channel) * planeSize;
      for (let gy = 0; gy < GRID; gy++) {
        const y0 = Math.floor((gy * clip.height) / GRID);
        const y1 = Math.floor(((gy + 1) * clip.height) / GRID);
        for (let gx = 0; gx < GRID; gx++) {
          const x0 = Math.floor((gx * clip.width) / GRID);
          const x1 = Math.floor(((gx + 1) * clip.width) / GRID);
          let sum = 0;
          for (let y = y0; y < y1; y++) {
            for (let x = x0; x < x1; x++) {
              sum += clip.data[base + y * clip.width + x];
            }
          }
          perFrame[f * cells + (channel * GRID + gy) * GRID + gx] =
            sum / ((y1 - y0) * (x1 - x0));
        }
      }
    }
  }
  const descriptor = new Float64Array(DESCRIPTOR_DIM);
  for (let cell = 0; cell < cells; cell++) {
    let mean = 0;
    for (let f = 0; f < clip.frames; f++) mean += perFrame[f * cells + cell];
    descriptor[cell] = mean / clip.frames;
    let motion = 0;
    for (let f = 1; f < clip.frames; f++) {
      motion += Math.abs(perFrame[f * cells + cell] - perFrame[(f - 1) * cells + cell]);
    }
    descriptor[cells + cell] = clip.frames > 1 ? motion / (clip.frames - 1) : 0;
  }
  return descriptor;
}

function seededProjection(weights: string): Backbone {
  const match = /^builtin:(\d+)$/.exec(weights);
  if (!match) {
    throw new ConfigError(
      `seeded-projection weights must look like "builtin:<seed>", got "${weights}"`,
    );
  }
  const seed = Number(match[1]);
  const matrix = seededNormals(seed, SEEDED_PROJECTION_DIM * DESCRIPTOR_DIM);
  const scale = 1 / Math.sqrt(DESCRIPTOR_DIM);
  return {
    name: SEEDED_PROJECTION,
    weights,
    outputDim: SEEDED_PROJECTION_DIM,
    embed(clip: Clip): Float32Array {
      const descriptor = clipDescriptor(clip);
      const out = new Float32Array(SEEDED_PROJECTION_DIM);
      for (let row = 0; row < SEEDED_PROJECTION_DIM; row++) {
        let sum = 0;
        for (let col = 0; col < DESCRIPTOR_DIM; col++) {
          sum += matrix[row * DESCRIPTOR_DIM + col] * descriptor[col];
        }
        out[row] = sum * scale;
      }
      return out;
    },
  };
}

/** Resolve a backbone choice to a ready-to-use frozen backbone. */
export function loadBackbone(choice: Pick<BackboneChoice, "name" | "weights">): Backbone {
  if (choice.name === SEEDED_PROJECTION) {
    return seededProjection(choice.weights);
  }
  if (choice.name in PRETRAINED_DIMS) {
    throw new WeightsUnavailableError(
      `no weight source for ${choice.name} ("${choice.weights}") in this ` +
        `environment; frozen pretrained weights must be provisioned offline`,
    );
  }
  throw new ConfigError(
    `unknown backbone ${choice.name}; known: ${knownBackbones().join(", ")}`,
  );
}
