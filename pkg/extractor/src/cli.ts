#!/usr/bin/env node
/** Command-line entry: extract features from a directory of .y4m videos.
 *
 * usage: raad-extract extract --video-dir DIR --out FILE
 *            [--backbone NAME] [--weights ID] [--dim L]
 *            [--clip-len K] [--size S] [--roi X,Y,W,H]
 *            [--split NAME] [--manifest FILE]
 *
 * Exit codes: 0 success, 1 bad configuration or dimensions, 2 I/O, format,
 * or missing-weights problems.
 */

import { mkdirSync, readdirSync, readFileSync } from "node:fs";
import { dirname, join, relative } from "node:path";
import { pathToFileURL } from "node:url";

import { defaultWeights, nativeDim, SEEDED_PROJECTION } from "./backbone.js";
import { sliceClips, type Clip, type ClipSpec, type Roi } from "./clips.js";
import {
  ConfigError,
  DimensionError,
  FormatError,
  WeightsUnavailableError,
} from "./errors.js";
import { extractFeatures } from "./extract.js";
import { appendManifestEntry, writeFeatures } from "./features.js";
import { decodeY4m } from "./y4m.js";

export const EXIT_OK = 0;
export const EXIT_CONFIG = 1;
export const EXIT_IO = 2;

interface Options {
  videoDir: string;
  out: string;
  backbone: string;
  weights: string;
  dim: number;
  clipLen: number;
  size: number;
  roi?: Roi;
  split: string;
  manifest?: string;
}

const FLAGS_WITH_VALUE = new Set([
  "--video-dir", "--out", "--backbone", "--weights", "--dim",
  "--clip-len", "--size", "--roi", "--split", "--manifest",
]);

function parsePositiveInt(flag: string, raw: string): number {
  const value = Number(raw);
  if (!Number.isInteger(value) || value < 1) {
    throw new ConfigError(`${flag} must be a positive integer, got ${raw}`);
  }
  return value;
}

function parseRoi(raw: string): Roi {
  const parts = raw.split(",").map((p) => Number(p));
  if (parts.length !== 4 || parts.some((p) => !Number.isInteger(p))) {
    throw new ConfigError(`--roi must be four integers "x,y,width,height", got "${raw}"`);
  }
  return { x: parts[0], y: parts[1], width: parts[2], height: parts[3] };
}

function parseArgs(argv: string[]): Options {
  if (argv[0] !== "extract") {
    throw new ConfigError(`expected the "extract" command, got "${argv[0] ?? ""}"`);
  }
  const raw = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    if (!FLAGS_WITH_VALUE.has(flag)) {
      throw new ConfigError(`unknown flag ${flag}`);
    }
    if (i + 1 >= argv.length) {
      throw new ConfigError(`${flag} needs a value`);
    }
    raw.set(flag, argv[i + 1]);
  }
  for (const required of ["--video-dir", "--out"]) {
    if (!raw.has(required)) {
      throw new ConfigError(`${required} is required`);
    }
  }
  const backbone = raw.get("--backbone") ?? SEEDED_PROJECTION;
  const options: Options = {
    videoDir: raw.get("--video-dir")!,
    out: raw.get("--out")!,
    backbone,
    weights: raw.get("--weights") ?? defaultWeights(backbone),
    dim: raw.has("--dim")
      ? parsePositiveInt("--dim", raw.get("--dim")!)
      : nativeDim(backbone),
    clipLen: raw.has("--clip-len") ? parsePositiveInt("--clip-len", raw.get("--clip-len")!) : 16,
    size: raw.has("--size") ? parsePositiveInt("--size", raw.get("--size")!) : 224,
    split: raw.get("--split") ?? "train",
    manifest: raw.get("--manifest"),
  };
  if (raw.has("--roi")) options.roi = parseRoi(raw.get("--roi")!);
  return options;
}

function collectClips(options: Options): { clips: Clip[]; videos: number } {
  let names: string[];
  try {
    names = readdirSync(options.videoDir).filter((n) => n.endsWith(".y4m")).sort();
  } catch (exc) {
    throw new ConfigError(`cannot list --video-dir ${options.videoDir}: ${exc}`);
  }
  if (names.length === 0) {
    throw new ConfigError(`no .y4m videos in ${options.videoDir}`);
  }
  const spec: ClipSpec = {
    framesPerClip: options.clipLen,
    height: options.size,
    width: options.size,
    roi: options.roi,
  };
  const clips: Clip[] = [];
  for (const name of names) {
    const path = join(options.videoDir, name);
    const video = decodeY4m(new Uint8Array(readFileSync(path)));
    for (const clip of sliceClips(video, spec)) clips.push(clip);
  }
  return { clips, videos: names.length };
}

export function main(argv: string[]): number {
  try {
    const options = parseArgs(argv);
    const { clips, videos } = collectClips(options);
    const block = extractFeatures(clips, {
      name: options.backbone,
      weights: options.weights,
      outputDim: options.dim,
    });
    mkdirSync(dirname(options.out), { recursive: true });
    const bytes = writeFeatures(block, options.out);
    console.log(
      `wrote ${options.out} (${bytes} bytes: ${block.count} clips x ` +
        `${block.dim} dims from ${videos} videos)`,
    );
    if (options.manifest) {
      mkdirSync(dirname(options.manifest), { recursive: true });
      appendManifestEntry(options.manifest, {
        // stored relative to the manifest so the pair relocates together
        path: relative(dirname(options.manifest), options.out) || options.out,
        split: options.split,
        source: `extractor ${options.backbone} ${options.weights} ` +
          `clip=${options.clipLen}x${options.size}x${options.size}`,
        count: block.count,
        dim: block.dim,
      });
      console.log(`updated ${options.manifest} (split ${options.split})`);
    }
    return EXIT_OK;
  } catch (exc) {
    if (exc instanceof ConfigError || exc instanceof DimensionError) {
      console.error(`error: ${exc.message}`);
      return EXIT_CONFIG;
    }
    if (
      exc instanceof FormatError ||
      exc instanceof WeightsUnavailableError ||
      (exc instanceof Error && "code" in exc)
    ) {
      console.error(`error: ${exc.message}`);
      return EXIT_IO;
    }
    throw exc;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
