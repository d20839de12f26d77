/** Binary feature-file and manifest I/O.
 *
 * Layout (all integers little-endian):
 *   bytes 0..3    magic "RDAF"
 *   bytes 4..7    version u32: low bits = 1, bit 31 set iff labels present
 *   bytes 8..11   vector count u32
 *   bytes 12..15  dimension u32
 *   then          count * dim float32 values, row-major
 *   then          count label bytes, only when the labels flag is set
 */

import { readFileSync, writeFileSync } from "node:fs";

import { ConfigError, FormatError } from "./errors.js";

export const LABEL_ID = 0;
export const LABEL_OOD = 1;
export const LABEL_UNLABELED = 255;

const MAGIC = "RDAF";
const FORMAT_VERSION = 1;
const LABELS_FLAG = 0x80000000;
const HEADER_BYTES = 16;

export interface FeatureBlock {
  count: number;
  dim: number;
  /** count * dim values, row-major. */
  data: Float32Array;
  /** Optional per-vector labels: LABEL_ID, LABEL_OOD or LABEL_UNLABELED. */
  labels?: Uint8Array;
}

function checkBlock(block: FeatureBlock): void {
  if (!Number.isInteger(block.count) || block.count < 0) {
    throw new ConfigError(`count must be a non-negative integer, got ${block.count}`);
  }
  if (!Number.isInteger(block.dim) || block.dim < 1) {
    throw new ConfigError(`dim must be a positive integer, got ${block.dim}`);
  }
  if (block.data.length !== block.count * block.dim) {
    throw new ConfigError(
      `data holds ${block.data.length} values, expected ${block.count * block.dim}`,
    );
  }
  for (let i = 0; i < block.data.length; i++) {
    if (!Number.isFinite(block.data[i])) {
      throw new ConfigError(`non-finite entry in vector ${Math.floor(i / block.dim)}`);
    }
  }
  if (block.labels) {
    if (block.labels.length !== block.count) {
      throw new ConfigError(
        `labels length ${block.labels.length} does not match vector count ${block.count}`,
      );
    }
    for (const code of block.labels) {
      if (code !== LABEL_ID && code !== LABEL_OOD && code !== LABEL_UNLABELED) {
        throw new ConfigError(`labels must be 0 (ID), 1 (OOD) or 255 (unlabeled), got ${code}`);
      }
    }
  }
}

/** Serialize a block to the binary layout. */
export function encodeFeatures(block: FeatureBlock): Uint8Array {
  checkBlock(block);
  const payloadBytes = block.count * block.dim * 4;
  const labelBytes = block.labels ? block.count : 0;
  const out = new Uint8Array(HEADER_BYTES + payloadBytes + labelBytes);
  const view = new DataView(out.buffer);
  for (let i = 0; i < MAGIC.length; i++) out[i] = MAGIC.charCodeAt(i);
  view.setUint32(4, FORMAT_VERSION + (block.labels ? LABELS_FLAG : 0), true);
  view.setUint32(8, block.count, true);
  view.setUint32(12, block.dim, true);
  for (let i = 0; i < block.data.length; i++) {
    view.setFloat32(HEADER_BYTES + 4 * i, block.data[i], true);
  }
  if (block.labels) out.set(block.labels, HEADER_BYTES + payloadBytes);
  return out;
}

/** Parse and validate a binary feature block. */
export function decodeFeatures(bytes: Uint8Array, what = "feature data"): FeatureBlock {
  if (bytes.length < HEADER_BYTES) {
    throw new FormatError(`${what}: truncated header (${bytes.length} bytes)`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const magic = String.fromCharCode(bytes[0], bytes[1], bytes[2], bytes[3]);
  if (magic !== MAGIC) {
    throw new FormatError(`${what}: magic mismatch, expected "${MAGIC}", got "${magic}"`);
  }
  const version = view.getUint32(4, true);
  const count = view.getUint32(8, true);
  const dim = view.getUint32(12, true);
  const hasLabels = version >= LABELS_FLAG;
  const baseVersion = hasLabels ? version - LABELS_FLAG : version;
  if (baseVersion !== FORMAT_VERSION) {
    throw new FormatError(`${what}: unsupported format version 0x${baseVersion.toString(16)}`);
  }
  if (dim < 1) {
    throw new FormatError(`${what}: declared dimension ${dim} is invalid`);
  }
  const payloadBytes = count * dim * 4;
  const expected = HEADER_BYTES + payloadBytes + (hasLabels ? count : 0);
  if (bytes.length < expected) {
    throw new FormatError(
      `${what}: truncated payload, expected ${expected} bytes, got ${bytes.length}`,
    );
  }
  if (bytes.length > expected) {
    throw new FormatError(`${what}: ${bytes.length - expected} trailing bytes after payload`);
  }
  const data = new Float32Array(count * dim);
  for (let i = 0; i < data.length; i++) {
    data[i] = view.getFloat32(HEADER_BYTES + 4 * i, true);
    if (!Number.isFinite(data[i])) {
      throw new FormatError(`${what}: non-finite entry in vector ${Math.floor(i / dim)}`);
    }
  }
  const block: FeatureBlock = { count, dim, data };
  if (hasLabels) {
    const labels = bytes.slice(HEADER_BYTES + payloadBytes, expected);
    for (const code of labels) {
      if (code !== LABEL_ID && code !== LABEL_OOD && code !== LABEL_UNLABELED) {
        throw new FormatError(
          `${what}: labels must be 0 (ID), 1 (OOD) or 255 (unlabeled), got ${code}`,
        );
      }
    }
    block.labels = labels;
  }
  return block;
}

/** Write a block to disk; returns the number of bytes written. */
export function writeFeatures(block: FeatureBlock, path: string): number {
  const bytes = encodeFeatures(block);
  writeFileSync(path, bytes);
  return bytes.length;
}

export function readFeatures(path: string): FeatureBlock {
  return decodeFeatures(new Uint8Array(readFileSync(path)), path);
}

export interface ManifestEntry {
  path: string;
  split: string;
  source: string;
  count: number;
  dim: number;
}

/** Add one entry to a manifest file (a JSON list), creating it if absent.
 * An existing entry for the same split is replaced. */
export function appendManifestEntry(manifestPath: string, entry: ManifestEntry): void {
  let entries: ManifestEntry[] = [];
  let text: string | null = null;
  try {
    text = readFileSync(manifestPath, "utf-8");
  } catch {
    // no manifest yet
  }
  if (text !== null) {
    let doc: unknown;
    try {
      doc = JSON.parse(text);
    } catch (exc) {
      throw new FormatError(`${manifestPath}: invalid manifest JSON (${exc})`);
    }
    if (!Array.isArray(doc)) {
      throw new FormatError(`${manifestPath}: manifest must be a JSON list`);
    }
    entries = doc as ManifestEntry[];
  }
  entries = entries.filter((e) => e.split !== entry.split);
  entries.push(entry);
  writeFileSync(manifestPath, JSON.stringify(entries, null, 2) + "\n");
}
