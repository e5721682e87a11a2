/**
 * Reader for the binary wave-field format.
 *
 * Layout: 64-byte little-endian header (magic "BWKB", version u32, n_points
 * u64, x_min f64, x_max f64, epsilon f64, t f64, 16 reserved bytes), then
 * n_points interleaved (re f64, im f64) samples.
 */

import { readFileSync } from "node:fs";

export interface WaveField {
  path: string;
  epsilon: number;
  xMin: number;
  xMax: number;
  t: number;
  re: Float64Array;
  im: Float64Array;
}

export class FormatError extends Error {}

const HEADER_SIZE = 64;
const MAGIC = "BWKB";

export function readField(path: string): WaveField {
  const buf = readFileSync(path);
  if (buf.length < HEADER_SIZE) {
    throw new FormatError(`${path}: truncated header (${buf.length} bytes, need 64)`);
  }
  const magic = buf.toString("latin1", 0, 4);
  if (magic !== MAGIC) {
    throw new FormatError(`${path}: bad magic at byte 0: "${magic}"`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const version = view.getUint32(4, true);
  if (version !== 1) {
    throw new FormatError(`${path}: unsupported version ${version} at byte 4`);
  }
  const nPoints = Number(view.getBigUint64(8, true));
  const xMin = view.getFloat64(16, true);
  const xMax = view.getFloat64(24, true);
  const epsilon = view.getFloat64(32, true);
  const t = view.getFloat64(40, true);
  const expected = HEADER_SIZE + 16 * nPoints;
  if (buf.length !== expected) {
    throw new FormatError(
      `${path}: payload mismatch at byte ${Math.min(buf.length, expected)}: ` +
      `have ${buf.length} bytes, expected ${expected}`,
    );
  }
  const re = new Float64Array(nPoints);
  const im = new Float64Array(nPoints);
  for (let i = 0; i < nPoints; i++) {
    re[i] = view.getFloat64(HEADER_SIZE + 16 * i, true);
    im[i] = view.getFloat64(HEADER_SIZE + 16 * i + 8, true);
  }
  return { path, epsilon, xMin, xMax, t, re, im };
}

export function magnitude(field: WaveField): Float64Array {
  const out = new Float64Array(field.re.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = Math.hypot(field.re[i], field.im[i]);
  }
  return out;
}

export function gridOf(field: WaveField): Float64Array {
  const n = field.re.length;
  const dx = (field.xMax - field.xMin) / n;
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = field.xMin + dx * i;
  }
  return out;
}
