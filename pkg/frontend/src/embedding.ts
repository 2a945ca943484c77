import { at, NpyArray } from "./npy.js";

/**
 * Local re-evaluation of the core's sinusoidal timestep embedding, used
 * as a cross-check against the NPY maps the CLI emits. Channel i of the
 * sin block oscillates at frequency maxPeriod^(-2i/channels); the cos
 * block mirrors it. Must agree with the core within 1e-6 (the artifact
 * is float32, this path is float64).
 */
export function embedTimestep(
  t: number,
  channels: number,
  maxPeriod = 10000
): Float64Array {
  if (channels < 2 || channels % 2 !== 0) {
    throw new Error(`embedding width must be even and >= 2, got ${channels}`);
  }
  if (maxPeriod <= 0) {
    throw new Error("maxPeriod must be positive");
  }
  const half = channels / 2;
  const out = new Float64Array(channels);
  for (let i = 0; i < half; i++) {
    const angle = t * Math.pow(maxPeriod, (-2 * i) / channels);
    out[i] = Math.sin(angle);
    out[half + i] = Math.cos(angle);
  }
  return out;
}

export interface EmbeddingMap {
  height: number;
  width: number;
  channels: number;
  /** (H, W, C) in row-major order. */
  data: Float64Array;
}

/**
 * Embed iteration k (1-based) of an (H, W, T') spatial schedule tensor.
 * Mirrors the CLI's embed subcommand: k = T' picks each pixel's largest
 * timestep, k = 1 its smallest.
 */
export function embedScheduleSlice(
  map: NpyArray,
  k: number,
  channels: number,
  maxPeriod = 10000
): EmbeddingMap {
  if (map.shape.length !== 3) {
    throw new Error(`expected an (H, W, T') tensor, got shape [${map.shape}]`);
  }
  const [height, width, tPrime] = map.shape;
  if (!Number.isInteger(k) || k < 1 || k > tPrime) {
    throw new Error(`iteration index ${k} outside [1, ${tPrime}]`);
  }
  const data = new Float64Array(height * width * channels);
  for (let i = 0; i < height; i++) {
    for (let j = 0; j < width; j++) {
      const emb = embedTimestep(at(map, i, j, k - 1), channels, maxPeriod);
      data.set(emb, (i * width + j) * channels);
    }
  }
  return { height, width, channels, data };
}
