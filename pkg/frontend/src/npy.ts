import { readFileSync } from "node:fs";

/**
 * Minimal reader for the NPY binary array format (versions 1.0-3.0),
 * covering the dtypes the tss CLI actually emits plus int64 for
 * completeness. Data is copied out of the source buffer into a fresh
 * ArrayBuffer so callers can hold results without pinning file buffers
 * (and so cached arrays cannot be mutated through aliasing).
 */

export type NpyDtype = "<f4" | "<f8" | "<i8";

export interface NpyArray {
  dtype: NpyDtype;
  shape: number[];
  fortranOrder: boolean;
  data: Float32Array | Float64Array | BigInt64Array;
  /** Raw data section, byte for byte as stored in the file. */
  bytes: Uint8Array;
}

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

const ELEM_SIZE: Record<NpyDtype, number> = { "<f4": 4, "<f8": 8, "<i8": 8 };

export function parseNpy(buf: Buffer): NpyArray {
  if (buf.length < 10 || !buf.subarray(0, 6).equals(MAGIC)) {
    throw new Error("not an NPY file (bad magic)");
  }
  const major = buf[6];
  let headerLen: number;
  let headerStart: number;
  if (major === 1) {
    headerLen = buf.readUInt16LE(8);
    headerStart = 10;
  } else if (major === 2 || major === 3) {
    headerLen = buf.readUInt32LE(8);
    headerStart = 12;
  } else {
    throw new Error(`unsupported NPY version ${major}.${buf[7]}`);
  }
  const header = buf
    .subarray(headerStart, headerStart + headerLen)
    .toString("latin1");

  const descr = /'descr':\s*'([^']+)'/.exec(header)?.[1];
  const fortran = /'fortran_order':\s*(True|False)/.exec(header)?.[1];
  const shapeSrc = /'shape':\s*\(([^)]*)\)/.exec(header)?.[1];
  if (descr === undefined || fortran === undefined || shapeSrc === undefined) {
    throw new Error(`malformed NPY header: ${header.trim()}`);
  }
  if (!(descr in ELEM_SIZE)) {
    throw new Error(`unsupported NPY dtype ${descr}`);
  }
  const dtype = descr as NpyDtype;
  const shape = shapeSrc
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => {
      const n = Number(s);
      if (!Number.isInteger(n) || n < 0) {
        throw new Error(`bad NPY shape entry ${s}`);
      }
      return n;
    });

  const count = shape.reduce((a, b) => a * b, 1);
  const dataStart = headerStart + headerLen;
  const expected = count * ELEM_SIZE[dtype];
  if (buf.length - dataStart !== expected) {
    throw new Error(
      `NPY data section is ${buf.length - dataStart} bytes, expected ${expected}`
    );
  }

  // copy into a fresh, aligned ArrayBuffer (Buffers from the node pool
  // are not guaranteed 8-byte aligned for the typed-array views)
  const ab = new ArrayBuffer(expected);
  const bytes = new Uint8Array(ab);
  bytes.set(buf.subarray(dataStart));

  let data: NpyArray["data"];
  if (dtype === "<f4") data = new Float32Array(ab);
  else if (dtype === "<f8") data = new Float64Array(ab);
  else data = new BigInt64Array(ab);

  return { dtype, shape, fortranOrder: fortran === "True", data, bytes };
}

export function readNpy(path: string): NpyArray {
  return parseNpy(readFileSync(path));
}

/** Row-major element lookup. Fortran-ordered arrays are not consumed
 *  by the bridge and are rejected beyond 1-D rather than silently
 *  transposed. */
export function at(arr: NpyArray, ...idx: number[]): number {
  if (arr.fortranOrder && arr.shape.length > 1) {
    throw new Error("fortran-ordered arrays are not supported");
  }
  if (idx.length !== arr.shape.length) {
    throw new Error(
      `index rank ${idx.length} does not match array rank ${arr.shape.length}`
    );
  }
  let flat = 0;
  for (let d = 0; d < idx.length; d++) {
    if (idx[d] < 0 || idx[d] >= arr.shape[d]) {
      throw new Error(`index ${idx[d]} out of range for axis ${d}`);
    }
    flat = flat * arr.shape[d] + idx[d];
  }
  const v = arr.data[flat];
  return typeof v === "bigint" ? Number(v) : v;
}
