import { describe, expect, it } from "vitest";

import { embedScheduleSlice, embedTimestep } from "../src/embedding.js";
import type { NpyArray } from "../src/npy.js";

describe("embedTimestep", () => {
  it("gives zeros then ones at t = 0", () => {
    const emb = embedTimestep(0, 6);
    expect(Array.from(emb)).toEqual([0, 0, 0, 1, 1, 1]);
  });

  it("matches the closed form for C = 4", () => {
    // frequencies 10000^0 = 1 and 10000^(-1/2) = 0.01
    const emb = embedTimestep(1, 4);
    expect(emb[0]).toBeCloseTo(Math.sin(1), 15);
    expect(emb[1]).toBeCloseTo(Math.sin(0.01), 15);
    expect(emb[2]).toBeCloseTo(Math.cos(1), 15);
    expect(emb[3]).toBeCloseTo(Math.cos(0.01), 15);
  });

  it("uses the geometric frequency ladder", () => {
    const C = 16;
    const t = 937;
    const emb = embedTimestep(t, C);
    for (let i = 0; i < C / 2; i++) {
      const angle = t * Math.pow(10000, (-2 * i) / C);
      expect(emb[i]).toBe(Math.sin(angle));
      expect(emb[C / 2 + i]).toBe(Math.cos(angle));
    }
  });

  it("rejects odd widths and bad periods", () => {
    expect(() => embedTimestep(5, 7)).toThrow(/even/);
    expect(() => embedTimestep(5, 0)).toThrow(/even/);
    expect(() => embedTimestep(5, 4, -1)).toThrow(/maxPeriod/);
  });
});

function mapOf(shape: number[], values: number[]): NpyArray {
  return {
    dtype: "<f8",
    shape,
    fortranOrder: false,
    data: new Float64Array(values),
    bytes: new Uint8Array(new Float64Array(values).buffer.slice(0)),
  };
}

describe("embedScheduleSlice", () => {
  it("embeds each location's own timestep from the chosen slice", () => {
    // 1x2 pixels, 2 iterations per pixel
    const map = mapOf([1, 2, 2], [10, 500, 20, 900]);
    const out = embedScheduleSlice(map, 2, 4);
    expect(out.height).toBe(1);
    expect(out.width).toBe(2);
    expect(out.channels).toBe(4);
    const a = embedTimestep(500, 4);
    const b = embedTimestep(900, 4);
    expect(Array.from(out.data.subarray(0, 4))).toEqual(Array.from(a));
    expect(Array.from(out.data.subarray(4, 8))).toEqual(Array.from(b));
  });

  it("is 1-based in k and bounds-checked", () => {
    const map = mapOf([1, 1, 3], [1, 2, 3]);
    expect(embedScheduleSlice(map, 1, 2).data[1]).toBe(Math.cos(1));
    expect(() => embedScheduleSlice(map, 0, 2)).toThrow(/outside \[1, 3\]/);
    expect(() => embedScheduleSlice(map, 4, 2)).toThrow(/outside \[1, 3\]/);
  });

  it("rejects non-3D tensors", () => {
    const flat = mapOf([4], [1, 2, 3, 4]);
    expect(() => embedScheduleSlice(flat, 1, 2)).toThrow(/tensor/);
  });
});
