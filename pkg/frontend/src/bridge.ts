import { execFileSync } from "node:child_process";
import { createHash } from "node:crypto";
import {
  existsSync,
  mkdtempSync,
  readFileSync,
  rmSync,
} from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { embedScheduleSlice, EmbeddingMap } from "./embedding.js";
import { NpyArray, readNpy } from "./npy.js";

/**
 * Client for the tss command line tool. Every request is one subprocess
 * plus a directory of artifacts; results are parsed from the emitted
 * JSON/NPY files and cached by a hash of the request (including input
 * file contents), so repeated calls return byte-identical arrays
 * without spawning again. The bridge contains no schedule math of its
 * own; the only local numerics are the embedding cross-check path.
 *
 * Sessions own a scratch directory and are not safe to share across
 * threads or workers.
 */

export type ScheduleKind =
  | "uniform"
  | "polynomial"
  | "trigonometric"
  | "exponential";

export interface ScheduleParams {
  steps: number;
  T?: number;
  kind?: ScheduleKind;
  preset?: string;
  n?: number;
  aFrac?: number;
  expSlope?: number;
}

export interface ScheduleResult {
  /** Quantized timesteps, ascending. */
  steps: number[];
  stepsReal: number[];
  T: number;
  TPrime: number;
  kind: string;
  n: number;
  aFrac: number;
}

export interface Bounds {
  nMin: number;
  nMax: number;
  aMin: number;
  aMax: number;
}

export interface SpatialMapParams {
  steps: number;
  T?: number;
  kind?: ScheduleKind;
  preset?: string;
  bounds?: Bounds;
  gridWidth?: number;
  gridHeight?: number;
  window?: number;
  sigma?: number;
}

export interface SpatialMapArtifact {
  /** (H, W, T') tensor, float32 exactly as the core wrote it. */
  array: NpyArray;
  npyPath: string;
  sidecarPath: string;
  sidecar: Record<string, unknown>;
}

export class BridgeError extends Error {
  constructor(
    message: string,
    readonly exitCode: number | null,
    readonly stderr: string
  ) {
    super(message);
    this.name = "BridgeError";
  }
}

interface ExecError extends Error {
  status?: number | null;
  stderr?: Buffer | string;
  code?: string;
}

const VERSION_RE = /(\d+\.\d+\.\d+)/;

export interface BridgeOptions {
  /** Core executable; defaults to $TSS_BIN, then "tss" on PATH. */
  bin?: string;
  /** Scratch directory; defaults to a fresh temp dir owned by the session. */
  workdir?: string;
}

export class BridgeSession {
  readonly bin: string;
  readonly workdir: string;
  readonly coreVersion: string;
  /** Subprocesses spawned so far; cache hits do not increase it. */
  subprocessCount = 0;

  private readonly cache = new Map<string, unknown>();
  private readonly ownsWorkdir: boolean;
  private requestSeq = 0;

  constructor(opts: BridgeOptions = {}) {
    this.bin = opts.bin ?? process.env.TSS_BIN ?? "tss";
    this.ownsWorkdir = opts.workdir === undefined;
    this.workdir =
      opts.workdir ?? mkdtempSync(join(tmpdir(), "tss-bridge-"));
    const banner = this.exec(["--version"]);
    const version = VERSION_RE.exec(banner)?.[1];
    if (version === undefined) {
      throw new BridgeError(
        `'${this.bin} --version' did not report a version: ${banner.trim()}`,
        0,
        ""
      );
    }
    this.coreVersion = version;
  }

  /** Remove the session's scratch directory (only if the session made it). */
  close(): void {
    this.cache.clear();
    if (this.ownsWorkdir) {
      rmSync(this.workdir, { recursive: true, force: true });
    }
  }

  requestSchedule(params: ScheduleParams): ScheduleResult {
    const args = ["schedule", "--steps", String(params.steps)];
    if (params.T !== undefined) args.push("--T", String(params.T));
    if (params.kind !== undefined) args.push("--kind", params.kind);
    if (params.preset !== undefined) args.push("--preset", params.preset);
    if (params.n !== undefined) args.push("--n", String(params.n));
    if (params.aFrac !== undefined) args.push("--a-frac", String(params.aFrac));
    if (params.expSlope !== undefined) {
      args.push("--exp-slope", String(params.expSlope));
    }

    return this.cached(this.requestKey("schedule", params), args, (dir) => {
      const payload = JSON.parse(
        readFileSync(join(dir, "schedule.json"), "utf-8")
      );
      const steps: number[] = payload.steps_int;
      for (let i = 1; i < steps.length; i++) {
        if (steps[i] < steps[i - 1]) {
          throw new BridgeError(
            `core returned a non-ascending schedule (kind ${payload.kind}); ` +
              "the bridge only hands out ascending step lists",
            0,
            ""
          );
        }
      }
      return {
        steps,
        stepsReal: payload.steps_real,
        T: payload.T,
        TPrime: payload.T_prime,
        kind: payload.kind,
        n: payload.n,
        aFrac: payload.a_frac,
      };
    });
  }

  requestSpatialMap(
    imagePath: string,
    params: SpatialMapParams
  ): SpatialMapArtifact {
    const args = ["spatial-schedule", imagePath, "--steps", String(params.steps)];
    if (params.T !== undefined) args.push("--T", String(params.T));
    if (params.kind !== undefined) args.push("--kind", params.kind);
    if (params.preset !== undefined) args.push("--preset", params.preset);
    if (params.bounds !== undefined) {
      const b = params.bounds;
      args.push("--n-min", String(b.nMin), "--n-max", String(b.nMax));
      args.push("--a-min", String(b.aMin), "--a-max", String(b.aMax));
    }
    if (params.gridWidth !== undefined) {
      args.push("--grid-w", String(params.gridWidth));
    }
    if (params.gridHeight !== undefined) {
      args.push("--grid-h", String(params.gridHeight));
    }
    if (params.window !== undefined) args.push("--window", String(params.window));
    if (params.sigma !== undefined) args.push("--sigma", String(params.sigma));

    // key on image bytes, not the path: same file content, same artifact
    const imageHash = existsSync(imagePath)
      ? sha256(readFileSync(imagePath))
      : `missing:${imagePath}`;
    const key = this.requestKey("spatial", { ...params, imageHash });

    return this.cached(key, args, (dir) => {
      const npyPath = join(dir, "spatial_schedule.npy");
      const sidecarPath = join(dir, "spatial_schedule.json");
      return {
        array: readNpy(npyPath),
        npyPath,
        sidecarPath,
        sidecar: JSON.parse(readFileSync(sidecarPath, "utf-8")),
      };
    });
  }

  /**
   * Embedding map for iteration k of a spatial schedule artifact, shape
   * (H, W, C), computed by the core. Accepts the artifact from
   * requestSpatialMap or a path to a spatial_schedule.npy that has its
   * JSON sidecar next to it.
   */
  spatialEmbeddingFor(
    map: SpatialMapArtifact | string,
    k: number,
    channels: number,
    maxPeriod?: number
  ): NpyArray {
    const npyPath = typeof map === "string" ? map : map.npyPath;
    const args = ["embed", npyPath, "--k", String(k), "--channels", String(channels)];
    if (maxPeriod !== undefined) args.push("--max-period", String(maxPeriod));

    const mapHash = existsSync(npyPath)
      ? sha256(readFileSync(npyPath))
      : `missing:${npyPath}`;
    const key = this.requestKey("embed", { mapHash, k, channels, maxPeriod });

    return this.cached(key, args, (dir) => readNpy(join(dir, "embedding.npy")));
  }

  /**
   * The subprocess-free twin of spatialEmbeddingFor: re-evaluates the
   * embedding locally in float64. The two paths agree within 1e-6.
   */
  localEmbeddingFor(
    map: SpatialMapArtifact | string,
    k: number,
    channels: number,
    maxPeriod?: number
  ): EmbeddingMap {
    const arr = typeof map === "string" ? readNpy(map) : map.array;
    return embedScheduleSlice(arr, k, channels, maxPeriod);
  }

  private requestKey(op: string, payload: unknown): string {
    return sha256(Buffer.from(JSON.stringify([op, payload])));
  }

  private cached<T>(key: string, args: string[], parse: (dir: string) => T): T {
    const hit = this.cache.get(key);
    if (hit !== undefined) {
      return structuredClone(hit) as T;
    }
    const dir = join(this.workdir, `req-${key.slice(0, 12)}-${this.requestSeq++}`);
    this.exec(["--out", dir, "--force", ...args]);
    const result = parse(dir);
    this.cache.set(key, structuredClone(result));
    return result;
  }

  private exec(args: string[]): string {
    this.subprocessCount += 1;
    try {
      // explicit stdio keeps the child's stderr out of ours; it is still
      // captured on the error object for surfacing
      return execFileSync(this.bin, args, {
        encoding: "utf-8",
        stdio: ["ignore", "pipe", "pipe"],
      });
    } catch (err) {
      const e = err as ExecError;
      if (e.code === "ENOENT") {
        throw new BridgeError(
          `cannot execute '${this.bin}'; install the core package or set TSS_BIN`,
          null,
          ""
        );
      }
      const stderr = (e.stderr ?? "").toString().trim();
      throw new BridgeError(
        `'${this.bin} ${args.join(" ")}' exited with ${e.status}: ${stderr}`,
        e.status ?? null,
        stderr
      );
    }
  }
}

function sha256(buf: Buffer): string {
  return createHash("sha256").update(buf).digest("hex");
}
