/**
 * Typed surface over the hif8 command line tools.
 *
 * Every function here shells out to the executable and moves bytes
 * through temp files; none of them do any arithmetic of their own, so
 * results are bit-for-bit whatever the backing library produces.
 */

import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { CliOptions, runCli } from "./cli.js";
import { readTensor, Tensor, writeTensor } from "./tensorFile.js";

export * from "./cli.js";
export * from "./tensorFile.js";

export type RoundingMode = "ta" | "te" | "sr" | "sr14" | "sr2" | "hr";
export type Source = "fp32" | "fp16" | "bf16";
export type FormatName = "hif8" | "e4m3" | "e5m2";

export interface RoundingOptions extends CliOptions {
  round?: RoundingMode;
  src?: Source;
  saturate?: boolean;
  nanToZero?: boolean;
  /** Required for round: "sr", rejected otherwise. */
  seed?: number;
  /** Rounds x * 2^scaleExp; fakeQuant/quantizeStats only. */
  scaleExp?: number;
}

function roundingArgs(opts: RoundingOptions): string[] {
  const args: string[] = [];
  if (opts.round) args.push("--round", opts.round);
  if (opts.src) args.push("--src", opts.src);
  if (opts.saturate) args.push("--saturate");
  if (opts.nanToZero) args.push("--nan-to-zero");
  if (opts.seed !== undefined) args.push("--seed", String(opts.seed));
  if (opts.scaleExp !== undefined && opts.scaleExp !== 0) {
    args.push("--scale-exp", String(opts.scaleExp));
  }
  return args;
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "hif8-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function convert(t: Tensor, extra: string[], opts: RoundingOptions): Tensor {
  return withTempDir((dir) => {
    const src = join(dir, "in.hf8t");
    const dst = join(dir, "out.hf8t");
    writeTensor(src, t);
    runCli(["convert", src, "--out", dst, ...roundingArgs(opts), ...extra], opts);
    return readTensor(dst);
  });
}

/** Round a float tensor to one code byte per element. */
export function quantize(t: Tensor, opts: RoundingOptions = {}): Tensor {
  return convert(t, [], opts);
}

/** Exact float32 values of a code tensor. */
export function dequantize(t: Tensor, opts: CliOptions = {}): Tensor {
  if (t.dtype !== "hif8") throw new TypeError("dequantize expects a hif8 code tensor");
  return convert(t, [], opts);
}

/** Float32 round trip through 8 bits: dequantize(quantize(t)). */
export function fakeQuant(t: Tensor, opts: RoundingOptions = {}): Tensor {
  return convert(t, ["--fake-quant"], opts);
}

function parseNumber(field: string): number {
  if (field === "inf") return Infinity;
  if (field === "-inf") return -Infinity;
  return Number(field);
}

export interface ErrorStats {
  mse: number;
  maxAbsErr: number;
  snrDb: number;
  zeroFraction: number;
  overflowCount: number;
}

function parseStatsRow(fields: string[]): ErrorStats {
  const [mse, maxAbsErr, snrDb, zeroFraction, overflowCount] = fields;
  return {
    mse: parseNumber(mse),
    maxAbsErr: parseNumber(maxAbsErr),
    snrDb: parseNumber(snrDb),
    zeroFraction: parseNumber(zeroFraction),
    overflowCount: Number(overflowCount),
  };
}

/** Error statistics of the fake-quantization round trip of t. */
export function quantizeStats(t: Tensor, opts: RoundingOptions = {}): ErrorStats {
  return withTempDir((dir) => {
    const src = join(dir, "in.hf8t");
    writeTensor(src, t);
    const out = runCli(["quantize-stats", src, ...roundingArgs(opts)], opts);
    return parseStatsRow(out.trim().split("\n")[1].split(","));
  });
}

/** Per-format error statistics (hif8, e4m3, e5m2) for the same tensor. */
export function compareFormats(
  t: Tensor,
  opts: CliOptions = {}
): Record<FormatName, ErrorStats> {
  return withTempDir((dir) => {
    const src = join(dir, "in.hf8t");
    writeTensor(src, t);
    const lines = runCli(["compare", src], opts).trim().split("\n").slice(1);
    const result = {} as Record<FormatName, ErrorStats>;
    for (const line of lines) {
      const [name, ...rest] = line.split(",");
      result[name as FormatName] = parseStatsRow(rest);
    }
    return result;
  });
}

export interface TableRow {
  code: number;
  cls: string;
  sign: "+" | "-" | null;
  exponent: number | null;
  mantissa: number | null;
  /** Exact decoded value; null on the NaN row. */
  value: number | null;
}

/** All 256 code points of a format, parsed from the table subcommand. */
export function codeTable(format: FormatName = "hif8", opts: CliOptions = {}): TableRow[] {
  const lines = runCli(["table", "--format", format], opts).trim().split("\n").slice(1);
  return lines.map((line) => {
    const [code, cls, sign, exponent, mantissa, value] = line.split(",");
    return {
      code: Number(code),
      cls,
      sign: sign === "" ? null : (sign as "+" | "-"),
      exponent: exponent === "" ? null : Number(exponent),
      mantissa: mantissa === "" ? null : Number(mantissa),
      value: value === "" ? null : parseNumber(value),
    };
  });
}

/** (exponent, fraction bits) per covered binade. */
export function precisionProfile(
  format: FormatName = "hif8",
  opts: CliOptions = {}
): Array<[number, number]> {
  const lines = runCli(["precision-profile", "--format", format], opts)
    .trim()
    .split("\n")
    .slice(1);
  return lines.map((line) => {
    const [e, bits] = line.split(",");
    return [Number(e), Number(bits)];
  });
}

export interface CalibrationLayer {
  ea: number;
  ew: number;
  err: number | null;
  grid?: number[][];
}

export interface CalibrationReport {
  datasetId: string;
  roundingMode: string;
  quantizeInput: boolean;
  layers: CalibrationLayer[];
}

export interface CalibrateOptions extends CliOptions {
  grids?: boolean;
  quantizeInput?: boolean;
  datasetId?: string;
}

/** Run the two-pass scale search over a saved model manifest. */
export function calibrate(
  manifestPath: string,
  data: Tensor,
  opts: CalibrateOptions = {}
): CalibrationReport {
  return withTempDir((dir) => {
    const dataPath = join(dir, "data.hf8t");
    writeTensor(dataPath, data);
    const args = ["calibrate", manifestPath, dataPath];
    if (opts.grids) args.push("--grids");
    if (opts.quantizeInput === false) args.push("--no-quantize-input");
    if (opts.datasetId !== undefined) args.push("--dataset-id", opts.datasetId);
    return JSON.parse(runCli(args, opts)) as CalibrationReport;
  });
}

export interface TimelineRow {
  iteration: number;
  overflow: boolean;
  scaleExp: number;
  window: number;
}

/** Replay (iteration, overflow) events through a loss-scale controller. */
export function simulateScaling(
  events: Array<[number, boolean]>,
  controller: "als" | "bls" = "als",
  opts: CliOptions = {}
): TimelineRow[] {
  return withTempDir((dir) => {
    const trace = join(dir, "trace.csv");
    writeFileSync(trace, events.map(([i, o]) => `${i},${o ? 1 : 0}`).join("\n") + "\n");
    const lines = runCli(["simulate-als", trace, "--controller", controller], opts)
      .trim()
      .split("\n")
      .slice(1);
    return lines.map((line) => {
      const [iteration, overflow, scaleExp, window] = line.split(",");
      return {
        iteration: Number(iteration),
        overflow: overflow === "1",
        scaleExp: Number(scaleExp),
        window: Number(window),
      };
    });
  });
}
