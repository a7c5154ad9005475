/**
 * Process plumbing for the `hif8` command line executable.
 *
 * The executable is looked up as: explicit option, then the HIF8_CLI
 * environment variable, then plain "hif8" on PATH (the console script
 * installed with the backing package).
 */

import { spawnSync } from "node:child_process";

export interface CliOptions {
  /** Path or name of the executable. */
  cli?: string;
}

export class CliError extends Error {
  constructor(
    readonly exitCode: number,
    readonly stderr: string,
    args: string[]
  ) {
    super(`hif8 ${args.join(" ")} failed (exit ${exitCode}): ${stderr.trim()}`);
  }
}

export function cliPath(opts?: CliOptions): string {
  return opts?.cli ?? process.env.HIF8_CLI ?? "hif8";
}

/** Run one subcommand; returns stdout, throws CliError on nonzero exit. */
export function runCli(args: string[], opts?: CliOptions): string {
  const proc = spawnSync(cliPath(opts), args, {
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) throw proc.error; // spawn failure, e.g. executable missing
  if (proc.status !== 0) {
    throw new CliError(proc.status ?? -1, proc.stderr ?? "", args);
  }
  return proc.stdout;
}
