import { execFileSync } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

export const CLI = join(dirname(fileURLToPath(import.meta.url)), "..", "dist", "cli.js");

export function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "defalloc-plot-"));
}

/** Produce a harness CSV through the installed python CLI. */
export function harnessCsv(subcommand: string, out: string, extra: string[]): void {
  execFileSync(
    "python3",
    ["-m", "defalloc", subcommand, "--jobs", "1", "--out", out, ...extra],
    { stdio: "pipe", timeout: 200_000 },
  );
}

export function plot(args: string[]): { status: number; stdout: string; stderr: string } {
  try {
    const stdout = execFileSync("node", [CLI, ...args], {
      stdio: "pipe",
      timeout: 200_000,
    }).toString();
    return { status: 0, stdout, stderr: "" };
  } catch (err: any) {
    return {
      status: err.status ?? 1,
      stdout: err.stdout?.toString() ?? "",
      stderr: err.stderr?.toString() ?? "",
    };
  }
}
