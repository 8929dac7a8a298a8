import { spawnSync } from "node:child_process";

/** Exit codes the CLI documents. */
export const EXIT_AUDIT_FAILED = 2;
export const EXIT_INFEASIBLE = 3;
export const EXIT_INPUT_ERROR = 4;

export class CliNotFoundError extends Error {}
export class InputError extends Error {}
export class InfeasibleSamplingError extends Error {}

/**
 * Command used to reach the CLI. Override with TGPOISON_CLI, e.g.
 * "python3 -m tgpoison.cli" when the console script is not on PATH.
 */
export function cliCommand(): string[] {
  const fromEnv = process.env.TGPOISON_CLI;
  if (fromEnv && fromEnv.trim()) {
    return fromEnv.trim().split(/\s+/);
  }
  return ["tgpoison"];
}

export interface CliOutcome {
  status: number;
  stdout: string;
  stderr: string;
}

export function runCli(args: string[], allowedExitCodes: number[] = [0]): CliOutcome {
  const [cmd, ...prefix] = cliCommand();
  const proc = spawnSync(cmd, [...prefix, ...args], {
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new CliNotFoundError(
      `could not launch ${cmd}: ${proc.error.message}; set TGPOISON_CLI if the CLI lives elsewhere`,
    );
  }
  const status = proc.status ?? -1;
  if (!allowedExitCodes.includes(status)) {
    const detail = `${proc.stderr || proc.stdout}`.trim();
    if (status === EXIT_INPUT_ERROR) {
      throw new InputError(detail);
    }
    if (status === EXIT_INFEASIBLE) {
      throw new InfeasibleSamplingError(detail);
    }
    throw new Error(`tgpoison exited with code ${status}: ${detail}`);
  }
  return { status, stdout: proc.stdout, stderr: proc.stderr };
}
