import { readFileSync } from "node:fs";
import { join } from "node:path";

import { loadDataset, nodeCount } from "./dataset.js";
import {
  EXIT_AUDIT_FAILED,
  InfeasibleSamplingError,
  InputError,
  runCli,
} from "./runner.js";
import type {
  AuditOptions,
  AuditReport,
  BoundDataset,
  ManifestInsertion,
  ManifestRecord,
  ManifestRemoval,
  PoisonConfig,
  PoisonResult,
} from "./types.js";

export { loadDataset, nodeCount } from "./dataset.js";
export { InfeasibleSamplingError, InputError, cliCommand } from "./runner.js";
export type {
  AuditOptions,
  AuditReport,
  BoundDataset,
  ManifestInsertion,
  ManifestRecord,
  ManifestRemoval,
  PoisonConfig,
  PoisonResult,
} from "./types.js";

/** Alias matching the package-level verb naming. */
export const load = loadDataset;

export function readManifest(path: string): {
  removals: ManifestRemoval[];
  insertions: ManifestInsertion[];
} {
  const removals: ManifestRemoval[] = [];
  const insertions: ManifestInsertion[] = [];
  for (const line of readFileSync(path, "utf8").split("\n")) {
    if (!line.trim()) {
      continue;
    }
    const record = JSON.parse(line) as ManifestRecord;
    if (record.op === "remove") {
      removals.push(record);
    } else if (record.op === "insert") {
      insertions.push(record);
    } else {
      throw new Error(`unknown manifest op in ${path}: ${line}`);
    }
  }
  return { removals, insertions };
}

function configArgs(config: PoisonConfig): string[] {
  const args: string[] = [
    "--strategy",
    config.strategy,
    "--p",
    String(config.p),
    "--window",
    String(config.window),
  ];
  const scalar: Array<[string, number | undefined]> = [
    ["--seed", config.seed],
    ["--knowledge", config.knowledge],
    ["--alpha", config.alpha],
    ["--beta", config.beta],
    ["--capacity", config.capacity],
    ["--max-attempts", config.maxAttempts],
    ["--draws-per-slot", config.drawsPerSlot],
    ["--topk", config.topk],
    ["--combined-weight", config.combinedWeight],
    ["--ks-threshold", config.ksThreshold],
  ];
  for (const [flag, value] of scalar) {
    if (value !== undefined) {
      args.push(flag, String(value));
    }
  }
  if (config.rawSnapshots) {
    args.push("--raw-snapshots");
  }
  return args;
}

function collectRun(outDir: string, datasetName: string, strategyTag: string, p: number): PoisonResult {
  const runDir = join(outDir, datasetName, strategyTag, `p${formatRate(p)}`);
  const manifestPath = join(runDir, "manifest.jsonl");
  const { removals, insertions } = readManifest(manifestPath);
  const audit = JSON.parse(readFileSync(join(runDir, "audit.json"), "utf8")) as AuditReport;
  return {
    outDir: runDir,
    manifestPath,
    removals,
    insertions,
    audit,
    auditPassed: audit.passed,
    dataset: loadDataset(join(runDir, "train_poisoned.csv")),
  };
}

function formatRate(p: number): string {
  // mirror Python's %g formatting for the output directory name
  return String(p);
}

function datasetNameFrom(descriptorPath: string): string {
  const text = readFileSync(descriptorPath, "utf8");
  const match = text.match(/^\s*name\s*=\s*(.+)\s*$/m);
  if (!match) {
    throw new InputError(`descriptor ${descriptorPath} has no name entry`);
  }
  return match[1].trim();
}

/**
 * Run the two-phase attack through the CLI and return its outputs as native
 * structures. An audit failure is reported in the result, not thrown;
 * infeasible sampling and input errors throw.
 */
export function poison(
  datasetPath: string,
  descriptorPath: string,
  outDir: string,
  config: PoisonConfig,
): PoisonResult {
  runCli(
    [
      "attack",
      "--dataset",
      datasetPath,
      "--descriptor",
      descriptorPath,
      "--outdir",
      outDir,
      ...configArgs(config),
    ],
    [0, EXIT_AUDIT_FAILED],
  );
  return collectRun(outDir, datasetNameFrom(descriptorPath), config.strategy, config.p);
}

/** ADD/REM heuristic baseline, same output shape as {@link poison}. */
export function baseline(
  mode: "ADD" | "REM",
  datasetPath: string,
  descriptorPath: string,
  outDir: string,
  config: PoisonConfig,
): PoisonResult {
  runCli(
    [
      "baseline",
      "--mode",
      mode,
      "--dataset",
      datasetPath,
      "--descriptor",
      descriptorPath,
      "--outdir",
      outDir,
      ...configArgs(config),
    ],
    [0, EXIT_AUDIT_FAILED],
  );
  return collectRun(
    outDir,
    datasetNameFrom(descriptorPath),
    `${mode}-${config.strategy}`,
    config.p,
  );
}

/** Independent constraint verification of a finished run's files. */
export function auditRun(
  originalCsv: string,
  poisonedCsv: string,
  manifestPath: string,
  descriptorPath: string,
  options: AuditOptions = {},
): AuditReport {
  const args = [
    "audit",
    "--original",
    originalCsv,
    "--poisoned",
    poisonedCsv,
    "--manifest",
    manifestPath,
    "--descriptor",
    descriptorPath,
    "--json",
  ];
  const scalar: Array<[string, number | undefined]> = [
    ["--p", options.p],
    ["--budget", options.budget],
    ["--window", options.window],
    ["--capacity", options.capacity],
    ["--ks-threshold", options.ksThreshold],
  ];
  for (const [flag, value] of scalar) {
    if (value !== undefined) {
      args.push(flag, String(value));
    }
  }
  if (options.checks) {
    args.push("--checks", options.checks.join(","));
  }
  const outcome = runCli(args, [0, EXIT_AUDIT_FAILED]);
  return JSON.parse(outcome.stdout) as AuditReport;
}

/** Registered strategy and baseline names. */
export function catalog(): { strategies: string[]; baselines: string[] } {
  const outcome = runCli(["catalog"]);
  return JSON.parse(outcome.stdout) as { strategies: string[]; baselines: string[] };
}
