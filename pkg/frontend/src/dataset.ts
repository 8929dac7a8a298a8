import { readFileSync } from "node:fs";

import type { BoundDataset } from "./types.js";

/**
 * Load a `user_id,item_id,timestamp,state_label,f...` CSV stream into
 * columnar typed arrays. Ids are the original dataset ids; rows keep file
 * order (the toolkit always writes time-sorted streams).
 */
export function loadDataset(csvPath: string): BoundDataset {
  const text = readFileSync(csvPath, "utf8");
  const lines = text.split("\n");
  let header = 0;
  while (header < lines.length && !lines[header].trim()) {
    header += 1;
  }
  if (header >= lines.length) {
    throw new Error(`${csvPath}: empty stream`);
  }
  const columns = lines[header].split(",").length;
  const featureCount = Math.max(0, columns - 4);
  const rows: string[] = [];
  for (let i = header + 1; i < lines.length; i += 1) {
    if (lines[i].trim()) {
      rows.push(lines[i]);
    }
  }
  const n = rows.length;
  const sources = new Int32Array(n);
  const targets = new Int32Array(n);
  const timestamps = new Float64Array(n);
  const labels = new Int32Array(n);
  const features = new Float64Array(n * featureCount);
  for (let i = 0; i < n; i += 1) {
    const parts = rows[i].split(",");
    if (parts.length !== columns) {
      throw new Error(`${csvPath}: line ${header + i + 2}: expected ${columns} columns, got ${parts.length}`);
    }
    sources[i] = Number(parts[0]);
    targets[i] = Number(parts[1]);
    timestamps[i] = Number(parts[2]);
    labels[i] = columns > 3 ? Number(parts[3]) : 0;
    for (let f = 0; f < featureCount; f += 1) {
      features[i * featureCount + f] = Number(parts[4 + f]);
    }
    if (Number.isNaN(sources[i]) || Number.isNaN(timestamps[i])) {
      throw new Error(`${csvPath}: line ${header + i + 2}: malformed row`);
    }
  }
  return Object.freeze({
    edgeCount: n,
    featureCount,
    sources,
    targets,
    timestamps,
    labels,
    features,
  });
}

/**
 * Distinct nodes appearing in the stream. Bipartite datasets keep disjoint
 * id spaces per column, so their counts are per-role sums.
 */
export function nodeCount(dataset: BoundDataset, bipartite = false): number {
  if (bipartite) {
    return new Set(dataset.sources).size + new Set(dataset.targets).size;
  }
  const seen = new Set<number>();
  for (let i = 0; i < dataset.edgeCount; i += 1) {
    seen.add(dataset.sources[i]);
    seen.add(dataset.targets[i]);
  }
  return seen.size;
}
