/** Columnar, read-only view of a timestamped edge stream (original ids). */
export interface BoundDataset {
  readonly edgeCount: number;
  readonly featureCount: number;
  readonly sources: Int32Array;
  readonly targets: Int32Array;
  readonly timestamps: Float64Array;
  readonly labels: Int32Array;
  /** Row-major (edgeCount x featureCount); empty when featureCount is 0. */
  readonly features: Float64Array;
}

export interface ManifestRemoval {
  op: "remove";
  index: number;
  source: number;
  target: number;
  timestamp: number;
  score: number;
  rank: number;
  strategy: string;
  knowledge?: number;
}

export interface ManifestInsertion {
  op: "insert";
  source: number;
  target: number;
  timestamp: number;
  strategy: string;
  compensates?: number;
  attempt?: number;
  round?: number;
  recovered?: boolean;
  score?: number;
  rank?: number;
}

export type ManifestRecord = ManifestRemoval | ManifestInsertion;

export interface CheckedNumber {
  passed: boolean;
}

export interface AuditReport {
  passed: boolean;
  checks: string[];
  c1: { budget: number | null; removed: number; inserted: number; passed: boolean };
  c2: { ks_statistic: number | null; threshold: number; passed: boolean };
  c3: { violations: number; total_inserted: number; window: number | null; passed: boolean };
  c4: {
    max_out_delta: number;
    max_in_delta: number;
    histogram_distance: number;
    capacity: number;
    passed: boolean;
  };
  novelty_violations: number;
  bipartite_violations: number;
  consistency_errors: string[];
}

export interface PoisonConfig {
  strategy: string;
  p: number;
  window: number | "short" | "long";
  seed?: number;
  knowledge?: number;
  alpha?: number;
  beta?: number;
  capacity?: number;
  maxAttempts?: number;
  drawsPerSlot?: number;
  topk?: number;
  combinedWeight?: number;
  ksThreshold?: number;
  rawSnapshots?: boolean;
}

export interface PoisonResult {
  outDir: string;
  manifestPath: string;
  removals: ManifestRemoval[];
  insertions: ManifestInsertion[];
  audit: AuditReport;
  auditPassed: boolean;
  /** Poisoned training slice, loaded back as columnar arrays. */
  dataset: BoundDataset;
}

export interface AuditOptions {
  p?: number;
  budget?: number;
  window?: number;
  capacity?: number;
  ksThreshold?: number;
  checks?: string[];
}
