"""JSON-lines manifests recording every removal and insertion.

One record per perturbed edge, in original dataset ids, with enough
provenance that an auditor can reconstruct both edge sets without any
in-memory state. Records are serialized with sorted keys and shortest
round-trip float formatting, so identical plans produce byte-identical
manifests.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .graphs import TemporalGraph
from .sampling import InsertionPlan
from .sparsify import RemovalPlan


def removal_records(plan: RemovalPlan, train: TemporalGraph) -> list[dict]:
    records = []
    ids = train.node_ids
    for rank, (idx, score) in enumerate(zip(plan.removed_indices, plan.scores)):
        records.append(
            {
                "op": "remove",
                "index": int(idx),
                "source": int(ids[train.sources[idx]]),
                "target": int(ids[train.targets[idx]]),
                "timestamp": float(train.timestamps[idx]),
                "score": float(score),
                "rank": rank,
                "strategy": plan.strategy,
                "knowledge": plan.knowledge,
            }
        )
    return records


def insertion_records(plan: InsertionPlan, train: TemporalGraph, strategy: str) -> list[dict]:
    records = []
    ids = train.node_ids
    for e in plan.inserted:
        records.append(
            {
                "op": "insert",
                "source": int(ids[e.source]),
                "target": int(ids[e.target]),
                "timestamp": float(e.timestamp),
                "compensates": int(e.compensates),
                "attempt": int(e.attempt),
                "round": int(e.round),
                "recovered": bool(e.recovered),
                "strategy": strategy,
            }
        )
    return records


def dumps_records(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def write_manifest(path: str | Path, records: Iterable[dict]) -> None:
    Path(path).write_text(dumps_records(records))


def read_manifest(path: str | Path) -> tuple[list[dict], list[dict]]:
    """Read a manifest file into (removal records, insertion records)."""
    return parse_manifest(Path(path).read_text())


def parse_manifest(text: str) -> tuple[list[dict], list[dict]]:
    removals: list[dict] = []
    insertions: list[dict] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        if record.get("op") == "remove":
            removals.append(record)
        elif record.get("op") == "insert":
            insertions.append(record)
        else:
            raise ValueError(f"manifest record with unknown op: {record!r}")
    return removals, insertions
