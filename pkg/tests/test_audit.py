import copy

import numpy as np
import pytest

from tgpoison import (
    AuditThresholds,
    SamplerParams,
    audit,
    insertion_records,
    removal_records,
    select_removals,
    strategy_from_name,
    timestamp_selector,
    uniform_stream,
)

from _reference import apply_records

WINDOW = 1000.0


@pytest.fixture(scope="module")
def valid_run():
    """A constraint-satisfying attack on a 60-node synthetic, p=0.25."""
    g = uniform_stream(2000, n_nodes=120, n_timestamps=200, seed=21, t_max=1000.0)
    removal = select_removals(g, strategy_from_name("Degree"), p=0.25)
    insertion = timestamp_selector(g, removal, SamplerParams(window=WINDOW, rng_seed=3))
    removals = removal_records(removal, g)
    insertions = insertion_records(insertion, g, removal.strategy)
    thresholds = AuditThresholds(p=0.25, window=WINDOW, capacity=1)
    return g, removals, insertions, thresholds


def run_audit(g, removals, insertions, thresholds):
    poisoned = apply_records(g, removals, insertions)
    return audit(g, poisoned, removals, insertions, thresholds)


def flags(report):
    return {
        "c1": report.c1.passed,
        "c2": report.c2.passed,
        "c3": report.c3.passed,
        "c4": report.c4.passed,
        "novelty": report.novelty_violations == 0,
        "bipartite": report.bipartite_violations == 0,
    }


class TestIdentity:
    def test_all_checks_pass_with_zeros(self, small_stream):
        thresholds = AuditThresholds(p=0.3, window=WINDOW, capacity=1)
        report = audit(small_stream, small_stream, [], [], thresholds)
        assert report.passed
        assert report.c1.removed == 0 and report.c1.inserted == 0
        assert report.c2.ks_statistic is None
        assert report.c3.violations == 0
        assert report.c4.max_out_delta == 0 and report.c4.max_in_delta == 0
        assert report.novelty_violations == 0 and report.bipartite_violations == 0


class TestValidRun:
    def test_full_run_passes_everything(self, valid_run):
        report = run_audit(*valid_run)
        assert report.passed, report.to_text()
        assert report.c1.removed == report.c1.inserted == 500
        assert report.c2.ks_statistic <= 0.1
        assert report.c4.max_out_delta <= 1 and report.c4.max_in_delta <= 1
        assert not report.consistency_errors

    def test_report_serializes(self, valid_run):
        report = run_audit(*valid_run)
        d = report.to_dict()
        assert d["passed"] is True
        assert "PASS" in report.to_text()
        assert report.to_json().startswith("{")


class TestPlantedFaults:
    """Each planted violation must flip exactly its own flag."""

    def _assert_only_flipped(self, baseline, report, expected):
        got = flags(report)
        for name, ok in baseline.items():
            if name == expected:
                assert not got[name], f"{name} should have failed"
            else:
                assert got[name] == ok, f"{name} changed unexpectedly: {report.to_text()}"
        assert not report.consistency_errors

    def test_c1_budget_overrun(self, valid_run):
        g, removals, insertions, thresholds = valid_run
        baseline = flags(run_audit(g, removals, insertions, thresholds))
        removed_keys = {(r["source"], r["target"], r["timestamp"]) for r in removals}
        ids = g.node_ids
        extra_idx = next(
            i
            for i in range(g.edge_count)
            if (int(ids[g.sources[i]]), int(ids[g.targets[i]]), float(g.timestamps[i]))
            not in removed_keys
        )
        extra = {
            "op": "remove",
            "source": int(ids[g.sources[extra_idx]]),
            "target": int(ids[g.targets[extra_idx]]),
            "timestamp": float(g.timestamps[extra_idx]),
        }
        report = run_audit(g, removals + [extra], insertions, thresholds)
        assert report.c1.removed == thresholds.resolve_budget(g.edge_count) + 1
        self._assert_only_flipped(baseline, report, "c1")

    def test_c2_timestamp_burst(self, valid_run):
        g, removals, insertions, thresholds = valid_run
        baseline = flags(run_audit(g, removals, insertions, thresholds))
        t_max = float(g.timestamps[-1])
        mutated = []
        for i, r in enumerate(insertions):
            r = dict(r)
            r["timestamp"] = t_max - i * 1e-6  # cluster at the top of the range
            mutated.append(r)
        report = run_audit(g, removals, mutated, thresholds)
        assert report.c2.ks_statistic > thresholds.ks_threshold
        self._assert_only_flipped(baseline, report, "c2")

    def test_c3_inactive_window(self, valid_run):
        g, removals, insertions, thresholds = valid_run
        baseline = flags(run_audit(g, removals, insertions, thresholds))
        events = g.node_events()
        inv = {int(g.node_ids[i]): i for i in range(g.id_space_size)}
        pick = None
        for i, r in enumerate(insertions):
            first_u = events[inv[r["source"]]][0]
            first_v = events[inv[r["target"]]][0]
            if min(first_u, first_v) > 1.0:  # both endpoints silent at t=0.5
                pick = i
                break
        assert pick is not None
        mutated = copy.deepcopy(insertions)
        mutated[pick]["timestamp"] = 0.5
        report = run_audit(g, removals, mutated, thresholds)
        assert report.c3.violations == 1
        self._assert_only_flipped(baseline, report, "c3")

    def test_c4_degree_overload(self, valid_run):
        g, removals, insertions, thresholds = valid_run
        baseline = flags(run_audit(g, removals, insertions, thresholds))
        deleted_in = {r["target"] for r in removals}
        inserted_in = {r["target"] for r in insertions}
        known = {(r["source"], r["target"]) for r in insertions}
        orig_pairs = set()
        ids = g.node_ids
        for u, v in zip(g.sources.tolist(), g.targets.tolist()):
            a, b = int(ids[u]), int(ids[v])
            orig_pairs.add((min(a, b), max(a, b)))
        events = g.node_events()
        inv = {int(ids[i]): i for i in range(g.id_space_size)}

        def early_active(node):
            return float(events[inv[node]][0]) < 100.0

        target = next(
            int(n)
            for n in ids
            if int(n) not in deleted_in and int(n) not in inserted_in and early_active(int(n))
        )
        mutated = copy.deepcopy(insertions)
        redirected = 0
        for r in mutated:
            if redirected == 2:
                break
            pair = (min(r["source"], target), max(r["source"], target))
            if (
                r["source"] != target
                and pair not in orig_pairs
                and (r["source"], target) not in known
                and float(r["timestamp"]) >= float(events[inv[target]][0])
            ):
                r["target"] = target
                known.add((r["source"], target))
                orig_pairs.add(pair)
                redirected += 1
        assert redirected == 2
        report = run_audit(g, removals, mutated, thresholds)
        assert report.c4.max_in_delta >= 2
        self._assert_only_flipped(baseline, report, "c4")

    def test_novelty_duplicate_of_existing_pair(self, valid_run):
        g, removals, insertions, thresholds = valid_run
        baseline = flags(run_audit(g, removals, insertions, thresholds))
        ids = g.node_ids
        inv = {int(ids[i]): i for i in range(g.id_space_size)}
        events = g.node_events()
        deleted_in = {r["target"] for r in removals}
        inserted_in = {r["target"] for r in insertions}
        partners = {}
        for u, v in zip(g.sources.tolist(), g.targets.tolist()):
            partners.setdefault(int(ids[u]), set()).add(int(ids[v]))
        mutated = copy.deepcopy(insertions)
        done = False
        for r in mutated:
            for w in sorted(partners.get(r["source"], ())):
                if (
                    w not in deleted_in
                    and w not in inserted_in
                    and w != r["source"]
                    and float(r["timestamp"]) >= float(events[inv[w]][0])
                ):
                    r["target"] = w  # pair already interacted: novelty violation
                    done = True
                    break
            if done:
                break
        assert done
        report = run_audit(g, removals, mutated, thresholds)
        assert report.novelty_violations == 1
        self._assert_only_flipped(baseline, report, "novelty")


class TestBipartiteViolation:
    def test_wrong_partition_flagged(self):
        g = uniform_stream(2000, n_nodes=160, n_timestamps=200, seed=10, bipartite=True, t_max=1000.0)
        removal = select_removals(g, strategy_from_name("Degree"), p=0.25)
        insertion = timestamp_selector(g, removal, SamplerParams(window=WINDOW, rng_seed=1))
        removals = removal_records(removal, g)
        insertions = insertion_records(insertion, g, removal.strategy)
        thresholds = AuditThresholds(p=0.25, window=WINDOW, capacity=1)
        good = run_audit(g, removals, insertions, thresholds)
        assert good.passed and good.bipartite_violations == 0

        mutated = copy.deepcopy(insertions)
        users = [int(g.node_ids[i]) for i in range(g.partition_boundary)]
        other_user = next(u for u in users if u != mutated[0]["source"])
        mutated[0]["target"] = other_user  # user-user edge in a bipartite stream
        report = run_audit(g, removals, mutated, thresholds)
        assert report.bipartite_violations == 1
        assert not report.passed


class TestConsistency:
    def test_mismatch_reported_not_thrown(self, valid_run):
        g, removals, insertions, thresholds = valid_run
        poisoned = apply_records(g, removals, insertions)
        broken = removals[:-1]  # manifest hides one removal
        report = audit(g, poisoned, broken, insertions, thresholds)
        assert report.consistency_errors
        assert not report.passed

    def test_checks_subset(self, valid_run):
        g, removals, insertions, thresholds = valid_run
        poisoned = apply_records(g, removals, [])
        # a removal-only run audited against the budget constraint only
        report = audit(g, poisoned, removals, [], thresholds, checks=("c1",))
        assert report.passed
        assert report.c4.max_out_delta >= 1  # numbers still reported
        with pytest.raises(ValueError):
            audit(g, poisoned, removals, [], thresholds, checks=("c9",))
