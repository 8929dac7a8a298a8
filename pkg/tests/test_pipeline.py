import json
from pathlib import Path

import numpy as np
import pytest

from tgpoison import (
    AttackConfig,
    DatasetFormat,
    InfeasibleSamplingError,
    UnsupportedStrategyError,
    benchmark,
    catalog,
    chronological_split,
    from_edges,
    parse_edge_stream,
    read_manifest,
    run_attack,
    run_baseline,
    serialize_edge_stream,
    uniform_stream,
    write_format,
)
from tgpoison.cli import main as cli_main
from tgpoison.sparsify import compute_budget


def write_dataset(tmp_path, graph, name="synth"):
    fmt = DatasetFormat(name=name, bipartite=graph.bipartite,
                        feature_count=graph.features.shape[1] if graph.features is not None else 0)
    csv_path = tmp_path / f"{name}.csv"
    with open(csv_path, "w") as fh:
        serialize_edge_stream(graph, fh)
    ini_path = tmp_path / f"{name}.ini"
    write_format(fmt, ini_path)
    return csv_path, ini_path, fmt


@pytest.fixture
def synth_dataset(tmp_path):
    g = uniform_stream(300, n_nodes=40, n_timestamps=80, seed=3, t_max=1000.0)
    return write_dataset(tmp_path, g) + (g, tmp_path)


def make_config(csv_path, ini_path, tmp_path, **kw):
    defaults = dict(
        dataset=csv_path,
        descriptor=ini_path,
        outdir=tmp_path / "out",
        strategy="Degree",
        p=0.3,
        window=1000.0,
        seed=0,
    )
    defaults.update(kw)
    return AttackConfig(**defaults)


class TestRunAttack:
    def test_zero_rate_is_noop(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        result = run_attack(make_config(csv_path, ini_path, tmp_path, p=0.0))
        assert result.audit_passed
        train = chronological_split(g)[0]
        assert serialize_edge_stream(result.poisoned_train) == serialize_edge_stream(train)

    def test_degree_attack_budget_and_audit(self, tmp_path):
        # 286 edges so the training slice is a 200-edge stream: budget 60
        g = uniform_stream(286, n_nodes=40, n_timestamps=80, seed=10, t_max=1000.0)
        csv_path, ini_path, fmt = write_dataset(tmp_path, g)
        result = run_attack(make_config(csv_path, ini_path, tmp_path, p=0.3, seed=4))
        assert chronological_split(g)[0].edge_count == 200
        assert len(result.removal) == len(result.insertion) == 60
        assert result.audit_passed, result.report.to_text()

    def test_val_test_untouched(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        result = run_attack(make_config(csv_path, ini_path, tmp_path))
        _, val, test = chronological_split(g)
        assert (result.outdir / "val.csv").read_text() == serialize_edge_stream(val)
        assert (result.outdir / "test.csv").read_text() == serialize_edge_stream(test)

    def test_output_layout_and_lock(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        result = run_attack(make_config(csv_path, ini_path, tmp_path, strategy="TER"))
        assert result.outdir == tmp_path / "out" / "synth" / "TER" / "p0.3"
        for name in ("train_poisoned.csv", "manifest.jsonl", "audit.json", "config.lock", "val.csv", "test.csv"):
            assert (result.outdir / name).exists(), name
        lock = json.loads((result.outdir / "config.lock").read_text())
        assert lock["alpha"] == {"value": 0.85, "paper_specified": False}
        assert lock["window"]["paper_specified"] is False
        assert lock["p"] == {"value": 0.3, "paper_specified": True}

    def test_manifest_reconstructs_plans(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        result = run_attack(make_config(csv_path, ini_path, tmp_path))
        removals, insertions = read_manifest(result.manifest_path)
        assert len(removals) == len(result.removal)
        assert len(insertions) == len(result.insertion)
        assert {r["index"] for r in removals} == set(result.removal.removed_indices)
        assert all(r["strategy"] == "Degree" for r in removals)

    def test_distinct_drift_metrics_produce_distinct_plans(self, tmp_path):
        # constructed stream where the two metrics disagree on the most
        # volatile timestamp, hence on the removal set
        g = uniform_stream(300, n_nodes=40, n_timestamps=30, seed=4, t_max=1000.0)
        csv_path, ini_path, fmt = write_dataset(tmp_path, g)
        res_cos = run_attack(make_config(csv_path, ini_path, tmp_path, strategy="TPR-Cosine"))
        res_jac = run_attack(make_config(csv_path, ini_path, tmp_path, strategy="TPR-Jaccard"))
        assert set(res_cos.removal.removed_indices) != set(res_jac.removal.removed_indices)

    def test_unknown_strategy_rejected(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        with pytest.raises(UnsupportedStrategyError):
            run_attack(make_config(csv_path, ini_path, tmp_path, strategy="Voodoo"))

    def test_infeasible_run_quarantines(self, tmp_path):
        # two heavily-connected nodes: no novel pair can replace a removal
        g = from_edges([(0, 1, float(t)) for t in range(40)] + [(1, 0, 40.0 + t) for t in range(10)])
        csv_path, ini_path, fmt = write_dataset(tmp_path, g, name="tiny")
        config = make_config(csv_path, ini_path, tmp_path, p=0.2, max_attempts=2, draws_per_slot=4)
        with pytest.raises(InfeasibleSamplingError):
            run_attack(config)
        qdir = tmp_path / "out" / "tiny" / "Degree" / "p0.2" / "quarantine"
        assert (qdir / "error.json").exists()
        assert (qdir / "partial_manifest.jsonl").exists()
        assert json.loads((qdir / "error.json").read_text())["stage"] == "negative-sampling"


class TestBaselines:
    def test_rem_random_full_budget_empties_training(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        config = make_config(csv_path, ini_path, tmp_path, strategy="Random", p=1.0)
        with pytest.warns(UserWarning, match="entire training stream"):
            result = run_baseline(config, "REM")
        assert result.poisoned_train.edge_count == 0
        assert result.audit_passed  # budget-only audit

    def test_rem_checks_subset_is_c1_only(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        result = run_baseline(make_config(csv_path, ini_path, tmp_path, strategy="Degree"), "REM")
        assert result.report.checks == ("c1",)
        assert result.audit_passed
        train = chronological_split(g)[0]
        assert result.poisoned_train.edge_count == train.edge_count - compute_budget(train.edge_count, 0.3)

    def test_rem_degree_targets_lowest_scores(self, tmp_path):
        # hub edges score high, pendant edges low: REM must take the pendants,
        # while the attack's own Degree strategy takes the hub edges
        edges = [(0, k, float(k)) for k in range(1, 11)]  # hub 0
        edges += [(20 + 2 * i, 21 + 2 * i, 20.0 + i) for i in range(10)]  # pendant pairs
        g = from_edges(edges)
        csv_path, ini_path, fmt = write_dataset(tmp_path, g, name="hub")
        config = make_config(csv_path, ini_path, tmp_path, strategy="Degree", p=0.5, ratios=(1.0, 0.0, 0.0))
        with pytest.warns(UserWarning):
            rem = run_baseline(config, "REM")
        removed = set(rem.removal.removed_indices)
        attack_plan = set(
            __import__("tgpoison").select_removals(g, __import__("tgpoison").strategy_from_name("Degree"), 0.5).removed_indices
        )
        assert removed != attack_plan
        pendant_indices = set(range(10, 20))
        assert removed == pendant_indices  # all lowest-degree edges

    def test_add_preference_avoids_hub(self, tmp_path):
        # star: hub has the highest degree, so lowest-PA novel pairs are leaf-leaf
        g = from_edges([(0, k, float(k)) for k in range(1, 6)])
        csv_path, ini_path, fmt = write_dataset(tmp_path, g, name="star")
        config = make_config(csv_path, ini_path, tmp_path, strategy="Preference", p=0.4, ratios=(1.0, 0.0, 0.0))
        with pytest.warns(UserWarning):
            result = run_baseline(config, "ADD")
        inserted = [r for r in result.records if r["op"] == "insert"]
        assert len(inserted) == 2  # floor(0.4 * 5)
        for r in inserted:
            assert r["source"] != 0 and r["target"] != 0
        # brute-force PA over all novel pairs confirms leaf-leaf is minimal
        neigh = {0: set(range(1, 6))}
        for k in range(1, 6):
            neigh[k] = {0}
        pa = {(u, v): len(neigh[u]) * len(neigh[v]) for u in range(6) for v in range(u + 1, 6) if v not in neigh[u]}
        assert min(pa.values()) == 1
        for r in inserted:
            key = (min(r["source"], r["target"]), max(r["source"], r["target"]))
            assert pa[key] == 1

    def test_add_inserts_without_removals(self, tmp_path):
        g = uniform_stream(1500, n_nodes=120, n_timestamps=150, seed=0, t_max=1000.0)
        csv_path, ini_path, fmt = write_dataset(tmp_path, g)
        result = run_baseline(make_config(csv_path, ini_path, tmp_path, strategy="Random", p=0.3), "ADD")
        train = chronological_split(g)[0]
        budget = compute_budget(train.edge_count, 0.3)
        assert result.poisoned_train.edge_count == train.edge_count + budget
        assert result.audit_passed, result.report.to_text()
        assert result.report.checks == ("c1", "c2", "novelty", "bipartite")

    def test_jaccard_rejected_on_bipartite(self, tmp_path):
        g = uniform_stream(100, n_nodes=30, seed=2, bipartite=True, t_max=500.0)
        csv_path, ini_path, fmt = write_dataset(tmp_path, g, name="bip")
        with pytest.raises(UnsupportedStrategyError):
            run_baseline(make_config(csv_path, ini_path, tmp_path, strategy="Jaccard"), "REM")

    def test_unknown_baseline(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        with pytest.raises(UnsupportedStrategyError):
            run_baseline(make_config(csv_path, ini_path, tmp_path, strategy="TER"), "REM")


class TestCatalog:
    def test_all_names_registered(self):
        cat = catalog()
        assert len(cat["strategies"]) == 16
        assert len(cat["baselines"]) == 10
        assert "TPR-Wasserstein" in cat["strategies"]
        assert "REM-PageRank" in cat["baselines"]


class TestBenchmark:
    def test_empty_sizes_error(self):
        with pytest.raises(ValueError, match="nothing to benchmark"):
            benchmark([])

    def test_single_size_error(self):
        with pytest.raises(ValueError, match="two input sizes"):
            benchmark([1000])

    def test_small_benchmark_emits_rows_and_slopes(self):
        result = benchmark([800, 1600], n_nodes=100, n_timestamps=40, window=2000.0)
        stages = {row["stage"] for row in result.rows}
        assert stages == {"tpr", "selector"}
        assert set(result.slopes) == {"tpr", "selector"}
        assert "slope[tpr]" in result.to_text()


class TestConfigFile:
    def test_from_file_with_overrides(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        cfg_path = tmp_path / "run.ini"
        cfg_path.write_text(
            f"""[attack]
dataset = {csv_path}
descriptor = {ini_path}
strategy = TPR-Cosine
p = 0.2
window = short
seed = 9
"""
        )
        config = AttackConfig.from_file(cfg_path)
        assert config.strategy == "TPR-Cosine" and config.p == 0.2
        assert config.resolved_window() == 400.0
        config2 = AttackConfig.from_file(cfg_path, p=0.1)
        assert config2.p == 0.1

    def test_window_presets(self, synth_dataset):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        config = make_config(csv_path, ini_path, tmp_path, window="long")
        assert config.resolved_window() == 1800.0
        config = make_config(csv_path, ini_path, tmp_path, window="bogus")
        with pytest.raises(ValueError, match="preset"):
            config.resolved_window()


class TestCli:
    def test_attack_command_exit_zero(self, synth_dataset, capsys):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        code = cli_main(
            [
                "attack",
                "--dataset", str(csv_path),
                "--descriptor", str(ini_path),
                "--outdir", str(tmp_path / "cli_out"),
                "--strategy", "Degree",
                "--p", "0.2",
                "--window", "1000",
                "--ks-threshold", "0.3",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "PASS" in out

    def test_audit_command_on_written_outputs(self, synth_dataset, capsys):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        result = run_attack(make_config(csv_path, ini_path, tmp_path, p=0.2))
        train = chronological_split(g)[0]
        train_path = tmp_path / "train_orig.csv"
        with open(train_path, "w") as fh:
            serialize_edge_stream(train, fh)
        code = cli_main(
            [
                "audit",
                "--original", str(train_path),
                "--poisoned", str(result.outdir / "train_poisoned.csv"),
                "--manifest", str(result.outdir / "manifest.jsonl"),
                "--descriptor", str(ini_path),
                "--p", "0.2",
                "--window", "1000",
                "--ks-threshold", "0.3",
                "--json",
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["passed"] is True

    def test_audit_command_detects_tampering(self, synth_dataset, capsys):
        csv_path, ini_path, fmt, g, tmp_path = synth_dataset
        result = run_attack(make_config(csv_path, ini_path, tmp_path, p=0.2))
        train = chronological_split(g)[0]
        train_path = tmp_path / "train_orig.csv"
        with open(train_path, "w") as fh:
            serialize_edge_stream(train, fh)
        # drop one manifest line: reconstruction must notice
        lines = (result.outdir / "manifest.jsonl").read_text().splitlines()
        tampered = tmp_path / "tampered.jsonl"
        tampered.write_text("\n".join(lines[1:]) + "\n")
        code = cli_main(
            [
                "audit",
                "--original", str(train_path),
                "--poisoned", str(result.outdir / "train_poisoned.csv"),
                "--manifest", str(tampered),
                "--descriptor", str(ini_path),
                "--p", "0.2",
                "--window", "1000",
            ]
        )
        assert code == 2

    def test_catalog_command(self, capsys):
        assert cli_main(["catalog"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert len(data["strategies"]) == 16

    def test_benchmark_rejects_empty(self, capsys):
        assert cli_main(["benchmark", "--sizes", ""]) == 4

    def test_missing_dataset_is_input_error(self, capsys):
        assert cli_main(["attack", "--strategy", "Degree"]) == 4

    def test_infeasible_exit_code(self, tmp_path, capsys):
        g = from_edges([(0, 1, float(t)) for t in range(40)] + [(1, 0, 40.0 + t) for t in range(10)])
        csv_path, ini_path, fmt = write_dataset(tmp_path, g, name="tiny")
        code = cli_main(
            [
                "attack",
                "--dataset", str(csv_path),
                "--descriptor", str(ini_path),
                "--outdir", str(tmp_path / "out"),
                "--strategy", "Degree",
                "--p", "0.2",
                "--window", "1000",
                "--max-attempts", "2",
                "--draws-per-slot", "4",
            ]
        )
        assert code == 3
