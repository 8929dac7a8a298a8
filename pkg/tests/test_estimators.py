import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tgpoison import (
    EdgeSparsifier,
    SamplerParams,
    TemporalGraphPoisoner,
    insertion_positioning,
    select_removals,
    serialize_edge_stream,
    strategy_from_name,
    timestamp_selector,
    uniform_stream,
)


@pytest.fixture(scope="module")
def stream():
    return uniform_stream(2000, n_nodes=120, n_timestamps=200, seed=21, t_max=1000.0)


class TestSklearnProtocol:
    def test_get_set_params_round_trip(self):
        est = TemporalGraphPoisoner(strategy="TER", p=0.1, window=500.0)
        params = est.get_params()
        assert params["strategy"] == "TER" and params["window"] == 500.0
        est.set_params(p=0.4)
        assert est.p == 0.4

    def test_clone_preserves_params(self):
        est = EdgeSparsifier(strategy="TPR-Cosine", p=0.2, seed=3)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_transform_before_fit_raises(self, stream):
        with pytest.raises(NotFittedError):
            EdgeSparsifier().transform(stream)
        with pytest.raises(NotFittedError):
            TemporalGraphPoisoner().transform(stream)

    def test_rejects_non_graph_input(self):
        with pytest.raises(TypeError, match="TemporalGraph"):
            EdgeSparsifier().fit(np.zeros((3, 3)))

    def test_rejects_bad_fractions(self, stream):
        with pytest.raises(ValueError):
            EdgeSparsifier(p=1.5).fit(stream)
        with pytest.raises(ValueError):
            TemporalGraphPoisoner(knowledge=0.0, window=100.0).fit(stream)


class TestEdgeSparsifier:
    def test_matches_functional_path(self, stream):
        est = EdgeSparsifier(strategy="Degree", p=0.25).fit(stream)
        plan = select_removals(stream, strategy_from_name("Degree"), 0.25)
        assert est.removal_plan_ == plan
        assert est.n_removed_ == len(plan)
        out = est.transform(stream)
        assert out.edge_count == stream.edge_count - len(plan)

    def test_zero_rate_transform_is_identity(self, stream):
        est = EdgeSparsifier(p=0.0).fit(stream)
        assert est.transform(stream) is stream


class TestPoisoner:
    def test_fit_transform_matches_functional_path(self, stream):
        est = TemporalGraphPoisoner(strategy="Degree", p=0.25, window=1000.0, seed=3)
        poisoned = est.fit(stream).transform(stream)
        plan = select_removals(stream, strategy_from_name("Degree"), 0.25)
        insertion = timestamp_selector(stream, plan, SamplerParams(window=1000.0, rng_seed=3))
        expected = insertion_positioning(stream, plan, insertion)
        assert serialize_edge_stream(poisoned) == serialize_edge_stream(expected)
        assert est.audit_report_.passed
        assert poisoned.edge_count == stream.edge_count

    def test_audit_report_exposed(self, stream):
        est = TemporalGraphPoisoner(strategy="TER", p=0.1, window=1000.0, seed=1)
        est.fit(stream).transform(stream)
        report = est.audit_report_
        assert report.c1.removed == report.c1.inserted == 200
