"""Scikit-learn style estimators wrapping the attack primitives.

These make the perturbation pipeline compose with the wider ecosystem:
parameters live in ``__init__`` untouched (so ``get_params`` / ``set_params``
/ ``clone`` behave), ``fit`` computes the perturbation plans and stores them
as trailing-underscore attributes, and ``transform`` applies them to produce
a poisoned stream.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .audit import AuditThresholds, audit
from .manifest import insertion_records, removal_records
from .sampling import SamplerParams, insertion_positioning, timestamp_selector
from .sparsify import select_removals, strategy_from_name
from .tpr import TprParams
from .validation import check_fraction, check_positive, check_temporal_graph


class EdgeSparsifier(BaseEstimator, TransformerMixin):
    """Remove the highest temporal-importance edges from a training stream.

    Parameters mirror the functional API; ``fit`` scores the stream and fixes
    the removal plan, ``transform`` returns the sparsified stream.
    """

    def __init__(
        self,
        strategy="Degree",
        p=0.3,
        knowledge=1.0,
        alpha=0.85,
        beta=0.5,
        topk=None,
        epsilon=1e-12,
        combined_weight=0.5,
        seed=0,
    ):
        self.strategy = strategy
        self.p = p
        self.knowledge = knowledge
        self.alpha = alpha
        self.beta = beta
        self.topk = topk
        self.epsilon = epsilon
        self.combined_weight = combined_weight
        self.seed = seed

    def _strategy(self):
        return strategy_from_name(
            self.strategy,
            seed=self.seed,
            tpr=TprParams(alpha=self.alpha, beta=self.beta),
            topk=self.topk,
            epsilon=self.epsilon,
            combined_weight=self.combined_weight,
        )

    def fit(self, X, y=None):
        X = check_temporal_graph(X)
        check_fraction("p", self.p)
        check_fraction("knowledge", self.knowledge, low_open=True)
        self.removal_plan_ = select_removals(X, self._strategy(), self.p, self.knowledge)
        self.n_removed_ = len(self.removal_plan_)
        return self

    def transform(self, X):
        if not hasattr(self, "removal_plan_"):
            raise NotFittedError("call fit before transform")
        X = check_temporal_graph(X)
        if not self.removal_plan_.removed_indices:
            return X
        return X.without_edges(self.removal_plan_.removed_indices)


class TemporalGraphPoisoner(BaseEstimator, TransformerMixin):
    """Full two-phase perturbation: sparsify then insert adversarial negatives.

    ``fit`` fixes both plans; ``transform`` applies them and runs the
    independent constraint auditor, leaving the report on ``audit_report_``.
    """

    def __init__(
        self,
        strategy="TPR-Cosine",
        p=0.3,
        knowledge=1.0,
        alpha=0.85,
        beta=0.5,
        window=400.0,
        capacity=1,
        max_attempts=5,
        draws_per_slot=20,
        topk=None,
        epsilon=1e-12,
        combined_weight=0.5,
        ks_threshold=0.1,
        seed=0,
    ):
        self.strategy = strategy
        self.p = p
        self.knowledge = knowledge
        self.alpha = alpha
        self.beta = beta
        self.window = window
        self.capacity = capacity
        self.max_attempts = max_attempts
        self.draws_per_slot = draws_per_slot
        self.topk = topk
        self.epsilon = epsilon
        self.combined_weight = combined_weight
        self.ks_threshold = ks_threshold
        self.seed = seed

    def fit(self, X, y=None):
        X = check_temporal_graph(X)
        check_fraction("p", self.p)
        check_fraction("knowledge", self.knowledge, low_open=True)
        check_positive("window", self.window)
        strategy = strategy_from_name(
            self.strategy,
            seed=self.seed,
            tpr=TprParams(alpha=self.alpha, beta=self.beta),
            topk=self.topk,
            epsilon=self.epsilon,
            combined_weight=self.combined_weight,
        )
        self.removal_plan_ = select_removals(X, strategy, self.p, self.knowledge)
        params = SamplerParams(
            window=float(self.window),
            node_capacity=self.capacity,
            max_attempts=self.max_attempts,
            rng_seed=self.seed,
            draws_per_slot=self.draws_per_slot,
        )
        self.insertion_plan_ = timestamp_selector(X, self.removal_plan_, params)
        self._fitted_on_ = X
        return self

    def transform(self, X):
        if not hasattr(self, "insertion_plan_"):
            raise NotFittedError("call fit before transform")
        X = check_temporal_graph(X)
        poisoned = insertion_positioning(X, self.removal_plan_, self.insertion_plan_)
        thresholds = AuditThresholds(
            p=self.p,
            ks_threshold=self.ks_threshold,
            window=float(self.window),
            capacity=self.capacity,
        )
        self.audit_report_ = audit(
            X,
            poisoned,
            removal_records(self.removal_plan_, X),
            insertion_records(self.insertion_plan_, X, self.removal_plan_.strategy),
            thresholds,
        )
        return poisoned
