"""Experiment wiring: custodian + attacker + independent verification."""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..attacks import (
    AttackBudget,
    AttackError,
    Prober,
    ReconstructionReport,
    attribute_inference,
    bdp_enumerate_distinct,
    column_reconstruct,
    confirm_uniqueness,
    dataset_reconstruct,
    membership_inference,
    parse_detector,
)
from ..attacks.targeted import target_predicate
from ..core import AttributeSpec, BudgetExhausted, Dataset, PrivacyLedger, Schema, count_matching
from ..detectors import VarianceTestConfig, psi_statistics
from ..mechanisms import (
    BdpCustodian,
    DefenseMode,
    GlobalLaplaceCustodian,
    GroupIdpCustodian,
    TruthfulCustodian,
    sample_laplace,
)
from ..rng import Stream, derive_seed
from .loader import load_dataset

ATTACKS = (
    "reconstruct-dataset",
    "reconstruct-column",
    "membership",
    "uniqueness",
    "attribute-infer",
    "bdp-enumerate",
    "decision-rule-sim",
    "negative-control",
)


@dataclass
class ExperimentConfig:
    dataset: str | None = None
    schema: str | None = None
    k: int = 1
    eps_per_call: float = 1e-10
    eps_cap: float = math.inf
    seed: int = 0
    defense: str = "plain"  # a DefenseMode value, or "none" for the truthful baseline
    detector: str = "direct"
    attack: str = "reconstruct-dataset"
    attribute: str | int | None = None
    values: dict[str, Any] | None = None
    m: int = 1000
    trials: int = 2000
    n: int = 200  # synthetic size when no dataset path is given
    baseline: bool = False
    delimiter: str | None = None
    n_source: str = "query"  # "query" asks the custodian; "public" hands the attacker the true n

    def __post_init__(self):
        if self.attack not in ATTACKS:
            raise ValueError(f"unknown attack {self.attack!r}; choose from {', '.join(ATTACKS)}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.defense != "none":
            DefenseMode(self.defense)
        parse_detector(self.detector)
        if self.n_source not in ("query", "public"):
            raise ValueError(f"n_source must be 'query' or 'public', got {self.n_source!r}")


@dataclass
class RunReport:
    config: dict
    reconstruction: dict | None = None
    baseline: dict | None = None
    result: Any = None
    exact: bool | None = None
    verdicts: dict[str, int] = field(default_factory=dict)
    accuracy: float | None = None
    error: str | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)


def synthetic_schema(numeric_bits: int = 20) -> Schema:
    return Schema((
        AttributeSpec("amount", lower=0, upper=2**numeric_bits - 1),
        AttributeSpec.categorical("colour", ["red", "green", "blue", "grey"]),
        AttributeSpec("score", lower=0, upper=99),
    ))


def synthetic_dataset(n: int, seed: int, numeric_bits: int = 20, dup_fraction: float = 0.2) -> Dataset:
    """Three attributes (one categorical) with some rows duplicated."""
    rng = np.random.default_rng(derive_seed(seed, 1))
    schema = synthetic_schema(numeric_bits)
    rows = np.column_stack([
        rng.integers(0, 2**numeric_bits, n),
        rng.integers(0, 4, n),
        rng.integers(0, 100, n),
    ]).astype(np.float64)
    dups = int(n * dup_fraction)
    if dups and n > 1:
        rows[rng.choice(n, dups, replace=False)] = rows[rng.integers(0, n, dups)]
    return Dataset(schema, rows)


def _load(config: ExperimentConfig) -> Dataset:
    if config.dataset is None:
        return synthetic_dataset(config.n, config.seed)
    return load_dataset(config.dataset, config.schema, config.delimiter)


def make_custodian(data: Dataset, config: ExperimentConfig, seed: int | None = None):
    seed = derive_seed(config.seed, 2) if seed is None else seed
    ledger = PrivacyLedger(config.eps_cap)
    if config.attack == "negative-control":
        return GlobalLaplaceCustodian(data, config.k, DefenseMode.PLAIN, ledger, seed)
    if config.defense == "none":
        return TruthfulCustodian(data)
    return GroupIdpCustodian(data, config.k, DefenseMode(config.defense), ledger, seed)


def _budget(config: ExperimentConfig) -> AttackBudget:
    return AttackBudget(eps_target=config.eps_cap, eps_per_call=config.eps_per_call,
                        detector=parse_detector(config.detector))


def _prober(data: Dataset, config: ExperimentConfig, custodian) -> Prober:
    n = data.n if config.n_source == "public" else None
    return Prober(custodian, config.k, _budget(config), n=n)


def _fill(report: ReconstructionReport, prober: Prober, custodian) -> None:
    report.protected_queries = prober.protected_calls
    report.unprotected_queries = prober.unprotected_calls
    report.decisions = prober.decisions
    ledger = getattr(custodian, "ledger", None)
    report.budget_spent = ledger.spent if ledger is not None else 0.0


def tally(prober: Prober) -> dict[str, int]:
    c: Counter = Counter()
    for outcomes in prober._cache.values():
        for out in outcomes.values():
            c[getattr(out, "value", f"sensitivity-{out}")] += 1
    return dict(sorted(c.items()))


def _reconstruct(data: Dataset, config: ExperimentConfig, custodian, verdicts=None):
    prober = _prober(data, config, custodian)
    rep = ReconstructionReport()
    try:
        out = dataset_reconstruct(prober=prober, report=rep)
    finally:
        if verdicts is not None:
            verdicts.update(tally(prober))
    rep.budget_spent = getattr(custodian, "ledger", PrivacyLedger()).spent
    truth = data.row_multiset()
    for i, a in enumerate(data.schema.attributes):
        rep.exact[a.name] = rep.values[a.name] == sorted(data.column(i).tolist())
    rep.dataset = None
    return rep, out.row_multiset() == truth


def run_experiment(config: ExperimentConfig, data: Dataset | None = None) -> RunReport:
    """Run one attack and verify it against the plaintext, never the attacker's claims."""
    t0 = time.perf_counter()
    data = _load(config) if data is None else data
    report = RunReport(config=asdict(config))
    att = config.attack

    if att == "decision-rule-sim":
        report.accuracy = simulate_decision_rule(config.m, config.trials, config.seed)
        report.seconds = time.perf_counter() - t0
        return report

    if att == "bdp-enumerate":
        cust = BdpCustodian(data, PrivacyLedger(config.eps_cap), derive_seed(config.seed, 2))
        stats = bdp_enumerate_distinct(cust, eps_per_call=config.eps_per_call, with_stats=True)
        truth = set(data.row_multiset())
        report.result = sorted(list(r) for r in stats.records)
        report.exact = stats.records == truth
        report.reconstruction = ReconstructionReport(
            protected_queries=stats.queries, budget_spent=cust.ledger.spent).to_dict()
        report.seconds = time.perf_counter() - t0
        return report

    custodian = make_custodian(data, config)
    if att in ("reconstruct-dataset", "negative-control"):
        try:
            rep, exact = _reconstruct(data, config, custodian, report.verdicts)
            report.reconstruction = rep.to_dict()
            report.exact = exact
        except (AttackError, BudgetExhausted) as e:
            report.exact = False
            report.error = f"{type(e).__name__}: {e}"
        if config.baseline and att == "reconstruct-dataset":
            base_rep, base_exact = _reconstruct(data, config, TruthfulCustodian(data))
            report.baseline = base_rep.to_dict()
            report.baseline["exact_overall"] = base_exact
        report.seconds = time.perf_counter() - t0
        return report

    prober = _prober(data, config, custodian)
    schema = data.schema
    if att == "reconstruct-column":
        attr = 0 if config.attribute is None else config.attribute
        i = schema.index(attr) if isinstance(attr, str) else int(attr)
        values = column_reconstruct(attribute=i, prober=prober)
        report.result = values
        report.exact = values == sorted(data.column(i).tolist())
    elif att in ("membership", "uniqueness"):
        if not config.values:
            raise ValueError(f"{att} needs target values")
        pred = target_predicate(schema, config.values)
        c = count_matching(data, pred)
        if att == "membership":
            report.result = membership_inference(values=pred, prober=prober)
            report.exact = report.result == (c > 0)
        else:
            report.result = confirm_uniqueness(values=pred, prober=prober)
            report.exact = report.result == (c == 1)
    elif att == "attribute-infer":
        if not config.values or config.attribute is None:
            raise ValueError("attribute-infer needs target values and an attribute")
        pred = target_predicate(schema, config.values)
        i = schema.index(config.attribute) if isinstance(config.attribute, str) else int(config.attribute)
        values = attribute_inference(values=pred, attribute=i, prober=prober, group_size=None)
        report.result = values
        report.exact = values == sorted(data.rows[pred.mask(data.rows), i].tolist())
    rep = ReconstructionReport()
    _fill(rep, prober, custodian)
    report.reconstruction = rep.to_dict()
    report.verdicts = tally(prober)
    report.seconds = time.perf_counter() - t0
    return report


def simulate_decision_rule(
    m: int,
    trials: int,
    seed: int = 0,
    eps: float = 1.0,
    threshold: float = 5.0,
    chunk_values: int = 4_000_000,
) -> float:
    """Fraction of correct scale decisions, half the trials at each scale."""
    if trials % 2:
        raise ValueError("trials must be even so both scales get the same number")
    VarianceTestConfig(m=m, threshold=threshold, eps_total=eps)
    half = trials // 2
    rows = max(1, chunk_values // m)
    correct = 0
    for label, alpha in ((0, 1.0), (1, 2.0)):
        stream = Stream(derive_seed(seed, 3, label))
        scale = alpha * m / eps
        done = 0
        while done < half:
            r = min(rows, half - done)
            z = sample_laplace(scale, stream, r * m).reshape(r, m)
            psi = psi_statistics(z, eps)
            high = psi >= threshold
            correct += int(np.count_nonzero(high if label else ~high))
            done += r
    return correct / trials
