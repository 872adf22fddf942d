"""The data custodian: sensitivities and the noise-adding query mechanisms.

Group IDP answers a threshold query with ``Laplace(k_local / eps)`` noise,
which is literally zero when the k-local sensitivity is zero. The hardened
variant uses ``(1 + k_local) / eps`` so noise is never absent, and the two
rounding defenses post-process the plain answer.
"""

from __future__ import annotations

import enum
import itertools
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .core import (
    BudgetExhausted,
    Dataset,
    PrivacyLedger,
    RangePredicate,
    Schema,
    ThresholdQuery,
    count_matching,
    predicate_triviality,
    threshold_eval,
)
from .rng import Stream


class DefenseMode(enum.Enum):
    PLAIN = "plain"
    HARDENED = "hardened"
    ROUND_NEAREST = "round-nearest"
    ROUND_BINARY = "round-binary"


@dataclass(frozen=True)
class GroupIdpParams:
    k: int
    eps_star: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"group size k must be a positive integer, got {self.k}")
        if not self.eps_star > 0:
            raise ValueError(f"eps_star must be positive, got {self.eps_star}")


@dataclass(frozen=True)
class MechanismAnswer:
    value: float
    charged: float


class InstanceTooLarge(ValueError):
    """Brute-force enumeration refused."""


def k_local_sensitivity(dataset: Dataset, q: ThresholdQuery, k: int) -> int:
    """Closed form for the k-local sensitivity of a threshold count query (0 or 1)."""
    b = q.b
    if b < 0 or b >= dataset.n:
        return 0
    if predicate_triviality(dataset.schema, q.predicate) is not None:
        return 0
    c = count_matching(dataset, q.predicate)
    if c > b + k or c <= b - k:
        return 0
    return 1


def _domain_records(schema: Schema) -> list[tuple[float, ...]]:
    axes = [[a.grid_value(j) for j in range(a.grid_size)] for a in schema.attributes]
    return list(itertools.product(*axes))


def neighborhood_size(n: int, domain: int, k: int) -> int:
    return sum(math.comb(n, j) * domain**j for j in range(min(k, n) + 1))


def k_local_sensitivity_bruteforce(
    dataset: Dataset, q: ThresholdQuery, k: int, limit: int = 200_000
) -> int:
    """Maximum of ``|f(D) - f(D')|`` over every ``D'`` that modifies at most ``k`` records.

    Enumerates the full neighbourhood over the schema's finite grid domain.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    domain = _domain_records(dataset.schema)
    size = neighborhood_size(dataset.n, len(domain), k)
    if size > limit:
        raise InstanceTooLarge(
            f"neighbourhood has {size} datasets (n={dataset.n}, domain={len(domain)}, k={k}); limit {limit}"
        )
    pred = q.predicate
    rows = [tuple(r) for r in dataset.rows.tolist()]
    row_bits = [int(pred.holds(r)) for r in rows]
    dom_bits = [int(pred.holds(r)) for r in domain]
    base = sum(row_bits)
    f0 = int(base > q.b)
    n = len(rows)
    for j in range(1, min(k, n) + 1):
        for positions in itertools.combinations(range(n), j):
            removed = sum(row_bits[p] for p in positions)
            for replacement in itertools.product(dom_bits, repeat=j):
                if int(base - removed + sum(replacement) > q.b) != f0:
                    return 1
    return 0


def sample_laplace(scale: float, stream: Stream, size: int | None = None):
    """Inverse-CDF Laplace draw(s) with the given scale; scale 0 gives exact zeros."""
    if scale < 0 or math.isnan(scale):
        raise ValueError(f"scale must be non-negative, got {scale}")
    if size is None:
        if scale == 0:
            return 0.0
        d = stream.uniform() - 0.5
        return -math.copysign(scale, d) * math.log1p(-2.0 * abs(d))
    if scale == 0:
        return np.zeros(size)
    d = stream.uniforms(size) - 0.5
    return -np.copysign(scale, d) * np.log1p(-2.0 * np.abs(d))


def _post_process(value, mode: DefenseMode):
    if mode is DefenseMode.ROUND_NEAREST:
        return np.rint(value) + 0.0
    if mode is DefenseMode.ROUND_BINARY:
        return np.where(np.asarray(value) < 0.5, 0.0, 1.0) if np.ndim(value) else float(value >= 0.5)
    return value


def _noise_scale(sens: int, eps_star: float, mode: DefenseMode) -> float:
    if mode is DefenseMode.HARDENED:
        return (1 + sens) / eps_star
    return sens / eps_star


def answer_threshold(
    dataset: Dataset,
    q: ThresholdQuery,
    params: GroupIdpParams,
    mode: DefenseMode,
    ledger: PrivacyLedger,
    seed: int,
    call_index: int = 0,
) -> MechanismAnswer:
    if not ledger.charge(params.eps_star):
        raise BudgetExhausted(f"ledger refused {params.eps_star} (spent {ledger.spent}, cap {ledger.cap})")
    truth = threshold_eval(dataset, q)
    sens = k_local_sensitivity(dataset, q, params.k)
    noise = sample_laplace(_noise_scale(sens, params.eps_star, mode), Stream(seed, call_index))
    return MechanismAnswer(float(_post_process(truth + noise, mode)), params.eps_star)


def dataset_size_query(dataset: Dataset, ledger: PrivacyLedger | None = None) -> int:
    # zero sensitivity, so nothing is charged
    return dataset.n


def bootstrap_sensitivity(dataset: Dataset, predicate: RangePredicate) -> int:
    c = count_matching(dataset, predicate)
    return 0 if c == 0 or c == dataset.n else 1


def answer_bdp_existence(
    dataset: Dataset,
    predicate: RangePredicate,
    eps_star: float,
    ledger: PrivacyLedger,
    seed: int,
    call_index: int = 0,
) -> MechanismAnswer:
    if not ledger.charge(eps_star):
        raise BudgetExhausted(f"ledger refused {eps_star} (spent {ledger.spent}, cap {ledger.cap})")
    exists = int(count_matching(dataset, predicate) > 0)
    noise = sample_laplace(bootstrap_sensitivity(dataset, predicate) / eps_star, Stream(seed, call_index))
    return MechanismAnswer(exists + noise, eps_star)


class _CountCache:
    def __init__(self, dataset: Dataset, maxsize: int = 4096):
        self.dataset = dataset
        self.maxsize = maxsize
        self._store: OrderedDict[RangePredicate, int] = OrderedDict()

    def __call__(self, predicate: RangePredicate) -> int:
        try:
            self._store.move_to_end(predicate)
            return self._store[predicate]
        except KeyError:
            c = count_matching(self.dataset, predicate)
            self._store[predicate] = c
            if len(self._store) > self.maxsize:
                self._store.popitem(last=False)
            return c


class GroupIdpCustodian:
    """Holds the true data and answers threshold queries under Group IDP.

    Each call is charged to the ledger before anything is computed and gets
    a call index; its noise comes from stream ``(seed, call index)``.
    """

    def __init__(
        self,
        dataset: Dataset,
        k: int = 1,
        defense: DefenseMode = DefenseMode.PLAIN,
        ledger: PrivacyLedger | None = None,
        seed: int = 0,
    ):
        GroupIdpParams(k, 1.0)
        self.dataset = dataset
        self.k = int(k)
        self.defense = DefenseMode(defense)
        self.ledger = ledger if ledger is not None else PrivacyLedger()
        self.seed = int(seed)
        self.calls = 0
        self._lock = threading.Lock()
        self._count = _CountCache(dataset)

    @property
    def schema(self) -> Schema:
        return self.dataset.schema

    @property
    def n(self) -> int:
        return self.dataset.n

    def size_query(self) -> int:
        return dataset_size_query(self.dataset, self.ledger)

    def sensitivity(self, q: ThresholdQuery) -> int:
        b, n = q.b, self.dataset.n
        if b < 0 or b >= n or predicate_triviality(self.schema, q.predicate) is not None:
            return 0
        c = self._count(q.predicate)
        return 0 if c > b + self.k or c <= b - self.k else 1

    def _reserve(self, eps_star: float, times: int) -> int:
        with self._lock:
            if not self.ledger.charge(eps_star, times):
                raise BudgetExhausted(
                    f"ledger refused {times} x {eps_star} (spent {self.ledger.spent}, cap {self.ledger.cap})"
                )
            start = self.calls
            self.calls += times
            return start

    def answer(self, q: ThresholdQuery, eps_star: float) -> MechanismAnswer:
        start = self._reserve(eps_star, 1)
        truth = int(self._count(q.predicate) > q.b)
        scale = _noise_scale(self.sensitivity(q), eps_star, self.defense)
        value = truth + sample_laplace(scale, Stream(self.seed, start))
        return MechanismAnswer(float(_post_process(value, self.defense)), eps_star)

    def answer_many(self, q: ThresholdQuery, eps_star: float, times: int) -> np.ndarray:
        """``times`` independent calls of the mechanism, each charged ``eps_star``."""
        start = self._reserve(eps_star, times)
        truth = int(self._count(q.predicate) > q.b)
        scale = _noise_scale(self.sensitivity(q), eps_star, self.defense)
        values = truth + sample_laplace(scale, Stream(self.seed, start), size=times)
        return _post_process(values, self.defense)


class GlobalLaplaceCustodian(GroupIdpCustodian):
    """Negative control: global sensitivity 1, so every answer gets Laplace(1/eps)."""

    def sensitivity(self, q: ThresholdQuery) -> int:
        return 1

    def answer(self, q: ThresholdQuery, eps_star: float) -> MechanismAnswer:
        start = self._reserve(eps_star, 1)
        truth = int(self._count(q.predicate) > q.b)
        return MechanismAnswer(truth + sample_laplace(1.0 / eps_star, Stream(self.seed, start)), eps_star)

    def answer_many(self, q: ThresholdQuery, eps_star: float, times: int) -> np.ndarray:
        start = self._reserve(eps_star, times)
        truth = int(self._count(q.predicate) > q.b)
        return truth + sample_laplace(1.0 / eps_star, Stream(self.seed, start), size=times)


class TruthfulCustodian:
    """Unprotected baseline: every threshold query is answered exactly and counted."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.calls = 0
        self._lock = threading.Lock()
        self._count = _CountCache(dataset)

    @property
    def schema(self) -> Schema:
        return self.dataset.schema

    @property
    def n(self) -> int:
        return self.dataset.n

    def size_query(self) -> int:
        return self.dataset.n

    def answer(self, q: ThresholdQuery, eps_star: float = 0.0) -> MechanismAnswer:
        with self._lock:
            self.calls += 1
        return MechanismAnswer(float(self._count(q.predicate) > q.b), 0.0)


class BdpCustodian:
    """Answers existence queries with the bootstrap Laplace mechanism."""

    def __init__(self, dataset: Dataset, ledger: PrivacyLedger | None = None, seed: int = 0):
        self.dataset = dataset
        self.ledger = ledger if ledger is not None else PrivacyLedger()
        self.seed = int(seed)
        self.calls = 0
        self._lock = threading.Lock()

    @property
    def schema(self) -> Schema:
        return self.dataset.schema

    def answer(self, predicate: RangePredicate, eps_star: float) -> MechanismAnswer:
        with self._lock:
            index = self.calls
            ans = answer_bdp_existence(self.dataset, predicate, eps_star, self.ledger, self.seed, index)
            self.calls += 1
        return ans
