"""The attacker's handle on a custodian.

A ``Prober`` turns one threshold query into one *decision*: a direct read of
a single answer, a vote over repeated rounded answers, or a variance test
over many hardened answers. Decisions are cached per ``(predicate, b)`` so
nothing is paid for twice, and every call is counted and budgeted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from ..core import BudgetExhausted, PrivacyLedger, RangePredicate, ThresholdQuery
from ..detectors import (
    NoiseVerdict,
    ScaleVerdict,
    VarianceTestConfig,
    classify_direct,
    classify_repeated,
    psi_statistic,
)
from ..mechanisms import TruthfulCustodian

INF = math.inf


class AttackError(RuntimeError):
    """Base class for attack failures."""


class ApplicabilityError(AttackError):
    """The attack's preconditions do not hold (for example n < 2k)."""


class InconsistentObservations(AttackError):
    """Observed verdicts admit no count; some verdict was wrong."""


class PartialResult(AttackError):
    """Budget ran out mid-attack. ``partial`` holds what was learned so far."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class DirectDetector:
    """One mechanism call per decision, exact comparison against 0.0 and 1.0."""

    @property
    def name(self) -> str:
        return "direct"


@dataclass(frozen=True)
class RepeatedDetector:
    """``m`` calls per batch; clean only if every answer agrees.

    With ``confirmations > 0`` a clean batch is only trusted once that many
    further batches agree with it, which squares the false-clean rate.
    """

    m: int = 15
    confirmations: int = 1

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("repeated detector needs m >= 2")
        if self.confirmations < 0:
            raise ValueError("confirmations must be >= 0")

    @property
    def name(self) -> str:
        return f"repeated({self.m})"


@dataclass(frozen=True)
class VarianceDetector:
    """``m`` hardened answers per decision; reports only the sensitivity."""

    config: VarianceTestConfig = field(default_factory=VarianceTestConfig)

    @property
    def name(self) -> str:
        return f"variance({self.config.m})"


Detector = Union[DirectDetector, RepeatedDetector, VarianceDetector]


def parse_detector(text: str) -> Detector:
    """``direct``, ``repeated[:m]`` or ``variance[:m]``."""
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name == "direct":
        return DirectDetector()
    if name == "repeated":
        return RepeatedDetector(int(arg)) if arg else RepeatedDetector()
    if name == "variance":
        return VarianceDetector(VarianceTestConfig(m=int(arg))) if arg else VarianceDetector()
    raise ValueError(f"unknown detector {text!r}")


class ConstantSchedule:
    def __init__(self, eps: float):
        if not eps > 0:
            raise ValueError("per-call budget must be positive")
        self.eps = float(eps)

    def next(self) -> float:
        return self.eps


class GeometricSchedule:
    """Each decision gets ``ratio`` times the previous per-call budget.

    The total over any number of decisions stays below ``first / (1 - ratio)``
    per call of a decision.
    """

    def __init__(self, first: float, ratio: float = 0.5):
        if not first > 0 or not 0 < ratio < 1:
            raise ValueError("need first > 0 and 0 < ratio < 1")
        self.current = float(first)
        self.ratio = float(ratio)

    def next(self) -> float:
        eps = self.current
        if eps == 0.0:
            raise BudgetExhausted("geometric schedule underflowed to zero")
        self.current = eps * self.ratio
        return eps


@dataclass
class AttackBudget:
    eps_target: float = INF
    eps_per_call: float = 1e-10
    detector: Detector = field(default_factory=DirectDetector)
    schedule: str = "constant"

    def __post_init__(self):
        if not self.eps_per_call > 0:
            raise ValueError("eps_per_call must be positive")
        if self.eps_per_call > self.eps_target:
            raise ValueError("eps_per_call cannot exceed eps_target")
        if self.schedule not in ("constant", "geometric"):
            raise ValueError(f"unknown schedule {self.schedule!r}")

    def make_schedule(self):
        if self.schedule == "geometric":
            return GeometricSchedule(self.eps_per_call)
        return ConstantSchedule(self.eps_per_call)


# An outcome is a NoiseVerdict for signed detectors or an int sensitivity for the variance test.
Outcome = Union[NoiseVerdict, int]


class Prober:
    """Decision oracle over one custodian with verdict caching and counters.

    ``signed`` probers see which side of the noisy window the count lies on;
    the variance detector only learns whether the count is inside it. Against
    a truthful custodian the window is empty (``k`` acts as 0).
    """

    def __init__(self, custodian, k: int, budget: AttackBudget | None = None, n: int | None = None):
        self.custodian = custodian
        self.budget = budget if budget is not None else AttackBudget()
        self.truthful = isinstance(custodian, TruthfulCustodian)
        self.k = 0 if self.truthful else int(k)
        self.detector = DirectDetector() if self.truthful else self.budget.detector
        self.unsigned = isinstance(self.detector, VarianceDetector)
        self.schema = custodian.schema
        # n may be public knowledge; otherwise ask the (uncharged) size query
        self.n = custodian.size_query() if n is None else int(n)
        self.ledger = PrivacyLedger(self.budget.eps_target)
        self.schedule = self.budget.make_schedule()
        self.protected_calls = 0
        self.unprotected_calls = 0
        self.decisions = 0
        self._cache: dict[RangePredicate, dict[int, Outcome]] = {}

    @property
    def calls(self) -> int:
        return self.protected_calls + self.unprotected_calls

    @property
    def spent(self) -> float:
        return self.ledger.spent

    def known(self, predicate: RangePredicate) -> dict[int, Outcome]:
        return self._cache.get(predicate, {})

    def probe(self, predicate: RangePredicate, b: int) -> Outcome:
        cached = self._cache.get(predicate)
        if cached is not None and b in cached:
            return cached[b]
        q = ThresholdQuery(predicate, int(b))
        out = self._decide(q)
        self._cache.setdefault(predicate, {})[int(b)] = out
        self.decisions += 1
        return out

    def _check(self, eps: float, times: int) -> None:
        if not self.ledger.can_charge(eps, times):
            raise BudgetExhausted(
                f"attack budget {self.ledger.cap} would be exceeded (spent {self.ledger.spent})"
            )

    def _decide(self, q: ThresholdQuery) -> Outcome:
        if self.truthful:
            self.unprotected_calls += 1
            return classify_direct(self.custodian.answer(q).value)
        eps = self.schedule.next()
        det = self.detector
        if isinstance(det, DirectDetector):
            self._check(eps, 1)
            value = self.custodian.answer(q, eps).value
            self._record(eps, 1)
            return classify_direct(value)
        if isinstance(det, RepeatedDetector):
            first = None
            for _ in range(det.confirmations + 1):
                self._check(eps, det.m)
                answers = self.custodian.answer_many(q, eps, det.m)
                self._record(eps, det.m)
                verdict = classify_repeated(answers)
                if verdict is NoiseVerdict.NOISY or (first is not None and verdict is not first):
                    return NoiseVerdict.NOISY
                first = verdict
            return first
        m = det.config.m
        self._check(eps, m)
        samples = self.custodian.answer_many(q, eps, m)
        self._record(eps, m)
        psi = psi_statistic(samples, eps * m, m)
        return ScaleVerdict.HIGH_SCALE.value if psi >= det.config.threshold else ScaleVerdict.LOW_SCALE.value

    def _record(self, eps: float, times: int) -> None:
        self.ledger.charge(eps, times)
        self.protected_calls += times

    def is_noisy(self, outcome: Outcome) -> bool:
        if self.unsigned:
            return outcome == 1
        return outcome is NoiseVerdict.NOISY

    def allowed(self, b: int, outcome: Outcome) -> list[tuple[float, float]]:
        """Count values consistent with ``outcome`` at threshold ``b``, as intervals."""
        k = self.k
        if self.unsigned:
            if outcome == 1:
                return [(b - k + 1, b + k)]
            return [(-INF, b - k), (b + k + 1, INF)]
        if outcome is NoiseVerdict.NOISY:
            return [(b - k + 1, b + k)]
        if outcome is NoiseVerdict.CLEAN_ONE:
            return [(b + k + 1, INF)]
        return [(-INF, b - k)]
