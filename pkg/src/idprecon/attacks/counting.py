"""Recovering exact counts from noisy / noise-free threshold answers.

For a fixed predicate the sensitivity over ``b = 0..n-1`` forms three blocks
(clean one, noisy, clean zero) and the noisy block is the ``2k`` thresholds
``count-k .. count+k-1``. Every probe therefore confines the count to an
interval. The search keeps the interval of counts still possible and picks
the next ``b`` whose worst outcome leaves the fewest candidates.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core import BudgetExhausted, RangePredicate, predicate_triviality
from ..detectors import NoiseVerdict
from .probing import (
    INF,
    ApplicabilityError,
    AttackBudget,
    InconsistentObservations,
    PartialResult,
    Prober,
)

_SCAN_WIDTH = 16


@dataclass(frozen=True)
class CountBounds:
    lower: int
    upper: float  # may be inf when n is unknown

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"empty bounds [{self.lower}, {self.upper}]")

    @property
    def exact(self) -> bool:
        return self.lower == self.upper


def infer_from_verdict(verdict: NoiseVerdict, b: int, k: int, n: int | None = None) -> CountBounds:
    """Count bounds implied by one verdict at threshold ``b``."""
    top = INF if n is None else n
    if verdict is NoiseVerdict.NOISY:
        return CountBounds(max(0, b - k + 1), min(top, b + k))
    if verdict is NoiseVerdict.CLEAN_ONE:
        return CountBounds(max(0, b + k + 1), top)
    return CountBounds(0, min(top, b - k))


def check_applicable(prober: Prober) -> None:
    if prober.n < 2 * prober.k:
        raise ApplicabilityError(f"need n >= 2k, got n={prober.n}, k={prober.k}")


def _restrict(pieces, lo: int, hi: int) -> list[tuple[int, int]]:
    out = []
    for a, b in pieces:
        a, b = max(lo, a), min(hi, b)
        if a <= b:
            out.append((int(a), int(b)))
    return out


def apply_outcome(prober: Prober, b: int, outcome, lo: int, hi: int) -> tuple[int, int]:
    """Intersect ``[lo, hi]`` with what ``outcome`` at ``b`` allows."""
    pieces = _restrict(prober.allowed(b, outcome), lo, hi)
    if not pieces:
        raise InconsistentObservations(
            f"verdict {outcome!r} at b={b} contradicts count interval [{lo}, {hi}]"
        )
    if len(pieces) == 1:
        return pieces[0]
    return lo, hi  # not an interval; keep the hull


def _pieces(prober: Prober, b: int, lo: int, hi: int):
    """Partition of ``[lo, hi]`` by the possible outcomes at ``b``, or None if unusable."""
    k = prober.k
    if prober.unsigned:
        wlo, whi = max(lo, b - k + 1), min(hi, b + k)
        if wlo > whi or (wlo == lo and whi == hi):
            return [(lo, hi)]
        if wlo != lo and whi != hi:
            return None
        rest = (whi + 1, hi) if wlo == lo else (lo, wlo - 1)
        return [(wlo, whi), rest]
    parts = ((lo, min(hi, b - k)), (max(lo, b - k + 1), min(hi, b + k)), (max(lo, b + k + 1), hi))
    return [p for p in parts if p[0] <= p[1]]


def _cost(pieces, t) -> int:
    worst = 0
    for a, b in pieces:
        if t is not None and (b < t or a >= t):
            continue
        worst = max(worst, b - a + 1)
    return worst


def _candidates(prober: Prober, lo: int, hi: int, t):
    k, top = prober.k, prober.n - 1
    if hi - lo <= 4 * k + _SCAN_WIDTH:
        raw = range(lo - k, hi + k)
    else:
        mid = (lo + hi) // 2
        raw = [mid + j for j in range(-k - 1, k + 2)] + [lo + k - 1, hi - k]
        if t is not None:
            raw += [t + k - 1, t - k - 1, t - k, t + k, t - 1, t]
    return sorted({b for b in raw if 0 <= b <= top}, reverse=True)


def choose_probe(prober: Prober, lo: int, hi: int, t: int | None = None) -> int | None:
    """Threshold whose worst outcome leaves the least uncertainty; ties go to larger ``b``."""
    current = _cost([(lo, hi)], t)
    best, best_cost = None, current
    for b in _candidates(prober, lo, hi, t):
        pieces = _pieces(prober, b, lo, hi)
        if pieces is None:
            continue
        c = _cost(pieces, t)
        if c < best_cost:
            best, best_cost = b, c
            if c == 0:
                break
    return best


def narrow(
    prober: Prober,
    predicate: RangePredicate,
    lo: int,
    hi: int,
    threshold: int | None = None,
) -> tuple[int, int]:
    """Probe until the count is exact, or until ``count >= threshold`` is settled.

    ``[lo, hi]`` must already contain the true count.
    """
    for b, out in prober.known(predicate).items():
        lo, hi = apply_outcome(prober, b, out, lo, hi)
    while _cost([(lo, hi)], threshold) > 0 and lo < hi:
        b = choose_probe(prober, lo, hi, threshold)
        if b is None:
            raise ApplicabilityError(f"no informative threshold for counts [{lo}, {hi}] with n={prober.n}")
        try:
            out = prober.probe(predicate, b)
        except BudgetExhausted as e:
            raise PartialResult(str(e), CountBounds(lo, hi)) from e
        lo, hi = apply_outcome(prober, b, out, lo, hi)
    return lo, hi


def _count_linear(prober: Prober, predicate: RangePredicate) -> int:
    # Algorithm 1 as stated: increase b until the noisy/clean pattern flips
    n, k = prober.n, prober.k

    def look(b):
        try:
            return prober.probe(predicate, b)
        except BudgetExhausted as e:
            raise PartialResult(str(e), CountBounds(0, n)) from e

    if prober.truthful:
        for b in range(n):
            if look(b) is NoiseVerdict.CLEAN_ZERO:
                return b
        return n
    prev = prober.is_noisy(look(0))
    for b in range(1, n):
        cur = prober.is_noisy(look(b))
        if cur and not prev:
            return b - 1 + k + 1
        if prev and not cur:
            return b - k
        prev = cur
    return k


def count_reconstruct(
    custodian=None,
    predicate: RangePredicate | None = None,
    k: int = 1,
    eps_share: float | None = None,
    search: str = "binary",
    *,
    prober: Prober | None = None,
    detector=None,
) -> int:
    """Exact number of records satisfying ``predicate``.

    ``eps_share`` is split evenly over the at most ``n`` probes. Pass a
    ``prober`` to share its cache, counters and budget across calls.
    """
    if predicate is None:
        raise ValueError("predicate is required")
    if prober is None:
        n = custodian.size_query()
        per_call = 1e-10 if eps_share is None else eps_share / max(n, 1)
        budget = AttackBudget(eps_per_call=per_call)
        if detector is not None:
            budget.detector = detector
        prober = Prober(custodian, k, budget)
    check_applicable(prober)
    trivial = predicate_triviality(prober.schema, predicate)
    if trivial is not None:
        return prober.n if trivial else 0
    if search == "linear":
        return _count_linear(prober, predicate)
    if search != "binary":
        raise ValueError(f"unknown search mode {search!r}")
    lo, hi = narrow(prober, predicate, 0, prober.n)
    return lo


def boundary_count(k: int, lower_boundary: int | None = None, upper_boundary: int | None = None) -> int:
    """Count from a located boundary: clean at b and noisy at b+1, or noisy at b-1 and clean at b."""
    found = []
    if lower_boundary is not None:
        found.append(lower_boundary + k + 1)
    if upper_boundary is not None:
        found.append(upper_boundary - k)
    if not found:
        raise ValueError("need at least one boundary")
    if len(set(found)) > 1:
        raise InconsistentObservations(f"boundaries disagree: {found}")
    return found[0]

