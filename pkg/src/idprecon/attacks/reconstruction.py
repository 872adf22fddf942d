"""Column and full-dataset reconstruction.

A column is recovered from its cumulative counts ``C(j)``, the number of
records (inside an optional group) whose value lies below grid point ``j``.
Sweeping from the top, the largest ``j`` with ``C(j) < s0`` marks the
largest remaining value and ``s0 - C(j)`` is its multiplicity. Range
endpoints sit halfway between grid points so float rounding of the grid
never moves a record across a cut.
"""

from __future__ import annotations

import bisect
import time
from dataclasses import dataclass, field

from ..core import AttributeSpec, BudgetExhausted, Dataset, RangePredicate, predicate_triviality
from .counting import check_applicable, count_reconstruct, narrow
from .probing import AttackBudget, InconsistentObservations, PartialResult, Prober


@dataclass
class ReconstructionReport:
    values: dict[str, list[float]] = field(default_factory=dict)
    protected_queries: int = 0
    unprotected_queries: int = 0
    decisions: int = 0
    budget_spent: float = 0.0
    exact: dict[str, bool] = field(default_factory=dict)
    attribute_queries: dict[str, int] = field(default_factory=dict)
    distinct_values: dict[str, int] = field(default_factory=dict)
    dataset: Dataset | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "values": {k: list(v) for k, v in self.values.items()},
            "protected_queries": self.protected_queries,
            "unprotected_queries": self.unprotected_queries,
            "decisions": self.decisions,
            "budget_spent": self.budget_spent,
            "exact": dict(self.exact),
            "attribute_queries": dict(self.attribute_queries),
            "distinct_values": dict(self.distinct_values),
            "seconds": self.seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReconstructionReport":
        return cls(
            values={k: list(v) for k, v in d.get("values", {}).items()},
            protected_queries=d.get("protected_queries", 0),
            unprotected_queries=d.get("unprotected_queries", 0),
            decisions=d.get("decisions", 0),
            budget_spent=d.get("budget_spent", 0.0),
            exact=dict(d.get("exact", {})),
            attribute_queries=dict(d.get("attribute_queries", {})),
            distinct_values=dict(d.get("distinct_values", {})),
            seconds=d.get("seconds", 0.0),
        )


@dataclass(frozen=True)
class Grid:
    """Values ``lower + j * gamma`` for ``j`` in ``0..size-1``."""

    lower: float
    gamma: float
    size: int

    @classmethod
    def of(cls, spec: AttributeSpec, gamma: float | None = None) -> "Grid":
        g = spec.precision if gamma is None else float(gamma)
        size = int((spec.upper - spec.lower) / g + 1e-9) + 1
        return cls(spec.lower, g, size)

    def value(self, j: int) -> float:
        v = self.lower + j * self.gamma
        r = round(v)
        return float(r) if abs(v - r) < 1e-9 * max(1.0, abs(v)) else v

    def cut(self, j: int) -> float:
        # boundary just below grid point j
        return self.lower + (j - 0.5) * self.gamma

    def cell(self, attr: int, value: float) -> tuple[int, float, float]:
        return attr, value - 0.5 * self.gamma, value + 0.5 * self.gamma


class _Staircase:
    """Monotone bounds on a non-decreasing integer function from sparse facts."""

    def __init__(self):
        self._lo_pos: list[int] = []
        self._lo_val: list[int] = []
        self._hi_pos: list[int] = []
        self._hi_val: list[int] = []

    def lower(self, j: int) -> int:
        i = bisect.bisect_right(self._lo_pos, j) - 1
        return self._lo_val[i] if i >= 0 else 0

    def upper(self, j: int, default: int) -> int:
        i = bisect.bisect_left(self._hi_pos, j)
        return self._hi_val[i] if i < len(self._hi_pos) else default

    def add(self, j: int, lo: int, hi: int) -> None:
        # lower facts: keep values strictly increasing with position
        if lo > self.lower(j):
            i = bisect.bisect_left(self._lo_pos, j)
            end = i
            while end < len(self._lo_pos) and self._lo_val[end] <= lo:
                end += 1
            self._lo_pos[i:end] = [j]
            self._lo_val[i:end] = [lo]
        # upper facts: also strictly increasing with position
        i = bisect.bisect_left(self._hi_pos, j)
        if i < len(self._hi_pos) and self._hi_val[i] <= hi:
            return
        start = i
        while start > 0 and self._hi_val[start - 1] >= hi:
            start -= 1
        end = i + 1 if i < len(self._hi_pos) and self._hi_pos[i] == j else i
        self._hi_pos[start:end] = [j]
        self._hi_val[start:end] = [hi]

    def last_below(self, s: int) -> int | None:
        """Largest known position whose upper bound is < s."""
        i = bisect.bisect_left(self._hi_val, s) - 1
        return self._hi_pos[i] if i >= 0 else None


def _range_pred(group: RangePredicate | None, attr: int, u: float, v: float) -> RangePredicate:
    if group is None:
        return RangePredicate.single(attr, u, v)
    return group.extend(attr, u, v)


def _sweep_binary(prober: Prober, attr: int, grid: Grid, group, size: int) -> list[tuple[float, int]]:
    n = grid.size
    base = grid.cut(0)
    stairs = _Staircase()
    stairs.add(0, 0, 0)
    stairs.add(n, size, size)
    out = []
    s0, top = size, n

    def count_bounds(j, threshold=None):
        lo, hi = stairs.lower(j), min(stairs.upper(j, size), s0)
        if lo == hi:
            return lo, hi
        pred = _range_pred(group, attr, base, grid.cut(j))
        trivial = predicate_triviality(prober.schema, pred)
        if trivial is not None:
            c = prober.n if trivial else 0
            if not lo <= c <= hi:
                raise InconsistentObservations(f"count {c} of a trivial predicate outside [{lo}, {hi}]")
            lo = hi = c
        else:
            lo, hi = narrow(prober, pred, lo, hi, threshold)
        stairs.add(j, lo, hi)
        return lo, hi

    while s0 > 0:
        left = stairs.last_below(s0)
        left = 0 if left is None else left
        right = top
        while right - left > 1:
            mid = (left + right) // 2
            lo, _ = count_bounds(mid, s0)
            if lo >= s0:
                right = mid
            else:
                left = mid
        s1, _ = count_bounds(left)
        if s1 >= s0:
            raise InconsistentObservations(f"count did not drop below {s0} at grid index {left}")
        out.append((grid.value(left), s0 - s1))
        s0, top = s1, left
    return out


def _sweep_linear(prober: Prober, attr: int, grid: Grid, group, size: int) -> list[tuple[float, int]]:
    # Algorithm 2 as stated: lower v one step at a time
    out = []
    s0, base = size, grid.cut(0)
    j = grid.size
    while s0 != 0:
        j -= 1
        if j < 0:
            raise InconsistentObservations(f"{s0} records left after sweeping the whole domain")
        if j == 0:
            s1 = 0
        else:
            s1 = count_reconstruct(predicate=_range_pred(group, attr, base, grid.cut(j)),
                                   k=prober.k, prober=prober, search="linear")
        if s1 != s0:
            out.append((grid.value(j), s0 - s1))
            s0 = s1
    return out


def _sweep(prober, attr, grid, group, size, search) -> list[tuple[float, int]]:
    if size == 0:
        return []
    try:
        if search == "binary":
            return _sweep_binary(prober, attr, grid, group, size)
        if search == "linear":
            return _sweep_linear(prober, attr, grid, group, size)
    except BudgetExhausted as e:
        raise PartialResult(str(e)) from e
    raise ValueError(f"unknown search mode {search!r}")


def discover_bounds(prober: Prober, attr: int, gamma: float) -> Grid:
    """Start from [-1, 1) and double both endpoints until every record is inside."""
    lo, hi = -1.0, 1.0
    while True:
        c = count_reconstruct(predicate=RangePredicate.single(attr, lo, hi), k=prober.k, prober=prober)
        if c >= prober.n:
            break
        lo, hi = lo * 2, hi * 2
    return Grid(lo, gamma, int((hi - lo) / gamma + 1e-9))


def _make_prober(custodian, k, budget, prober) -> Prober:
    if prober is not None:
        return prober
    return Prober(custodian, k, budget if budget is not None else AttackBudget())


def column_reconstruct(
    custodian=None,
    attribute: int | str = 0,
    gamma: float | None = None,
    k: int = 1,
    eps_target: float | None = None,
    *,
    budget: AttackBudget | None = None,
    prober: Prober | None = None,
    group: RangePredicate | None = None,
    group_size: int | None = None,
    search: str = "binary",
    bounds: str = "schema",
) -> list[float]:
    """Sorted multiset of an attribute's values, each within ``gamma`` of the truth.

    Without an explicit ``budget``, the per-call share follows
    ``min(1e-10, eps_target / ((upper - lower) / gamma)) / n``.
    """
    if prober is None and budget is None and eps_target is not None:
        spec = custodian.schema[_attr_index(custodian.schema, attribute)]
        g = spec.precision if gamma is None else gamma
        n = custodian.size_query()
        share = min(1e-10, eps_target / max((spec.upper - spec.lower) / g, 1.0))
        budget = AttackBudget(eps_target=eps_target, eps_per_call=share / max(n, 1))
    prober = _make_prober(custodian, k, budget, prober)
    check_applicable(prober)
    attr = _attr_index(prober.schema, attribute)
    if bounds == "discover":
        grid = discover_bounds(prober, attr, prober.schema[attr].precision if gamma is None else gamma)
    else:
        grid = Grid.of(prober.schema[attr], gamma)
    size = prober.n if group_size is None else group_size
    if group is not None and group_size is None:
        size = count_reconstruct(predicate=group, k=prober.k, prober=prober)
    pairs = _sweep(prober, attr, grid, group, size, search)
    return sorted(v for v, c in pairs for _ in range(c))


def _attr_index(schema, attribute) -> int:
    if isinstance(attribute, str):
        return schema.index(attribute)
    schema.check_index(attribute)
    return int(attribute)


def default_order(schema) -> list[int]:
    """Ascending domain size; the attacker cannot see distinct counts in advance."""
    return sorted(range(len(schema)), key=lambda i: (Grid.of(schema[i]).size, i))


def dataset_reconstruct(
    custodian=None,
    k: int = 1,
    eps_target: float | None = None,
    order: list[int | str] | None = None,
    *,
    budget: AttackBudget | None = None,
    prober: Prober | None = None,
    search: str = "binary",
    report: ReconstructionReport | None = None,
) -> Dataset:
    """Recover the whole table up to row order, one attribute at a time.

    Each later attribute is swept once per distinct combination of the
    attributes already recovered, restricted to that combination.
    Pass ``report`` to collect per-attribute query counts.
    """
    if prober is None and budget is None and eps_target is not None:
        budget = AttackBudget(eps_target=eps_target)
    prober = _make_prober(custodian, k, budget, prober)
    check_applicable(prober)
    schema = prober.schema
    attrs = [_attr_index(schema, a) for a in (order if order is not None else default_order(schema))]
    if sorted(attrs) != list(range(len(schema))):
        raise ValueError("order must list every attribute exactly once")
    report = report if report is not None else ReconstructionReport()
    t0 = time.perf_counter()
    grids = {i: Grid.of(schema[i]) for i in attrs}
    combos: list[tuple[tuple[float, ...], int]] = [((), prober.n)]
    constant: set[int] = set()
    for level, attr in enumerate(attrs):
        before = prober.calls
        nxt = []
        for prefix, size in combos:
            group = None
            for a, v in zip(attrs[:level], prefix):
                if a in constant:
                    continue
                cond = grids[a].cell(a, v)
                group = RangePredicate((cond,)) if group is None else group.extend(*cond)
            pairs = _sweep(prober, attr, grids[attr], group, size, search)
            if sum(c for _, c in pairs) != size:
                raise InconsistentObservations(
                    f"attribute {schema[attr].name}: group counts sum to {sum(c for _, c in pairs)}, expected {size}"
                )
            nxt.extend((prefix + (v,), c) for v, c in sorted(pairs))
        combos = nxt
        values = sorted({p[level] for p, _ in combos})
        if len(values) == 1:
            constant.add(attr)
        name = schema[attr].name
        report.attribute_queries[name] = prober.calls - before
        report.distinct_values[name] = len(values)
        report.values[name] = sorted(p[level] for p, c in combos for _ in range(c))
    rows = []
    inverse = [attrs.index(i) for i in range(len(schema))]
    for prefix, c in combos:
        row = [prefix[inverse[i]] for i in range(len(schema))]
        rows.extend([row] * c)
    result = Dataset(schema, rows)
    report.dataset = result
    report.protected_queries = prober.protected_calls
    report.unprotected_queries = prober.unprotected_calls
    report.decisions = prober.decisions
    report.budget_spent = prober.spent
    report.seconds = time.perf_counter() - t0
    return result
