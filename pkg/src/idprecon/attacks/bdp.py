"""Distinct-record enumeration against the bootstrap Laplace mechanism.

The existence query over a region is noise-free exactly when no record or
every record lies in it, so an exact 0.0 prunes a region, an exact 1.0 says
the whole dataset is inside, and anything else means the region is mixed.
Regions are halved until they are single grid cells. Multiplicities are
never observable, so none are reported.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core import BudgetExhausted, RangePredicate, Schema
from ..detectors import NoiseVerdict, classify_direct
from .probing import PartialResult
from .reconstruction import Grid

NONE, ALL, MIXED = NoiseVerdict.CLEAN_ZERO, NoiseVerdict.CLEAN_ONE, NoiseVerdict.NOISY


@dataclass
class BdpEnumeration:
    records: set[tuple[float, ...]]
    queries: int
    inferred: int


def _sibling(parent: NoiseVerdict, first: NoiseVerdict) -> NoiseVerdict | None:
    """Status of the second half when it follows from the parent and first half."""
    if parent is ALL:
        return {NONE: ALL, ALL: NONE, MIXED: MIXED}[first]
    if parent is MIXED and first is NONE:
        return MIXED
    return None


def bdp_enumerate_distinct(
    custodian,
    schema: Schema | None = None,
    eps_per_call: float = 1e-10,
    *,
    with_stats: bool = False,
):
    """Exactly the set of distinct records, found by recursive midpoint bisection."""
    schema = schema if schema is not None else custodian.schema
    grids = [Grid.of(a) for a in schema.attributes]
    queries = inferred = 0

    def ask(box) -> NoiseVerdict:
        nonlocal queries
        conds = tuple(
            (i, g.cut(lo), g.cut(hi + 1))
            for i, (g, (lo, hi)) in enumerate(zip(grids, box))
            if lo > 0 or hi < g.size - 1
        )
        try:
            value = custodian.answer(RangePredicate(conds), eps_per_call).value
        except BudgetExhausted as e:
            raise PartialResult(str(e), found) from e
        queries += 1
        return classify_direct(value)

    found: set[tuple[float, ...]] = set()
    root = tuple((0, g.size - 1) for g in grids)
    stack = [(root, ask(root))]
    while stack:
        box, status = stack.pop()
        if status is NONE:
            continue
        widths = [hi - lo for lo, hi in box]
        axis = max(range(len(box)), key=lambda i: (widths[i], -i))
        if widths[axis] == 0:
            found.add(tuple(g.value(lo) for g, (lo, _) in zip(grids, box)))
            continue
        lo, hi = box[axis]
        mid = (lo + hi) // 2
        left = box[:axis] + ((lo, mid),) + box[axis + 1:]
        right = box[:axis] + ((mid + 1, hi),) + box[axis + 1:]
        first = ask(left)
        second = _sibling(status, first)
        if second is None:
            second = ask(right)
        else:
            inferred += 1
        stack.append((right, second))
        stack.append((left, first))
    if with_stats:
        return BdpEnumeration(found, queries, inferred)
    return found
