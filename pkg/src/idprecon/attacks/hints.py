"""Hint leakage under empirical-neighbour style definitions.

When the mechanism may be chosen after looking at a hint ``H(D)``, the
constant mechanism that outputs the hint satisfies every pairwise
constraint with equality, for any epsilon, and so releases the hint.
With ``H`` equal to the protected neighbour pairs this releases the data.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

Record = tuple
Multiset = tuple  # sorted tuple of records


def as_multiset(rows: Iterable[Sequence]) -> Multiset:
    return tuple(sorted(tuple(r) for r in rows))


@dataclass(frozen=True)
class ConstantMechanism:
    output: Hashable

    def __call__(self, dataset=None) -> Hashable:
        return self.output

    def probability(self, dataset, outcome) -> float:
        return 1.0 if outcome == self.output else 0.0


def idp_neighbor_pairs(true_rows: Iterable[Sequence], domain: Iterable[Sequence]) -> frozenset:
    """Pairs ``(D, D')`` and ``(D', D)`` for every one-record replacement ``D'`` of ``D``."""
    d = as_multiset(true_rows)
    dom = [tuple(r) for r in domain]
    pairs = set()
    for pos in range(len(d)):
        for r in dom:
            if r == d[pos]:
                continue
            other = as_multiset(d[:pos] + (r,) + d[pos + 1:])
            pairs.add((d, other))
            pairs.add((other, d))
    return frozenset(pairs)


def bdp_neighbor_pairs(true_rows: Iterable[Sequence]) -> frozenset:
    """Same-size datasets over the true distinct records that differ in one record."""
    d = as_multiset(true_rows)
    distinct = sorted(set(d))
    sets = [as_multiset(c) for c in itertools.combinations_with_replacement(distinct, len(d))]
    pairs = set()
    for a in sets:
        for b in sets:
            if a != b and sum((Counter(a) - Counter(b)).values()) == 1:
                pairs.add((a, b))
    return frozenset(pairs)


def chooser(hint: Hashable) -> ConstantMechanism:
    """Mechanism selector that simply publishes its hint."""
    return ConstantMechanism(hint)


def satisfies_constraints(mech: ConstantMechanism, pairs: Iterable, eps: float) -> bool:
    bound = math.exp(eps)
    for d1, d2 in pairs:
        for outcome in (mech.output, None):
            if mech.probability(d1, outcome) > bound * mech.probability(d2, outcome):
                return False
    return True


def recover_from_idp_pairs(pairs: frozenset) -> Multiset | None:
    """The dataset common to every pair, if there is exactly one."""
    common = None
    for d1, d2 in pairs:
        members = {d1, d2}
        common = members if common is None else common & members
    if not common or len(common) != 1:
        return None
    return next(iter(common))


def recover_from_bdp_pairs(pairs: frozenset) -> set:
    return {r for d1, d2 in pairs for d in (d1, d2) for r in d}


@dataclass
class HintDemo:
    mechanism: ConstantMechanism
    constraints_hold: bool
    recovered: object


def hint_leakage_demo(
    hint: Hashable,
    pairs: Iterable = (),
    eps_values: Sequence[float] = (1e-10, 1e-3, 1.0, 10.0),
    recover: Callable | None = None,
) -> HintDemo:
    """Build the hint-publishing mechanism and check it against every pair."""
    mech = chooser(hint)
    pairs = list(pairs)
    ok = all(satisfies_constraints(mech, pairs, e) for e in eps_values)
    return HintDemo(mech, ok, recover(hint) if recover is not None else hint)
