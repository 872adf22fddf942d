"""Attacks on one individual: uniqueness, membership and attribute inference."""

from __future__ import annotations

from typing import Mapping

from ..core import RangePredicate, Schema
from ..detectors import NoiseVerdict
from .counting import check_applicable
from .probing import ApplicabilityError, AttackBudget, Prober
from .reconstruction import Grid, _attr_index, column_reconstruct

Target = Mapping[str | int, float] | RangePredicate


def target_predicate(schema: Schema, values: Target) -> RangePredicate:
    """Conjunction pinning each named attribute to one grid cell."""
    if isinstance(values, RangePredicate):
        return values
    conds = []
    for attr, v in values.items():
        i = _attr_index(schema, attr)
        spec = schema[i]
        conds.append(Grid.of(spec).cell(i, spec.encode(v) if isinstance(v, str) else float(v)))
    if not conds:
        raise ValueError("need at least one identifying attribute")
    return RangePredicate(tuple(conds))


def _prober(custodian, k, eps_per_call, prober, detector=None) -> Prober:
    if prober is not None:
        return prober
    budget = AttackBudget(eps_per_call=eps_per_call)
    if detector is not None:
        budget.detector = detector
    return Prober(custodian, k, budget)


def confirm_uniqueness(
    custodian=None,
    values: Target | None = None,
    k: int = 1,
    eps_per_call: float = 1e-10,
    *,
    prober: Prober | None = None,
    detector=None,
) -> bool:
    """True iff exactly one record matches; two protected decisions.

    Noisy at ``b = k`` puts the count in ``[1, 2k]``; clean at ``b = k + 1``
    rules out ``[2, 2k + 1]``, leaving only 1.
    """
    p = _prober(custodian, k, eps_per_call, prober, detector)
    pred = target_predicate(p.schema, values)
    if p.truthful:
        # unprotected: count > 0 and not count > 1
        above0, above1 = p.probe(pred, 0), p.probe(pred, 1)
        return above0 is NoiseVerdict.CLEAN_ONE and above1 is NoiseVerdict.CLEAN_ZERO
    if p.k + 1 > p.n - 1:
        raise ApplicabilityError(f"uniqueness probe b={p.k + 1} needs n >= k + 2, got n={p.n}")
    low, high = p.probe(pred, p.k), p.probe(pred, p.k + 1)
    return p.is_noisy(low) and not p.is_noisy(high)


def membership_inference(
    custodian=None,
    values: Target | None = None,
    k: int = 1,
    eps_per_call: float = 1e-10,
    *,
    prober: Prober | None = None,
    detector=None,
) -> bool:
    """Whether a target known to be unique in the population is in the data.

    Absent (count 0) is the only count that is noisy at ``b = k - 1`` and
    clean at ``b = k``. The unprotected baseline asks ``count > 0`` once.
    """
    p = _prober(custodian, k, eps_per_call, prober, detector)
    pred = target_predicate(p.schema, values)
    if p.truthful:
        return p.probe(pred, 0) is NoiseVerdict.CLEAN_ONE
    if p.k > p.n - 1:
        raise ApplicabilityError(f"membership probe b={p.k} needs n > k, got n={p.n}")
    low, high = p.probe(pred, p.k - 1), p.probe(pred, p.k)
    return not (p.is_noisy(low) and not p.is_noisy(high))


def attribute_inference(
    custodian=None,
    values: Target | None = None,
    attribute: int | str = 0,
    gamma: float | None = None,
    k: int = 1,
    eps_target: float | None = None,
    *,
    prober: Prober | None = None,
    budget: AttackBudget | None = None,
    group_size: int | None = 1,
) -> list[float]:
    """Values of ``attribute`` among records matching ``values``.

    ``group_size=1`` asserts the target is unique, which skips the group
    count; pass ``None`` to count the group first.
    """
    if prober is None:
        prober = Prober(custodian, k, budget if budget is not None else AttackBudget(
            eps_target=eps_target if eps_target is not None else float("inf")))
    check_applicable(prober)
    pred = target_predicate(prober.schema, values)
    return column_reconstruct(attribute=attribute, gamma=gamma, prober=prober,
                              group=pred, group_size=group_size)


def binary_attribute_inference(
    custodian=None,
    values: Target | None = None,
    attribute: int | str = 0,
    k: int = 1,
    eps_per_call: float = 1e-10,
    *,
    prober: Prober | None = None,
    positive: float | str = 1.0,
    negative: float | str = 0.0,
) -> float | str:
    """Two-valued attribute of a unique target via one uniqueness check.

    The target has ``positive`` iff the combination extended by it is unique.
    """
    p = _prober(custodian, k, eps_per_call, prober)
    i = _attr_index(p.schema, attribute)
    spec = p.schema[i]
    base = target_predicate(p.schema, values)
    v = spec.encode(positive) if isinstance(positive, str) else float(positive)
    pred = base.extend(*Grid.of(spec).cell(i, v))
    return positive if confirm_uniqueness(values=pred, prober=p) else negative
