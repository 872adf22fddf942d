import itertools

from idprecon.attacks.hints import (
    ConstantMechanism,
    as_multiset,
    bdp_neighbor_pairs,
    hint_leakage_demo,
    idp_neighbor_pairs,
    recover_from_bdp_pairs,
    recover_from_idp_pairs,
    satisfies_constraints,
)

DOMAIN = [(v,) for v in range(4)]


def test_constant_mechanism_meets_any_epsilon():
    mech = ConstantMechanism("h")
    pairs = [((1,), (2,)), ((2,), (1,))]
    for eps in (1e-12, 1e-3, 5.0):
        assert satisfies_constraints(mech, pairs, eps)


def test_idp_hint_recovers_dataset():
    data = [(1,), (3,), (3,)]
    pairs = idp_neighbor_pairs(data, DOMAIN)
    demo = hint_leakage_demo(pairs, pairs, recover=recover_from_idp_pairs)
    assert demo.constraints_hold
    assert demo.recovered == as_multiset(data)


def test_idp_pairs_shape():
    pairs = idp_neighbor_pairs([(0,), (2,)], DOMAIN)
    assert all((b, a) in pairs for a, b in pairs)
    # each of 2 positions can move to 3 other values; some coincide as multisets
    assert len({b for a, b in pairs if a == ((0,), (2,))}) == 6


def test_bdp_hint_recovers_distinct_records():
    data = [(1,), (1,), (3,)]
    pairs = bdp_neighbor_pairs(data)
    demo = hint_leakage_demo(pairs, pairs, recover=recover_from_bdp_pairs)
    assert demo.constraints_hold
    assert demo.recovered == {(1,), (3,)}


def test_recover_ambiguous_returns_none():
    assert recover_from_idp_pairs(frozenset()) is None
    a, b, c = ((0,),), ((1,),), ((2,),)
    assert recover_from_idp_pairs(frozenset({(a, b), (b, c), (c, a)})) is None


def test_hint_demo_default_recovery_is_identity():
    demo = hint_leakage_demo("anything")
    assert demo.recovered == "anything" and demo.constraints_hold
    assert demo.mechanism() == "anything"


def test_all_small_datasets_leak():
    for data in itertools.combinations_with_replacement(DOMAIN, 3):
        pairs = idp_neighbor_pairs(data, DOMAIN)
        assert recover_from_idp_pairs(pairs) == as_multiset(data)
