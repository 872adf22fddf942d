"""End-to-end acceptance suite, one test per criterion.

Each test prints a PASS/FAIL line; the lines are repeated in the terminal
summary. Criterion 10 needs the bank marketing CSV and is skipped unless
``IDPRECON_BANKING_CSV`` points at it.
"""

import itertools
import math
import os
import time

import numpy as np
import pytest

from idprecon.attacks import (
    AttackBudget,
    DirectDetector,
    RepeatedDetector,
    ReconstructionReport,
    VarianceDetector,
    bdp_enumerate_distinct,
    confirm_uniqueness,
    dataset_reconstruct,
    membership_inference,
)
from idprecon.core import (
    AttributeSpec,
    Dataset,
    RangePredicate,
    Schema,
    ThresholdQuery,
    count_matching,
)
from idprecon.attacks.targeted import target_predicate
from idprecon.detectors import VarianceTestConfig, psi_statistics
from idprecon.harness.experiments import (
    ExperimentConfig,
    run_experiment,
    simulate_decision_rule,
    synthetic_dataset,
)
from idprecon.mechanisms import (
    BdpCustodian,
    DefenseMode,
    GroupIdpCustodian,
    TruthfulCustodian,
    k_local_sensitivity,
    k_local_sensitivity_bruteforce,
    sample_laplace,
)
from idprecon.rng import Stream, derive_seed

KS = (1, 2, 5)


def _suite(max_n: int, runs: int = 50):
    """Seeded (k, dataset) pairs: three attributes, one categorical, 2^20 numeric domain."""
    rng = np.random.default_rng(20240601)
    for i in range(runs):
        k = KS[i % 3]
        n = int(rng.integers(2 * k, max_n + 1))
        yield i, k, synthetic_dataset(n, seed=i, numeric_bits=20)


def _round_trip(defense, detector, max_n, eps_per_call=1e-10):
    failures, worst_budget = [], 0.0
    for i, k, data in _suite(max_n):
        cust = GroupIdpCustodian(data, k, defense, seed=derive_seed(i, 99))
        rep = ReconstructionReport()
        budget = AttackBudget(eps_target=1e-3, eps_per_call=eps_per_call, detector=detector)
        try:
            out = dataset_reconstruct(cust, k=k, budget=budget, report=rep)
            ok = out.row_multiset() == data.row_multiset()
        except Exception as e:  # a failed run counts against the criterion
            ok = False
            rep.budget_spent = cust.ledger.spent
            print(f"run {i}: {type(e).__name__}: {e}")
        worst_budget = max(worst_budget, cust.ledger.spent)
        if not ok or cust.ledger.spent >= 1e-3:
            failures.append((i, k, data.n))
    return failures, worst_budget


def test_c01_sensitivity_oracle(acceptance):
    t0 = time.perf_counter()
    schema = Schema((AttributeSpec("x", lower=0, upper=3),))
    checked = mismatches = 0
    for n in range(7):
        for values in itertools.combinations_with_replacement(range(4), n):
            d = Dataset(schema, [[v] for v in values])
            for u, v in itertools.combinations(range(5), 2):
                pred = RangePredicate.single(0, u, v)
                for k in (1, 2):
                    for b in range(-1, n + 1):
                        q = ThresholdQuery(pred, b)
                        checked += 1
                        mismatches += k_local_sensitivity(d, q, k) != k_local_sensitivity_bruteforce(d, q, k)
    secs = time.perf_counter() - t0
    ok = mismatches == 0 and secs < 60
    acceptance(1, ok, f"{checked} instances, {mismatches} mismatches, {secs:.1f}s")
    assert ok


def test_c02_exact_reconstruction(acceptance):
    t0 = time.perf_counter()
    failures, worst = _round_trip(DefenseMode.PLAIN, DirectDetector(), 500)
    secs = time.perf_counter() - t0
    ok = not failures and worst < 1e-3 and secs < 300
    acceptance(2, ok, f"{50 - len(failures)}/50 exact, max budget {worst:.3g}, {secs:.1f}s")
    assert ok, failures


REFERENCE = {10: 0.8030245, 100: 0.9882165}


def test_c03_decision_rule_accuracy(acceptance):
    t0 = time.perf_counter()
    acc = {m: simulate_decision_rule(m, 200_000, seed=m) for m in (10, 100, 1000)}
    secs = time.perf_counter() - t0
    ok = (all(abs(acc[m] - ref) <= 0.01 for m, ref in REFERENCE.items())
          and acc[1000] >= 0.9999 and secs < 120)
    acceptance(3, ok, ", ".join(f"m={m}: {100 * a:.3f}%" for m, a in acc.items()) + f", {secs:.1f}s")
    assert ok


def test_c04_psi_expectations(acceptance):
    trials = 10_000
    pairs = ((0.0, 1.0), (37.5, 0.003))
    details, ok = [], True
    for m in (10, 100):
        for alpha, target in ((1, 2.0), (2, 8.0)):
            means, ses = [], []
            for j, (mu, eps) in enumerate(pairs):
                z = mu + sample_laplace(alpha * m / eps, Stream(derive_seed(m, alpha, j)), trials * m)
                psi = psi_statistics(z.reshape(trials, m), eps)
                means.append(psi.mean())
                ses.append(psi.std(ddof=1) / math.sqrt(trials))
            close = all(abs(x - target) <= 0.05 * target for x in means)
            agree = abs(means[0] - means[1]) <= 4 * math.hypot(*ses)
            ok &= close and agree
            details.append(f"m={m} target {target:g}: {means[0]:.3f}/{means[1]:.3f}")
    acceptance(4, ok, "; ".join(details))
    assert ok


def test_c05_hardened_variance(acceptance):
    t0 = time.perf_counter()
    detector = VarianceDetector(VarianceTestConfig(m=1000))
    failures, worst = _round_trip(DefenseMode.HARDENED, detector, 100)
    ok = not failures
    acceptance(5, ok, f"{50 - len(failures)}/50 exact, max budget {worst:.3g}, {time.perf_counter() - t0:.1f}s")
    assert ok, failures


def _targets(data, rng, count):
    """Present-and-unique records and absent records, half each."""
    counts = data.row_multiset()
    unique = [r for r, c in counts.items() if c == 1]
    dup = [r for r, c in counts.items() if c > 1]
    out = []
    for i in range(count):
        if i % 2 == 0:
            out.append((unique[rng.integers(len(unique))], True))
        else:
            while True:
                r = (float(rng.integers(0, 2**20)), float(rng.integers(0, 4)), float(rng.integers(0, 100)))
                if r not in counts:
                    break
            # every fourth negative target is a duplicated record (present but not unique)
            out.append((dup[rng.integers(len(dup))] if dup and i % 4 == 3 else r, False))
    return out, counts


def test_c06_membership_uniqueness_calls(acceptance):
    rng = np.random.default_rng(6)
    total = wrong = bad_calls = 0
    for block in range(10):
        k = KS[block % 3]
        data = synthetic_dataset(200, seed=1000 + block)
        names = [a.name for a in data.schema.attributes]
        targets, counts = _targets(data, rng, 100)
        for record, positive in targets:
            values = target_predicate(data.schema, dict(zip(names, record)))
            c = counts.get(record, 0)
            cust = GroupIdpCustodian(data, k, seed=derive_seed(block, total))
            if positive or c == 0:
                got = membership_inference(cust, values, k=k)
                wrong += got != (c > 0)
            else:
                got = confirm_uniqueness(cust, values, k=k)
                wrong += got != (c == 1)
            bad_calls += cust.calls != 2
            unique = confirm_uniqueness(GroupIdpCustodian(data, k), values, k=k)
            wrong += unique != (c == 1)
            base = TruthfulCustodian(data)
            wrong += membership_inference(base, values) != (c > 0)
            bad_calls += base.calls != 1
            total += 1
    ok = total == 1000 and wrong == 0 and bad_calls == 0
    acceptance(6, ok, f"{total} targets, {wrong} wrong decisions, {bad_calls} call-count violations")
    assert ok


def test_c07_bdp_enumeration(acceptance):
    schema = Schema((AttributeSpec("v", lower=0, upper=255),))
    failures = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 200))
        vals = rng.integers(0, 256, n)
        dups = max(1, n // 4)
        vals[rng.choice(n, dups, replace=False)] = vals[rng.integers(0, n, dups)]
        data = Dataset(schema, [[v] for v in vals])
        found = bdp_enumerate_distinct(BdpCustodian(data, seed=seed))
        emits_counts = not isinstance(found, set) or any(len(r) != 1 for r in found)
        failures += found != set(data.row_multiset()) or emits_counts
    ok = failures == 0
    acceptance(7, ok, f"{20 - failures}/20 distinct sets exact, no multiplicities emitted")
    assert ok


def test_c08_round_binary_repeated(acceptance):
    failures, worst = _round_trip(DefenseMode.ROUND_BINARY, RepeatedDetector(15), 100)
    # raw per-decision error: one 15-answer batch of a noisy query judged clean
    trials, m = 1_000_000, 15
    data = Dataset(Schema((AttributeSpec("x", lower=0, upper=9),)), [[1], [5], [7]])
    cust = GroupIdpCustodian(data, 1, DefenseMode.ROUND_BINARY, seed=8)
    q = ThresholdQuery(RangePredicate.single(0, 0, 6), 1)  # count 2, inside the noisy window
    wrong = 0
    for _ in range(10):
        bits = cust.answer_many(q, 1e-10, trials // 10 * m).reshape(-1, m)
        wrong += int(np.count_nonzero(np.all(bits == bits[:, :1], axis=1)))
    p = 2.0 ** -14
    sigma = math.sqrt(trials * p * (1 - p))
    within = abs(wrong - trials * p) <= 3 * sigma
    ok = not failures and within
    acceptance(8, ok, f"{50 - len(failures)}/50 exact; {wrong} false-clean in {trials} "
                      f"(expected {trials * p:.1f} +/- {3 * sigma:.1f})")
    assert ok, failures


def test_c09_negative_control(acceptance):
    exact = 0
    for seed in range(20):
        rep = run_experiment(ExperimentConfig(attack="negative-control", n=100 + 10 * seed, seed=seed,
                                              eps_cap=0.01, k=KS[seed % 3]))
        exact += bool(rep.exact)
    ok = exact == 0
    acceptance(9, ok, f"{exact}/20 runs exact against global Laplace")
    assert ok


BANKING = os.environ.get("IDPRECON_BANKING_CSV")


@pytest.mark.skipif(not BANKING, reason="set IDPRECON_BANKING_CSV to the bank marketing CSV")
def test_c10_banking(acceptance):
    rep = run_experiment(ExperimentConfig(dataset=BANKING, k=1, baseline=True))
    rec, base = rep.reconstruction, rep.baseline
    protected, unprotected = rec["protected_queries"], base["unprotected_queries"]
    ratio = protected / unprotected
    per_person = protected / len(next(iter(rec["values"].values())))
    ok = (rep.exact and base["exact_overall"]
          and 5_418_936 / 2 <= protected <= 2 * 5_418_936
          and 1.0 <= ratio <= 1.2
          and 119.9 / 2 <= per_person <= 2 * 119.9)
    acceptance(10, ok, f"exact={rep.exact}, protected={protected}, ratio={ratio:.3f}, "
                       f"per person={per_person:.1f}")
    assert ok
