import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intervol.exactcomb import Verdict, q_ary_entropy
from intervol.listdecode import (ListDecodeParams, check_event_bound, chebyshev_bound,
                                 compute_mu, count_witnesses, decoding_radius,
                                 event_probability, event_probability_bruteforce,
                                 event_probability_enumerated, expected_witnesses,
                                 event_bounds, list_pair_counts, message_count_sweep,
                                 sweep_csv, witness_experiment, witness_variance)
from intervol.spaces import BudgetExceeded, SpaceSpec, distance, enumerate_points

MU = Fraction(11, 16)


def test_mu_examples():
    assert compute_mu(2, 4, 0.5) == MU
    assert compute_mu(3, 5, 0) == Fraction(1, 243)
    assert compute_mu(3, 6, Fraction(1, 3)) == Fraction(73, 729)


def test_radius_is_floor_without_float_noise():
    assert decoding_radius(10, 0.3) == 3
    assert decoding_radius(100, 0.29) == 29
    assert decoding_radius(7, Fraction(2, 7)) == 2


@pytest.mark.parametrize("route", [event_probability, event_probability_enumerated,
                                   event_probability_bruteforce])
def test_event_examples(route):
    assert route(2, 4, 0.5, 2, 0) == MU**4
    p1 = route(2, 4, 0.5, 2, 1)
    p2 = route(2, 4, 0.5, 2, 2)
    assert p1 <= MU**4
    assert p2 <= MU**3
    assert p2 == Fraction(941, 4096)


@pytest.mark.parametrize("q,n,p,L", [(2, 3, 0.34, 2), (3, 2, 0.5, 2), (2, 4, 0.26, 2),
                                      (2, 3, 0.4, 3)])
def test_three_routes_agree(q, n, p, L):
    for ell in range(L + 1):
        a = event_probability(q, n, p, L, ell)
        assert a == event_probability_enumerated(q, n, p, L, ell)
        assert a == event_probability_bruteforce(q, n, p, L, ell)


def test_enumerated_route_is_direct():
    # P(E_L) for L=1 is P(x in both balls) = E over pairs of |B(a) cap B(b)|/q^n
    q, n, r = 2, 3, 1
    space = SpaceSpec.hamming(q, n)
    pts = list(enumerate_points(space))
    total = sum(1 for a in pts for b in pts for x in pts
                if distance(space, a, x) <= r and distance(space, b, x) <= r)
    assert event_probability_enumerated(q, n, Fraction(1, 3), 1, 1) == Fraction(total, q**(3 * n))


def test_event_budget():
    with pytest.raises(BudgetExceeded):
        event_probability_bruteforce(2, 10, 0.3, 2, 1)


@settings(max_examples=30)
@given(st.integers(2, 3), st.integers(2, 12), st.integers(1, 4), st.data())
def test_event_probability_below_first_bound(q, n, L, data):
    r = data.draw(st.integers(0, n))
    p = Fraction(r, n)
    ell = data.draw(st.integers(0, L))
    mu = compute_mu(q, n, p)
    prob = event_probability(q, n, p, L, ell)
    assert prob >= mu ** (2 * L)
    if ell == 0:
        assert prob == mu ** (2 * L)
    else:
        assert prob <= mu ** (2 * L - ell + 1)


def test_event_bound_examples():
    params = ListDecodeParams(2, 4, 0.3, L=2, c=0.5, message_count=4)
    b1 = event_bounds(params, 1, mu=MU)
    assert b1.bound1 == MU**4
    assert float(b1.bound1) == pytest.approx(0.2234, abs=1e-4)
    assert event_bounds(params, 2, mu=MU).bound1 == MU**3
    big_c = ListDecodeParams(2, 4, 0.3, L=2, c=200.0, message_count=4)
    b = event_bounds(big_c, 1, mu=MU)
    assert b.bound2 == pytest.approx(float(MU**3) / 16, rel=1e-12)
    lo, hi = b.bound2_interval
    assert lo <= Fraction(b.bound2) <= hi and b.minimum == "bound2"


def test_event_bounds_need_c():
    params = ListDecodeParams(2, 4, 0.3, L=2, message_count=4)
    with pytest.raises(ValueError):
        event_bounds(params, 1)


def test_event_bounds_start_at_one_shared_point():
    params = ListDecodeParams(2, 4, 0.3, L=2, c=1.0, message_count=4)
    with pytest.raises(ValueError):
        event_bounds(params, 0)


@pytest.mark.parametrize("q,n,p,L", [(2, 4, 0.3, 2), (2, 5, 0.2, 2), (3, 3, 0.34, 2),
                                      (2, 3, 0.34, 3)])
def test_enumerated_probability_within_bound_minimum(q, n, p, L):
    params = ListDecodeParams(q, n, p, L=L, c=1.0, message_count=L)
    for ell in range(1, L + 1):
        prob = event_probability_enumerated(q, n, p, L, ell)
        assert check_event_bound(prob, event_bounds(params, ell)) is not Verdict.FAIL


def test_params_validation_and_derivation():
    with pytest.raises(ValueError):
        ListDecodeParams(2, 10, 0.5, epsilon=0.1, L=2)
    with pytest.raises(ValueError):
        ListDecodeParams(2, 10, 0.3, epsilon=-0.1, L=2)
    with pytest.raises(ValueError):
        ListDecodeParams(2, 10, 0.3, epsilon=0.1)
    pr = ListDecodeParams(2, 40, 0.1, epsilon=0.1, c=5.0)
    h = q_ary_entropy(2, 0.1)
    assert pr.ell0 == pytest.approx((1 - h) / 0.2)
    assert pr.gamma == pytest.approx(4 / math.log(2) * 2 ** (-5 * pr.ell0))
    assert pr.L == math.floor((1 - pr.gamma) / 0.1)
    assert pr.messages == math.floor(2 ** ((1 - h - 0.1) * 40) + 1e-9)


def test_message_count_sets_epsilon():
    pr = ListDecodeParams(2, 10, 0.3, L=2, message_count=8)
    assert pr.rate == pytest.approx(0.3)
    assert pr.epsilon == pytest.approx(1 - q_ary_entropy(2, 0.3) - 0.3)
    assert pr.messages == 8


def test_pair_counts_partition_all_pairs():
    for M, L in [(8, 2), (10, 3), (5, 5)]:
        ff = math.perm(M, L)
        assert sum(list_pair_counts(M, L).values()) == ff * ff


def test_count_witnesses_by_hand():
    space = SpaceSpec.hamming(2, 3)
    ranks = np.array([0, 0, 7])
    ordered, centers = count_witnesses(space, ranks, 1, 2)
    # only balls around 000 and its neighbours hold both copies of 000
    assert centers == 4 and ordered == 4 * 2


def test_count_witnesses_against_direct_scan():
    space = SpaceSpec.hamming(3, 3)
    rng = np.random.default_rng(5)
    pts = list(enumerate_points(space))
    for _ in range(5):
        ranks = rng.integers(0, space.size, size=6)
        ordered, centers = count_witnesses(space, ranks, 1, 2)
        inside = [sum(1 for j in ranks if distance(space, a, pts[j]) <= 1) for a in pts]
        assert centers == sum(1 for c in inside if c >= 2)
        assert ordered == sum(c * (c - 1) for c in inside)


def test_single_list_always_fails():
    stats = witness_experiment(ListDecodeParams(2, 8, 0.25, L=1, message_count=5), 50, seed=1)
    assert stats.prob_not_list_decodable == 1.0


def test_fewer_messages_than_list_size():
    stats = witness_experiment(ListDecodeParams(2, 8, 0.25, L=3, message_count=2), 50, seed=1)
    assert stats.prob_not_list_decodable == 0.0
    assert stats.witness_counts == {0: 50} and stats.chebyshev is None


def test_witness_example_matches_closed_form():
    params = ListDecodeParams(2, 10, 0.3, L=2, message_count=8)
    stats = witness_experiment(params, 1000, seed=0)
    assert stats.expected_W == 1024 * 56 * compute_mu(2, 10, 0.3) ** 2
    assert abs(stats.ordered_mean - float(stats.expected_W)) <= 3 * stats.ordered_stderr
    assert 0 <= stats.prob_not_list_decodable <= 1
    assert 1 - stats.prob_not_list_decodable <= float(stats.chebyshev) + 3 * stats.stderr
    payload = json.loads(stats.to_json())
    assert payload["params"]["message_count"] == 8


def test_witness_variance_matches_sampled_variance():
    q, n, p, M, L = 2, 6, 0.34, 6, 2
    stats = witness_experiment(ListDecodeParams(q, n, p, L=L, message_count=M), 4000, seed=2)
    var = float(witness_variance(q, n, p, M, L))
    sample = float(np.var(stats.ordered_values, ddof=1))
    assert sample == pytest.approx(var, rel=0.15)
    assert chebyshev_bound(q, n, p, M, L) == witness_variance(q, n, p, M, L) / \
        expected_witnesses(q, n, p, M, L) ** 2


def test_experiment_independent_of_jobs():
    params = ListDecodeParams(2, 8, 0.25, L=2, message_count=6)
    a = witness_experiment(params, 40, seed=9, jobs=1)
    b = witness_experiment(params, 40, seed=9, jobs=4)
    assert a.ordered_values == b.ordered_values and a.witness_counts == b.witness_counts


def test_experiment_budgets():
    with pytest.raises(BudgetExceeded):
        witness_experiment(ListDecodeParams(2, 21, 0.2, L=2, message_count=4), 1)


def test_failure_rate_monotone_in_message_count():
    stats = message_count_sweep(2, 8, 0.25, 3, [2, 3, 4, 6, 8, 12, 16], 400, seed=4)
    probs = [s.prob_not_list_decodable for s in stats]
    errs = [s.stderr for s in stats]
    drops = sum(1 for j in range(len(probs) - 1)
                if probs[j + 1] < probs[j] - 3 * math.hypot(errs[j], errs[j + 1]))
    assert drops <= 1
    assert probs[0] == 0.0
    lines = sweep_csv(stats).splitlines()
    assert lines[0] == "q,n,p,epsilon,L,mu_num,mu_den,trials,prob_fail,stderr,chebyshev_bound"
    assert len(lines) == 8


def test_derived_list_size_never_drops_below_one():
    assert ListDecodeParams(2, 40, 0.1, epsilon=0.1, c=1.0).L == 1
