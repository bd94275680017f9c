import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dires.adversary import (alpha_budgets, bipartition_adversary, capped_bipartition_adversary,
                             greedy_cut_adversary, ledger_reconciles, outcome_from_deletions,
                             random_budget_adversary, verify_budget)
from dires.digraph import Digraph, generate_random_digraph
from dires.hamiltonicity import exact_hamilton


def test_bipartition_on_complete_k4():
    D = Digraph.complete(4)
    out = bipartition_adversary(D, ((0, 1), (2, 3)))
    assert out.deleted == 4
    assert out.cut_is_empty()
    assert exact_hamilton(out.surviving).status == "none"
    assert ledger_reconciles(out)


def test_bipartition_on_empty_digraph():
    out = bipartition_adversary(Digraph.empty(6), seed=3)
    assert out.deleted == 0 and ledger_reconciles(out)


def test_bipartition_rejects_unbalanced_split():
    with pytest.raises(ValueError):
        bipartition_adversary(Digraph.complete(5), ((0,), (1, 2, 3, 4)))


def test_random_budget_half_alpha_is_identity():
    D = generate_random_digraph(30, 0.4, 1)
    out = random_budget_adversary(D, 0.5, seed=2)
    assert out.surviving == D and out.deleted == 0


def test_random_budget_on_k4():
    out = random_budget_adversary(Digraph.complete(4), 0.1, seed=0)
    assert out.deleted_out.max() <= 1 and out.deleted_in.max() <= 1
    assert out.surviving.out_degrees.min() >= 2 and out.surviving.in_degrees.min() >= 2


def test_random_budget_draws_stay_hamiltonian_at_n14():
    D = generate_random_digraph(14, 0.9, 11)
    for s in range(100):
        out = random_budget_adversary(D, 0.1, seed=s)
        assert exact_hamilton(out.surviving).status == "cycle"


def test_verify_budget_examples():
    D = Digraph.complete(4)
    zero = outcome_from_deletions(D, [])
    for alpha in (0.01, 0.25, 0.5):
        assert verify_budget(zero, alpha) == (True, None)
    two = outcome_from_deletions(D, [(0, 1), (0, 2)])
    assert verify_budget(two, 0.1) == (False, 0)
    # alpha = 0 is outside the adversary's range but the budget check is still defined.
    cut = bipartition_adversary(Digraph.complete(6), ((0, 1, 2), (3, 4, 5)))
    assert cut.deleted_out.max() == 3
    assert alpha_budgets(Digraph.complete(6), 0.0)[0].max() == 2
    assert verify_budget(cut, 0.0)[0] is False


@given(st.integers(2, 30), st.floats(0.05, 1.0), st.floats(0.01, 0.5), st.integers(0, 2**32))
@settings(max_examples=80, deadline=None)
def test_random_budget_always_within_budget(n, p, alpha, seed):
    D = generate_random_digraph(n, p, seed)
    out = random_budget_adversary(D, alpha, seed=seed + 1)
    assert verify_budget(out, alpha)[0]
    assert ledger_reconciles(out)


@given(st.integers(2, 10), st.floats(0.3, 1.0), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_bipartition_survivor_never_hamiltonian(n, p, seed):
    D = generate_random_digraph(n, p, seed)
    out = bipartition_adversary(D, seed=seed)
    v1, v2 = out.split
    assert not out.surviving.adj[np.ix_(v1, v2)].any()
    assert exact_hamilton(out.surviving).status == "none"
    assert ledger_reconciles(out)


@given(st.integers(4, 24), st.integers(0, 12), st.integers(0, 2**32))
@settings(max_examples=50, deadline=None)
def test_level_adversaries_respect_level(n, level, seed):
    D = generate_random_digraph(n, 0.7, seed)
    for out in (random_budget_adversary(D, seed=seed, level=level),
                capped_bipartition_adversary(D, level, seed=seed),
                greedy_cut_adversary(D, seed=seed, level=level)):
        assert out.deleted_out.max(initial=0) <= level
        assert out.deleted_in.max(initial=0) <= level
        assert ledger_reconciles(out)


def test_capped_bipartition_takes_full_cut_when_it_fits():
    D = Digraph.complete(8)
    out = capped_bipartition_adversary(D, 4, seed=0)
    assert out.cut_is_empty()
    assert not capped_bipartition_adversary(D, 3, seed=0).cut_is_empty()


def test_upper_bound_fraction_at_desk_scale():
    n, p = 2000, 0.05
    limit = 0.5 + 10 * math.sqrt(math.log(n) / (n * p))
    out = bipartition_adversary(generate_random_digraph(n, p, 0), seed=0)
    assert out.max_fraction <= limit
    assert out.cut_is_empty()


def test_outcome_from_deletions_rejects_non_arcs():
    with pytest.raises(ValueError):
        outcome_from_deletions(Digraph.empty(3), [(0, 1)])
