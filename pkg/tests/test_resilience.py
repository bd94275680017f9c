import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dires.digraph import Digraph, generate_random_digraph
from dires.hamiltonicity import SolverBudget
from dires.resilience import (absorbing_pair_census, bad_set_census, bad_set_of, chernoff_bound,
                              default_levels, degree_excess_census, degree_excess_counts, empirical_tail,
                              estimate_resilience, random_absorbing_instance, survival_rate, write_records,
                              write_summary)
from dires.seeding import make_rng


def test_chernoff_examples():
    assert chernoff_bound("i", 100, 0.5, eps=0.2) == pytest.approx(math.exp(-1))
    assert chernoff_bound("iii", 100, 0.5, eps=0.0) == 2.0
    assert chernoff_bound("iv", 100, 0.5, x=350) == pytest.approx(math.exp(-350))
    assert chernoff_bound("ii", 30, 0.2, eps=0.5) == pytest.approx(math.exp(-0.25 * 6 / 3))


@pytest.mark.parametrize("kind,kw", [("i", {"eps": 1.5}), ("ii", {"eps": -0.1}), ("iii", {}),
                                     ("iv", {"x": 10}), ("v", {"eps": 0.1})])
def test_chernoff_domain_errors(kind, kw):
    with pytest.raises(ValueError):
        chernoff_bound(kind, 100, 0.1, **kw)


@given(st.sampled_from(["i", "ii", "iii"]), st.integers(1, 10_000), st.floats(0, 1),
       st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=100)
def test_chernoff_range_and_monotone_in_eps(kind, n, p, e1, e2):
    lo, hi = sorted((e1, e2))
    a, b = chernoff_bound(kind, n, p, eps=lo), chernoff_bound(kind, n, p, eps=hi)
    assert 0 <= b <= a <= 2


@given(st.integers(1, 1000), st.floats(0, 1), st.floats(1, 50))
@settings(max_examples=50)
def test_chernoff_iv_monotone_in_x(n, p, extra):
    x = 7 * n * p
    assert chernoff_bound("iv", n, p, x=x + extra) <= chernoff_bound("iv", n, p, x=x)


def test_empirical_tail_examples():
    assert empirical_tail(1000, 0.5, "iii", eps=0.3, samples=100_000, seed=0).respected
    low = empirical_tail(100, 0.5, "i", eps=1.0, samples=10_000, seed=1)
    assert low.frequency == 0.0 and low.respected
    deg = empirical_tail(50, 0.0, "ii", eps=0.5, samples=1000, seed=2)
    assert deg.frequency == 1.0 and deg.bound == 1.0 and deg.respected


@given(st.sampled_from(["i", "ii", "iii"]), st.integers(10, 500), st.floats(0.05, 0.95), st.floats(0.05, 1),
       st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_empirical_tail_respects_bound(kind, n, p, eps, seed):
    assert empirical_tail(n, p, kind, eps=eps, samples=5000, seed=seed).respected


def test_empirical_tail_kind_iv():
    chk = empirical_tail(200, 0.01, "iv", x=14, samples=20_000, seed=3)
    assert chk.frequency <= chk.bound + 3 * chk.sigma


def _bad_set_brute(D, Y, eps, p):
    Y = set(Y)
    out = set()
    for u in range(D.n):
        if u in Y:
            continue
        o = sum(1 for v in Y if D.adj[u, v])
        i = sum(1 for v in Y if D.adj[v, u])
        if abs(o - len(Y) * p) >= eps * len(Y) * p - 1e-9 or abs(i - len(Y) * p) >= eps * len(Y) * p - 1e-9:
            out.add(u)
    return out


@given(st.integers(3, 50), st.floats(0.1, 0.9), st.floats(0.05, 0.9), st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_censuses_match_brute_force(n, p, eps, seed):
    D = generate_random_digraph(n, p, seed)
    rng = make_rng(seed, "test")
    Y = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
    assert bad_set_of(D, Y, eps, p) == _bad_set_brute(D, Y, eps, p)
    c1 = sum(1 for u in range(n) if u not in set(Y) and sum(D.adj[u, v] for v in Y) >= 2 * p * len(Y) - 1e-9)
    c2 = sum(1 for u in range(n) if u not in set(Y)
             and sum(D.adj[u, v] for v in Y) >= 7 * math.sqrt(p) * len(Y) - 1e-9)
    assert degree_excess_counts(D, Y, p) == (c1, c2)
    S, T = random_absorbing_instance(n, n // 3, seed)
    want = sum(1 for x, y in T for z in S if D.adj[x, z] and D.adj[z, y])
    assert absorbing_pair_census(D, S, T) == want


def test_bad_set_examples():
    K = Digraph.complete(40)
    assert bad_set_census(K, 0.25, 0.05, samples=10, seed=0, p=1.0).max_size == 0
    D = generate_random_digraph(200, 0.5, 1)
    adj = D.adj.copy()
    adj[0, :] = False
    adj[:, 0] = False
    D = Digraph(adj)
    rng = make_rng(9, "planted")
    for _ in range(20):
        Y = rng.choice(np.arange(1, 200), size=40, replace=False)
        assert 0 in bad_set_of(D, Y, 0.1, 0.5)
    assert bad_set_census(D, 0.2, 0.1, samples=20, seed=0, p=0.5, avoid=[0]).max_size >= 1
    with pytest.raises(ValueError):
        bad_set_census(K, 0.0, 0.1, samples=1, seed=0)


def test_degree_excess_examples():
    # l p^2 = 0.9 is below log 50, which only warns.
    with pytest.warns(UserWarning):
        res = degree_excess_census(Digraph.empty(50), 10, samples=5, seed=0, p=0.3)
    assert max(res.clause_i) == max(res.clause_ii) == 0
    res = degree_excess_census(Digraph.complete(50), 10, samples=5, seed=0, p=1.0)
    assert max(res.clause_i) == 0 and res.respected


def test_absorbing_pair_examples():
    assert absorbing_pair_census(Digraph.empty(5), [0], [(1, 2)]) == 0
    D = Digraph.from_arcs(3, [(1, 0), (0, 2)])
    assert absorbing_pair_census(D, [0], [(1, 2)]) == 1
    with pytest.raises(ValueError):
        absorbing_pair_census(D, [0], [(1, 2), (1, 3)])
    with pytest.raises(ValueError):
        absorbing_pair_census(D, [1], [(1, 2)])


@pytest.mark.parametrize("n", [4, 6, 8])
def test_complete_digraph_resilience(n):
    est = estimate_resilience(n, 1.0, trials=3, seed=0)
    assert est.upper == n // 2 and est.lower == n // 2 - 1
    assert est.lower < est.upper and not est.inconclusive


def test_estimate_is_deterministic_across_jobs(tmp_path):
    a = estimate_resilience(10, 0.8, trials=4, seed=5, jobs=1)
    b = estimate_resilience(10, 0.8, trials=4, seed=5, jobs=2)
    assert (a.lower, a.upper) == (b.lower, b.upper)
    write_records(a.records, tmp_path / "a.jsonl")
    write_records(b.records, tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    write_summary(a.levels, tmp_path / "s.csv")
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["level", "trials", "hamiltonian", "destroyed", "unknown", "fraction_of_np"]
    assert len(rows) == len(a.levels) + 1


def test_censored_verdicts_never_count_as_destruction():
    est = estimate_resilience(30, 0.5, adversaries=("random",), trials=2, seed=1, levels=[0],
                              budget=SolverBudget(max_vertices_exact=2, node_limit=1))
    s = est.levels[0]
    assert s.destroyed == 0 and s.unknown == s.trials and est.inconclusive
    assert all(r.diagnostics for r in est.records)


def test_default_levels():
    assert default_levels(10, 0.5) == [0, 1, 2, 3, 4]


def test_survival_rate_small():
    rate, recs = survival_rate(12, 0.9, 0.1, graphs=2, draws=5, seed=0)
    assert len(recs) == 10 and rate == 1.0


@pytest.mark.slow
def test_resilience_bracket_n16():
    est = estimate_resilience(16, 0.9, trials=100, seed=0, jobs=2)
    assert est.upper is not None and 0.3 <= est.upper_fraction <= 0.7
    assert est.lower is not None and est.lower < est.upper
