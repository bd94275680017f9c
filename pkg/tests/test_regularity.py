import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dires.digraph import Digraph, generate_random_digraph, induced_density
from dires.hamiltonicity import validate_cycle
from dires.regularity import (Partition, build_regularity_digraph, check_boundedness, degree_outlier_census,
                              enumerate_regular, equalize_densities, equitable_partition, is_regular_pair,
                              read_partition, reduced_hamilton_cycle, witness_violates, write_partition)


def _oracle(adj, A, B, eps, scale):
    # Plain definitional quantifier with exact rationals.
    eps = Fraction(eps)
    e = sum(adj[a][b] for a in A for b in B)
    d = Fraction(e, len(A) * len(B))
    p = d if scale is None else Fraction(scale)
    for x in range(1, len(A) + 1):
        if x < eps * len(A):
            continue
        for X in itertools.combinations(A, x):
            for y in range(1, len(B) + 1):
                if y < eps * len(B):
                    continue
                for Y in itertools.combinations(B, y):
                    exy = sum(adj[a][b] for a in X for b in Y)
                    if abs(Fraction(exy, x * y) - d) > eps * p:
                        return False
    return True


def _bipartite(a, b, dens, seed):
    rng = np.random.default_rng(seed)
    n = a + b
    adj = np.zeros((n, n), dtype=bool)
    adj[:a, a:] = rng.random((a, b)) < dens
    return Digraph(adj), list(range(a)), list(range(a, n))


def _block_pair():
    A1, A2, B1, B2 = range(0, 5), range(5, 10), range(10, 15), range(15, 20)
    arcs = [(u, v) for u in A1 for v in B1] + [(u, v) for u in A2 for v in B2]
    return Digraph.from_arcs(20, arcs), list(range(10)), list(range(10, 20))


def test_complete_pair_is_regular():
    n = 20
    adj = np.zeros((n, n), dtype=bool)
    adj[:10, 10:] = True
    v = is_regular_pair(Digraph(adj), range(10), range(10, 20), 0.1)
    assert v.regular and v.density == 1 and v.witness is None


def test_block_pair_witness():
    D, A, B = _block_pair()
    v = is_regular_pair(D, A, B, 0.25, scale=1, mode="exhaustive")
    assert not v.regular
    assert v.witness == (tuple(range(5)), tuple(range(15, 20)))
    assert witness_violates(D, A, B, 0.25, 1, v.witness)
    assert not _oracle(D.adj.tolist(), A, B, 0.25, 1)


def test_exhaustive_size_limit():
    D, A, B = _bipartite(13, 4, 0.5, 0)
    with pytest.raises(ValueError):
        is_regular_pair(D, A, B, 0.1, mode="exhaustive")


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0, 1), st.sampled_from([0.1, 0.25, 0.34, 0.5, 0.8]),
       st.sampled_from([None, 1, 0.5, 0.3]), st.integers(0, 2**32))
@settings(max_examples=200, deadline=None)
def test_exhaustive_matches_enumerators(a, b, dens, eps, scale, seed):
    D, A, B = _bipartite(a, b, dens, seed)
    v = is_regular_pair(D, A, B, eps, scale=scale)
    assert v.regular == _oracle(D.adj.tolist(), A, B, eps, scale)
    assert v.regular == enumerate_regular(D, A, B, eps, scale)
    if not v.regular:
        assert witness_violates(D, A, B, eps, scale, v.witness)


@given(st.integers(2, 40), st.floats(0.05, 0.95), st.sampled_from([0.05, 0.1, 0.2]), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_sampled_witnesses_always_verify(size, dens, eps, seed):
    D, A, B = _bipartite(size, size + 3, dens, seed)
    v = is_regular_pair(D, A, B, eps, scale=dens, mode="sampled", probes=100, seed=seed)
    if not v.regular:
        assert witness_violates(D, A, B, eps, dens, v.witness)


def test_sampled_finds_block_witness():
    D, A, B = _block_pair()
    v = is_regular_pair(D, A, B, 0.25, scale=1, mode="sampled", probes=200, seed=1)
    assert not v.regular and witness_violates(D, A, B, 0.25, 1, v.witness)


def test_random_pairs_mostly_regular_when_sampled():
    hits = 0
    for s in range(100):
        D, A, B = _bipartite(200, 200, 0.5, s)
        hits += is_regular_pair(D, A, B, 0.1, scale=1, mode="sampled", probes=500, seed=s).regular
    assert hits >= 95


@given(st.integers(1, 5), st.integers(1, 5), st.floats(0, 1), st.integers(0, 2**32),
       st.sampled_from([0.2, 0.4, 0.6]), st.sampled_from([0.0, 0.2]), st.sampled_from([0.3, 0.6, 1.0]),
       st.sampled_from([0.0, 0.5]))
@settings(max_examples=150, deadline=None)
def test_monotone_in_eps_and_scale(a, b, dens, seed, e1, de, p1, dp):
    D, A, B = _bipartite(a, b, dens, seed)
    if is_regular_pair(D, A, B, e1, scale=p1).regular:
        assert is_regular_pair(D, A, B, min(1, e1 + de), scale=p1 + dp).regular


@given(st.integers(1, 5), st.integers(1, 5), st.floats(0.05, 1), st.integers(0, 2**32),
       st.sampled_from([0.1, 0.2, 0.3]), st.sampled_from([0.5, 1.0]))
@settings(max_examples=150, deadline=None)
def test_rescaling_to_own_density(a, b, dens, seed, eps, p):
    D, A, B = _bipartite(a, b, dens, seed)
    d = induced_density(D, A, B)
    if d == 0 or Fraction(eps) * Fraction(p) / d > 1 or Fraction(p) < d:
        return
    new_eps = Fraction(eps) * Fraction(p) / d
    # Same absolute tolerance, larger size threshold, so the implication holds.
    if is_regular_pair(D, A, B, eps, scale=p).regular:
        assert is_regular_pair(D, A, B, new_eps, scale=None).regular


def test_equitable_partition_examples(tmp_path):
    P = equitable_partition(Digraph.empty(10), 3, seed=0)
    assert P.ell == 3 and len(P.v0) == 1
    P9 = equitable_partition(Digraph.empty(9), 3, seed=0)
    assert P9.ell == 3 and P9.v0 == ()
    assert equitable_partition(Digraph.empty(10), 3, seed=0) == P
    write_partition(P, tmp_path / "p.txt")
    assert read_partition(tmp_path / "p.txt") == P


@given(st.integers(1, 80), st.integers(1, 80), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_equitable_partition_property(n, k, seed):
    if k > n:
        with pytest.raises(ValueError):
            equitable_partition(Digraph.empty(n), k, seed)
        return
    P = equitable_partition(Digraph.empty(n), k, seed)
    assert {len(p) for p in P.parts} == {n // k}
    assert len(P.v0) < k
    assert sorted(P.v0 + sum(P.parts, ())) == list(range(n))


def test_boundedness_examples():
    assert check_boundedness(Digraph.empty(20), 0.2, 1.5, 0.5, probes=20, seed=0) == (True, 0.0)
    ok, worst = check_boundedness(Digraph.complete(20), 0.2, 1.01, 1.0, probes=20, seed=0)
    assert ok and worst <= 1
    with pytest.raises(ValueError):
        check_boundedness(Digraph.empty(5), 0.1, 1.5, 0.5)


@pytest.mark.slow
def test_random_digraph_is_bounded():
    for s in range(50):
        D = generate_random_digraph(1000, 0.1, s)
        assert check_boundedness(D, 0.1, 1.5, 0.1, probes=200, seed=s)[0]


def test_outlier_census_examples():
    n = 20
    adj = np.zeros((n, n), dtype=bool)
    adj[:10, 10:] = True
    D = Digraph(adj)
    c = degree_outlier_census(D, range(10), range(10, 20), 0.5, 1.0)
    assert (c.high_out, c.low_out, c.high_in, c.low_in) == (0, 0, 0, 0)
    adj[0, 10:] = False
    D = Digraph(adj)
    d = float(induced_density(D, range(10), range(10, 20)))
    assert degree_outlier_census(D, range(10), range(10, 20), 0.01, d).low_out == 1


@given(st.integers(1, 6), st.integers(1, 6), st.floats(0, 1), st.sampled_from([0.2, 0.34, 0.5]),
       st.integers(0, 2**32))
@settings(max_examples=150, deadline=None)
def test_outliers_bounded_on_regular_pairs(a, b, dens, eps, seed):
    D, A, B = _bipartite(a, b, dens, seed)
    if not is_regular_pair(D, A, B, eps, scale=None).regular:
        return
    d = float(induced_density(D, A, B))
    c = degree_outlier_census(D, A, B, eps, d)
    assert max(c.high_out, c.low_out) <= eps * a
    assert max(c.high_in, c.low_in) <= eps * b


def _two_parts(ell, dens, seed):
    D, A, B = _bipartite(ell, ell, dens, seed)
    return D, Partition(v0=(), parts=(tuple(A), tuple(B)), ell=ell)


def test_equalize_examples():
    D, P = _two_parts(10, 1.0, 0)
    assert equalize_densities(D, P, [(0, 1)], 100, seed=0) == D
    with pytest.warns(UserWarning):
        thin = equalize_densities(D, P, [(0, 1)], 60, seed=0)
    assert thin.m == 60 and not (thin.adj & ~D.adj).any()
    with pytest.raises(ValueError, match=r"\(0, 1\)"):
        equalize_densities(D, P, [(0, 1)], 101, seed=0)


def test_equalized_pairs_stay_regular():
    hits = 0
    for s in range(50):
        D, P = _two_parts(200, 0.5, s)
        target = D.m // 2
        thin = equalize_densities(D, P, [(0, 1)], target, seed=s)
        assert thin.m == target
        v = is_regular_pair(thin, P.parts[0], P.parts[1], 0.2, scale=1, mode="sampled", probes=500, seed=s)
        hits += v.regular
    assert hits >= 45


def test_regularity_digraph_examples():
    D, P = _two_parts(5, 1.0, 0)
    R = build_regularity_digraph(D, P, 0.5, 0.1, mode="exhaustive")
    assert set(R.arcs) == {(0, 1)}
    R = build_regularity_digraph(Digraph.empty(10), P, 0.5, 0.1, mode="exhaustive")
    assert R.arcs == {}


def test_regularity_digraph_labels_match_density():
    D = generate_random_digraph(120, 0.3, 5)
    P = equitable_partition(D, 6, seed=1)
    R = build_regularity_digraph(D, P, 0.1, 0.2, mode="sampled", scale=0.3, probes=50, seed=2)
    for (i, j), dens in R.densities.items():
        assert dens == induced_density(D, P.parts[i], P.parts[j])
    for (i, j), dens in R.arcs.items():
        assert dens >= 0.1


@pytest.mark.slow
def test_regularity_digraph_dense_on_random_input():
    good = 0
    for s in range(20):
        D = generate_random_digraph(3000, 0.15, s)
        P = equitable_partition(D, 20, seed=s)
        R = build_regularity_digraph(D, P, 0.015, 0.01, mode="sampled", scale=0.15, probes=500, seed=s,
                                     significance=1e-9)
        good += len(R.arcs) >= 0.9 * 20 * 19
    assert good >= 18


def test_reduced_cycle_examples():
    rc = reduced_hamilton_cycle(Digraph.complete(6))
    assert rc.ok and rc.r == 6
    ring = Digraph.from_arcs(6, [(i, (i + 1) % 6) for i in range(6)])
    rc = reduced_hamilton_cycle(ring)
    assert not rc.ok and rc.reason == "reduced digraph vanished"
    adj = Digraph.complete(10).adj.copy()
    adj[:, 9] = False
    rc = reduced_hamilton_cycle(Digraph(adj))
    assert rc.ok and rc.r == 9 and rc.peeled == (9,)
    assert validate_cycle(Digraph(adj), rc.cycle, require_hamilton=False).ok


@given(st.integers(2, 16), st.floats(0.3, 1), st.integers(0, 2**32))
@settings(max_examples=80, deadline=None)
def test_reduced_cycle_postconditions(k, p, seed):
    R = generate_random_digraph(k, p, seed)
    rc = reduced_hamilton_cycle(R)
    if not rc.ok:
        return
    assert validate_cycle(R, rc.cycle, require_hamilton=False).ok
    assert sorted(rc.cycle) == list(rc.kept)
    sub = R.adj[np.ix_(rc.kept, rc.kept)]
    assert sub.sum(axis=1).min() * 2 >= k and sub.sum(axis=0).min() * 2 >= k
