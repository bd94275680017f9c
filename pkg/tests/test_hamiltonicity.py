import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dires.digraph import Digraph, generate_random_digraph
from dires.hamiltonicity import (Cycle, SolverBudget, brute_force_hamilton, exact_hamilton,
                                 ghouila_houri_cycle, validate_cycle)
from dires.matching import hall_matching, maximum_matching_size


def _perm_oracle(adj):
    n = len(adj)
    return any(all(adj[o[i]][o[(i + 1) % n]] for i in range(n))
               for o in ((0,) + p for p in itertools.permutations(range(1, n))))


def test_triangle_and_path():
    tri = Digraph.from_arcs(3, [(0, 1), (1, 2), (2, 0)])
    res = exact_hamilton(tri)
    assert res.status == "cycle" and res.cycle.order == (0, 1, 2)
    assert exact_hamilton(Digraph.from_arcs(3, [(0, 1), (1, 2)])).status == "none"


def test_exhaustive_n4_against_permutations():
    pairs = [(u, v) for u in range(4) for v in range(4) if u != v]
    for mask in range(1 << len(pairs)):
        arcs = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        D = Digraph.from_arcs(4, arcs)
        res = exact_hamilton(D)
        assert res.is_hamiltonian == _perm_oracle(D.adj.tolist())
        if res.cycle is not None:
            assert validate_cycle(D, res.cycle).ok


def test_exhaustive_n3_and_n5_sampled():
    for n in (2, 3):
        pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
        for mask in range(1 << len(pairs)):
            D = Digraph.from_arcs(n, [pairs[i] for i in range(len(pairs)) if mask >> i & 1])
            assert exact_hamilton(D).is_hamiltonian == brute_force_hamilton(D)
    for s in range(400):
        D = generate_random_digraph(5, 0.2 + 0.6 * (s % 5) / 4, s)
        assert exact_hamilton(D).is_hamiltonian == brute_force_hamilton(D)


@given(st.integers(21, 30), st.floats(0.15, 0.6), st.integers(0, 2**32))
@settings(max_examples=15, deadline=None)
def test_backtracking_beyond_held_karp(n, p, seed):
    D = generate_random_digraph(n, p, seed)
    res = exact_hamilton(D, SolverBudget(time_limit=20))
    if res.status == "cycle":
        assert validate_cycle(D, res.cycle).ok
    small = exact_hamilton(D, SolverBudget(max_vertices_exact=2, time_limit=20))
    if "unknown" not in (res.status, small.status):
        assert res.status == small.status


def test_budget_exhaustion_reports_unknown():
    D = generate_random_digraph(60, 0.08, 4)
    res = exact_hamilton(D, SolverBudget(max_vertices_exact=5, node_limit=10))
    assert res.status in ("unknown", "none", "cycle")
    if res.status == "unknown":
        assert res.is_hamiltonian is None and res.reason


def test_gh_examples():
    c = ghouila_houri_cycle(Digraph.complete(5))
    assert validate_cycle(Digraph.complete(5), c).ok
    circ = Digraph.from_arcs(4, [(v, (v + d) % 4) for v in range(4) for d in (1, 2)])
    assert exact_hamilton(circ).status == "cycle"
    assert validate_cycle(circ, ghouila_houri_cycle(circ)).ok
    two = Digraph.from_arcs(2, [(0, 1), (1, 0)])
    assert ghouila_houri_cycle(two).order == (0, 1)


def test_gh_precondition():
    with pytest.raises(ValueError, match="min out-degree"):
        ghouila_houri_cycle(Digraph.from_arcs(4, [(0, 1), (1, 2), (2, 3), (3, 0)]))


@given(st.integers(2, 60), st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_gh_property(n, seed):
    rng = np.random.default_rng(seed)
    adj = rng.random((n, n)) < 0.5
    np.fill_diagonal(adj, False)
    half = -(-n // 2)
    for v in range(n):
        others = [u for u in range(n) if u != v]
        while adj[v].sum() < half:
            adj[v, rng.choice(others)] = True
        while adj[:, v].sum() < half:
            adj[rng.choice(others), v] = True
    D = Digraph(adj)
    assert validate_cycle(D, ghouila_houri_cycle(D, seed=seed)).ok


def test_validate_cycle_examples():
    tri = Digraph.from_arcs(3, [(0, 1), (1, 2), (2, 0)])
    assert validate_cycle(tri, Cycle((0, 1, 2))).ok
    bad = validate_cycle(tri, (0, 2, 1))
    assert not bad.ok and bad.missing_arc == (0, 2)
    dup = validate_cycle(tri, (0, 1, 0))
    assert not dup.ok and dup.duplicate == 0
    part = validate_cycle(Digraph.complete(4), (0, 1, 2))
    assert not part.ok and validate_cycle(Digraph.complete(4), (0, 1, 2), require_hamilton=False).ok


def test_hall_examples():
    assert hall_matching({"u": ["e"]}).matching == {"u": "e"}
    res = hall_matching({"u1": ["e1"], "u2": ["e1"]})
    assert not res.saturating
    assert res.deficient == {"u1", "u2"} and res.neighborhood == {"e1"}


def _flow_size(adj):
    G = nx.DiGraph()
    for a, bs in adj.items():
        G.add_edge("s", ("L", a), capacity=1)
        for b in bs:
            G.add_edge(("L", a), ("R", b), capacity=1)
            G.add_edge(("R", b), "t", capacity=1)
    if "t" not in G:
        return 0
    return int(nx.maximum_flow_value(G, "s", "t"))


def _check(adj):
    res = hall_matching(adj)
    if res.saturating:
        assert set(res.matching) == set(adj)
        assert len(set(res.matching.values())) == len(adj)
        assert all(res.matching[a] in adj[a] for a in adj)
    else:
        S = res.deficient
        N = {b for a in S for b in adj[a]}
        assert N == set(res.neighborhood) and len(N) < len(S)
    assert res.saturating == (_flow_size(adj) == len(adj))
    assert maximum_matching_size(adj) == _flow_size(adj)


@given(st.integers(1, 9), st.integers(1, 9), st.floats(0, 0.7), st.integers(0, 2**32))
@settings(max_examples=150, deadline=None)
def test_hall_against_max_flow(a, b, dens, seed):
    rng = np.random.default_rng(seed)
    adj = {i: [j for j in range(b) if rng.random() < dens] for i in range(a)}
    _check(adj)


def test_hall_lemma_conditions_saturate():
    # Rejection sample graphs meeting min degree >= d and e(X, Y) < d|X| for |X| = |Y|.
    rng = np.random.default_rng(7)
    found = 0
    while found < 50:
        d = int(rng.integers(2, 5))
        adj = {i: sorted(rng.choice(12, size=int(rng.integers(d, 8)), replace=False).tolist()) for i in range(8)}
        ok = True
        for x in range(1, 9):
            for X in itertools.combinations(range(8), x):
                # Worst Y of size x takes the x most-hit right vertices.
                hits = np.bincount([b for a in X for b in adj[a]], minlength=12)
                if np.sort(hits)[::-1][:x].sum() >= d * x:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        found += 1
        res = hall_matching(adj)
        assert res.saturating
        assert _flow_size(adj) == 8
