"""The ten acceptance criteria at their stated tolerances.

Randomized criteria run through the CLI with ``--jobs 1``; criterion 10
repeats those runs with more workers and compares the output files byte
for byte. A line per criterion is printed in the terminal summary.
"""

import csv
import itertools
import json
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from dires.adversary import bipartition_adversary
from dires.cli import run
from dires.digraph import Digraph, generate_random_digraph
from dires.hamiltonicity import exact_hamilton, ghouila_houri_cycle, validate_cycle
from dires.regularity import is_regular_pair
from dires.resilience import survival_rate, write_records
from dires.seeding import derive_seed, make_rng

pytestmark = pytest.mark.slow

PARALLEL_JOBS = 4


def _cli_runs(out):
    """Every CLI-backed randomized acceptance run, keyed by name: (argv, output files)."""
    runs = {}
    for n in (4, 6, 8):
        runs[f"resilience{n}"] = (["resilience", "--n", str(n), "--p", "1.0", "--trials", "3", "--seed", "0",
                                   "--out", str(out / f"res{n}.csv"), "--records", str(out / f"res{n}.jsonl")],
                                  [f"res{n}.csv", f"res{n}.jsonl"])
    census = {
        "badset": ["--n", "5000", "--p", "0.1", "--c", "0.2", "--eps", "0.1", "--samples", "50"],
        "degree": ["--n", "4000", "--p", "0.2", "--ell", "200", "--samples", "50"],
        "absorbing": ["--n", "2000", "--p", "0.1", "--s", "50", "--beta", "0.2"],
    }
    for kind, extra in census.items():
        runs[f"census_{kind}"] = (["census", "--kind", kind, *extra, "--seed", "0", "--seeds", "20",
                                   "--out", str(out / f"census_{kind}.jsonl")], [f"census_{kind}.jsonl"])
    runs["walkprob"] = (["walkprob", "--lemma", "all", "--trials", "10000", "--seed", "0",
                         "--out", str(out / "walk.jsonl")], ["walk.jsonl"])
    runs["pipeline"] = (["pipeline", "--n", "3000", "--p", "0.15", "--alpha", "0.3", "--profile", "default",
                         "--k", "20", "--seed", "0", "--seeds", "20", "--out", str(out / "pipeline.jsonl")],
                        ["pipeline.jsonl"])
    return runs


class _Runner:
    def __init__(self, root, jobs):
        self.dir = root / f"jobs{jobs}"
        self.dir.mkdir()
        self.jobs = jobs
        self.codes = {}
        self.runs = _cli_runs(self.dir)

    def get(self, name):
        if name not in self.codes:
            argv, _ = self.runs[name]
            self.codes[name] = run([*argv, "--jobs", str(self.jobs), "--no-timestamp"])
        return self.codes[name]

    def path(self, file):
        return self.dir / file


@pytest.fixture(scope="session")
def serial(tmp_path_factory):
    return _Runner(tmp_path_factory.mktemp("acceptance"), 1)


@pytest.fixture(scope="session")
def parallel(tmp_path_factory):
    return _Runner(tmp_path_factory.mktemp("acceptance"), PARALLEL_JOBS)


def _jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line]


# --- 1 ------------------------------------------------------------------------


def _perm_oracle(adj):
    n = len(adj)
    if n == 1:
        return False
    return any(all(adj[o[i]][o[(i + 1) % n]] for i in range(n))
               for o in ((0,) + p for p in itertools.permutations(range(1, n))))


def test_criterion_1_exact_solver_oracle(record_property):
    pairs = [(u, v) for u in range(4) for v in range(4) if u != v]
    bad = 0
    for mask in range(1 << 12):
        D = Digraph.from_arcs(4, [pairs[i] for i in range(12) if mask >> i & 1])
        bad += exact_hamilton(D).is_hamiltonian != _perm_oracle(D.adj.tolist())
    ham = 0
    for s in range(1000):
        p = 0.15 + 0.7 * (s % 8) / 7
        D = generate_random_digraph(7, p, derive_seed(1, "criterion1", s))
        res = exact_hamilton(D)
        want = _perm_oracle(D.adj.tolist())
        bad += res.is_hamiltonian != want
        ham += want
        if res.cycle is not None:
            bad += not validate_cycle(D, res.cycle).ok
    record_property("detail", f"4096 n=4 + 1000 n=7 digraphs ({ham} hamiltonian), disagreements {bad}")
    assert bad == 0


# --- 2 ------------------------------------------------------------------------


def _gh_instance(seed):
    rng = make_rng(seed, "criterion2")
    n = int(rng.integers(10, 201))
    adj = rng.random((n, n)) < rng.uniform(0.2, 0.9)
    np.fill_diagonal(adj, False)
    need = math.ceil(n / 2)
    for v in range(n):
        miss = np.flatnonzero(~adj[v])
        miss = miss[miss != v]
        lack = need - int(adj[v].sum())
        if lack > 0:
            adj[v, rng.choice(miss, size=lack, replace=False)] = True
    for v in range(n):
        miss = np.flatnonzero(~adj[:, v])
        miss = miss[miss != v]
        lack = need - int(adj[:, v].sum())
        if lack > 0:
            adj[rng.choice(miss, size=lack, replace=False), v] = True
    D = Digraph(adj)
    assert D.out_degrees.min() >= n / 2 and D.in_degrees.min() >= n / 2
    return D


def test_criterion_2_ghouila_houri(record_property):
    ok = 0
    sizes = []
    for s in range(500):
        D = _gh_instance(s)
        sizes.append(D.n)
        ok += validate_cycle(D, ghouila_houri_cycle(D, seed=s)).ok
    record_property("detail", f"{ok}/500 valid cycles, n from {min(sizes)} to {max(sizes)}")
    assert ok == 500


# --- 3 ------------------------------------------------------------------------


def test_criterion_3_complete_digraph_resilience(serial, record_property):
    got = {}
    for n in (4, 6, 8):
        assert serial.get(f"resilience{n}") == 0
        rows = list(csv.DictReader(open(serial.path(f"res{n}.csv"))))
        upper = next(int(r["level"]) for r in rows if int(r["destroyed"]) > 0)
        below = [r for r in rows if int(r["level"]) < upper]
        assert all(int(r["hamiltonian"]) == int(r["trials"]) for r in below)
        got[n] = upper
    record_property("detail", "resilience level " + ", ".join(f"n={n}: {r}" for n, r in got.items()))
    assert got == {n: n // 2 for n in (4, 6, 8)}


# --- 4 ------------------------------------------------------------------------


def test_criterion_4_bipartition_upper_bound(record_property):
    n, p = 2000, 0.05
    limit = 0.5 + 10 * math.sqrt(math.log(n) / (n * p))
    within = cut = 0
    worst = 0.0
    for s in range(50):
        out = bipartition_adversary(generate_random_digraph(n, p, derive_seed(s, "graph")),
                                    seed=derive_seed(s, "adversary"))
        within += out.max_fraction <= limit
        cut += out.cut_is_empty() and not out.surviving.adj[np.ix_(*out.split)].any()
        worst = max(worst, out.max_fraction)
    record_property("detail", f"fraction <= {limit:.3f} in {within}/50 (worst {worst:.3f}), empty cut in {cut}/50")
    assert within >= 48 and cut == 50


# --- 5 ------------------------------------------------------------------------


def test_criterion_5_lower_bound_survival(record_property):
    rate, recs = survival_rate(16, 0.9, 0.1, graphs=20, draws=100, seed=0, jobs=1)
    unknown = sum(r.verdict == "unknown" for r in recs)
    record_property("detail", f"hamilton cycle after {rate:.2%} of 2000 draws, {unknown} censored")
    assert rate >= 0.99


# --- 6 ------------------------------------------------------------------------


def test_criterion_6_lemma_censuses(serial, record_property):
    parts = {}
    for kind in ("badset", "degree", "absorbing"):
        assert serial.get(f"census_{kind}") == 0
        recs = _jsonl(serial.path(f"census_{kind}.jsonl"))
        assert len(recs) == 20
        parts[kind] = sum(r["respected"] for r in recs)
    worst = max(r["max"] for r in _jsonl(serial.path("census_badset.jsonl")))
    record_property("detail", ", ".join(f"{k} {v}/20" for k, v in parts.items())
                    + f" (largest bad set {worst} against log(n)/p = {math.log(5000) / 0.1:.1f})")
    assert all(v >= 19 for v in parts.values())


# --- 7 ------------------------------------------------------------------------


def test_criterion_7_walk_probabilities(serial, record_property):
    code = serial.get("walkprob")
    recs = _jsonl(serial.path("walk.jsonl"))
    record_property("detail", ", ".join(f"{r['lemma']} {r['empirical']:.4f} vs {r['bound']:.4f}"
                                        + ("" if r["respected"] else " (violated)") for r in recs))
    assert code == 0 and len(recs) == 5 and all(r["respected"] for r in recs)


# --- 8 ------------------------------------------------------------------------


def test_criterion_8_pipeline_end_to_end(serial, record_property):
    serial.get("pipeline")
    recs = _jsonl(serial.path("pipeline.jsonl"))
    ok = [r for r in recs if r["ok"]]
    bins = Counter(f"stage{r['failure']['stage']}:{r['failure']['hypothesis']}" for r in recs if not r["ok"])
    record_property("detail", f"{len(ok)}/20 hamilton cycles; failures by hypothesis {dict(bins)}")
    assert len(recs) == 20
    assert all(r["failure"]["hypothesis"] for r in recs if not r["ok"])
    assert all(r["assertions_green"] and r["cycle_length"] == 3000 for r in ok)
    assert len(ok) >= 16


# --- 9 ------------------------------------------------------------------------


def _regular_oracle(adj, A, B, eps, scale):
    eps = Fraction(eps)
    d = Fraction(sum(adj[a][b] for a in A for b in B), len(A) * len(B))
    for X in (c for x in range(1, len(A) + 1) for c in itertools.combinations(A, x)):
        if len(X) < eps * len(A):
            continue
        for Y in (c for y in range(1, len(B) + 1) for c in itertools.combinations(B, y)):
            if len(Y) < eps * len(B):
                continue
            if abs(Fraction(sum(adj[a][b] for a in X for b in Y), len(X) * len(Y)) - d) > eps * Fraction(scale):
                return False
    return True


def test_criterion_9_regularity_oracle(record_property):
    bad = irregular = 0
    A, B = list(range(4)), list(range(4, 8))
    for s in range(500):
        rng = make_rng(s, "criterion9")
        adj = np.zeros((8, 8), dtype=bool)
        adj[:4, 4:] = rng.random((4, 4)) < rng.uniform(0.1, 0.9)
        eps = (Fraction(1, 10), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2))[s % 4]
        scale = (1, Fraction(1, 2))[s // 4 % 2]
        v = is_regular_pair(Digraph(adj), A, B, eps, scale=scale, mode="exhaustive")
        want = _regular_oracle(adj.tolist(), A, B, eps, scale)
        bad += v.regular != want
        irregular += not want
    blocks = [(u, v) for u in range(5) for v in range(10, 15)] + [(u, v) for u in range(5, 10) for v in range(15, 20)]
    D = Digraph.from_arcs(20, blocks)
    v = is_regular_pair(D, range(10), range(10, 20), 0.25, scale=1, mode="exhaustive")
    block_ok = not v.regular and not _regular_oracle(D.adj.tolist(), list(range(10)), list(range(10, 20)), 0.25, 1)
    record_property("detail", f"500 pairs ({irregular} irregular), disagreements {bad}; planted block "
                              + ("irregular in both" if block_ok else "MISMATCH"))
    assert bad == 0 and block_ok


# --- 10 -----------------------------------------------------------------------


def test_criterion_10_determinism(serial, parallel, tmp_path, record_property):
    differ = []
    for name, (_, files) in serial.runs.items():
        assert serial.get(name) == parallel.get(name)
        for f in files:
            if serial.path(f).read_bytes() != parallel.path(f).read_bytes():
                differ.append(f)
    outs = []
    for jobs in (1, PARALLEL_JOBS):
        _, recs = survival_rate(16, 0.9, 0.1, graphs=20, draws=100, seed=0, jobs=jobs)
        write_records(recs, tmp_path / f"survival{jobs}.jsonl")
        outs.append((tmp_path / f"survival{jobs}.jsonl").read_bytes())
    if outs[0] != outs[1]:
        differ.append("survival.jsonl")
    total = sum(len(f) for _, f in serial.runs.values()) + 1
    record_property("detail", f"--jobs 1 vs {PARALLEL_JOBS}: {total - len(differ)}/{total} output files identical")
    assert not differ
