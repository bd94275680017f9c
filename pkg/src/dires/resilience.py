"""Chernoff bounds, lemma censuses, and empirical local resilience brackets.

A deletion level L lets the adversary remove at most L out-arcs and at most
L in-arcs at every vertex. ``estimate_resilience`` scans levels upward and
reports a bracket [lower, upper): every draw at ``lower`` stayed
Hamiltonian, some draw at ``upper`` did not. Solver timeouts are censored
and never count as destruction.
"""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .adversary import capped_bipartition_adversary, greedy_cut_adversary, random_budget_adversary
from .digraph import Digraph, generate_random_digraph
from .hamiltonicity import SolverBudget, exact_hamilton
from .seeding import derive_seed, make_rng
from .stats import binomial_sigma

KINDS = ("i", "ii", "iii", "iv")
ADVERSARIES = ("random", "bipartition", "greedy_cut")


# --- Chernoff ------------------------------------------------------------------


def _check_np(n, p) -> None:
    if n < 0 or not 0.0 <= p <= 1.0:
        raise ValueError("need n >= 0 and 0 <= p <= 1")


def chernoff_bound(kind: str, n: int, p: float, eps: Optional[float] = None, x: Optional[float] = None) -> float:
    """Closed-form tail bound for X ~ Bin(n, p).

    i: Pr(X <= (1-eps)np) <= exp(-eps^2 np/2); ii: Pr(X >= (1+eps)np) <= exp(-eps^2 np/3);
    iii: Pr(|X-np| >= eps np) <= 2 exp(-eps^2 np/3); iv: Pr(X >= x) <= exp(-x) for x >= 7np.
    """
    _check_np(n, p)
    mu = n * p
    if kind in ("i", "ii", "iii"):
        if eps is None or not 0.0 <= eps <= 1.0:
            raise ValueError(f"kind {kind} needs 0 <= eps <= 1")
        if kind == "i":
            return math.exp(-eps * eps * mu / 2)
        if kind == "ii":
            return math.exp(-eps * eps * mu / 3)
        return 2 * math.exp(-eps * eps * mu / 3)
    if kind == "iv":
        if x is None or x < 7 * mu - 1e-12:
            raise ValueError("kind iv needs x >= 7np")
        return math.exp(-x)
    raise ValueError(f"kind must be one of {KINDS}")


@dataclass(frozen=True)
class TailCheck:
    frequency: float
    bound: float
    sigma: float
    respected: bool


def _event(kind: str, X: np.ndarray, mu: float, eps, x) -> np.ndarray:
    tol = 1e-9
    if kind == "i":
        return X <= (1 - eps) * mu + tol
    if kind == "ii":
        return X >= (1 + eps) * mu - tol
    if kind == "iii":
        return np.abs(X - mu) >= eps * mu - tol
    return X >= x - tol


def empirical_tail(n: int, p: float, kind: str, eps: Optional[float] = None, x: Optional[float] = None,
                   samples: int = 100_000, seed: int = 0) -> TailCheck:
    """Frequency of the bounded event over Binomial(n, p) samples, against the bound plus 3 sigma."""
    bound = chernoff_bound(kind, n, p, eps, x)
    X = make_rng(seed, "tail").binomial(n, p, size=samples)
    freq = float(_event(kind, X, n * p, eps, x).mean())
    sig = binomial_sigma(freq, samples)
    return TailCheck(freq, bound, sig, freq <= bound + 3 * sig)


# --- lemma censuses ------------------------------------------------------------


@dataclass(frozen=True)
class BadSetCensus:
    max_size: int
    sizes: tuple[int, ...]
    bound: float
    respected: bool


def bad_set_of(D: Digraph, Y: Sequence[int], eps: float, p: float) -> frozenset:
    """B_Y: vertices outside Y whose in- or out-degree into Y is off by >= eps |Y| p."""
    Y = np.asarray(sorted(set(int(v) for v in Y)), dtype=np.int64)
    adj = D.adj
    mid, tol = len(Y) * p, eps * len(Y) * p - 1e-9
    out_d = adj[:, Y].sum(axis=1)
    in_d = adj[Y, :].sum(axis=0)
    bad = (np.abs(out_d - mid) >= tol) | (np.abs(in_d - mid) >= tol)
    bad[Y] = False
    return frozenset(np.flatnonzero(bad).tolist())


def bad_set_census(D: Digraph, c: float, eps: float, samples: int, seed: int, p: Optional[float] = None,
                   avoid: Sequence[int] = ()) -> BadSetCensus:
    """Largest |B_Y| over sampled Y of size ceil(c n), against p^-1 log n.

    ``p`` defaults to the arc density; ``avoid`` keeps given vertices out of Y.
    """
    n = D.n
    size = math.ceil(c * n - 1e-9)
    if size < 1:
        raise ValueError("need c n >= 1")
    p = D.m / (n * (n - 1)) if p is None else p
    pool = np.setdiff1d(np.arange(n), np.asarray(list(avoid), dtype=np.int64))
    if size > len(pool):
        raise ValueError("not enough vertices to sample Y")
    rng = make_rng(seed, "badset")
    sizes = tuple(len(bad_set_of(D, rng.choice(pool, size=size, replace=False), eps, p)) for _ in range(samples))
    bound = math.log(n) / p if p > 0 else math.inf
    mx = max(sizes, default=0)
    return BadSetCensus(mx, sizes, bound, mx <= bound)


@dataclass(frozen=True)
class DegreeExcessCensus:
    clause_i: tuple[int, ...]
    clause_ii: tuple[int, ...]
    sizes_i: tuple[int, ...]
    sizes_ii: tuple[int, ...]
    bound_i: float
    bound_ii: float
    respected: bool


def degree_excess_counts(D: Digraph, A: Sequence[int], p: float) -> tuple[int, int]:
    """(#u outside A with deg+(u,A) >= 2pa, #u outside A with deg+(u,A) >= 7 sqrt(p) a)."""
    A = np.asarray(sorted(set(int(v) for v in A)), dtype=np.int64)
    a = len(A)
    deg = D.adj[:, A].sum(axis=1)
    outside = np.ones(D.n, dtype=bool)
    outside[A] = False
    c1 = int(((deg >= 2 * p * a - 1e-9) & outside).sum())
    c2 = int(((deg >= 7 * math.sqrt(p) * a - 1e-9) & outside).sum())
    return c1, c2


def degree_excess_census(D: Digraph, ell: int, samples: int, seed: int, p: Optional[float] = None,
                         c: float = 1.0) -> DegreeExcessCensus:
    """Counts for both clauses over sampled A in their size windows.

    Clause (i) draws a uniformly from [c ell p, 2 ell p], clause (ii) from
    [ell p^1.5, 2 ell p]. Warns when ell p^2 is not above log n.
    """
    n = D.n
    p = D.m / (n * (n - 1)) if p is None else p
    if ell * p * p <= math.log(max(n, 2)):
        warnings.warn(f"ell p^2 = {ell * p * p:.2f} is not above log n = {math.log(max(n, 2)):.2f}")
    rng = make_rng(seed, "degexcess")

    def window(lo, hi):
        lo, hi = max(1, math.ceil(lo - 1e-9)), min(n, math.floor(hi + 1e-9))
        return lo, max(lo, hi)

    lo1, hi1 = window(c * ell * p, 2 * ell * p)
    lo2, hi2 = window(ell * p ** 1.5, 2 * ell * p)
    ci, cii, si, sii = [], [], [], []
    for _ in range(samples):
        a = int(rng.integers(lo1, hi1 + 1))
        ci.append(degree_excess_counts(D, rng.choice(n, size=a, replace=False), p)[0])
        si.append(a)
        a = int(rng.integers(lo2, hi2 + 1))
        cii.append(degree_excess_counts(D, rng.choice(n, size=a, replace=False), p)[1])
        sii.append(a)
    b1, b2 = ell * p, ell * p ** 1.5
    ok = max(ci, default=0) <= b1 and max(cii, default=0) <= b2
    return DegreeExcessCensus(tuple(ci), tuple(cii), tuple(si), tuple(sii), b1, b2, ok)


def absorbing_pair_census(D: Digraph, S: Sequence[int], T: Sequence[tuple[int, int]]) -> int:
    """Number of ((x, y), z) in T x S with (x, z) and (z, y) both arcs of D."""
    S = sorted(set(int(z) for z in S))
    T = [(int(x), int(y)) for x, y in T]
    tails = [x for x, _ in T]
    heads = [y for _, y in T]
    if len(set(tails)) != len(tails) or len(set(heads)) != len(heads):
        raise ValueError("T must have maximum out-degree and in-degree one")
    if set(tails + heads) & set(S):
        raise ValueError("arcs of T must avoid S")
    if not S or not T:
        return 0
    adj = D.adj
    xs, ys, zs = np.asarray(tails), np.asarray(heads), np.asarray(S)
    return int((adj[np.ix_(xs, zs)] & adj[np.ix_(zs, ys)].T).sum())


def random_absorbing_instance(n: int, s: int, seed: int) -> tuple[list[int], list[tuple[int, int]]]:
    """S of size s and s vertex-disjoint pairs (x, y) outside S."""
    if 3 * s > n:
        raise ValueError("need 3 s <= n")
    perm = make_rng(seed, "absorb").permutation(n)
    S = sorted(perm[:s].tolist())
    rest = perm[s: 3 * s]
    return S, [(int(rest[2 * i]), int(rest[2 * i + 1])) for i in range(s)]


# --- resilience ------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    n: int
    p: float
    seed: int
    alpha: Optional[float]
    level: int
    trial: int
    adversary: str
    solver: str
    verdict: str  # hamiltonian, non_hamiltonian or unknown
    runtime: float
    diagnostics: str = ""

    def as_json(self, include_runtime: bool = False) -> str:
        d = asdict(self)
        if not include_runtime:
            d.pop("runtime")
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class LevelSummary:
    level: int
    trials: int
    hamiltonian: int
    destroyed: int
    unknown: int
    fraction_of_np: float


@dataclass(frozen=True)
class ResilienceEstimate:
    lower: Optional[int]
    upper: Optional[int]
    np: float
    trials_per_level: int
    levels: tuple[LevelSummary, ...]
    records: tuple[TrialRecord, ...]
    inconclusive: bool
    notes: tuple[str, ...] = ()

    @property
    def lower_fraction(self) -> Optional[float]:
        return None if self.lower is None or self.np == 0 else self.lower / self.np

    @property
    def upper_fraction(self) -> Optional[float]:
        return None if self.upper is None or self.np == 0 else self.upper / self.np


def _adversary(name: str, D: Digraph, level: int, seed: int):
    if name == "random":
        return random_budget_adversary(D, seed=seed, level=level)
    if name == "bipartition":
        return capped_bipartition_adversary(D, level, seed=seed)
    if name == "greedy_cut":
        return greedy_cut_adversary(D, seed=seed, level=level)
    raise ValueError(f"adversary must be one of {ADVERSARIES}")


def _verdict(out, budget: SolverBudget) -> tuple[str, str, str]:
    if out.cut_is_empty():
        return "non_hamiltonian", "cut-certificate", "empty cut between the split halves"
    res = exact_hamilton(out.surviving, budget)
    v = res.is_hamiltonian
    verdict = "hamiltonian" if v else "non_hamiltonian" if v is False else "unknown"
    return verdict, f"exact:{res.method}", res.reason


def _run_trial(args) -> list[TrialRecord]:
    n, p, master, level, trial, adversaries, budget = args
    gseed = derive_seed(master, "graph", level, trial)
    D = generate_random_digraph(n, p, gseed)
    out = []
    for k, name in enumerate(adversaries):
        t0 = time.perf_counter()
        adv = _adversary(name, D, level, derive_seed(master, "adversary", level, trial, k))
        verdict, solver, diag = _verdict(adv, budget)
        if verdict == "unknown" and not diag:
            diag = "solver budget exhausted"
        out.append(TrialRecord(n, p, gseed, None, level, trial, name, solver, verdict,
                               time.perf_counter() - t0, diag))
    return out


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def default_levels(n: int, p: float) -> list[int]:
    return list(range(0, math.ceil(0.8 * n * p - 1e-9) + 1))


def estimate_resilience(n: int, p: float, adversaries: Sequence[str] = ADVERSARIES,
                        budget: Optional[SolverBudget] = None, levels: Optional[Sequence[int]] = None,
                        trials: int = 10, seed: int = 0, jobs: int = 1, stop_at_first: bool = True) -> ResilienceEstimate:
    """Scan levels in ascending order; the bracket ends at the first destruction.

    Each trial draws a fresh D(n, p) and applies every adversary in the
    family to it. Seeds derive from (seed, level, trial), so results do not
    depend on ``jobs``.
    """
    if n < 2 or trials < 1:
        raise ValueError("need n >= 2 and trials >= 1")
    for a in adversaries:
        if a not in ADVERSARIES:
            raise ValueError(f"adversary must be one of {ADVERSARIES}")
    budget = budget or SolverBudget()
    levels = sorted(set(default_levels(n, p) if levels is None else (int(v) for v in levels)))
    mu = n * p
    summaries, records, notes = [], [], []
    lower = upper = None
    inconclusive = False
    for level in levels:
        tasks = [(n, p, seed, level, t, tuple(adversaries), budget) for t in range(trials)]
        recs = [r for batch in _map(_run_trial, tasks, jobs) for r in batch]
        records.extend(recs)
        ham = sum(r.verdict == "hamiltonian" for r in recs)
        dead = sum(r.verdict == "non_hamiltonian" for r in recs)
        unk = len(recs) - ham - dead
        summaries.append(LevelSummary(level, len(recs), ham, dead, unk, level / mu if mu else 0.0))
        if unk == len(recs):
            inconclusive = True
            notes.append(f"level {level}: every verdict censored")
        elif unk:
            notes.append(f"level {level}: {unk} censored verdicts")
        if dead:
            upper = level
            break
        if ham:
            lower = level
    if upper is None:
        notes.append("no destruction observed on the level grid")
        inconclusive = True
    return ResilienceEstimate(lower, upper, mu, trials, tuple(summaries), tuple(records), inconclusive, tuple(notes))


def survival_rate(n: int, p: float, alpha: float, graphs: int, draws: int, seed: int,
                  budget: Optional[SolverBudget] = None, jobs: int = 1) -> tuple[float, tuple[TrialRecord, ...]]:
    """Fraction of random-budget draws at resilience alpha after which a Hamilton cycle is found."""
    budget = budget or SolverBudget()
    tasks = [(n, p, alpha, seed, g, draws, budget) for g in range(graphs)]
    recs = [r for batch in _map(_survival_graph, tasks, jobs) for r in batch]
    return sum(r.verdict == "hamiltonian" for r in recs) / len(recs), tuple(recs)


def _survival_graph(args) -> list[TrialRecord]:
    n, p, alpha, master, g, draws, budget = args
    gseed = derive_seed(master, "graph", g)
    D = generate_random_digraph(n, p, gseed)
    out = []
    for t in range(draws):
        t0 = time.perf_counter()
        adv = random_budget_adversary(D, alpha=alpha, seed=derive_seed(master, "adversary", g, t))
        res = exact_hamilton(adv.surviving, budget)
        v = res.is_hamiltonian
        verdict = "hamiltonian" if v else "non_hamiltonian" if v is False else "unknown"
        out.append(TrialRecord(n, p, gseed, alpha, -1, t, "random", f"exact:{res.method}", verdict,
                               time.perf_counter() - t0, res.reason or ("solver budget exhausted" if v is None else "")))
    return out


def write_records(records, path, include_runtime: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r.as_json(include_runtime) + "\n")


def write_summary(levels: Sequence[LevelSummary], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "trials", "hamiltonian", "destroyed", "unknown", "fraction_of_np"])
        for s in levels:
            w.writerow([s.level, s.trials, s.hamiltonian, s.destroyed, s.unknown, f"{s.fraction_of_np:.6f}"])
