"""Partitions, (eps, p)-regularity verdicts, and the reduced cycle.

A pair (A, B) is (eps, p)-regular when every X in A, Y in B with
``|X| >= eps|A|`` and ``|Y| >= eps|B|`` has ``|d(X,Y) - d(A,B)| <= eps p``.
Exhaustive verdicts are exact. Sampled verdicts are one-sided: a witness
is a proof of irregularity, "regular" only means no probe found one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .digraph import Digraph, arc_count, induced_density
from .hamiltonicity import ghouila_houri_cycle, validate_cycle
from .seeding import as_rng, make_rng
from .stats import chernoff_tail

EXHAUSTIVE_LIMIT = 12
DEFAULT_PROBES = 500
EQUALIZE_C = 4


@dataclass(frozen=True)
class Partition:
    v0: tuple[int, ...]
    parts: tuple[tuple[int, ...], ...]
    ell: int

    def __post_init__(self):
        for part in self.parts:
            if len(part) != self.ell:
                raise ValueError("parts must all have size ell")
        seen = set(self.v0)
        for part in self.parts:
            if seen & set(part):
                raise ValueError("partition classes overlap")
            seen |= set(part)

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def n(self) -> int:
        return len(self.v0) + self.k * self.ell

    def part_of(self) -> np.ndarray:
        """Array mapping vertex -> part index (-1 for V0)."""
        out = np.full(self.n, -1, dtype=np.int64)
        for i, part in enumerate(self.parts):
            out[list(part)] = i
        return out


@dataclass(frozen=True)
class RegularityVerdict:
    regular: bool
    density: Fraction
    witness: Optional[tuple[tuple[int, ...], tuple[int, ...]]] = None
    mode: str = "exhaustive"
    probes: int = 0


@dataclass(frozen=True)
class RegularityDigraph:
    k: int
    arcs: dict  # (i, j) -> Fraction density
    densities: dict = field(default_factory=dict)  # every tested pair

    def as_digraph(self) -> Digraph:
        return Digraph.from_arcs(self.k, self.arcs.keys())


@dataclass(frozen=True)
class ReducedCycle:
    cycle: Optional[tuple[int, ...]]
    kept: tuple[int, ...]
    peeled: tuple[int, ...]
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.cycle is not None

    @property
    def r(self) -> int:
        return len(self.cycle) if self.cycle else 0


def equitable_partition(D: Digraph, k: int, seed) -> Partition:
    """Seeded shuffle cut into k parts of size floor(n/k); the rest is V0."""
    n = D.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, n], got {k}")
    ell = n // k
    perm = as_rng(seed).permutation(n)
    parts = tuple(tuple(sorted(perm[i * ell:(i + 1) * ell].tolist())) for i in range(k))
    v0 = tuple(sorted(perm[k * ell:].tolist()))
    return Partition(v0=v0, parts=parts, ell=ell)


def write_partition(P: Partition, path) -> None:
    lines = [f"partition {P.n} {P.k} {P.ell}", " ".join(map(str, P.v0))]
    lines += [" ".join(map(str, part)) for part in P.parts]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_partition(path) -> Partition:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    head = lines[0].split() if lines else []
    if len(head) != 4 or head[0] != "partition":
        raise ValueError("line 1: malformed partition header")
    n, k, ell = (int(t) for t in head[1:])
    if len(lines) != k + 2:
        raise ValueError(f"expected {k + 2} lines, found {len(lines)}")
    v0 = tuple(int(t) for t in lines[1].split())
    parts = tuple(tuple(int(t) for t in line.split()) for line in lines[2:])
    P = Partition(v0=v0, parts=parts, ell=ell)
    if P.n != n or set(v0).union(*map(set, parts)) != set(range(n)):
        raise ValueError("partition does not cover 0..n-1")
    return P


# --- verdicts ---------------------------------------------------------------


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _min_size(eps: Fraction, size: int) -> int:
    return max(1, math.ceil(eps * size))


def _bounds(E: int, a: int, b: int, tol: Fraction, xs, ys):
    """Integer windows: (X, Y) of sizes (x, y) is fine iff LO <= e <= HI."""
    lo = np.zeros((a + 1, b + 1), dtype=np.int64)
    hi = np.zeros((a + 1, b + 1), dtype=np.int64)
    ab = a * b
    for x in xs:
        for y in ys:
            centre = Fraction(E * x * y, ab)
            slack = tol * x * y
            hi[x, y] = math.floor(centre + slack)
            lo[x, y] = math.ceil(centre - slack)
    return lo, hi


def _exhaustive(M: np.ndarray, A, B, eps: Fraction, tol: Fraction, density: Fraction):
    a, b = M.shape
    E = int(M.sum())
    xmin, ymin = _min_size(eps, a), _min_size(eps, b)
    xs, ys = range(xmin, a + 1), range(ymin, b + 1)
    lo, hi = _bounds(E, a, b, tol, xs, ys)
    masks = np.arange(1, 1 << a, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(a)) & 1).astype(np.int64)
    sizes = bits.sum(axis=1)
    keep = sizes >= xmin
    masks, bits, sizes = masks[keep], bits[keep], sizes[keep]
    C = bits @ M.astype(np.int64)  # C[X, b] = e(X, {b})
    order = np.argsort(C, axis=1, kind="stable")
    Cs = np.take_along_axis(C, order, axis=1)
    low_sum = np.cumsum(Cs, axis=1)
    high_sum = np.cumsum(Cs[:, ::-1], axis=1)
    d = float(density)
    best = None  # (deviation, total size, X tuple, Y tuple)
    for y in ys:
        emin, emax = low_sum[:, y - 1], high_sum[:, y - 1]
        lo_y, hi_y = lo[sizes, y], hi[sizes, y]
        for e_arr, side in ((emin, "low"), (emax, "high")):
            viol = (e_arr < lo_y) if side == "low" else (e_arr > hi_y)
            if not viol.any():
                continue
            idx = np.flatnonzero(viol)
            dev = np.abs(e_arr[idx] / (sizes[idx] * y) - d)
            top = dev.max()
            for j in idx[np.flatnonzero(dev >= top - 1e-15)]:
                X = tuple(A[t] for t in np.flatnonzero(bits[j]))
                cols = order[j, :y] if side == "low" else order[j, ::-1][:y]
                Y = tuple(sorted(B[t] for t in cols))
                key = (top, len(X) + y, tuple(-v for v in X))
                if best is None or key > best[0]:
                    best = (key, X, Y)
    if best is None:
        return None
    return best[1], best[2]


def _probe_sizes(eps: Fraction, size: int) -> list[int]:
    return sorted({_min_size(eps, size), max(1, math.ceil(size / 2)), size})


def _sampled(M, A, B, eps, tol, density, probes, rng, significance):
    a, b = M.shape
    E = int(M.sum())
    sa, sb = _probe_sizes(eps, a), _probe_sizes(eps, b)
    lo, hi = _bounds(E, a, b, tol, sa, sb)
    cells = [(x, y) for x in sa for y in sb]
    rows, cols = [], []
    # Degree-outlier probes: extreme out-degree rows against all of B and
    # extreme in-degree columns against all of A.
    out_deg, in_deg = M.sum(axis=1), M.sum(axis=0)
    kx, ky = sa[0], sb[0]
    ox = np.argsort(out_deg, kind="stable")
    oy = np.argsort(in_deg, kind="stable")
    xsets = [ox[:kx], ox[::-1][:kx]]
    ysets = [oy[:ky], oy[::-1][:ky]]
    allx, ally = np.arange(a), np.arange(b)
    for xs_ in xsets:
        rows.append(xs_)
        cols.append(ally)
    for ys_ in ysets:
        rows.append(allx)
        cols.append(ys_)
    for w in range(probes):
        x, y = cells[w % len(cells)]
        rows.append(allx if x == a else rng.choice(a, size=x, replace=False))
        cols.append(ally if y == b else rng.choice(b, size=y, replace=False))
    Xm = np.zeros((len(rows), a), dtype=np.float64)
    Ym = np.zeros((len(rows), b), dtype=np.float64)
    for i, (r, c) in enumerate(zip(rows, cols)):
        Xm[i, r] = 1.0
        Ym[i, c] = 1.0
    e = np.rint(((Xm @ M) * Ym).sum(axis=1)).astype(np.int64)
    xsz = Xm.sum(axis=1).astype(np.int64)
    ysz = Ym.sum(axis=1).astype(np.int64)
    viol = (e < lo[xsz, ysz]) | (e > hi[xsz, ysz])
    if significance is not None and viol.any():
        tail = chernoff_tail(e, xsz * ysz, float(density))
        viol &= tail <= significance
    if not viol.any():
        return None, len(rows)
    i = int(np.flatnonzero(viol)[0])
    X = tuple(sorted(A[t] for t in np.flatnonzero(Xm[i])))
    Y = tuple(sorted(B[t] for t in np.flatnonzero(Ym[i])))
    return (X, Y), len(rows)


def is_regular_pair(
    D: Digraph,
    A: Sequence[int],
    B: Sequence[int],
    eps,
    scale=1,
    mode: str = "exhaustive",
    probes: int = DEFAULT_PROBES,
    seed=0,
    significance: Optional[float] = None,
) -> RegularityVerdict:
    """Decide (exhaustive) or probe (sampled) (eps, scale)-regularity of (A, B).

    ``scale=None`` means the (eps)-regular case, scale = d(A, B). With
    ``significance`` set, a sampled probe only counts as a witness when its
    Chernoff tail under the pair's own density is at most that value; the
    witness still violates the definition, so it remains a proof.
    """
    A = sorted(set(int(v) for v in A))
    B = sorted(set(int(v) for v in B))
    density = induced_density(D, A, B)
    eps = _frac(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    p = density if scale is None else _frac(scale)
    tol = eps * p
    M = D.adj[np.ix_(A, B)]
    if mode == "exhaustive":
        if len(A) > EXHAUSTIVE_LIMIT or len(B) > EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive mode handles at most {EXHAUSTIVE_LIMIT} vertices per side")
        wit = _exhaustive(M, A, B, eps, tol, density)
        return RegularityVerdict(wit is None, density, wit, "exhaustive", 0)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    wit, used = _sampled(M.astype(np.float64), A, B, eps, tol, density, probes, as_rng(seed), significance)
    return RegularityVerdict(wit is None, density, wit, "sampled", used)


def witness_violates(D: Digraph, A, B, eps, scale, witness) -> bool:
    """Re-check a witness against the definition, in exact arithmetic."""
    X, Y = witness
    eps = _frac(eps)
    dAB = induced_density(D, A, B)
    p = dAB if scale is None else _frac(scale)
    if len(X) < eps * len(set(A)) or len(Y) < eps * len(set(B)):
        return False
    if not set(X) <= set(A) or not set(Y) <= set(B):
        return False
    return abs(induced_density(D, X, Y) - dAB) > eps * p


def enumerate_regular(D: Digraph, A, B, eps, scale=1) -> bool:
    """Definitional check over all subset pairs; tiny inputs only (tests)."""
    from itertools import combinations

    A, B = sorted(A), sorted(B)
    eps = _frac(eps)
    dAB = induced_density(D, A, B)
    p = dAB if scale is None else _frac(scale)
    for x in range(1, len(A) + 1):
        if x < eps * len(A):
            continue
        for X in combinations(A, x):
            for y in range(1, len(B) + 1):
                if y < eps * len(B):
                    continue
                for Y in combinations(B, y):
                    if abs(induced_density(D, X, Y) - dAB) > eps * p:
                        return False
    return True


# --- audits -------------------------------------------------------------------


def check_boundedness(D: Digraph, eta: float, L: float, scale: float, probes: int = 200, seed=0) -> tuple[bool, float]:
    """Sample disjoint pairs with both sides >= eta n; test e(A,B) <= L p |A||B|."""
    n = D.n
    if not 0 < eta <= 1 or L <= 1:
        raise ValueError("need 0 < eta <= 1 and L > 1")
    lo = math.ceil(eta * n)
    if eta * n < 1:
        raise ValueError(f"eta * n = {eta * n} < 1")
    if 2 * lo > n:
        raise ValueError("two disjoint sets of size eta*n do not fit")
    if scale <= 0:
        raise ValueError("scale must be positive")
    rng = as_rng(seed)
    worst = 0.0
    ok = True
    adj = D.adj
    for _ in range(probes):
        a = int(rng.integers(lo, n // 2 + 1))
        b = int(rng.integers(lo, n - a + 1))
        perm = rng.permutation(n)
        Aset, Bset = perm[:a], perm[a:a + b]
        e = int(adj[np.ix_(Aset, Bset)].sum())
        ratio = e / (scale * a * b)
        worst = max(worst, ratio)
        if e > L * scale * a * b:
            ok = False
    return ok, worst


@dataclass(frozen=True)
class OutlierCounts:
    high_out: int
    low_out: int
    high_in: int
    low_in: int


def degree_outlier_census(D: Digraph, A, B, eps: float, d: float) -> OutlierCounts:
    A, B = sorted(A), sorted(B)
    if not A or not B or set(A) & set(B):
        raise ValueError("A and B must be nonempty and disjoint")
    M = D.adj[np.ix_(A, B)]
    out_d, in_d = M.sum(axis=1), M.sum(axis=0)
    return OutlierCounts(
        high_out=int((out_d > (1 + eps) * d * len(B)).sum()),
        low_out=int((out_d < (1 - eps) * d * len(B)).sum()),
        high_in=int((in_d > (1 + eps) * d * len(A)).sum()),
        low_in=int((in_d < (1 - eps) * d * len(A)).sum()),
    )


def equalize_densities(D: Digraph, partition: Partition, pairs, target: int, seed, C: int = EQUALIZE_C) -> Digraph:
    """Thin every listed pair (V_i -> V_j) to exactly ``target`` arcs."""
    rng = as_rng(seed)
    adj = D.adj.copy()
    ell = partition.ell
    if target < C * 2 * ell:
        warnings.warn(f"target {target} is below C*2*ell = {C * 2 * ell}; thinning lemma hypothesis unmet")
    for i, j in pairs:
        Vi, Vj = np.asarray(partition.parts[i]), np.asarray(partition.parts[j])
        sub = adj[np.ix_(Vi, Vj)]
        rs, cs = np.nonzero(sub)
        if target > len(rs):
            raise ValueError(f"pair ({i}, {j}) has {len(rs)} arcs, fewer than target {target}")
        drop = rng.choice(len(rs), size=len(rs) - target, replace=False)
        adj[Vi[rs[drop]], Vj[cs[drop]]] = False
    return Digraph(adj)


def build_regularity_digraph(
    D: Digraph,
    partition: Partition,
    delta: float,
    eps,
    mode: str = "sampled",
    scale=1,
    probes: int = DEFAULT_PROBES,
    seed=0,
    significance: Optional[float] = None,
) -> RegularityDigraph:
    """Arc (i, j) iff (V_i, V_j) is judged regular with density >= delta.

    Each pair gets its own child seed, so verdicts do not depend on the
    order pairs are evaluated in.
    """
    k = partition.k
    arcs, dens = {}, {}
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            A, B = partition.parts[i], partition.parts[j]
            d = Fraction(arc_count(D, A, B), len(A) * len(B))
            dens[(i, j)] = d
            if d < delta:
                continue
            pair_seed = make_rng(int(_seed_int(seed)), "pair", i, j)
            v = is_regular_pair(D, A, B, eps, scale, mode, probes, pair_seed, significance)
            if v.regular:
                arcs[(i, j)] = d
    return RegularityDigraph(k=k, arcs=arcs, densities=dens)


def _seed_int(seed) -> int:
    if isinstance(seed, np.random.Generator):
        return int(seed.integers(2**63))
    return int(seed)


def reduced_hamilton_cycle(R: RegularityDigraph | Digraph, k: Optional[int] = None) -> ReducedCycle:
    """Peel indices with R-degree below k/2, then run the GH construction."""
    G = R.as_digraph() if isinstance(R, RegularityDigraph) else R
    k = G.n if k is None else k
    alive = np.ones(G.n, dtype=bool)
    adj = G.adj
    while True:
        sub = adj & alive[None, :] & alive[:, None]
        low = alive & ((sub.sum(axis=1) * 2 < k) | (sub.sum(axis=0) * 2 < k))
        if not low.any():
            break
        alive &= ~low
    kept = tuple(np.flatnonzero(alive).tolist())
    peeled = tuple(np.flatnonzero(~alive).tolist())
    if len(kept) < 2:
        return ReducedCycle(None, kept, peeled, "reduced digraph vanished")
    H = Digraph(adj[np.ix_(kept, kept)])
    assert H.out_degrees.min() * 2 >= k and H.in_degrees.min() * 2 >= k
    local = ghouila_houri_cycle(H)
    cyc = tuple(kept[v] for v in local.order)
    assert validate_cycle(G, cyc, require_hamilton=False).ok
    return ReducedCycle(cyc, kept, peeled)
