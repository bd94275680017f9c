"""Hit probabilities of consecutive random forward steps on regular layered hosts.

The host has r parts of size ell, each vertex has exactly ``d ell`` out-arcs
into the next part and exactly ``d ell`` in-arcs from the previous one, and
nothing else. Blocks start as circulant bands and are randomized by
degree-preserving switches. With an empty forbidden set every vertex is
nice, so a random forward step is a uniform out-neighbour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from ..digraph import Digraph
from ..regularity import is_regular_pair
from ..seeding import derive_seed, make_rng
from ..stats import binomial_sigma
from .config import Derived

LEMMAS = ("two", "three", "four", "two_upper", "three_upper")


@dataclass(frozen=True)
class HostSpec:
    r: int = 6
    ell: int = 400
    p: float = 0.5
    xi: float = 0.5
    eps: float = 1e-3
    eps_prime: float = 1e-3
    lam: Optional[float] = None  # None: the largest value the q1 hypothesis allows
    significance: float = 1e-9
    probes: int = 200

    @property
    def d(self) -> float:
        return self.xi * self.p

    @property
    def degree(self) -> int:
        return int(round(self.d * self.ell))

    def derived(self) -> Derived:
        cap = (1 - self.eps_prime) * (1 - self.eps) * self.xi * self.eps_prime
        lam = cap if self.lam is None else self.lam
        return Derived(ell=self.ell, p=self.p, delta=self.d, q1=lam * self.ell * self.p, q2=2 * self.ell * self.p)


def default_host(lemma: str) -> HostSpec:
    """Dense host for the lower bounds; sparse host so the upper bounds are below 1 where possible."""
    if lemma in ("two_upper", "three_upper"):
        return HostSpec(p=0.02, xi=1.0)
    return HostSpec()


@dataclass(frozen=True)
class WalkEstimate:
    lemma: str
    trials: int
    empirical: float
    bound: float
    sigma: float
    respected: bool
    kind: str  # "lower" or "upper"
    components: dict = field(default_factory=dict)
    sizes: dict = field(default_factory=dict)


@njit(cache=True)
def _switch(rows, cols, mat, iters):
    m = rows.shape[0]
    for _ in range(iters):
        a = np.random.randint(0, m)
        b = np.random.randint(0, m)
        r1, c1, r2, c2 = rows[a], cols[a], rows[b], cols[b]
        if r1 == r2 or c1 == c2 or mat[r1, c2] or mat[r2, c1]:
            continue
        mat[r1, c1] = False
        mat[r2, c2] = False
        mat[r1, c2] = True
        mat[r2, c1] = True
        cols[a] = c2
        cols[b] = c1


@njit(cache=True)
def _seed_numba(s):
    np.random.seed(s)


def regular_block(ell: int, degree: int, rng: np.random.Generator, sweeps: int = 20) -> np.ndarray:
    """Random ell x ell 0/1 matrix with every row and column sum equal to degree."""
    if not 0 <= degree <= ell:
        raise ValueError("degree must lie in [0, ell]")
    idx = np.arange(ell)
    mat = np.zeros((ell, ell), dtype=np.bool_)
    for t in range(degree):
        mat[idx, (idx + t) % ell] = True
    mat = mat[rng.permutation(ell)][:, rng.permutation(ell)]
    rows, cols = np.nonzero(mat)
    rows, cols = rows.astype(np.int64), cols.astype(np.int64)
    if len(rows):
        _seed_numba(int(rng.integers(2**31)))
        _switch(rows, cols, mat, sweeps * len(rows))
    return mat


def regular_host(spec: HostSpec, seed: int) -> tuple[Digraph, list[np.ndarray]]:
    r, ell = spec.r, spec.ell
    parts = [np.arange(i * ell, (i + 1) * ell) for i in range(r)]
    adj = np.zeros((r * ell, r * ell), dtype=bool)
    for i in range(r):
        blk = regular_block(ell, spec.degree, make_rng(seed, "host", i))
        adj[np.ix_(parts[i], parts[(i + 1) % r])] = blk
    return Digraph(adj), parts


def _regular(D, A, B, spec: HostSpec, seed: int, tag: int, eps: Optional[float] = None) -> tuple[bool, float]:
    M = D.adj[np.ix_(A, B)]
    dens = float(M.mean()) if M.size else 0.0
    v = is_regular_pair(D, A, B, spec.eps_prime if eps is None else eps, dens if dens > 0 else 1.0, "sampled", spec.probes,
                        make_rng(seed, "hyp", tag), spec.significance)
    return v.regular, dens


def _pick(D, target: np.ndarray, sources: Optional[np.ndarray], size: int) -> np.ndarray:
    """``size`` vertices of ``target`` with most in-arcs from ``sources`` (ties: lowest index)."""
    if sources is None:
        return np.sort(target[:size])
    deg = D.adj[np.ix_(sources, target)].sum(axis=0)
    order = np.lexsort((target, -deg))
    return np.sort(target[order[:size]])


def _check_hypotheses(D: Digraph, parts, spec: HostSpec, lemma: str, Z: dict, seed: int) -> None:
    der = spec.derived()
    adj = D.adj
    r, ell, d, e, ep = spec.r, spec.ell, spec.d, spec.eps, spec.eps_prime
    s = 0
    failed = []
    if not e <= ep <= 1e-3:
        failed.append("eps <= eps' <= 1e-3")
    if der.q1 > (1 - ep) * (1 - e) * d * ep * ell + 1e-12:
        failed.append("q1 <= (1-eps')(1-eps) d eps' ell")
    if r < 6:
        failed.append("r >= 6")
    outdeg = max(int(adj[np.ix_(parts[i], parts[j])].sum(axis=1).max()) for i in range(r) for j in range(r))
    if outdeg > der.q2 + 1e-9:
        failed.append("deg+(v, V_i) <= q2")
    thr = (1 - ep) * (1 - e) * d * ell
    for i in range(r):
        deg = adj[np.ix_(parts[i], parts[(i + 1) % r])].sum(axis=1)
        if thr < der.q1 or deg.min() < thr - 1e-9 or deg.max() > der.q2 + 1e-9:
            failed.append(f"every vertex of V_{i} nice")
            break
    for i in range(r):
        ok, dens = _regular(D, parts[i], parts[(i + 1) % r], spec, seed, i, e)
        if not ok or abs(dens - d) > e * d + 1e-12:
            failed.append(f"(V_{i}, V_{i + 1}) eps-regular with density d")
    q1, q2 = der.q1, der.q2

    def reg(name, A, B, lo, hi=math.inf, tag=0):
        ok, dens = _regular(D, A, B, spec, seed, 100 + tag)
        if not ok or not lo - 1e-12 <= dens <= hi + 1e-12:
            failed.append(name)

    if lemma == "two":
        if len(Z["Z"]) < 2 * ep * ell:
            failed.append("|Z| >= 2 eps' ell")
    elif lemma == "three":
        z = Z["Z"]
        if not q1 - 1e-9 <= len(z) <= q2 + 1e-9:
            failed.append("(a) q2 >= |Z| >= q1")
        reg("(b) (V_{s+2}, Z) regular", parts[s + 2], z, (1 - e) * d, tag=1)
        reg("(c) (Z, V_{s+4}) regular", z, parts[(s + 4) % r], (1 - e) * d, tag=2)
    elif lemma == "four":
        z1, z2 = Z["Z1"], Z["Z2"]
        if not (2 * q1 - 1e-9 <= min(len(z1), len(z2)) and max(len(z1), len(z2)) <= q2 + 1e-9):
            failed.append("(i) q2 >= |Z1|, |Z2| >= 2 q1")
        reg("(ii) (V_{s+2}, Z1) regular", parts[s + 2], z1, (1 - e) * d, tag=3)
        reg("(iii) (Z1, V_{s+4}) regular", z1, parts[(s + 4) % r], (1 - e) * d, (1 + e) * d, tag=4)
        reg("(iv) (Z2, V_{s+5}) regular", z2, parts[(s + 5) % r], (1 - e) * d, tag=5)
        reg("(v) (Z1, Z2) regular", z1, z2, (1 - ep) ** 2 * d, tag=6)
    elif lemma == "two_upper":
        if not set(Z["Z1"].tolist()) <= set(Z["Z2"].tolist()):
            failed.append("Z1 subset of Z2")
    elif lemma == "three_upper":
        if len(Z["Z"]) > ell:
            failed.append("|Z| <= ell")
    if failed:
        raise ValueError("walk hypotheses failed: " + "; ".join(failed))


def _walk(D: Digraph, parts, spec: HostSpec, starts: np.ndarray, steps: int, rng) -> np.ndarray:
    """Positions after each step, shape (steps, trials)."""
    r = spec.r
    adj = D.adj
    nbr = np.zeros((D.n, spec.ell), dtype=np.int64)
    cnt = np.zeros(D.n, dtype=np.int64)
    for i in range(r):
        nxt = parts[(i + 1) % r]
        for v in parts[i]:
            out = nxt[adj[v, nxt]]
            nbr[v, : len(out)] = out
            cnt[v] = len(out)
    cur = starts.copy()
    out = np.empty((steps, len(starts)), dtype=np.int64)
    for t in range(steps):
        pick = np.floor(rng.random(len(cur)) * cnt[cur]).astype(np.int64)
        cur = nbr[cur, pick]
        out[t] = cur
    return out


def estimate_walk_probabilities(lemma: str, trials: int = 10_000, seed: int = 0,
                                spec: Optional[HostSpec] = None, z_size: Optional[int] = None) -> WalkEstimate:
    """Empirical hit frequency for one walk lemma, compared with its bound at 3 sigma."""
    if lemma not in LEMMAS:
        raise ValueError(f"lemma must be one of {LEMMAS}")
    if trials < 1:
        raise ValueError("trials must be positive")
    spec = default_host(lemma) if spec is None else spec
    D, parts = regular_host(spec, derive_seed(seed, "walk-host"))
    der = spec.derived()
    ell, p, xi = spec.ell, spec.p, spec.xi
    s = 0
    if lemma == "two":
        Z = {"Z": _pick(D, parts[s + 2], parts[s + 1], z_size or ell // 4)}
    elif lemma == "three":
        Z = {"Z": _pick(D, parts[s + 3], parts[s + 2], z_size or max(1, math.ceil(der.q1 - 1e-9)))}
    elif lemma == "four":
        z1 = _pick(D, parts[s + 3], parts[s + 2], z_size or ell // 4)
        Z = {"Z1": z1, "Z2": _pick(D, parts[s + 4], z1, z_size or ell // 4)}
    elif lemma == "two_upper":
        z2 = _pick(D, parts[s + 2], parts[s + 1], max(1, round(ell * p)))
        Z = {"Z1": z2[: max(1, round(ell * p ** 1.5))], "Z2": z2}
    else:
        Z = {"Z": _pick(D, parts[s + 3], parts[s + 2], min(ell, max(1, round(2 * ell * p))))}
    _check_hypotheses(D, parts, spec, lemma, Z, seed)
    rng = make_rng(seed, "walk", LEMMAS.index(lemma))
    starts = parts[s][rng.integers(ell, size=trials)]
    steps = {"two": 2, "three": 3, "four": 4, "two_upper": 2, "three_upper": 3}[lemma]
    pos = _walk(D, parts, spec, starts, steps, rng)
    mask = lambda S: np.isin(pos, S)  # noqa: E731
    comps = {}
    if lemma == "two":
        emp = mask(Z["Z"])[1].mean()
        bound = (0.99 * len(Z["Z"]) - spec.eps_prime * ell) / ell
        kind = "lower"
    elif lemma == "three":
        emp = mask(Z["Z"])[2].mean()
        bound = 0.95 * len(Z["Z"]) / ell
        kind = "lower"
    elif lemma == "four":
        emp = (mask(Z["Z1"])[2] & mask(Z["Z2"])[3]).mean()
        bound = len(Z["Z1"]) * len(Z["Z2"]) / (2 * ell * ell)
        kind = "lower"
    elif lemma == "two_upper":
        emp = mask(Z["Z1"])[1].mean()
        bound = 44 * xi ** -2 * p
        emp_b = mask(Z["Z2"])[1].mean()
        bound_b = 44 * xi ** -2 * math.sqrt(p)
        sig_b = binomial_sigma(emp_b, trials)
        comps["b"] = {"empirical": float(emp_b), "bound": bound_b, "sigma": sig_b,
                      "respected": bool(emp_b <= bound_b + 3 * sig_b)}
        kind = "upper"
    else:
        emp = mask(Z["Z"])[2].mean()
        bound = 3000 * xi ** -3 * p
        kind = "upper"
    sig = binomial_sigma(float(emp), trials)
    ok = emp >= bound - 3 * sig if kind == "lower" else emp <= bound + 3 * sig
    ok = bool(ok and all(c["respected"] for c in comps.values()))
    return WalkEstimate(lemma, trials, float(emp), float(bound), sig, ok, kind, comps,
                        {k: len(v) for k, v in Z.items()})
