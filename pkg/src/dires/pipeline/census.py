"""Problematic-vertex classifiers: atypical set B, type-I and type-II bad.

Type-I and type-II verdicts are sampled. For every candidate set Q drawn
from a neighbourhood, the ``floor(eps' |Q|)`` rows deviating most from the
reference density are pruned, and the rest is tested against the density
window and a 3x3 grid of probe sizes plus row-outlier probes. A vertex is
reported bad when some candidate's pruned set fails. With ``significance``
set, a failure only counts when its Chernoff tail is at most that value.

The kernels reseed numba's generator from ``(seed, u, X[0], Y[0], clause)``
so a single-vertex query and the batch census agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from ..digraph import Digraph
from ..seeding import derive_seed, make_rng
from .config import PipelineConfig

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK63 = (1 << 63) - 1


@njit(cache=True)
def _splitmix(x):
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _reseed(base, u, x0, y0, clause):
    h = _splitmix(np.uint64(base))
    h = _splitmix(h ^ np.uint64(u))
    h = _splitmix(h ^ np.uint64(x0))
    h = _splitmix(h ^ np.uint64(y0))
    h = _splitmix(h ^ np.uint64(clause))
    np.random.seed(np.int64(h >> np.uint64(33)))


@njit(cache=True)
def _tail(count, cells, d):
    if cells <= 0:
        return 1.0
    if d <= 0.0:
        return 1.0 if count == 0 else 0.0
    if d >= 1.0:
        return 1.0 if count == cells else 0.0
    a = count / cells
    kl = 0.0
    if a > 0.0:
        kl += a * math.log(a / d)
    if a < 1.0:
        kl += (1.0 - a) * math.log((1.0 - a) / (1.0 - d))
    return min(1.0, 2.0 * math.exp(-cells * kl))


@njit(cache=True)
def _deviates(count, cells, dens, tol, sig):
    return abs(count - dens * cells) > tol * cells + 1e-9 and _tail(count, cells, dens) <= sig


@njit(cache=True)
def _outside_window(count, cells, lo, hi, sig):
    dens = count / cells
    if dens < lo - 1e-12 and _tail(count, cells, lo) <= sig:
        return True
    if dens > hi + 1e-12 and _tail(count, cells, hi) <= sig:
        return True
    return False


@njit(cache=True)
def _shuffle_prefix(arr, size):
    m = arr.shape[0]
    for t in range(size):
        s = t + np.random.randint(0, m - t)
        tmp = arr[t]
        arr[t] = arr[s]
        arr[s] = tmp


@njit(cache=True)
def _grid_sizes(epsp, size):
    a = max(1, int(math.ceil(epsp * size - 1e-9)))
    b = max(1, int(math.ceil(size / 2.0)))
    return a, b, size


@njit(cache=True)
def _rows_pass(Q, cnt, bank, cls_start, cls_len, cls_size, other, d_ref, lo, hi, epsp, sig):
    qs = Q.shape[0]
    k = int(math.floor(epsp * qs + 1e-9))
    target = d_ref * other
    dev = np.empty(qs)
    for t in range(qs):
        dev[t] = abs(cnt[Q[t]] - target)
    order = np.argsort(dev, kind="mergesort")
    keep = qs - k
    Qt = np.empty(keep, np.int64)
    e = 0
    for t in range(keep):
        Qt[t] = Q[order[t]]
        e += cnt[Qt[t]]
    cells = keep * other
    if _outside_window(e, cells, lo, hi, sig):
        return False
    dens = e / cells
    tol = epsp * dens
    xs = _grid_sizes(epsp, keep)
    scratch = Qt.copy()
    for a in range(3):
        for b in range(3):
            _shuffle_prefix(scratch, xs[a])
            entry = cls_start[b] + np.random.randint(0, cls_len[b])
            e2 = 0
            for t in range(xs[a]):
                e2 += bank[scratch[t], entry]
            if _deviates(e2, xs[a] * cls_size[b], dens, tol, sig):
                return False
    # Extreme rows of the kept set against the whole other side.
    vals = np.empty(keep, np.int64)
    for t in range(keep):
        vals[t] = cnt[Qt[t]]
    vals.sort()
    lo_e = 0
    hi_e = 0
    for t in range(xs[0]):
        lo_e += vals[t]
        hi_e += vals[keep - 1 - t]
    c2 = xs[0] * other
    if _deviates(lo_e, c2, dens, tol, sig) or _deviates(hi_e, c2, dens, tol, sig):
        return False
    return True


@njit(cache=True)
def _rows_clause(nbr, cnt, bank, cls_start, cls_len, cls_size, other, d_ref, lo, hi,
                 q1c, q2c, epsp, sig, W, wit):
    """Return the size of a failing candidate Q written to ``wit`` (0 = none)."""
    m = nbr.shape[0]
    top = min(m, q2c)
    if m < q1c or top < q1c:
        return 0
    buf = nbr.copy()
    for w in range(W):
        size = top if w == 0 else q1c + np.random.randint(0, top - q1c + 1)
        if size < m:
            _shuffle_prefix(buf, size)
        Q = buf[:size]
        if not _rows_pass(Q, cnt, bank, cls_start, cls_len, cls_size, other, d_ref, lo, hi, epsp, sig):
            for t in range(size):
                wit[t] = Q[t]
            return size
    return 0


@njit(cache=True)
def _prune(deg, target, k):
    n = deg.shape[0]
    dev = np.empty(n)
    for t in range(n):
        dev[t] = abs(deg[t] - target)
    order = np.argsort(dev, kind="mergesort")
    return order[: n - k]


@njit(cache=True)
def _pair_pass(Qa, Qb, block, d_ref, lo, hi, epsp, sig):
    na, nb = Qa.shape[0], Qb.shape[0]
    rdeg = np.zeros(na, np.int64)
    cdeg = np.zeros(nb, np.int64)
    for s in range(na):
        for t in range(nb):
            if block[Qa[s], Qb[t]]:
                rdeg[s] += 1
                cdeg[t] += 1
    ka = _prune(rdeg, d_ref * nb, int(math.floor(epsp * na + 1e-9)))
    kb = _prune(cdeg, d_ref * na, int(math.floor(epsp * nb + 1e-9)))
    Ra = np.empty(ka.shape[0], np.int64)
    Rb = np.empty(kb.shape[0], np.int64)
    for s in range(ka.shape[0]):
        Ra[s] = Qa[ka[s]]
    for t in range(kb.shape[0]):
        Rb[t] = Qb[kb[t]]
    ma, mb = Ra.shape[0], Rb.shape[0]
    rd = np.zeros(ma, np.int64)
    cd = np.zeros(mb, np.int64)
    e = 0
    for s in range(ma):
        for t in range(mb):
            if block[Ra[s], Rb[t]]:
                rd[s] += 1
                cd[t] += 1
                e += 1
    cells = ma * mb
    if _outside_window(e, cells, lo, hi, sig):
        return False
    dens = e / cells
    tol = epsp * dens
    xs = _grid_sizes(epsp, ma)
    ys = _grid_sizes(epsp, mb)
    sa = Ra.copy()
    sb = Rb.copy()
    for a in range(3):
        for b in range(3):
            _shuffle_prefix(sa, xs[a])
            _shuffle_prefix(sb, ys[b])
            e2 = 0
            for s in range(xs[a]):
                for t in range(ys[b]):
                    if block[sa[s], sb[t]]:
                        e2 += 1
            if _deviates(e2, xs[a] * ys[b], dens, tol, sig):
                return False
    rd.sort()
    cd.sort()
    lo_r = 0
    hi_r = 0
    for s in range(xs[0]):
        lo_r += rd[s]
        hi_r += rd[ma - 1 - s]
    if _deviates(lo_r, xs[0] * mb, dens, tol, sig) or _deviates(hi_r, xs[0] * mb, dens, tol, sig):
        return False
    lo_c = 0
    hi_c = 0
    for t in range(ys[0]):
        lo_c += cd[t]
        hi_c += cd[mb - 1 - t]
    if _deviates(lo_c, ys[0] * ma, dens, tol, sig) or _deviates(hi_c, ys[0] * ma, dens, tol, sig):
        return False
    return True


@njit(cache=True)
def _pair_clause(na_, nb_, block, d_ref, lo, hi, q1c, q2c, epsp, sig, W, wa, wb):
    """Return (|Qa|, |Qb|) of a failing candidate pair, or (0, 0)."""
    ma, mb = na_.shape[0], nb_.shape[0]
    ta, tb = min(ma, q2c), min(mb, q2c)
    if ma < q1c or mb < q1c or ta < q1c or tb < q1c:
        return 0, 0
    ba = na_.copy()
    bb = nb_.copy()
    for w in range(W):
        sa = ta if w == 0 else q1c + np.random.randint(0, ta - q1c + 1)
        sb = tb if w == 0 else q1c + np.random.randint(0, tb - q1c + 1)
        if sa < ma:
            _shuffle_prefix(ba, sa)
        if sb < mb:
            _shuffle_prefix(bb, sb)
        if not _pair_pass(ba[:sa], bb[:sb], block, d_ref, lo, hi, epsp, sig):
            for t in range(sa):
                wa[t] = ba[t]
            for t in range(sb):
                wb[t] = bb[t]
            return sa, sb
    return 0, 0


@njit(cache=True)
def _census_kernel(adj, parts, part_of, us, cnt_out, cnt_in, bank_out, bank_in,
                   cls_start, cls_len, size_out, size_in, blocks, d_ref,
                   q1c, q2c, eps, epsp, sig, W, base, do_iv):
    m = us.shape[0]
    r, ell = parts.shape
    t1 = np.zeros((m, r), np.int8)
    iv = np.zeros((m, r), np.bool_)
    nbr = np.empty(ell, np.int64)
    nbr2 = np.empty(ell, np.int64)
    wit = np.empty(ell, np.int64)
    wit2 = np.empty(ell, np.int64)
    for idx in range(m):
        u = us[idx]
        pu = part_of[u]
        for j in range(r):
            jn = (j + 1) % r
            if pu == j or pu == jn:
                continue
            X = parts[j]
            Y = parts[jn]
            lo = (1.0 - eps) * d_ref[j]
            hi = (1.0 + eps) * d_ref[j]
            c = 0
            for a in range(ell):
                if adj[u, X[a]]:
                    nbr[c] = a
                    c += 1
            _reseed(base, u, X[0], Y[0], 1)
            if _rows_clause(nbr[:c], cnt_out[j], bank_out[j], cls_start, cls_len, size_out,
                            ell, d_ref[j], lo, hi, q1c, q2c, epsp, sig, W, wit) > 0:
                t1[idx, j] = 1
                continue
            c = 0
            for b in range(ell):
                if adj[Y[b], u]:
                    nbr[c] = b
                    c += 1
            _reseed(base, u, X[0], Y[0], 2)
            if _rows_clause(nbr[:c], cnt_in[j], bank_in[j], cls_start, cls_len, size_in,
                            ell, d_ref[j], lo, hi, q1c, q2c, epsp, sig, W, wit) > 0:
                t1[idx, j] = 2
        if not do_iv:
            continue
        for i in range(r):
            inext = (i + 1) % r
            if pu == i or pu == inext:
                continue
            X = parts[i]
            Y = parts[inext]
            ca = 0
            for a in range(ell):
                if adj[X[a], u]:
                    nbr[ca] = a
                    ca += 1
            cb = 0
            for b in range(ell):
                if adj[u, Y[b]]:
                    nbr2[cb] = b
                    cb += 1
            _reseed(base, u, X[0], Y[0], 3)
            lo = (1.0 - epsp) ** 2 * d_ref[i]
            hi = (1.0 + epsp) ** 2 * d_ref[i]
            sa, sb = _pair_clause(nbr[:ca], nbr2[:cb], blocks[i], d_ref[i], lo, hi,
                                  q1c, q2c, epsp, sig, W, wit, wit2)
            iv[idx, i] = sa > 0
    return t1, iv


@njit(cache=True)
def _single_rows(nbr, cnt, bank, cls_start, cls_len, cls_size, other, d_ref, lo, hi,
                 q1c, q2c, epsp, sig, W, base, u, x0, y0, clause):
    wit = np.empty(max(1, nbr.shape[0]), np.int64)
    _reseed(base, u, x0, y0, clause)
    s = _rows_clause(nbr, cnt, bank, cls_start, cls_len, cls_size, other, d_ref, lo, hi,
                     q1c, q2c, epsp, sig, W, wit)
    return wit[:s].copy()


@njit(cache=True)
def _single_pair(na_, nb_, block, d_ref, lo, hi, q1c, q2c, epsp, sig, W, base, u, x0, y0):
    wa = np.empty(max(1, na_.shape[0]), np.int64)
    wb = np.empty(max(1, nb_.shape[0]), np.int64)
    _reseed(base, u, x0, y0, 3)
    sa, sb = _pair_clause(na_, nb_, block, d_ref, lo, hi, q1c, q2c, epsp, sig, W, wa, wb)
    return wa[:sa].copy(), wb[:sb].copy()


# --- atypical set -------------------------------------------------------------


def _parts_of(partition) -> list[np.ndarray]:
    parts = partition.parts if hasattr(partition, "parts") else partition
    return [np.asarray(sorted(int(v) for v in part), dtype=np.int64) for part in parts]


def classify_atypical(D: Digraph, partition, eps: float, p: Optional[float] = None) -> frozenset:
    """Vertices whose in- or out-degree into some part is off by >= eps ell p.

    Degrees are taken in ``D`` itself (the graph before any deletions).
    ``p`` defaults to the arc density of D.
    """
    parts = _parts_of(partition)
    if not parts:
        return frozenset()
    ell = len(parts[0])
    if p is None:
        p = D.m / (D.n * (D.n - 1)) if D.n > 1 else 0.0
    member = np.zeros((D.n, len(parts)), dtype=np.int64)
    for i, part in enumerate(parts):
        member[part, i] = 1
    A = D.adj.astype(np.int64)
    out_d = A @ member
    in_d = A.T @ member
    mid, tol = ell * p, eps * ell * p - 1e-9
    bad = (np.abs(out_d - mid) >= tol).any(axis=1) | (np.abs(in_d - mid) >= tol).any(axis=1)
    return frozenset(np.flatnonzero(bad).tolist())


# --- type I / type II -----------------------------------------------------------


@dataclass(frozen=True)
class Type1Verdict:
    bad: bool
    clause: Optional[str] = None  # "I.1" or "I.2"
    witness: tuple[int, ...] = ()


@dataclass(frozen=True)
class Type2Verdict:
    bad: bool
    i_bad: tuple[int, ...]
    threshold: float


@dataclass
class BadCensus:
    """Problematic sets for one partition cycle.

    ``t1_matrix[u, j]`` is nonzero when u is type-I bad for the pair
    (V_j, V_{j+1}); ``iv_matrix[u, i]`` records the pair clause at index i.
    """

    B: frozenset
    U: tuple[frozenset, ...]
    W: tuple[frozenset, ...]
    T2: frozenset
    t1_matrix: np.ndarray
    iv_matrix: np.ndarray
    threshold: float
    Dg: frozenset = field(default_factory=frozenset)

    @property
    def T1(self) -> frozenset:
        out = set()
        for s in self.U:
            out |= s
        for s in self.W:
            out |= s
        return frozenset(out)

    def i_bad(self, u: int) -> tuple[int, ...]:
        return _i_bad_row(self.t1_matrix[u] != 0, self.iv_matrix[u])

    def summary(self) -> dict:
        return {
            "B": len(self.B), "T1": len(self.T1), "T2": len(self.T2),
            "U_max": max((len(s) for s in self.U), default=0),
            "W_max": max((len(s) for s in self.W), default=0),
        }


def _i_bad_row(t1_row: np.ndarray, iv_row: np.ndarray) -> tuple[int, ...]:
    r = len(t1_row)
    out = []
    for i in range(r):
        if t1_row[(i - 1) % r] or t1_row[i] or t1_row[(i + 1) % r] or iv_row[i]:
            out.append(i)
    return tuple(out)


def _bank(M: np.ndarray, rng: np.random.Generator, epsp: float, bank_size: int):
    other = M.shape[1]
    sizes = [max(1, math.ceil(epsp * other - 1e-9)), max(1, math.ceil(other / 2)), other]
    S = np.zeros((other, 2 * bank_size + 1), dtype=np.int64)
    col = 0
    for s in sizes[:2]:
        for _ in range(bank_size):
            S[rng.choice(other, size=s, replace=False), col] = 1
            col += 1
    S[:, col] = 1
    return M.astype(np.int64) @ S, np.asarray(sizes, dtype=np.int64)


class CensusContext:
    """Per-pair tables for a cycle of parts V_0 .. V_{r-1}, built once."""

    def __init__(self, Dp: Digraph, parts, config: PipelineConfig, p: float, seed: int = 0):
        self.parts = _parts_of(parts)
        self.r = len(self.parts)
        if self.r < 2:
            raise ValueError("need at least two parts")
        self.ell = len(self.parts[0])
        if any(len(x) != self.ell for x in self.parts):
            raise ValueError("parts must have equal size")
        self.D = Dp
        self.cfg = config
        self.p = p
        self.der = config.derive(self.ell, p)
        self.seed = int(seed)
        self.base = derive_seed(self.seed, "census") & _MASK63
        adj = Dp.adj
        r, ell, bs = self.r, self.ell, config.bank_size
        self.part_of = np.full(Dp.n, -1, dtype=np.int64)
        for i, part in enumerate(self.parts):
            self.part_of[part] = i
        self.parts_arr = np.stack(self.parts)
        self.cnt_out = np.zeros((r, ell), dtype=np.int64)
        self.cnt_in = np.zeros((r, ell), dtype=np.int64)
        self.bank_out = np.zeros((r, ell, 2 * bs + 1), dtype=np.int64)
        self.bank_in = np.zeros((r, ell, 2 * bs + 1), dtype=np.int64)
        self.blocks = np.zeros((r, ell, ell), dtype=np.bool_)
        self.d_ref = np.zeros(r)
        for j in range(r):
            X, Y = self.parts[j], self.parts[(j + 1) % r]
            M = adj[np.ix_(X, Y)]
            self.blocks[j] = M
            self.cnt_out[j] = M.sum(axis=1)
            self.cnt_in[j] = M.sum(axis=0)
            self.d_ref[j] = M.sum() / (ell * ell)
            rng = make_rng(self.seed, "bank", int(X[0]), int(Y[0]))
            self.bank_out[j], self.size_out = _bank(M, rng, config.eps_prime, bs)
            self.bank_in[j], self.size_in = _bank(M.T, rng, config.eps_prime, bs)
        self.cls_start = np.asarray([0, bs, 2 * bs], dtype=np.int64)
        self.cls_len = np.asarray([bs, bs, 1], dtype=np.int64)
        self.sig = math.inf if config.significance is None else float(config.significance)

    @property
    def threshold(self) -> float:
        return self.cfg.alpha * self.r / 40

    def run(self, us: Optional[Sequence[int]] = None, do_iv: bool = True,
            witness_budget: Optional[int] = None):
        us = np.arange(self.D.n, dtype=np.int64) if us is None else np.asarray(us, dtype=np.int64)
        W = self.cfg.witness_budget if witness_budget is None else witness_budget
        return _census_kernel(
            self.D.adj, self.parts_arr, self.part_of, us, self.cnt_out, self.cnt_in,
            self.bank_out, self.bank_in, self.cls_start, self.cls_len, self.size_out,
            self.size_in, self.blocks, self.d_ref, self.der.q1_int, self.der.q2_int,
            self.cfg.eps, self.cfg.eps_prime, self.sig, W, self.base, do_iv,
        )

    def census(self, B: frozenset = frozenset(), witness_budget: Optional[int] = None) -> BadCensus:
        t1, iv = self.run(witness_budget=witness_budget)
        r = self.r
        U, Wsets = [], []
        for i, part in enumerate(self.parts):
            U.append(frozenset(int(v) for v in part if t1[v, (i + 1) % r]))
            Wsets.append(frozenset(int(v) for v in part if t1[v, (i - 2) % r]))
        thr = self.threshold
        T2 = frozenset(u for u in range(self.D.n) if len(_i_bad_row(t1[u] != 0, iv[u])) >= thr - 1e-9)
        return BadCensus(B=B, U=tuple(U), W=tuple(Wsets), T2=T2, t1_matrix=t1, iv_matrix=iv, threshold=thr)


def classify_bad_type1(Dp: Digraph, u: int, X, Y, config: PipelineConfig, p: float,
                       W: Optional[int] = None, seed: int = 0, d_ref: Optional[float] = None) -> Type1Verdict:
    """Sampled type-I verdict for u against the pair (X, Y).

    ``d_ref`` defaults to the measured density d(X, Y). Neighbourhoods
    smaller than q1 make a clause vacuous.
    """
    X = np.asarray(sorted(int(v) for v in X), dtype=np.int64)
    Y = np.asarray(sorted(int(v) for v in Y), dtype=np.int64)
    if u in set(X.tolist()) | set(Y.tolist()):
        raise ValueError("u must lie outside X and Y")
    if len(X) == 0 or len(Y) == 0 or set(X.tolist()) & set(Y.tolist()):
        raise ValueError("X and Y must be nonempty and disjoint")
    W = config.witness_budget if W is None else W
    der = config.derive(len(X), p)
    adj = Dp.adj
    M = adj[np.ix_(X, Y)]
    d = M.sum() / M.size if d_ref is None else d_ref
    rng = make_rng(int(seed), "bank", int(X[0]), int(Y[0]))
    bs = config.bank_size
    bank_out, size_out = _bank(M, rng, config.eps_prime, bs)
    bank_in, size_in = _bank(M.T, rng, config.eps_prime, bs)
    cls_start = np.asarray([0, bs, 2 * bs], dtype=np.int64)
    cls_len = np.asarray([bs, bs, 1], dtype=np.int64)
    sig = math.inf if config.significance is None else float(config.significance)
    base = derive_seed(int(seed), "census") & _MASK63
    lo, hi = (1 - config.eps) * d, (1 + config.eps) * d
    nbr = np.flatnonzero(adj[u, X]).astype(np.int64)
    wit = _single_rows(nbr, M.sum(axis=1).astype(np.int64), bank_out, cls_start, cls_len, size_out,
                       len(Y), d, lo, hi, der.q1_int, der.q2_int, config.eps_prime, sig, W,
                       base, u, int(X[0]), int(Y[0]), 1)
    if len(wit):
        return Type1Verdict(True, "I.1", tuple(sorted(int(X[a]) for a in wit)))
    nbr = np.flatnonzero(adj[Y, u]).astype(np.int64)
    wit = _single_rows(nbr, M.sum(axis=0).astype(np.int64), bank_in, cls_start, cls_len, size_in,
                       len(X), d, lo, hi, der.q1_int, der.q2_int, config.eps_prime, sig, W,
                       base, u, int(X[0]), int(Y[0]), 2)
    if len(wit):
        return Type1Verdict(True, "I.2", tuple(sorted(int(Y[b]) for b in wit)))
    return Type1Verdict(False)


def pair_clause_witness(ctx: CensusContext, u: int, i: int, W: Optional[int] = None):
    """The failing (Q_i, Q_{i+1}) for the pair clause at index i, or None."""
    X, Y = ctx.parts[i], ctx.parts[(i + 1) % ctx.r]
    adj = ctx.D.adj
    na = np.flatnonzero(adj[X, u]).astype(np.int64)
    nb = np.flatnonzero(adj[u, Y]).astype(np.int64)
    e = ctx.cfg.eps_prime
    d = ctx.d_ref[i]
    wa, wb = _single_pair(na, nb, ctx.blocks[i], d, (1 - e) ** 2 * d, (1 + e) ** 2 * d,
                          ctx.der.q1_int, ctx.der.q2_int, e, ctx.sig,
                          ctx.cfg.witness_budget if W is None else W, ctx.base, u, int(X[0]), int(Y[0]))
    if len(wa) == 0:
        return None
    return tuple(int(X[a]) for a in sorted(wa)), tuple(int(Y[b]) for b in sorted(wb))


def classify_bad_type2(Dp: Digraph, u: int, parts, config: PipelineConfig, p: float,
                       W: Optional[int] = None, seed: int = 0,
                       ctx: Optional[CensusContext] = None) -> Type2Verdict:
    """i-bad indices of u over the cycle of parts; bad iff >= alpha r / 40 of them."""
    if ctx is None:
        ctx = CensusContext(Dp, parts, config, p, seed)
    if ctx.r < 5:
        raise ValueError("the partition cycle needs at least 5 parts")
    t1, iv = ctx.run([u], witness_budget=W)
    ib = _i_bad_row(t1[0] != 0, iv[0])
    return Type2Verdict(len(ib) >= ctx.threshold - 1e-9, ib, ctx.threshold)
