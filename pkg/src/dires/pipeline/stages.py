"""The four stages: build P1, extend to P2, close to C, absorb the rest.

Every stage is failure-transparent: a failed step or runtime assertion
raises ``StageFailure`` with the stage number, a hypothesis key used to
bin failures, and a diagnostics dict. Nothing returns a silent wrong path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..digraph import Digraph
from ..hamiltonicity import validate_cycle
from ..matching import hall_matching
from ..regularity import Partition, build_regularity_digraph, equitable_partition, reduced_hamilton_cycle
from ..seeding import derive_seed, make_rng
from .census import BadCensus, CensusContext, classify_atypical
from .config import DEFAULT, PipelineConfig
from .steps import (PipelineState, StepFailure, big_step, closing_step, nice_mask, path_arcs,
                    random_forward_step, refresh_reserve, standard_backward_step, standard_forward_step)


class StageFailure(Exception):
    def __init__(self, stage: int, hypothesis: str, detail: Optional[dict] = None, iteration: Optional[int] = None):
        super().__init__(f"stage {stage} failed: {hypothesis}")
        self.stage = stage
        self.hypothesis = hypothesis
        self.detail = detail or {}
        self.iteration = iteration

    def as_dict(self) -> dict:
        return {"stage": self.stage, "hypothesis": self.hypothesis, "iteration": self.iteration,
                "detail": _plain(self.detail)}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _from_step(stage: int, err: StepFailure, iteration: Optional[int] = None) -> StageFailure:
    return StageFailure(stage, f"{err.kind}:{err.reason}", err.diagnostics, iteration)


@dataclass
class AssertionLog:
    entries: list = field(default_factory=list)

    def check(self, stage: int, name: str, ok: bool, iteration=None, **detail) -> None:
        self.entries.append({"stage": stage, "name": name, "ok": bool(ok), "iteration": iteration,
                             **_plain(detail)})
        if not ok:
            raise StageFailure(stage, name, detail, iteration)

    @property
    def all_green(self) -> bool:
        return all(e["ok"] for e in self.entries)


# --- stage 1 -------------------------------------------------------------------


class _Danger:
    """Incremental degree counters into L1, per part and into the outside."""

    def __init__(self, st: PipelineState, L1: np.ndarray, n: int, p: float, rho: float):
        adj = st.adj.astype(np.int32)
        self.sym = adj + adj.T
        self.r = st.r
        self.part_of = st.part_of
        member = np.zeros((n, self.r + 1), dtype=np.int32)
        idx = np.where(st.part_of >= 0, st.part_of, self.r)
        member[np.arange(n), idx] = L1.astype(np.int32)
        self.cnt = self.sym @ member
        self.ell = len(st.parts[0])
        self.part_thr = 100 * rho * self.ell * p
        self.out_thr = n * p / 20

    def add(self, w: int) -> None:
        col = self.r if self.part_of[w] < 0 else self.part_of[w]
        self.cnt[:, col] += self.sym[:, w]

    def dangerous(self) -> np.ndarray:
        return (self.cnt[:, : self.r] >= self.part_thr - 1e-9).any(axis=1) | (self.cnt[:, self.r] >= self.out_thr - 1e-9)

    def max_part(self, mask: np.ndarray) -> float:
        return float(self.cnt[mask, : self.r].max()) if mask.any() else 0.0

    def max_out(self, mask: np.ndarray) -> float:
        return float(self.cnt[mask, self.r].max()) if mask.any() else 0.0


def _nearest_part(st: PipelineState, counts: np.ndarray, s: int) -> Optional[int]:
    ok = np.flatnonzero(counts >= len(st.parts[0]) / 3 - 1e-9)
    if len(ok) == 0:
        return None
    return int(min(ok, key=lambda j: ((j - s - 2) % st.r, j)))


def stage1_build(st: PipelineState, census: BadCensus, p: float, log: AssertionLog) -> dict:
    """Grow P1 until it contains B, T2 and every dangerous vertex."""
    st.stage = "1"
    n, r, ell, cfg, der = st.D.n, st.r, len(st.parts[0]), st.cfg, st.der
    adj = st.adj
    base = np.zeros(n, dtype=bool)
    for S in (census.B, census.T1, census.T2):
        if S:
            base[list(S)] = True
    L1 = base.copy()
    V1 = st.parts[0]
    c1 = V1[~L1[V1]]
    fwd = nice_mask(adj, c1, st.free(1, L1), der, cfg)
    bwd = nice_mask(adj, c1, st.free(r - 1, L1), der, cfg, backwards=True)
    very = c1[fwd & bwd]
    if len(very) == 0:
        raise StageFailure(1, "no_very_nice_v0", {"V1_free": int(len(c1)), "nice": int(fwd.sum()),
                                                  "backwards_nice": int(bwd.sum())})
    st.append(int(very[0]), "start")
    L1[st.v0] = True
    try:
        refresh_reserve(st, L1)
    except StepFailure as e:
        raise _from_step(1, e)
    danger = _Danger(st, L1, n, p, cfg.rho)
    todo_base = base & ~census_T1_only(census, n)
    dang = np.zeros(n, dtype=bool)
    lim_a, lim_b, lim_c = 20 * cfg.rho * ell, 110 * cfg.rho * ell * p, n * p / 10
    it = 0
    while True:
        fresh = danger.dangerous() & ~dang
        dang |= fresh
        for w in np.flatnonzero(fresh & ~L1):
            L1[w] = True
            danger.add(int(w))
        pend_d = np.flatnonzero(dang & ~st.on_path)
        pend_b = np.flatnonzero(todo_base & ~st.on_path)
        if len(pend_d) == 0 and len(pend_b) == 0:
            break
        v = int(pend_d[0] if len(pend_d) else pend_b[0])
        free_mask = ~L1
        P1_load = max(int(st.on_path[part].sum()) for part in st.parts)
        log.check(1, "a_part_load", P1_load <= lim_a + 1e-9, it, value=P1_load, bound=lim_a)
        log.check(1, "b_part_degree", danger.max_part(free_mask) <= lim_b + 1e-9, it,
                  value=danger.max_part(free_mask), bound=lim_b)
        log.check(1, "c_outside_degree", danger.max_out(free_mask) <= lim_c + 1e-9, it,
                  value=danger.max_out(free_mask), bound=lim_c)
        before = _part_loads(st)
        for w in _add(st, v, L1, it):
            if not L1[w]:
                L1[w] = True
                danger.add(w)
        after = _part_loads(st)
        grow = after - before
        log.check(1, "add_part_growth", grow[:r].max() <= 8, it, value=int(grow[:r].max()))
        log.check(1, "add_outside_growth", grow[r] <= 3, it, value=int(grow[r]))
        it += 1
    _relabel(st)
    _summary_checks(st, census, L1, danger, p, log)
    return {"iterations": it, "P1": len(st.path), "dangerous": int(dang.sum())}


def census_T1_only(census: BadCensus, n: int) -> np.ndarray:
    """T1 vertices that are in neither B nor T2: they stay off P1."""
    m = np.zeros(n, dtype=bool)
    if census.T1:
        m[list(census.T1)] = True
    for S in (census.B, census.T2):
        if S:
            m[list(S)] = False
    return m


def _part_loads(st: PipelineState) -> np.ndarray:
    idx = np.where(st.part_of >= 0, st.part_of, st.r)
    return np.bincount(idx[st.on_path], minlength=st.r + 1)


def _add(st: PipelineState, v: int, L1: np.ndarray, it: int) -> list[int]:
    """ADD(v): route the path to v with standard steps and one big step."""
    adj = st.adj
    new = []
    try:
        if st.A0[v]:
            w = standard_backward_step(st, L1)
            new.append(w)
        F = L1 | st.A0 | st.on_path
        F_v = F.copy()
        F_v[v] = True
        I_v = np.flatnonzero(adj[:, v] & ~F_v)
        Ibar = adj[:, I_v].any(axis=1) & ~F_v if len(I_v) else np.zeros(st.D.n, dtype=bool)
        O_v = np.flatnonzero(adj[v] & ~F_v)
        Obar = adj[O_v].any(axis=0) & ~F_v if len(O_v) else np.zeros(st.D.n, dtype=bool)
        per_in = np.asarray([Ibar[part].sum() for part in st.parts])
        per_out = np.asarray([Obar[part].sum() for part in st.parts])
        j1 = _nearest_part(st, per_in, int(st.part_of[st.x]))
        if j1 is None:
            raise StageFailure(1, "big_step_in_reach", {"v": v, "best": int(per_in.max(initial=0))}, it)
        if (per_out >= len(st.parts[0]) / 3 - 1e-9).sum() == 0:
            raise StageFailure(1, "big_step_out_reach", {"v": v, "best": int(per_out.max(initial=0))}, it)
        forbid = L1 | st.A0
        while (int(st.part_of[st.x]) + 2) % st.r != j1:
            new.append(standard_forward_step(st, forbid))
        new.extend(big_step(st, v, forbid))
    except StepFailure as e:
        raise _from_step(1, e, it)
    return new


def _relabel(st: PipelineState) -> None:
    s = int(st.part_of[st.v0])
    st.parts = st.parts[s:] + st.parts[:s]
    for i, part in enumerate(st.parts):
        st.part_of[part] = i
    if st.t1_matrix is not None:
        st.t1_matrix = np.roll(st.t1_matrix, -s, axis=1)


def _summary_checks(st: PipelineState, census: BadCensus, L1: np.ndarray, danger: _Danger, p: float,
                    log: AssertionLog) -> None:
    cfg, der, adj, r = st.cfg, st.der, st.adj, st.r
    ell = len(st.parts[0])
    must = np.zeros(st.D.n, dtype=bool)
    for S in (census.B, census.T2):
        if S:
            must[list(S)] = True
    log.check(1, "summary_1_contains_B_T2", not (must & ~st.on_path).any(),
              missing=int((must & ~st.on_path).sum()))
    load = max(int(st.on_path[part].sum()) for part in st.parts)
    log.check(1, "summary_2_part_load", load <= 20 * cfg.rho * ell + 1e-9, value=load, bound=20 * cfg.rho * ell)
    A0 = np.flatnonzero(st.A0)
    ok3 = (len(A0) == der.reserve_size and bool(adj[A0, st.v0].all())
           and bool((st.part_of[A0] == r - 1).all()) and not (st.on_path[A0]).any())
    log.check(1, "summary_3_reserve", ok3, size=len(A0), needed=der.reserve_size)
    free = ~(L1 | st.A0)
    b4 = 110 * cfg.rho * ell * p + cfg.lam * ell * p
    log.check(1, "summary_4_part_degree", danger.max_part(free) <= b4 + 1e-9, value=danger.max_part(free), bound=b4)
    log.check(1, "summary_5_outside_degree", danger.max_out(free) <= st.D.n * p / 10 + 1e-9,
              value=danger.max_out(free), bound=st.D.n * p / 10)
    s = int(st.part_of[st.x])
    x_nice = bool(nice_mask(adj, np.asarray([st.x]), st.free(s + 1, L1 | st.A0), der, cfg)[0])
    log.check(1, "summary_6_x_nice", x_nice, x=st.x)


# --- stage 2 -------------------------------------------------------------------


def stage2_extend(st: PipelineState, census: BadCensus, log: AssertionLog) -> dict:
    """Random forward steps until some part has at most 3 eps' ell free vertices."""
    st.stage = "2"
    n, ell = st.D.n, len(st.parts[0])
    T1 = np.zeros(n, dtype=bool)
    if census.T1:
        T1[list(census.T1)] = True
    forbid = T1 | st.A0
    guard = 3 * st.cfg.eps_prime * ell
    arcs = {}
    visits = np.zeros(st.r, dtype=np.int64)
    steps = 0
    while all(len(st.free(i, forbid)) > guard for i in range(st.r)):
        x = st.x
        try:
            y = random_forward_step(st, forbid)
        except StepFailure as e:
            raise _from_step(2, e, steps)
        key = (int(st.part_of[x]), int(st.part_of[y]))
        arcs[key] = arcs.get(key, 0) + 1
        visits[st.part_of[y]] += 1
        steps += 1
    log.check(2, "balanced_visits", visits.max() - visits.min() <= 1 if steps else True,
              spread=int(visits.max() - visits.min()))
    return {"steps": steps, "pair_arcs": {f"{a}->{b}": c for (a, b), c in sorted(arcs.items())}}


def absorbing_arc_census(st: PipelineState, p: float) -> dict:
    """Minimum number of path arcs (x, y) with x -> u -> y, over u off the path."""
    path = np.fromiter(st.path, dtype=np.int64)
    xs, ys = path[:-1], path[1:]
    off = np.flatnonzero(~st.on_path)
    if len(off) == 0 or len(xs) == 0:
        return {"min": None, "bound": 0.0, "ok": True}
    counts = (st.adj[np.ix_(xs, off)] & st.adj[np.ix_(off, ys)].T).sum(axis=0)
    a, xi = st.cfg.alpha, st.cfg.xi
    bound = 1e-10 * a ** 4 * xi ** 3 * p * p * st.D.n
    return {"min": int(counts.min()), "bound": bound, "ok": bool(counts.min() >= bound)}


# --- stage 3 -------------------------------------------------------------------


def stage3_close(st: PipelineState, census: BadCensus, log: AssertionLog) -> tuple[int, ...]:
    """Standard steps until x is in V_{r-4}, then a closing step into v0."""
    st.stage = "3"
    n, r = st.D.n, st.r
    if r < 5:
        raise StageFailure(3, "cycle_too_short", {"r": r})
    T1 = np.zeros(n, dtype=bool)
    if census.T1:
        T1[list(census.T1)] = True
    steps = 0
    try:
        while int(st.part_of[st.x]) != r - 4:
            standard_forward_step(st, T1 | st.A0)
            steps += 1
        closing_step(st, st.v0, T1)
    except StepFailure as e:
        raise _from_step(3, e, steps)
    cyc = tuple(st.path)
    chk = validate_cycle(st.D, cyc, require_hamilton=False)
    log.check(3, "cycle_valid", chk.ok, reason=chk.reason)
    return cyc


# --- stage 4 -------------------------------------------------------------------


def stage4_absorb(Dp: Digraph, cycle, leftover, cap: Optional[float] = None,
                  log: Optional[AssertionLog] = None) -> tuple[int, ...]:
    """Insert every leftover u into its own cycle arc via a saturating matching."""
    cycle = tuple(int(v) for v in cycle)
    leftover = sorted(int(u) for u in leftover)
    log = log or AssertionLog()
    if not leftover:
        return cycle
    if cap is not None and len(leftover) > cap:
        raise StageFailure(4, "leftover_cap", {"leftover": len(leftover), "cap": cap})
    adj = Dp.adj
    xs = np.asarray(cycle, dtype=np.int64)
    ys = np.roll(xs, -1)
    us = np.asarray(leftover, dtype=np.int64)
    H = adj[np.ix_(xs, us)] & adj[np.ix_(us, ys)].T  # arcs x leftover
    graph = {int(u): np.flatnonzero(H[:, t]).tolist() for t, u in enumerate(us)}
    res = hall_matching(graph, right=list(range(len(xs))))
    if not res.saturating:
        raise StageFailure(4, "hall_violator", {"deficient": sorted(res.deficient),
                                                "neighbourhood": len(res.neighborhood)})
    used = list(res.matching.values())
    log.check(4, "distinct_arcs", len(set(used)) == len(used))
    insert = {arc: u for u, arc in res.matching.items()}
    out = []
    for t, x in enumerate(cycle):
        out.append(x)
        if t in insert:
            out.append(insert[t])
    chk = validate_cycle(Dp, out, require_hamilton=True)
    log.check(4, "hamilton_valid", chk.ok, reason=chk.reason)
    return tuple(out)


# --- absorption indices ----------------------------------------------------------


@dataclass(frozen=True)
class AbsorptionIndices:
    indices: tuple[int, ...]
    ok: bool
    needed: float
    starved: Optional[str] = None
    counts: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)


def find_absorption_indices(D: Digraph, Dp: Digraph, u: int, parts, config: PipelineConfig, p: float,
                            i_bad=()) -> AbsorptionIndices:
    """Indices i with u outside V_i, V_{i+1}, good degrees there, and not i-bad.

    Survivors are thinned greedily so any two kept indices are at cyclic
    distance at least 5.
    """
    parts = [np.asarray(part, dtype=np.int64) for part in parts]
    r, ell = len(parts), len(parts[0])
    n = D.n
    a = config.alpha
    need = a * r / 40
    cands = [i for i in range(r) if u not in set(parts[i].tolist()) | set(parts[(i + 1) % r].tolist())]
    counts = {"outside": len(cands)}
    half = a * ell * p / 2
    cands = [i for i in cands if Dp.adj[parts[i], u].sum() >= half - 1e-9
             and Dp.adj[u, parts[(i + 1) % r]].sum() >= half - 1e-9]
    counts["degree"] = len(cands)
    bad = set(int(i) for i in i_bad)
    cands = [i for i in cands if i not in bad]
    counts["not_i_bad"] = len(cands)
    kept = []
    for i in cands:
        if all(min((i - j) % r, (j - i) % r) >= 5 for j in kept):
            kept.append(i)
    counts["separated"] = len(kept)
    starved = None
    if len(kept) < need - 1e-9:
        starved = next((k for k, c in counts.items() if c < need - 1e-9), "separated")
    e = config.eps
    flags = {
        "cover": r * ell * (1 - a / 4 - 2 / r) * (1 - e - a / 2) >= (1 - a) * n,
        "a_not_type2": len(bad) < need - 1e-9,
        "b_degrees": all(D.adj[u, part].sum() >= (1 - e) * ell * p - 1e-9
                         and D.adj[part, u].sum() >= (1 - e) * ell * p - 1e-9 for part in parts),
    }
    return AbsorptionIndices(tuple(kept), starved is None, need, starved, counts, flags)


# --- end to end --------------------------------------------------------------------


@dataclass
class PipelineResult:
    ok: bool
    cycle: Optional[tuple[int, ...]]
    failure: Optional[StageFailure]
    diagnostics: dict
    assertions: AssertionLog
    trace: Optional[list] = None

    @property
    def hypothesis(self) -> Optional[str]:
        return None if self.failure is None else f"stage{self.failure.stage}:{self.failure.hypothesis}"

    def as_dict(self) -> dict:
        return _plain({"ok": self.ok, "cycle_length": len(self.cycle) if self.cycle else 0,
                       "failure": self.failure.as_dict() if self.failure else None,
                       "diagnostics": self.diagnostics,
                       "assertions_green": self.assertions.all_green})


def run_pipeline(D: Digraph, Dp: Digraph, p: float, config: PipelineConfig = DEFAULT, seed: int = 0,
                 partition: Optional[Partition] = None, trace: bool = False) -> PipelineResult:
    """All four stages on D' (the survivor of an adversary applied to D)."""
    cfg = config
    log = AssertionLog()
    diag: dict = {"config": cfg.as_dict(), "seed": seed}
    trace_list = [] if trace else None

    def fail(err: StageFailure) -> PipelineResult:
        diag["failed_stage"] = err.stage
        return PipelineResult(False, None, err, diag, log, trace_list)

    if partition is None:
        partition = equitable_partition(D, cfg.k, derive_seed(seed, "partition"))
    ell = partition.ell
    der = cfg.derive(ell, p)
    R = build_regularity_digraph(Dp, partition, der.delta, cfg.eps, mode="sampled", scale=p,
                                 probes=cfg.reg_probes, seed=derive_seed(seed, "regularity"),
                                 significance=cfg.significance)
    rc = reduced_hamilton_cycle(R, partition.k)
    diag["reduced"] = {"arcs": len(R.arcs), "kept": len(rc.kept), "r": rc.r}
    if not rc.ok or rc.r < 5:
        return fail(StageFailure(0, "reduced_cycle", {"reason": rc.reason or "cycle shorter than 5", "r": rc.r}))
    parts = [np.asarray(partition.parts[i], dtype=np.int64) for i in rc.cycle]
    B = classify_atypical(D, parts, cfg.b_eps, p)
    diag["B"] = len(B)
    if all(int(v) in B for v in parts[0]):
        return fail(StageFailure(1, "no_very_nice_v0", {"reason": "V_1 lies inside B", "B": len(B), "ell": ell}))
    ctx = CensusContext(Dp, parts, cfg, p, derive_seed(seed, "census"))
    census = ctx.census(B=B)
    diag["census"] = census.summary()
    st = PipelineState(Dp, parts, cfg, der, make_rng(seed, "walk"), trace=trace_list,
                       t1_matrix=census.t1_matrix.copy())
    try:
        diag["stage1"] = stage1_build(st, census, p, log)
        diag["stage2"] = stage2_extend(st, census, log)
        diag["absorbing_arcs"] = absorbing_arc_census(st, p)
        C = stage3_close(st, census, log)
        diag["stage3"] = {"cycle": len(C)}
        leftover = np.flatnonzero(~st.on_path)
        diag["stage4"] = {"leftover": len(leftover)}
        st.stage = "4"
        H = stage4_absorb(Dp, C, leftover, cap=cfg.cap_fraction * D.n, log=log)
    except StageFailure as e:
        return fail(e)
    if trace_list is not None:
        before = set(C)
        for t, v in enumerate(H):
            if v not in before:
                trace_list.append({"stage": "4", "step_kind": "absorb", "from": H[t - 1], "to": v,
                                   "part_index": int(st.part_of[v]), "path_len": len(H)})
    return PipelineResult(True, H, None, diag, log, trace_list)


def write_trace(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_plain(rec), sort_keys=True) + "\n")
