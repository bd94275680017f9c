"""Path state and the step primitives: forward, backward, big and closing steps.

Part indices are 0-based and cyclic mod r. Every step treats the current
path as forbidden on top of the stage's forbidden mask, so the path always
stays a path with distinct vertices.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ..digraph import Digraph
from .config import Derived, PipelineConfig


class StepFailure(Exception):
    """A step found no admissible choice; ``diagnostics`` says why."""

    def __init__(self, kind: str, reason: str, diagnostics: Optional[dict] = None):
        super().__init__(f"{kind} step failed: {reason}")
        self.kind = kind
        self.reason = reason
        self.diagnostics = diagnostics or {}


def _mask(n: int, X) -> np.ndarray:
    if isinstance(X, np.ndarray) and X.dtype == np.bool_:
        return X
    m = np.zeros(n, dtype=bool)
    idx = list(X) if X is not None else []
    if idx:
        m[np.asarray(idx, dtype=np.int64)] = True
    return m


def _threshold(free: int, der: Derived, cfg: PipelineConfig) -> float:
    return (1 - cfg.eps_prime) * (1 - cfg.eps) * der.delta * free


def nice_mask(adj: np.ndarray, cands: np.ndarray, targets: np.ndarray, der: Derived,
              cfg: PipelineConfig, backwards: bool = False) -> np.ndarray:
    """Niceness of each candidate against the free vertices ``targets``."""
    if len(cands) == 0:
        return np.zeros(0, dtype=bool)
    thr = _threshold(len(targets), der, cfg)
    if thr < der.q1 - 1e-9:
        return np.zeros(len(cands), dtype=bool)
    block = adj[np.ix_(targets, cands)].T if backwards else adj[np.ix_(cands, targets)]
    deg = block.sum(axis=1)
    return (deg <= der.q2 + 1e-9) & (deg >= thr - 1e-9)


def niceness(Dp: Digraph, parts, u: int, X, config: PipelineConfig, p: float) -> str:
    """One of ``very_nice``, ``nice``, ``backwards_nice``, ``neither``."""
    parts = [np.asarray(sorted(int(v) for v in part), dtype=np.int64) for part in parts]
    r = len(parts)
    s = next((i for i, part in enumerate(parts) if u in set(part.tolist())), None)
    if s is None:
        raise ValueError(f"vertex {u} lies in no part")
    Xm = _mask(Dp.n, X)
    if Xm[u]:
        raise ValueError(f"vertex {u} is in the forbidden set")
    der = config.derive(len(parts[0]), p)
    nxt, prv = parts[(s + 1) % r], parts[(s - 1) % r]
    cand = np.asarray([u])
    fwd = nice_mask(Dp.adj, cand, nxt[~Xm[nxt]], der, config)[0]
    bwd = nice_mask(Dp.adj, cand, prv[~Xm[prv]], der, config, backwards=True)[0]
    if fwd and bwd:
        return "very_nice"
    return "nice" if fwd else "backwards_nice" if bwd else "neither"


@dataclass
class PipelineState:
    D: Digraph
    parts: list
    cfg: PipelineConfig
    der: Derived
    rng: np.random.Generator
    path: deque = field(default_factory=deque)
    stage: str = ""
    trace: Optional[list] = None
    A0: np.ndarray = None
    t1_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.D.n
        self.parts = [np.asarray(part, dtype=np.int64) for part in self.parts]
        self.part_of = np.full(n, -1, dtype=np.int64)
        for i, part in enumerate(self.parts):
            self.part_of[part] = i
        self.on_path = np.zeros(n, dtype=bool)
        for v in self.path:
            self.on_path[v] = True
        if self.A0 is None:
            self.A0 = np.zeros(n, dtype=bool)

    @property
    def r(self) -> int:
        return len(self.parts)

    @property
    def adj(self) -> np.ndarray:
        return self.D.adj

    @property
    def x(self) -> int:
        return self.path[-1]

    @property
    def v0(self) -> int:
        return self.path[0]

    def free(self, i: int, forbid: np.ndarray) -> np.ndarray:
        part = self.parts[i % self.r]
        return part[~(forbid[part] | self.on_path[part])]

    def _log(self, kind: str, a: int, b: int) -> None:
        if self.trace is not None:
            self.trace.append({"stage": self.stage, "step_kind": kind, "from": int(a), "to": int(b),
                               "part_index": int(self.part_of[b]), "path_len": len(self.path)})

    def append(self, v: int, kind: str) -> None:
        if self.on_path[v]:
            raise AssertionError(f"vertex {v} already on the path")
        if self.path and not self.adj[self.path[-1], v]:
            raise AssertionError(f"missing arc ({self.path[-1]}, {v})")
        prev = self.path[-1] if self.path else None
        self.path.append(int(v))
        self.on_path[v] = True
        if prev is not None:
            self._log(kind, prev, v)

    def prepend(self, v: int, kind: str) -> None:
        if self.on_path[v]:
            raise AssertionError(f"vertex {v} already on the path")
        if self.path and not self.adj[v, self.path[0]]:
            raise AssertionError(f"missing arc ({v}, {self.path[0]})")
        self.path.appendleft(int(v))
        self.on_path[v] = True
        self._log(kind, v, self.path[1])

    def load_bound_ok(self, forbid: np.ndarray, cap: float) -> bool:
        m = forbid | self.on_path
        return all(m[part].sum() <= cap + 1e-9 for part in self.parts)

    def _diagnose(self, forbid: np.ndarray, x: int) -> dict:
        s = int(self.part_of[x])
        nxt = self.free(s + 1, forbid)
        nice = bool(nice_mask(self.adj, np.asarray([x]), nxt, self.der, self.cfg)[0])
        d = {"x": int(x), "part": s, "x_nice": nice,
             "free_next": int(len(nxt)),
             "load_bound_ok": self.load_bound_ok(forbid, (1 - self.cfg.eps_prime) * len(self.parts[0]))}
        if self.t1_matrix is not None:
            d["x_type1_bad"] = bool(self.t1_matrix[x, (s + 1) % self.r])
        return d


def _forward_candidates(st: PipelineState, forbid: np.ndarray):
    x = st.x
    s = int(st.part_of[x])
    free1 = st.free(s + 1, forbid)
    cands = free1[st.adj[x, free1]]
    nice = nice_mask(st.adj, cands, st.free(s + 2, forbid), st.der, st.cfg)
    return cands, nice


def standard_forward_step(st: PipelineState, forbid: np.ndarray) -> int:
    """Append the lowest-index nice out-neighbour of x in the next part."""
    cands, nice = _forward_candidates(st, forbid)
    if not nice.any():
        raise StepFailure("forward", "no nice out-neighbour", {**st._diagnose(forbid, st.x), "candidates": len(cands)})
    y = int(cands[nice][0])
    st.append(y, "forward")
    return y


def random_forward_step(st: PipelineState, forbid: np.ndarray) -> int:
    """Append a nice out-neighbour drawn uniformly from the state's rng."""
    cands, nice = _forward_candidates(st, forbid)
    pool = cands[nice]
    if len(pool) == 0:
        raise StepFailure("random", "no nice out-neighbour", {**st._diagnose(forbid, st.x), "candidates": len(cands)})
    y = int(pool[st.rng.integers(len(pool))])
    st.append(y, "random")
    return y


def refresh_reserve(st: PipelineState, forbid: np.ndarray) -> np.ndarray:
    """A0 := the lowest ``reserve_size`` in-neighbours of v0 in the previous part."""
    v0 = st.v0
    prev = st.free(int(st.part_of[v0]) - 1, forbid)
    cands = prev[st.adj[prev, v0]]
    need = st.der.reserve_size
    if len(cands) < need:
        raise StepFailure("backward", "reserve refresh impossible",
                          {"v0": int(v0), "available": int(len(cands)), "needed": need})
    st.A0[:] = False
    st.A0[cands[:need]] = True
    return cands[:need]


def standard_backward_step(st: PipelineState, forbid: np.ndarray) -> int:
    """Prepend the lowest backwards-nice in-neighbour of v0, then refresh A0."""
    v0 = st.v0
    s = int(st.part_of[v0])
    prev = st.free(s - 1, forbid)
    cands = prev[st.adj[prev, v0]]
    nice = nice_mask(st.adj, cands, st.free(s - 2, forbid), st.der, st.cfg, backwards=True)
    if not nice.any():
        d = {"v0": int(v0), "part": s, "candidates": int(len(cands))}
        if st.t1_matrix is not None:
            d["v0_type1_bad"] = bool(st.t1_matrix[v0, (s - 2) % st.r])
        raise StepFailure("backward", "no backwards-nice in-neighbour", d)
    w = int(cands[nice][0])
    st.prepend(w, "backward")
    refresh_reserve(st, forbid)
    return w


def big_step(st: PipelineState, v: int, forbid: np.ndarray) -> tuple[int, ...]:
    """Append x -> y1 -> y2 -> y3 -> v -> y4 -> y5 with y5 nice.

    Choices are lexicographically lowest; the search backtracks over y1, y2
    and y3 and then over (y4, y5).
    """
    adj = st.adj
    x = st.x
    s = int(st.part_of[x])
    if st.on_path[v]:
        raise StepFailure("big", "target already on the path", {"v": int(v)})
    F = forbid | st.on_path
    F_v = F.copy()
    F_v[v] = True
    Y1 = st.free(s + 1, F_v)
    Y1 = Y1[adj[x, Y1]]
    if len(Y1) == 0:
        raise StepFailure("big", "y1", {"x": int(x), "v": int(v), "empty": "y1"})
    I_v = np.flatnonzero(adj[:, v] & ~F_v)
    if len(I_v) == 0:
        raise StepFailure("big", "y3", {"x": int(x), "v": int(v), "empty": "y3"})
    part2 = st.free(s + 2, F_v)
    Ibar = part2[adj[np.ix_(part2, I_v)].any(axis=1)]
    Y2_all = Ibar[adj[np.ix_(Y1, Ibar)].any(axis=0)] if len(Ibar) else Ibar
    if len(Y2_all) == 0:
        raise StepFailure("big", "y2", {"x": int(x), "v": int(v), "empty": "y2", "Ibar_next": int(len(Ibar))})
    O_v = np.flatnonzero(adj[v] & ~F_v)
    if len(O_v) == 0:
        raise StepFailure("big", "y4", {"x": int(x), "v": int(v), "empty": "y4"})
    in_part = st.part_of >= 0
    head = None
    for y1 in Y1:
        for y2 in Y2_all[adj[y1, Y2_all]]:
            for y3 in I_v[adj[y2, I_v]]:
                if y3 in (y1, y2):
                    continue
                head = (int(y1), int(y2), int(y3))
                break
            if head:
                break
        if head:
            break
    if head is None:
        raise StepFailure("big", "y3", {"x": int(x), "v": int(v), "empty": "y3"})
    used = set(head) | {int(v)}
    tail = None
    F_new = F_v.copy()
    F_new[list(head)] = True
    for y4 in O_v:
        if int(y4) in used:
            continue
        F_tmp = F_new.copy()
        F_tmp[y4] = True
        Y5 = np.flatnonzero(adj[y4] & ~F_tmp & in_part)
        for y5 in Y5:
            j = int(st.part_of[y5])
            nxt = st.free(j + 1, F_tmp)
            if nice_mask(adj, np.asarray([y5]), nxt, st.der, st.cfg)[0]:
                tail = (int(y4), int(y5))
                break
        if tail:
            break
    if tail is None:
        raise StepFailure("big", "y5", {"x": int(x), "v": int(v), "empty": "y5", "out_neighbours": int(len(O_v))})
    chain = head + (int(v),) + tail
    for w in chain:
        st.append(w, "big")
    return chain


def closing_step(st: PipelineState, z: int, forbid: np.ndarray) -> tuple[int, int, int]:
    """Append x -> y1 -> y2 -> y3 -> z with z four parts ahead of x.

    When z is the first path vertex the path becomes a cycle and z is not
    appended again.
    """
    adj = st.adj
    x = st.x
    s = int(st.part_of[x])
    if int(st.part_of[z]) != (s + 4) % st.r:
        raise StepFailure("closing", "precondition", {"reason": "z is not four parts ahead", "x": int(x), "z": int(z)})
    F = forbid | st.on_path
    Y1 = st.free(s + 1, F)
    Y1 = Y1[adj[x, Y1]]
    Y3 = st.free(s + 3, F)
    Y3 = Y3[adj[Y3, z]]
    if len(Y3) == 0:
        raise StepFailure("closing", "precondition", {"reason": "z has no free in-neighbour", "z": int(z)})
    if len(Y1) == 0:
        raise StepFailure("closing", "precondition", {"reason": "x has no free out-neighbour", "x": int(x)})
    mid = st.free(s + 2, F)
    from_y1 = adj[np.ix_(Y1, mid)].any(axis=0)
    to_y3 = adj[np.ix_(mid, Y3)].any(axis=1)
    both = mid[from_y1 & to_y3]
    if len(both) == 0:
        raise StepFailure("closing", "midpoint", {
            "reached_from_y1": int(from_y1.sum()), "reaching_y3": int(to_y3.sum()),
            "half_free_mid": len(mid) / 2})
    y2 = int(both[0])
    y1 = int(Y1[adj[Y1, y2]][0])
    y3 = int(Y3[adj[y2, Y3]][0])
    for w in (y1, y2, y3):
        st.append(w, "closing")
    if st.path[0] == z:
        st._log("closing", y3, z)
    else:
        st.append(z, "closing")
    return y1, y2, y3


def path_arcs(path: Iterable[int]) -> list[tuple[int, int]]:
    path = list(path)
    return list(zip(path, path[1:]))
