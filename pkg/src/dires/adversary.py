"""Arc-deletion adversaries under a per-vertex local budget.

A deletion of arc (u, v) spends one unit of u's out-budget and one unit of
v's in-budget. Budgets come either from a resilience parameter alpha
(``floor((1/2 - alpha) * deg)``) or from an absolute level r.

``greedy_cut_adversary`` is extra plumbing for sharper empirical upper
bounds; it is not part of any proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .digraph import Digraph
from .seeding import as_rng


@dataclass(frozen=True)
class AdversaryOutcome:
    original: Digraph
    surviving: Digraph
    deleted_out: np.ndarray
    deleted_in: np.ndarray
    alpha: Optional[float] = None
    level: Optional[int] = None
    split: Optional[tuple[tuple[int, ...], tuple[int, ...]]] = None
    strategy: str = ""

    @property
    def deleted(self) -> int:
        return int(self.deleted_out.sum())

    @property
    def out_fraction(self) -> np.ndarray:
        deg = self.original.out_degrees
        return np.divide(self.deleted_out, deg, out=np.zeros(len(deg)), where=deg > 0)

    @property
    def in_fraction(self) -> np.ndarray:
        deg = self.original.in_degrees
        return np.divide(self.deleted_in, deg, out=np.zeros(len(deg)), where=deg > 0)

    @property
    def max_fraction(self) -> float:
        if self.original.n == 0:
            return 0.0
        return float(max(self.out_fraction.max(), self.in_fraction.max()))

    def cut_is_empty(self) -> bool:
        """True iff a split is recorded and no V1->V2 arc survives."""
        if self.split is None:
            return False
        v1, v2 = self.split
        if not v1 or not v2:
            return False
        return not self.surviving.adj[np.ix_(v1, v2)].any()


def alpha_budgets(D: Digraph, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex (out, in) budgets ``floor((1/2 - alpha) * deg)``."""
    frac = 0.5 - alpha
    # Tiny slack so that e.g. 0.4 * 5 is not floored to 1.999...
    out_b = np.floor(frac * D.out_degrees + 1e-9).astype(np.int64)
    in_b = np.floor(frac * D.in_degrees + 1e-9).astype(np.int64)
    return np.maximum(out_b, 0), np.maximum(in_b, 0)


def level_budgets(D: Digraph, level: int) -> tuple[np.ndarray, np.ndarray]:
    out_b = np.minimum(D.out_degrees, level).astype(np.int64)
    in_b = np.minimum(D.in_degrees, level).astype(np.int64)
    return out_b, in_b


def _budget_pass(
    us: np.ndarray, vs: np.ndarray, out_b: np.ndarray, in_b: np.ndarray
) -> np.ndarray:
    """Delete arcs (us[i], vs[i]) in order while both endpoints have budget."""
    left_out = out_b.tolist()
    left_in = in_b.tolist()
    keep = []
    for i, (u, v) in enumerate(zip(us.tolist(), vs.tolist())):
        if left_out[u] > 0 and left_in[v] > 0:
            left_out[u] -= 1
            left_in[v] -= 1
            keep.append(i)
    return np.asarray(keep, dtype=np.int64)


def _outcome(D, mask, strategy, alpha=None, level=None, split=None) -> AdversaryOutcome:
    surviving = D.remove_arcs(mask)
    return AdversaryOutcome(
        original=D,
        surviving=surviving,
        deleted_out=mask.sum(axis=1).astype(np.int64),
        deleted_in=mask.sum(axis=0).astype(np.int64),
        alpha=alpha,
        level=level,
        split=split,
        strategy=strategy,
    )


def _resolve_budgets(D, alpha, level):
    if (alpha is None) == (level is None):
        raise ValueError("give exactly one of alpha and level")
    if alpha is not None:
        if not 0.0 < alpha <= 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2], got {alpha}")
        return alpha_budgets(D, alpha)
    if level < 0:
        raise ValueError(f"level must be nonnegative, got {level}")
    return level_budgets(D, level)


def random_split(n: int, rng: np.random.Generator) -> tuple[tuple[int, ...], tuple[int, ...]]:
    perm = rng.permutation(n)
    half = n // 2
    return tuple(sorted(perm[:half].tolist())), tuple(sorted(perm[half:].tolist()))


def _check_split(n: int, split) -> tuple[tuple[int, ...], tuple[int, ...]]:
    v1, v2 = (tuple(sorted(int(x) for x in part)) for part in split)
    if set(v1) & set(v2) or len(v1) + len(v2) != n or set(v1) | set(v2) != set(range(n)):
        raise ValueError("split must partition the vertex set")
    if abs(len(v1) - len(v2)) > 1:
        raise ValueError(f"split is unbalanced: sizes {len(v1)} and {len(v2)}")
    return v1, v2


def bipartition_adversary(D: Digraph, split=None, seed=None) -> AdversaryOutcome:
    """Delete every arc from V1 to V2.

    Without ``split`` a balanced split is drawn from ``seed``. The result can
    never be Hamiltonian when both sides are nonempty, since a Hamilton
    cycle has to leave V1 at some point.
    """
    if split is None:
        split = random_split(D.n, as_rng(seed))
    v1, v2 = _check_split(D.n, split)
    mask = np.zeros((D.n, D.n), dtype=bool)
    if v1 and v2:
        mask[np.ix_(v1, v2)] = D.adj[np.ix_(v1, v2)]
    return _outcome(D, mask, "bipartition", split=(v1, v2))


def random_budget_adversary(
    D: Digraph, alpha: float | None = None, seed=None, *, level: int | None = None
) -> AdversaryOutcome:
    """Delete arcs in a seeded random order while both endpoint budgets last."""
    out_b, in_b = _resolve_budgets(D, alpha, level)
    rng = as_rng(seed)
    us, vs = np.nonzero(D.adj)
    order = rng.permutation(len(us))
    us, vs = us[order], vs[order]
    chosen = _budget_pass(us, vs, out_b, in_b)
    mask = np.zeros((D.n, D.n), dtype=bool)
    mask[us[chosen], vs[chosen]] = True
    return _outcome(D, mask, "random", alpha=alpha, level=level)


def _cut_excess(adj: np.ndarray, side: np.ndarray, out_b: np.ndarray, in_b: np.ndarray) -> np.ndarray:
    # side[u] is True for V1. Out-cut degrees of V1 vertices, in-cut of V2.
    cut_out = (adj & ~side[None, :]).sum(axis=1)
    cut_in = (adj & side[:, None]).sum(axis=0)
    ex = np.where(side, cut_out - out_b, cut_in - in_b)
    return np.maximum(ex, 0)


def greedy_cut_adversary(
    D: Digraph,
    alpha: float | None = None,
    seed=None,
    *,
    level: int | None = None,
    restarts: int = 4,
    sweeps: int = 2,
) -> AdversaryOutcome:
    """Aim the budget at one balanced cut.

    Draws ``restarts`` random balanced splits, improves each by swapping
    the most overloaded vertex of either side, keeps the split whose cut
    overflows the budgets least, then deletes its V1->V2 arcs in random
    order while budgets last.
    """
    out_b, in_b = _resolve_budgets(D, alpha, level)
    rng = as_rng(seed)
    n = D.n
    adj = D.adj
    best_side, best_cost = None, math.inf
    for _ in range(max(1, restarts)):
        v1, _v2 = random_split(n, rng)
        side = np.zeros(n, dtype=bool)
        side[list(v1)] = True
        for _ in range(sweeps * n):
            ex = _cut_excess(adj, side, out_b, in_b)
            cost = int(ex.sum())
            if cost == 0 or n < 2:
                break
            a = int(np.argmax(np.where(side, ex, -1)))
            b = int(np.argmax(np.where(~side, ex, -1)))
            if not side[a] or side[b]:
                break
            side[a], side[b] = False, True
            new_cost = int(_cut_excess(adj, side, out_b, in_b).sum())
            if new_cost >= cost:
                side[a], side[b] = True, False
                break
        cost = int(_cut_excess(adj, side, out_b, in_b).sum())
        if cost < best_cost:
            best_side, best_cost = side.copy(), cost
    side = best_side if best_side is not None else np.zeros(n, dtype=bool)
    v1 = tuple(np.flatnonzero(side).tolist())
    v2 = tuple(np.flatnonzero(~side).tolist())
    cut = np.zeros((n, n), dtype=bool)
    if v1 and v2:
        cut[np.ix_(v1, v2)] = adj[np.ix_(v1, v2)]
    us, vs = np.nonzero(cut)
    order = rng.permutation(len(us))
    us, vs = us[order], vs[order]
    chosen = _budget_pass(us, vs, out_b, in_b)
    mask = np.zeros((n, n), dtype=bool)
    mask[us[chosen], vs[chosen]] = True
    return _outcome(D, mask, "greedy_cut", alpha=alpha, level=level, split=(v1, v2))


def capped_bipartition_adversary(D: Digraph, level: int, seed=None) -> AdversaryOutcome:
    """Bipartition cut restricted to a per-vertex level budget.

    The full cut is deleted when it fits; otherwise cut arcs are deleted in
    seeded random order while budgets last.
    """
    rng = as_rng(seed)
    v1, v2 = random_split(D.n, rng)
    full = bipartition_adversary(D, (v1, v2))
    if full.deleted_out.max(initial=0) <= level and full.deleted_in.max(initial=0) <= level:
        return AdversaryOutcome(
            D, full.surviving, full.deleted_out, full.deleted_in, level=level,
            split=full.split, strategy="bipartition",
        )
    out_b, in_b = level_budgets(D, level)
    us, vs = np.nonzero(D.adj & ~full.surviving.adj)
    order = rng.permutation(len(us))
    us, vs = us[order], vs[order]
    chosen = _budget_pass(us, vs, out_b, in_b)
    mask = np.zeros((D.n, D.n), dtype=bool)
    mask[us[chosen], vs[chosen]] = True
    return _outcome(D, mask, "bipartition", level=level, split=(v1, v2))


def verify_budget(outcome: AdversaryOutcome, alpha: float) -> tuple[bool, Optional[int]]:
    """Check the alpha budget; returns (ok, first violating vertex or None)."""
    out_b, in_b = alpha_budgets(outcome.original, alpha)
    bad = (outcome.deleted_out > out_b) | (outcome.deleted_in > in_b)
    idx = np.flatnonzero(bad)
    if len(idx):
        return False, int(idx[0])
    return True, None


def outcome_from_deletions(D: Digraph, deleted: Sequence[tuple[int, int]], alpha=None) -> AdversaryOutcome:
    """Wrap an explicit deletion set (handy for hand-built cases)."""
    mask = np.zeros((D.n, D.n), dtype=bool)
    for u, v in deleted:
        if not D.adj[u, v]:
            raise ValueError(f"({u}, {v}) is not an arc")
        mask[u, v] = True
    return _outcome(D, mask, "explicit", alpha=alpha)


def ledger_reconciles(outcome: AdversaryOutcome) -> bool:
    o, s = outcome.original, outcome.surviving
    if (s.adj & ~o.adj).any():
        return False
    return bool(
        np.array_equal(outcome.deleted_out, o.out_degrees - s.out_degrees)
        and np.array_equal(outcome.deleted_in, o.in_degrees - s.in_degrees)
    )
