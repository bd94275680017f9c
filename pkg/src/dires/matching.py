"""Bipartite matching with Hall-violator certificates."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Optional, Sequence


@dataclass(frozen=True)
class MatchingResult:
    """Either a matching saturating the left side, or a Hall violator.

    Exactly one of ``matching`` (left -> right) and ``deficient`` is set.
    ``neighborhood`` is N(deficient), reported so callers can check
    ``len(neighborhood) < len(deficient)`` directly.
    """

    matching: Optional[dict] = None
    deficient: Optional[frozenset] = None
    neighborhood: frozenset = field(default_factory=frozenset)

    @property
    def saturating(self) -> bool:
        return self.matching is not None


def _hopcroft_karp(adj: list[list[int]], n_right: int) -> tuple[list[int], list[int]]:
    n_left = len(adj)
    INF = n_left + 1
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    while True:
        # BFS layering from free left vertices.
        dist = [INF] * n_left
        q = deque()
        for a in range(n_left):
            if match_l[a] == -1:
                dist[a] = 0
                q.append(a)
        found = False
        while q:
            a = q.popleft()
            for b in adj[a]:
                a2 = match_r[b]
                if a2 == -1:
                    found = True
                elif dist[a2] == INF:
                    dist[a2] = dist[a] + 1
                    q.append(a2)
        if not found:
            break
        # Iterative DFS along the layers.
        ptr = [0] * n_left
        for root in range(n_left):
            if match_l[root] != -1:
                continue
            stack = [root]
            while stack:
                a = stack[-1]
                advanced = False
                while ptr[a] < len(adj[a]):
                    b = adj[a][ptr[a]]
                    ptr[a] += 1
                    a2 = match_r[b]
                    if a2 == -1:
                        # Augment along the stack.
                        for i in range(len(stack) - 1, -1, -1):
                            x = stack[i]
                            prev_b = match_l[x]
                            match_l[x] = b
                            match_r[b] = x
                            b = prev_b
                        stack = []
                        advanced = True
                        break
                    if dist[a2] == dist[a] + 1:
                        stack.append(a2)
                        advanced = True
                        break
                if not advanced:
                    dist[a] = INF
                    stack.pop()
    return match_l, match_r


def hall_matching(adjacency: Mapping[Hashable, Sequence[Hashable]], right: Optional[Sequence] = None) -> MatchingResult:
    """Maximum matching from the left keys into the right vertices.

    If the maximum matching does not saturate the left side, the left
    vertices reachable by alternating paths from unmatched left vertices
    form a set S with ``|N(S)| < |S|`` (Koenig's construction); it is
    returned as the certificate.
    """
    left = list(adjacency.keys())
    right_items = list(right) if right is not None else []
    seen = set(right_items)
    for a in left:
        for b in adjacency[a]:
            if b not in seen:
                seen.add(b)
                right_items.append(b)
    r_index = {b: i for i, b in enumerate(right_items)}
    adj = [[r_index[b] for b in dict.fromkeys(adjacency[a])] for a in left]
    match_l, match_r = _hopcroft_karp(adj, len(right_items))
    if all(x != -1 for x in match_l):
        return MatchingResult(matching={left[a]: right_items[match_l[a]] for a in range(len(left))})
    reach_l = set()
    reach_r = set()
    q = deque(a for a in range(len(left)) if match_l[a] == -1)
    reach_l.update(q)
    while q:
        a = q.popleft()
        for b in adj[a]:
            if b in reach_r:
                continue
            reach_r.add(b)
            a2 = match_r[b]
            if a2 != -1 and a2 not in reach_l:
                reach_l.add(a2)
                q.append(a2)
    S = frozenset(left[a] for a in reach_l)
    N = frozenset(right_items[b] for b in reach_r)
    return MatchingResult(deficient=S, neighborhood=N)


def maximum_matching_size(adjacency: Mapping[Hashable, Sequence[Hashable]]) -> int:
    left = list(adjacency.keys())
    right_items = sorted({b for a in left for b in adjacency[a]}, key=repr)
    r_index = {b: i for i, b in enumerate(right_items)}
    adj = [[r_index[b] for b in adjacency[a]] for a in left]
    match_l, _ = _hopcroft_karp(adj, len(right_items))
    return sum(1 for x in match_l if x != -1)
