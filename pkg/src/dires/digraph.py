"""Immutable simple digraphs, seeded D(n, p) sampling, and the text format."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .seeding import make_rng


class DigraphFormatError(ValueError):
    """Raised when a graph file does not follow the interchange format."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Digraph:
    """A simple digraph on vertices ``0..n-1``.

    Stored as a dense boolean adjacency matrix ``adj[u, v]`` (arc u->v); the
    in-direction is the transpose. Sorted neighbor arrays are built lazily.
    Instances are read-only and safe to share between workers.
    """

    def __init__(self, adj: np.ndarray):
        a = np.array(adj, dtype=bool, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency matrix must be square")
        if a.shape[0] and a.diagonal().any():
            raise ValueError("self-loops are not allowed")
        a.setflags(write=False)
        self._adj = a

    @classmethod
    def _trusted(cls, adj: np.ndarray) -> "Digraph":
        # Skips the copy; caller hands over ownership of a loop-free matrix.
        obj = cls.__new__(cls)
        adj.setflags(write=False)
        obj._adj = adj
        return obj

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[tuple[int, int]]) -> "Digraph":
        a = np.zeros((n, n), dtype=bool)
        for u, v in arcs:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            a[u, v] = True
        return cls._trusted(a)

    @classmethod
    def complete(cls, n: int) -> "Digraph":
        a = np.ones((n, n), dtype=bool)
        np.fill_diagonal(a, False)
        return cls._trusted(a)

    @classmethod
    def empty(cls, n: int) -> "Digraph":
        return cls._trusted(np.zeros((n, n), dtype=bool))

    @property
    def adj(self) -> np.ndarray:
        return self._adj

    @property
    def n(self) -> int:
        return self._adj.shape[0]

    @cached_property
    def m(self) -> int:
        return int(self._adj.sum())

    @cached_property
    def out_degrees(self) -> np.ndarray:
        d = self._adj.sum(axis=1)
        d.setflags(write=False)
        return d

    @cached_property
    def in_degrees(self) -> np.ndarray:
        d = self._adj.sum(axis=0)
        d.setflags(write=False)
        return d

    @cached_property
    def out_adj(self) -> tuple[np.ndarray, ...]:
        return tuple(np.flatnonzero(row) for row in self._adj)

    @cached_property
    def in_adj(self) -> tuple[np.ndarray, ...]:
        return tuple(np.flatnonzero(col) for col in self._adj.T)

    def has_arc(self, u: int, v: int) -> bool:
        return bool(self._adj[u, v])

    def arcs(self) -> Iterator[tuple[int, int]]:
        us, vs = np.nonzero(self._adj)
        return zip(us.tolist(), vs.tolist())

    def out_degree_into(self, u: int, targets: Sequence[int]) -> int:
        return int(self._adj[u, targets].sum())

    def in_degree_from(self, v: int, sources: Sequence[int]) -> int:
        return int(self._adj[sources, v].sum())

    def remove_arcs(self, mask: np.ndarray) -> "Digraph":
        """Copy of this digraph without the arcs flagged in ``mask``."""
        return Digraph._trusted(self._adj & ~np.asarray(mask, dtype=bool))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return self._adj.shape == other._adj.shape and bool(np.array_equal(self._adj, other._adj))

    def __hash__(self) -> int:
        return hash((self.n, np.packbits(self._adj).tobytes()))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class DegreeSummary:
    min_out: int
    min_in: int
    max_out: int
    max_in: int
    out_degrees: tuple[int, ...]
    in_degrees: tuple[int, ...]


def generate_random_digraph(n: int, p: float, seed: int) -> Digraph:
    """Sample D(n, p).

    Coins are flipped in ascending pair order: row ``u`` consumes ``n``
    uniforms from a PCG64 stream seeded with ``seed`` and the coin for
    (u, v) is the v-th of them (the diagonal draw is discarded). The arc
    exists iff the uniform is below ``p``.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = make_rng(seed)
    a = np.empty((n, n), dtype=bool)
    for u in range(n):
        a[u] = rng.random(n) < p
    np.fill_diagonal(a, False)
    return Digraph._trusted(a)


def degree_stats(D: Digraph) -> DegreeSummary:
    out_d, in_d = D.out_degrees, D.in_degrees
    if D.n == 0:
        return DegreeSummary(0, 0, 0, 0, (), ())
    return DegreeSummary(
        min_out=int(out_d.min()),
        min_in=int(in_d.min()),
        max_out=int(out_d.max()),
        max_in=int(in_d.max()),
        out_degrees=tuple(int(x) for x in out_d),
        in_degrees=tuple(int(x) for x in in_d),
    )


def arc_count(D: Digraph, A: Sequence[int], B: Sequence[int]) -> int:
    """Number of arcs from A to B."""
    return int(D.adj[np.ix_(np.asarray(A, dtype=int), np.asarray(B, dtype=int))].sum())


def induced_density(D: Digraph, A: Iterable[int], B: Iterable[int]) -> Fraction:
    """Directed density e(A, B) / (|A| |B|) of the ordered pair (A, B)."""
    A, B = sorted(set(A)), sorted(set(B))
    if not A or not B:
        raise ValueError("density needs two nonempty vertex sets")
    if set(A) & set(B):
        raise ValueError("vertex sets must be disjoint")
    if A[-1] >= D.n or B[-1] >= D.n or A[0] < 0 or B[0] < 0:
        raise ValueError("vertex outside the digraph")
    return Fraction(arc_count(D, A, B), len(A) * len(B))


def write_digraph(D: Digraph, path: str | Path) -> None:
    us, vs = np.nonzero(D.adj)
    lines = [f"digraph {D.n} {len(us)}"]
    lines.extend(f"{u} {v}" for u, v in zip(us.tolist(), vs.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _ints(line: str, lineno: int, what: str) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise DigraphFormatError(lineno, f"expected two integers for {what}, got {line!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise DigraphFormatError(lineno, f"non-integer token in {line!r}") from None
    return a, b


def parse_digraph(text: str) -> Digraph:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DigraphFormatError(1, "missing header")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "digraph":
        raise DigraphFormatError(1, f"malformed header {lines[0]!r}")
    try:
        n, m = int(head[1]), int(head[2])
    except ValueError:
        raise DigraphFormatError(1, f"malformed header {lines[0]!r}") from None
    if n < 0 or m < 0:
        raise DigraphFormatError(1, "negative size in header")
    body = lines[1:]
    if len(body) != m:
        where = m + 2 if len(body) > m else len(lines) + 1
        raise DigraphFormatError(where, f"header declares {m} arcs but file has {len(body)} arc lines")
    a = np.zeros((n, n), dtype=bool)
    prev = (-1, -1)
    for offset, line in enumerate(body):
        lineno = offset + 2
        u, v = _ints(line, lineno, "an arc")
        if not (0 <= u < n and 0 <= v < n):
            raise DigraphFormatError(lineno, f"vertex id out of range 0..{n - 1}: {u} {v}")
        if u == v:
            raise DigraphFormatError(lineno, f"self-loop {u} {v}")
        if a[u, v]:
            raise DigraphFormatError(lineno, f"duplicate arc {u} {v}")
        if (u, v) < prev:
            raise DigraphFormatError(lineno, f"arcs not sorted ascending at {u} {v}")
        prev = (u, v)
        a[u, v] = True
    return Digraph._trusted(a)


def read_digraph(path: str | Path) -> Digraph:
    return parse_digraph(Path(path).read_text(encoding="utf-8"))
