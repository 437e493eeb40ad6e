"""Transition matrices, their edge graphs, and paths.

Vertices are numbered ``0 .. r-1`` and edges ``0 .. E-1``.  Edge ids follow the
canonical order (source, target, slot), so comparing two paths as tuples of
edge ids is the lexicographic order used everywhere for block indexing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .config import DEFAULT_CONFIG
from .errors import InputError, ResourceCapError


@dataclass(frozen=True)
class TransitionMatrix:
    """Nonnegative integral square matrix."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = self.entries
        r = len(rows)
        if r == 0:
            raise InputError("transition matrix must have at least one row")
        for row in rows:
            if len(row) != r:
                raise InputError("transition matrix must be square")
            for x in row:
                if isinstance(x, bool) or not isinstance(x, (int, np.integer, float, np.floating)) or int(x) != x:
                    raise InputError("entries must be integers")
                if x < 0:
                    raise InputError(f"negative entry {x}")
        object.__setattr__(self, "entries", tuple(tuple(int(x) for x in row) for row in rows))

    @classmethod
    def of(cls, data) -> "TransitionMatrix":
        if isinstance(data, TransitionMatrix):
            return data
        if isinstance(data, str):
            return parse_matrix(data)
        try:
            arr = np.asarray(data, dtype=object)
        except ValueError:
            raise InputError("transition matrix rows have unequal lengths") from None
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2:
            raise InputError("transition matrix must be two-dimensional or has ragged rows")
        return cls(tuple(tuple(arr.tolist()[i]) for i in range(arr.shape[0])))

    @property
    def r(self) -> int:
        return len(self.entries)

    def array(self, dtype=object) -> np.ndarray:
        """Entries as an ndarray; ``dtype=object`` keeps Python integers."""
        return np.array(self.entries, dtype=dtype)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def to_json(self) -> dict:
        return {"r": self.r, "entries": [list(row) for row in self.entries]}

    def __str__(self):
        return ";".join(",".join(str(x) for x in row) for row in self.entries)


def parse_matrix(text: str) -> TransitionMatrix:
    """Parse ``"1,1;1,0"`` or a JSON object ``{"r": 2, "entries": [[1,1],[1,0]]}``."""
    text = text.strip()
    if text.startswith("{"):
        try:
            obj = json.loads(text)
            entries = obj["entries"]
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"malformed matrix JSON: {exc}") from None
        tm = TransitionMatrix.of(entries)
        if "r" in obj and obj["r"] != tm.r:
            raise InputError(f"declared r={obj['r']} but matrix is {tm.r}x{tm.r}")
        return tm
    try:
        rows = [[int(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise InputError(f"malformed matrix string {text!r}") from None
    return TransitionMatrix.of(rows) if len(rows) > 1 or len(rows[0]) == 1 else _bad(text)


def _bad(text):
    raise InputError(f"malformed matrix string {text!r}: not square")


class Edge(NamedTuple):
    id: int
    source: int
    target: int
    slot: int


@dataclass(frozen=True, order=True)
class Path:
    """A finite path.  Length-0 paths carry only their vertex."""

    edges: tuple[int, ...]
    vertex: int | None = None

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class Interval:
    a: int
    b: int

    def __post_init__(self):
        if self.a > self.b:
            raise InputError(f"interval needs a <= b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> int:
        """Number of coordinates, ``b - a + 1``; also the path length it carries."""
        return self.b - self.a + 1

    def contains(self, other: "Interval") -> bool:
        return self.a <= other.a and other.b <= self.b

    def shift(self, n: int) -> "Interval":
        return Interval(self.a + n, self.b + n)

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.a, other.a), max(self.b, other.b))

    def disjoint(self, other: "Interval") -> bool:
        return self.b < other.a or other.b < self.a

    def as_tuple(self):
        return (self.a, self.b)


class Graph:
    """Vertex set and canonically ordered edge list of ``G_T``."""

    def __init__(self, T: TransitionMatrix):
        self.T = T
        self.r = T.r
        edges = []
        for i in range(T.r):
            for j in range(T.r):
                for s in range(T[i, j]):
                    edges.append(Edge(len(edges), i, j, s))
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.source = np.array([e.source for e in edges], dtype=np.int64)
        self.target = np.array([e.target for e in edges], dtype=np.int64)
        self.out_edges = tuple(tuple(e.id for e in edges if e.source == v) for v in range(T.r))
        self.in_edges = tuple(tuple(e.id for e in edges if e.target == v) for v in range(T.r))

    def __len__(self):
        return len(self.edges)

    def initial(self, path: Sequence[int]) -> int:
        return int(self.source[path[0]])

    def terminal(self, path: Sequence[int]) -> int:
        return int(self.target[path[-1]])

    def is_path(self, path: Sequence[int]) -> bool:
        if any(not 0 <= e < len(self.edges) for e in path):
            return False
        return all(self.target[x] == self.source[y] for x, y in zip(path, path[1:]))


def build_graph(T) -> Graph:
    return _graph(TransitionMatrix.of(T))


@lru_cache(maxsize=64)
def _graph(T: TransitionMatrix) -> Graph:
    return Graph(T)


@lru_cache(maxsize=512)
def matrix_power(T: TransitionMatrix, n: int) -> np.ndarray:
    """``T**n`` with arbitrary-precision integer entries (object dtype)."""
    if n < 0:
        raise InputError("negative power")
    if n == 0:
        out = np.zeros((T.r, T.r), dtype=object)
        for i in range(T.r):
            out[i, i] = 1
        return out
    if n == 1:
        return T.array()
    half = matrix_power(T, n // 2)
    sq = half.dot(half)
    return sq.dot(T.array()) if n % 2 else sq


def _check_vertex(T, *vs):
    for v in vs:
        if not 0 <= v < T.r:
            raise InputError(f"vertex {v} out of range 0..{T.r - 1}")


def count_paths(T, i: int, j: int, length: int) -> int:
    """Number of paths of the given length from ``i`` to ``j``: ``(T**length)[i, j]``."""
    T = TransitionMatrix.of(T)
    _check_vertex(T, i, j)
    if length < 0:
        raise InputError("path length must be >= 0")
    return int(matrix_power(T, length)[i, j])


@lru_cache(maxsize=4096)
def _edge_paths(T: TransitionMatrix, i: int, j: int, length: int) -> tuple[tuple[int, ...], ...]:
    g = build_graph(T)
    # reach[k][v]: a path of length k from v to j exists
    reach = [matrix_power(T, k)[:, j] for k in range(length + 1)]
    out: list[tuple[int, ...]] = []
    stack: list[int] = []

    def rec(v, remaining):
        if remaining == 0:
            out.append(tuple(stack))
            return
        for e in g.out_edges[v]:
            t = int(g.target[e])
            if reach[remaining - 1][t] > 0:
                stack.append(e)
                rec(t, remaining - 1)
                stack.pop()

    rec(i, length)
    return tuple(out)


def edge_paths(T, i: int, j: int, length: int, cap: int | None = None) -> tuple[tuple[int, ...], ...]:
    """Lexicographically ordered edge-id tuples of all paths ``i -> j`` of ``length >= 1``."""
    T = TransitionMatrix.of(T)
    cap = DEFAULT_CONFIG.max_paths if cap is None else cap
    n = count_paths(T, i, j, length)
    if n > cap:
        raise ResourceCapError(
            f"{n} paths of length {length} from {i} to {j} exceed cap {cap}", required=n, cap=cap
        )
    return _edge_paths(T, i, j, length)


def enumerate_paths(T, i: int, j: int, length: int, cap: int | None = None) -> list[Path]:
    """Canonical enumeration of paths; the order every block index relies on."""
    T = TransitionMatrix.of(T)
    _check_vertex(T, i, j)
    if length == 0:
        return [Path((), i)] if i == j else []
    return [Path(p) for p in edge_paths(T, i, j, length, cap)]


def all_paths(T, length: int, cap: int | None = None) -> list[tuple[int, ...]]:
    """Every path of the given length, grouped by (source, target) block."""
    T = TransitionMatrix.of(T)
    cap = DEFAULT_CONFIG.max_paths if cap is None else cap
    total = int(matrix_power(T, length).sum())
    if total > cap:
        raise ResourceCapError(f"{total} paths of length {length} exceed cap {cap}", required=total, cap=cap)
    out = []
    for i in range(T.r):
        for j in range(T.r):
            out.extend(_edge_paths(T, i, j, length))
    return out


@dataclass(frozen=True)
class PrimitivityVerdict:
    primitive: bool
    exponent: int | None
    bound: int
    obstruction: str | None = None

    def __bool__(self):
        return self.primitive


def wielandt_bound(r: int) -> int:
    return r * r - 2 * r + 2


def is_primitive(T) -> PrimitivityVerdict:
    """Least ``n`` up to the Wielandt bound with ``T**n`` entrywise positive."""
    T = TransitionMatrix.of(T)
    bound = wielandt_bound(T.r)
    A = np.array(T.entries) > 0
    P = A.copy()
    for n in range(1, bound + 1):
        if P.all():
            return PrimitivityVerdict(True, n, bound)
        P = (P.astype(np.int64) @ A.astype(np.int64)) > 0
    zeros = int((~P).sum())
    return PrimitivityVerdict(
        False, None, bound, f"T^{bound} still has {zeros} zero entries (Wielandt bound {bound})"
    )
