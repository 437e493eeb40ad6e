"""Finite-window algebras ``H_T^I`` as direct sums of real matrix blocks.

An element at window ``[a, b]`` has one dense square block for every vertex
pair ``(i, j)`` joined by at least one path of length ``b - a + 1``.  Rows and
columns of that block are indexed by the canonical path order of
:func:`sftrohlin.sft_core.edge_paths`.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .config import DEFAULT_CONFIG
from .errors import InputError, PreconditionError, ResourceCapError
from .measure import ClopenSet, PerronData
from .sft_core import Interval, TransitionMatrix, build_graph, edge_paths, matrix_power


@lru_cache(maxsize=1024)
def block_sizes(T: TransitionMatrix, length: int) -> dict:
    P = matrix_power(T, length)
    return {(i, j): int(P[i, j]) for i in range(T.r) for j in range(T.r) if P[i, j] > 0}


@lru_cache(maxsize=1024)
def block_index(T: TransitionMatrix, length: int, i: int, j: int) -> dict:
    return {p: k for k, p in enumerate(edge_paths(T, i, j, length))}


def _check_size(T, length, cap):
    cap = DEFAULT_CONFIG.max_paths if cap is None else cap
    total = int(matrix_power(T, length).sum())
    if total > cap:
        raise ResourceCapError(f"window of width {length} needs {total} basis paths, cap {cap}",
                               required=total, cap=cap)


class AlgebraElement:
    """Element of ``H_T^[a,b]``; immutable by convention."""

    __slots__ = ("T", "window", "blocks")
    __array_priority__ = 1000

    def __init__(self, T, window, blocks: dict):
        self.T = TransitionMatrix.of(T)
        self.window = window if isinstance(window, Interval) else Interval(*window)
        sizes = block_sizes(self.T, self.window.width)
        if set(blocks) != set(sizes):
            raise InputError(f"blocks {sorted(blocks)} do not match window blocks {sorted(sizes)}")
        for key, B in blocks.items():
            if B.shape != (sizes[key], sizes[key]):
                raise InputError(f"block {key} has shape {B.shape}, expected {sizes[key]}")
        self.blocks = blocks

    # constructors -------------------------------------------------------

    @classmethod
    def zero(cls, T, window, cap=None, dtype=float):
        T = TransitionMatrix.of(T)
        window = window if isinstance(window, Interval) else Interval(*window)
        _check_size(T, window.width, cap)
        return cls(T, window, {k: np.zeros((n, n), dtype=dtype) for k, n in block_sizes(T, window.width).items()})

    @classmethod
    def identity(cls, T, window, cap=None):
        T = TransitionMatrix.of(T)
        window = window if isinstance(window, Interval) else Interval(*window)
        _check_size(T, window.width, cap)
        return cls(T, window, {k: np.eye(n) for k, n in block_sizes(T, window.width).items()})

    @classmethod
    def random(cls, T, window, rng, cap=None):
        e = cls.zero(T, window, cap)
        return e.map(lambda B: rng.standard_normal(B.shape))

    # structure ----------------------------------------------------------

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "AlgebraElement":
        return AlgebraElement(self.T, self.window, {k: fn(B) for k, B in self.blocks.items()})

    def _zip(self, other, fn):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if other.T != self.T or other.window != self.window:
            raise InputError(
                f"elements live in different windows {self.window.as_tuple()} and {other.window.as_tuple()}; embed first"
            )
        return AlgebraElement(self.T, self.window, {k: fn(B, other.blocks[k]) for k, B in self.blocks.items()})

    def __add__(self, other):
        return self._zip(other, np.add)

    def __sub__(self, other):
        return self._zip(other, np.subtract)

    def __neg__(self):
        return self.map(np.negative)

    def __mul__(self, c):
        if isinstance(c, AlgebraElement):
            raise TypeError("use @ for the algebra product")
        return self.map(lambda B: c * B)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.map(lambda B: B / c)

    def __matmul__(self, other):
        return self._zip(other, np.matmul)

    @property
    def adj(self) -> "AlgebraElement":
        return self.map(lambda B: B.conj().T)

    @property
    def dim(self) -> int:
        return sum(B.shape[0] for B in self.blocks.values())

    def allclose(self, other, atol=1e-12) -> bool:
        d = self - other
        return all(np.abs(B).max(initial=0.0) <= atol for B in d.blocks.values())

    def max_abs(self) -> float:
        return max((float(np.abs(B).max(initial=0.0)) for B in self.blocks.values()), default=0.0)

    def to_dense(self) -> np.ndarray:
        """Block-diagonal dense matrix in block-key order."""
        keys = sorted(self.blocks)
        n = self.dim
        out = np.zeros((n, n), dtype=np.result_type(*[self.blocks[k] for k in keys]) if keys else float)
        pos = 0
        for k in keys:
            m = self.blocks[k].shape[0]
            out[pos:pos + m, pos:pos + m] = self.blocks[k]
            pos += m
        return out

    def rank(self, tol=1e-9) -> int:
        return sum(int(np.linalg.matrix_rank(B, tol)) if B.size else 0 for B in self.blocks.values())

    def __repr__(self):
        return f"AlgebraElement(window=[{self.window.a},{self.window.b}], blocks={len(self.blocks)}, dim={self.dim})"

    # serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "T": [list(r) for r in self.T.entries],
            "window": [self.window.a, self.window.b],
            "blocks": [
                {"block": [i, j], "size": B.shape[0], "entries": [float(x) for x in B.ravel()]}
                for (i, j), B in sorted(self.blocks.items())
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "AlgebraElement":
        try:
            blocks = {}
            for b in obj["blocks"]:
                n = b["size"]
                blocks[tuple(b["block"])] = np.array(b["entries"], dtype=float).reshape(n, n)
            return cls(obj["T"], Interval(*obj["window"]), blocks)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed algebra element JSON: {exc}") from None


def _as_edges(x):
    return tuple(x.edges) if hasattr(x, "edges") else tuple(int(e) for e in x)


def matrix_unit(T, x, y, a: int, cap=None) -> AlgebraElement:
    """``E_{x,y}`` at the window ``[a, a + |x| - 1]``."""
    T = TransitionMatrix.of(T)
    x, y = _as_edges(x), _as_edges(y)
    g = build_graph(T)
    if len(x) != len(y) or len(x) < 1:
        raise InputError("matrix units need paths of equal length >= 1")
    if not (g.is_path(x) and g.is_path(y)):
        raise InputError("not a path")
    i, j = g.initial(x), g.terminal(x)
    if (g.initial(y), g.terminal(y)) != (i, j):
        raise InputError(f"endpoint mismatch: {x} runs {i}->{j}, {y} runs {g.initial(y)}->{g.terminal(y)}")
    e = AlgebraElement.zero(T, Interval(a, a + len(x) - 1), cap)
    idx = block_index(T, len(x), i, j)
    e.blocks[(i, j)][idx[x], idx[y]] = 1.0
    return e


@lru_cache(maxsize=256)
def _embedding_plan(T: TransitionMatrix, length: int, left: int, right: int):
    """Index arrays placing each source block into target blocks, one per (prefix, suffix)."""
    r = T.r
    plan = []
    for (i, j) in block_sizes(T, length):
        src = edge_paths(T, i, j, length)
        for i2 in range(r):
            prefixes = edge_paths(T, i2, i, left) if left else ([()] if i2 == i else [])
            for j2 in range(r):
                suffixes = edge_paths(T, j, j2, right) if right else ([()] if j2 == j else [])
                if not prefixes or not suffixes:
                    continue
                tidx = block_index(T, length + left + right, i2, j2)
                for p in prefixes:
                    for s in suffixes:
                        plan.append(((i, j), (i2, j2), np.array([tidx[p + x + s] for x in src], dtype=np.intp)))
    return tuple(plan)


def embed(e: AlgebraElement, J, cap=None) -> AlgebraElement:
    """The unital embedding of ``H^I`` into ``H^J`` for ``J`` containing ``I``.

    A matrix unit ``E_{x,y}`` goes to the sum of ``E_{pxs, pys}`` over every
    prefix ``p`` and suffix ``s`` that extend both paths to the window ``J``.
    """
    J = J if isinstance(J, Interval) else Interval(*J)
    I = e.window
    if not J.contains(I):
        raise PreconditionError(f"target window {J.as_tuple()} does not contain {I.as_tuple()}")
    if J == I:
        return e
    _check_size(e.T, J.width, cap)
    dtype = np.result_type(*e.blocks.values()) if e.blocks else float
    out = AlgebraElement.zero(e.T, J, cap, dtype=dtype)
    for src, tgt, idx in _embedding_plan(e.T, I.width, I.a - J.a, J.b - I.b):
        out.blocks[tgt][np.ix_(idx, idx)] += e.blocks[src]
    return out


def common_window(*elements) -> Interval:
    J = elements[0].window
    for x in elements[1:]:
        J = J.hull(x.window)
    return J


def to_common(*elements, cap=None) -> list[AlgebraElement]:
    J = common_window(*elements)
    return [embed(x, J, cap) for x in elements]


def shift_auto(e: AlgebraElement, n: int = 1) -> AlgebraElement:
    """``alpha**n``: identical block data with the window moved by ``-n``."""
    return AlgebraElement(e.T, e.window.shift(-n), {k: B.copy() for k, B in e.blocks.items()})


def trace(e: AlgebraElement, pd: PerronData) -> float:
    """Unique trace: diagonal coefficients weighted by cylinder measures."""
    L = e.window.width
    scale = pd.lam ** (-L)
    return float(sum(scale * pd.w[i] * pd.v[j] * np.trace(B).real for (i, j), B in e.blocks.items()))


def clopen_to_projection(C: ClopenSet, cap=None) -> AlgebraElement:
    """Diagonal projection of the characteristic function of ``C``."""
    e = AlgebraElement.zero(C.T, C.window, cap)
    g = build_graph(C.T)
    L = C.window.width
    for x in C.members:
        i, j = int(g.source[x[0]]), int(g.target[x[-1]])
        k = block_index(C.T, L, i, j)[x]
        e.blocks[(i, j)][k, k] = 1.0
    return e


def op_norm(e: AlgebraElement) -> float:
    """C*-norm of a direct sum: the largest singular value over all blocks."""
    return max((float(np.linalg.norm(B, 2)) for B in e.blocks.values() if B.size), default=0.0)


def diagonal_support(e: AlgebraElement) -> dict:
    """Per-block diagonal positions of a 0/1 diagonal projection."""
    out = {}
    for k, B in e.blocks.items():
        d = np.diag(B)
        if np.abs(B - np.diag(d)).max(initial=0.0) != 0 or not np.all((d == 0) | (d == 1)):
            raise PreconditionError(f"block {k} is not a diagonal 0/1 projection")
        out[k] = np.flatnonzero(d == 1)
    return out


def pairing_isometry(e: AlgebraElement, f: AlgebraElement, mode: str = "equal") -> AlgebraElement:
    """0/1 partial isometry from diagonal ``e`` onto (a subprojection of) diagonal ``f``.

    The k-th basis path of ``e`` in a block is sent to the k-th basis path of
    ``f`` in the same block.  ``mode="equal"`` demands equal per-block counts;
    ``mode="sub"`` only ``count(e) <= count(f)``.
    """
    if mode not in ("equal", "sub"):
        raise InputError(f"unknown mode {mode!r}")
    e, f = to_common(e, f)
    se, sf = diagonal_support(e), diagonal_support(f)
    q = AlgebraElement.zero(e.T, e.window)
    for k in q.blocks:
        a, b = se[k], sf[k]
        if len(a) > len(b) or (mode == "equal" and len(a) != len(b)):
            raise PreconditionError(f"block {k}: domain has {len(a)} paths, range has {len(b)} ({mode} mode)")
        q.blocks[k][b[: len(a)], a] = 1.0
    return q


def commutator(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    x, y = to_common(x, y)
    return x @ y - y @ x


def sum_elements(items: Iterable[AlgebraElement]) -> AlgebraElement:
    items = list(items)
    items = to_common(*items)
    out = items[0]
    for x in items[1:]:
        out = out + x
    return out


# blockwise lifts of the dense perturbation routines -------------------------

def _blockwise(fn, *elements):
    elements = to_common(*elements)
    first = elements[0]
    return AlgebraElement(first.T, first.window,
                          {k: fn(*(x.blocks[k] for x in elements)) for k in first.blocks})


def _global_check(value, bound, what):
    if value >= bound:
        raise PreconditionError(f"{what} = {value:.6g} must be < {bound:.6g}")


def orthogonalize_projection(e, f):
    """Projection ``g`` orthogonal to ``e`` with ``||f - g|| <= 4 ||e f||``."""
    if isinstance(e, AlgebraElement):
        e, f = to_common(e, f)
        _global_check(op_norm(e @ f), 0.25, "||ef||")
        return _blockwise(_pt.orthogonalize_projection, e, f)
    return _pt.orthogonalize_projection(e, f)


def conjugating_unitary(e, f):
    """Unitary ``u`` with ``u* e u = f`` and ``||1 - u|| <= 4 ||e - f||``."""
    if isinstance(e, AlgebraElement):
        e, f = to_common(e, f)
        _global_check(op_norm(e - f), 0.5, "||e - f||")
        return _blockwise(_pt.conjugating_unitary, e, f)
    return _pt.conjugating_unitary(e, f)


def align_families(es, fs):
    """Unitary ``u`` with ``u* e_i u = f_i`` for each i, complements included."""
    if len(es) != len(fs):
        raise InputError(f"families have different lengths {len(es)} and {len(fs)}")
    if es and isinstance(es[0], AlgebraElement):
        allx = to_common(*es, *fs)
        n = len(es)
        es, fs = allx[:n], allx[n:]
        _global_check(max(op_norm(a - b) for a, b in zip(es, fs)), 1 / (2 * n), "max ||e_i - f_i||")
        return _blockwise(lambda *bs: _pt.align_families(bs[:n], bs[n:]), *es, *fs)
    return _pt.align_families(es, fs)


def snap_partial_isometry(p, e, f):
    """Partial isometry from ``e`` onto ``f`` within ``8 eps`` of ``p``."""
    if isinstance(p, AlgebraElement):
        p, e, f = to_common(p, e, f)
        eps = max(op_norm(p.adj @ p - e), op_norm(p @ p.adj - f))
        _global_check(eps, 0.5, "defect")
        return _blockwise(_pt.snap_partial_isometry, p, e, f)
    return _pt.snap_partial_isometry(p, e, f)


from . import perturbation as _pt  # noqa: E402
