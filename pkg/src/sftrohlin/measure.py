"""Perron-Frobenius data, the measure of maximal entropy, and clopen sets.

Clopen sets are stored in a common-window normal form: a window ``[a, b]``
and the set of full-window paths (edge-id tuples of length ``b - a + 1``)
they contain.  Membership questions are exact set operations; only measures
involve floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .config import DEFAULT_CONFIG
from .errors import ConvergenceError, InputError, NotPrimitiveError, PreconditionError, ResourceCapError
from .sft_core import (
    Interval,
    TransitionMatrix,
    all_paths,
    build_graph,
    edge_paths,
    is_primitive,
    matrix_power,
)


@dataclass(frozen=True)
class PerronData:
    lam: float
    v: np.ndarray
    w: np.ndarray
    residual: float
    iterations: int = 0

    @property
    def stationary(self) -> np.ndarray:
        return self.w * self.v

    def transition_probability(self, graph, edge: int) -> float:
        s, t = graph.source[edge], graph.target[edge]
        return self.v[t] / (self.lam * self.v[s])


def _power_iterate(A, tol, max_iter):
    x = np.ones(A.shape[0])
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = A @ x
        lam_new = y.sum() / x.sum()
        y /= y.sum()
        if np.abs(y - x).max() < tol and abs(lam_new - lam) <= tol * lam_new:
            return lam_new, y, it
        x, lam = y, lam_new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def perron_data(T, tol: float = 1e-15, max_iter: int = 200_000) -> PerronData:
    """Perron eigenvalue and positive eigenvectors normalized so ``w @ v == 1``."""
    T = TransitionMatrix.of(T)
    verdict = is_primitive(T)
    if not verdict:
        raise NotPrimitiveError(f"matrix is not primitive: {verdict.obstruction}")
    A = T.array(float)
    lam, v, it1 = _power_iterate(A, tol, max_iter)
    _, w, it2 = _power_iterate(A.T, tol, max_iter)
    # Rayleigh-style refinement of lambda from the converged vector
    lam = float((A @ v).sum() / v.sum())
    if lam <= 1.0:
        raise PreconditionError(f"Perron eigenvalue {lam} must exceed 1 (T = (1) is excluded)")
    w = w / (w @ v)
    resid = max(
        np.abs(A @ v - lam * v).max() / (lam * np.abs(v).max()),
        np.abs(w @ A - lam * w).max() / (lam * np.abs(w).max()),
    )
    return PerronData(lam, v, w, float(resid), it1 + it2)


@dataclass(frozen=True)
class Cylinder:
    path: tuple[int, ...]
    offset: int = 0

    def __post_init__(self):
        if len(self.path) < 1:
            raise InputError("a cylinder needs a path of length >= 1")
        object.__setattr__(self, "path", tuple(int(e) for e in self.path))


def path_measure(pd: PerronData, graph, path) -> float:
    return pd.lam ** (-len(path)) * pd.w[graph.source[path[0]]] * pd.v[graph.target[path[-1]]]


def cylinder_measure(pd: PerronData, T, c: Cylinder) -> float:
    g = build_graph(T)
    if not g.is_path(c.path):
        raise InputError(f"{c.path} is not a path")
    return float(path_measure(pd, g, c.path))


class ClopenSet:
    """Finite union of cylinders, normalized to a single window."""

    __slots__ = ("T", "window", "members")

    def __init__(self, T, window, members: Iterable = ()):
        self.T = TransitionMatrix.of(T)
        if not isinstance(window, Interval):
            window = Interval(*window)
        self.window = window
        members = frozenset(tuple(int(e) for e in m) for m in members)
        g = build_graph(self.T)
        L = window.width
        for m in members:
            if len(m) != L or not g.is_path(m):
                raise InputError(f"{m} is not a path of length {L}")
        self.members = members

    @classmethod
    def _trusted(cls, T, window, members):
        obj = cls.__new__(cls)
        obj.T, obj.window, obj.members = T, window, frozenset(members)
        return obj

    @classmethod
    def from_cylinder(cls, T, c: Cylinder) -> "ClopenSet":
        return cls(T, Interval(c.offset, c.offset + len(c.path) - 1), [c.path])

    @classmethod
    def full(cls, T, window, cap=None) -> "ClopenSet":
        T = TransitionMatrix.of(T)
        window = window if isinstance(window, Interval) else Interval(*window)
        return cls._trusted(T, window, all_paths(T, window.width, cap))

    @classmethod
    def empty(cls, T, window) -> "ClopenSet":
        window = window if isinstance(window, Interval) else Interval(*window)
        return cls._trusted(TransitionMatrix.of(T), window, ())

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def __repr__(self):
        return f"ClopenSet(window=[{self.window.a},{self.window.b}], {len(self.members)} paths)"

    def is_empty(self) -> bool:
        return not self.members

    def measure(self, pd: PerronData) -> float:
        g = build_graph(self.T)
        return float(sum(path_measure(pd, g, x) for x in self.members))

    def block_counts(self) -> np.ndarray:
        """Member counts per (initial, terminal) vertex pair, as Python ints."""
        g = build_graph(self.T)
        counts = np.zeros((self.T.r, self.T.r), dtype=object)
        counts[:, :] = 0
        for x in self.members:
            counts[g.source[x[0]], g.target[x[-1]]] += 1
        return counts

    def refine(self, J, cap: int | None = None) -> "ClopenSet":
        """Replace every member by all its extensions to the window ``J``."""
        J = J if isinstance(J, Interval) else Interval(*J)
        if not J.contains(self.window):
            raise PreconditionError(f"window {J.as_tuple()} does not contain {self.window.as_tuple()}")
        if J == self.window:
            return self
        cap = DEFAULT_CONFIG.max_paths if cap is None else cap
        T, g = self.T, build_graph(self.T)
        left, right = self.window.a - J.a, J.b - self.window.b
        Lp, Rp = matrix_power(T, left), matrix_power(T, right)
        counts = self.block_counts()
        required = int(sum(counts[i, j] * Lp[:, i].sum() * Rp[j, :].sum()
                           for i in range(T.r) for j in range(T.r)))
        if required > cap:
            raise ResourceCapError(f"refinement needs {required} paths, cap {cap}", required=required, cap=cap)
        prefixes = {
            v: [p for u in range(T.r) for p in (edge_paths(T, u, v, left, cap) if left else [()])
                if left or u == v]
            for v in range(T.r)
        }
        suffixes = {
            v: [s for u in range(T.r) for s in (edge_paths(T, v, u, right, cap) if right else [()])
                if right or u == v]
            for v in range(T.r)
        }
        out = set()
        for x in self.members:
            for p in prefixes[int(g.source[x[0]])]:
                for s in suffixes[int(g.target[x[-1]])]:
                    out.add(p + x + s)
        return ClopenSet._trusted(T, J, out)

    def _common(self, other: "ClopenSet"):
        if other.T != self.T:
            raise InputError("clopen sets over different matrices")
        J = self.window.hull(other.window)
        return self.refine(J), other.refine(J)

    def union(self, other):
        a, b = self._common(other)
        return ClopenSet._trusted(self.T, a.window, a.members | b.members)

    def intersection(self, other):
        a, b = self._common(other)
        return ClopenSet._trusted(self.T, a.window, a.members & b.members)

    def difference(self, other):
        a, b = self._common(other)
        return ClopenSet._trusted(self.T, a.window, a.members - b.members)

    def complement(self, cap=None):
        full = ClopenSet.full(self.T, self.window, cap)
        return ClopenSet._trusted(self.T, self.window, full.members - self.members)

    def shift_by(self, n: int) -> "ClopenSet":
        """``sigma**n`` of the set: same member paths, window moved by ``-n``."""
        return ClopenSet._trusted(self.T, self.window.shift(-n), self.members)

    def isdisjoint(self, other) -> bool:
        return self.intersection(other).is_empty()

    def __or__(self, other):
        return self.union(other)

    def __and__(self, other):
        return self.intersection(other)

    def __sub__(self, other):
        return self.difference(other)

    def __eq__(self, other):
        if not isinstance(other, ClopenSet):
            return NotImplemented
        if other.T != self.T:
            return False
        a, b = self._common(other)
        return a.members == b.members

    __hash__ = None

    def to_json(self) -> dict:
        return {"window": [self.window.a, self.window.b], "paths": [list(p) for p in sorted(self.members)]}

    @classmethod
    def from_json(cls, T, obj) -> "ClopenSet":
        try:
            return cls(T, Interval(*obj["window"]), obj["paths"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed clopen set JSON: {exc}") from None
