"""Stacks of projections with the partial isometries ``p`` and ``q``.

Concrete stacks come from a tower: levels are clopen sets and ``p``, ``q``
are path pairings (0/1 partial isometries mapping basis paths to basis
paths in the same block), so every relation is checked by set equality.
Model stacks live in a :class:`StackModel` as dense matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from ..af_algebra import AlgebraElement, block_index, clopen_to_projection, sum_elements
from ..config import DEFAULT_CONFIG, RunConfig
from ..errors import InputError, PreconditionError, ResourceCapError, VerificationError
from ..k_theory import class_of_clopen, less_than
from ..measure import ClopenSet, perron_data
from ..perturbation import norm
from ..sft_core import Interval, TransitionMatrix, build_graph, edge_paths
from .model import StackModel, as_dense
from .tower import Tower, build_tower, select_subclopen_with_class


@dataclass(frozen=True)
class Pairing:
    """Partial isometry sending each domain path to its partner path."""

    T: TransitionMatrix
    window: Interval
    mapping: dict  # domain path -> range path

    def domain(self) -> ClopenSet:
        return ClopenSet._trusted(self.T, self.window, self.mapping.keys())

    def range(self) -> ClopenSet:
        return ClopenSet._trusted(self.T, self.window, self.mapping.values())

    @property
    def adj(self) -> "Pairing":
        return Pairing(self.T, self.window, {y: x for x, y in self.mapping.items()})

    def shift_by(self, n: int) -> "Pairing":
        """``alpha**n``: same pairs, window moved by ``-n``."""
        return Pairing(self.T, self.window.shift(-n), self.mapping)

    def refine(self, J: Interval) -> "Pairing":
        """Image under the window embedding: ``x -> y`` becomes ``pxs -> pys``."""
        if J == self.window:
            return self
        if not J.contains(self.window):
            raise PreconditionError(f"window {J.as_tuple()} does not contain {self.window.as_tuple()}")
        g = build_graph(self.T)
        left, right = self.window.a - J.a, J.b - self.window.b
        out = {}
        for x, y in self.mapping.items():
            i, j = g.initial(x), g.terminal(x)
            pres = [p for u in range(self.T.r) for p in (edge_paths(self.T, u, i, left) if left else [()])
                    if left or u == i]
            sufs = [s for u in range(self.T.r) for s in (edge_paths(self.T, j, u, right) if right else [()])
                    if right or u == j]
            for p in pres:
                for s in sufs:
                    out[p + x + s] = p + y + s
        return Pairing(self.T, J, out)

    def to_element(self, cap=None) -> AlgebraElement:
        e = AlgebraElement.zero(self.T, self.window, cap)
        g = build_graph(self.T)
        L = self.window.width
        for x, y in self.mapping.items():
            key = (g.initial(x), g.terminal(x))
            idx = block_index(self.T, L, *key)
            e.blocks[key][idx[y], idx[x]] = 1.0
        return e

    def to_json(self) -> dict:
        return {"window": [self.window.a, self.window.b],
                "pairs": [[list(x), list(y)] for x, y in sorted(self.mapping.items())]}


def matching_window(A: ClopenSet, B: ClopenSet, max_window: int) -> Interval:
    """Least extension ``[a - s1, b + s2]`` of the hull where both sets have equal block counts."""
    J0 = A.window.hull(B.window)
    ca, cb = class_of_clopen(A).push(J0), class_of_clopen(B).push(J0)
    for total in range(max_window - (J0.width - 1) + 1):
        for s1 in range(total + 1):
            J = Interval(J0.a - s1, J0.b + total - s1)
            if np.array_equal(ca.push(J).rep, cb.push(J).rep):
                return J
    raise ResourceCapError(f"block counts never match within window length {max_window}",
                           required=None, cap=max_window)


def pair_sets(A: ClopenSet, B: ClopenSet, config: RunConfig | None = None,
              max_window: int | None = None) -> Pairing:
    """Lexicographic pairing of ``A`` onto ``B`` at their matching window."""
    config = config or DEFAULT_CONFIG
    J = matching_window(A, B, config.max_window if max_window is None else max_window)
    A, B = A.refine(J, config.max_paths), B.refine(J, config.max_paths)
    g = build_graph(A.T)

    def by_block(S):
        out = {}
        for x in sorted(S.members):
            out.setdefault((g.initial(x), g.terminal(x)), []).append(x)
        return out

    ba, bb = by_block(A), by_block(B)
    mapping = {}
    for key, xs in ba.items():
        ys = bb.get(key, [])
        if len(xs) != len(ys):
            raise VerificationError(f"block {key}: {len(xs)} domain paths but {len(ys)} range paths")
        mapping.update(zip(xs, ys))
    return Pairing(A.T, J, mapping)


@dataclass
class StackData:
    """Levels ``e_0..e_{L-1}``, ``p`` from the complement into ``e_0``, ``q`` from ``e_0`` onto ``e_1``."""

    e: list
    p: object
    q: object
    model: StackModel | None = None
    tower: Tower | None = None
    info: dict = field(default_factory=dict)

    @property
    def length(self) -> int:
        return len(self.e)

    @property
    def is_model(self) -> bool:
        return self.model is not None

    def alpha(self, x, n: int = 1):
        if self.is_model:
            return self.model.alpha(x, n)
        return x.shift_by(n)

    def complement(self):
        if self.is_model:
            return self.model.complement()
        return self.p.domain()

    def dense(self, cap=None) -> dict:
        """Concrete data as algebra elements at one common window."""
        if self.is_model:
            raise PreconditionError("model stacks are already dense")
        J = reduce(Interval.hull, [c.window for c in self.e] + [self.p.window, self.q.window])
        return {
            "e": [clopen_to_projection(c.refine(J, cap), cap) for c in self.e],
            "p": self.p.refine(J).to_element(cap),
            "q": self.q.refine(J).to_element(cap),
            "window": J,
        }

    def to_json(self) -> dict:
        if self.is_model:
            return {"model": {"length": self.model.length, "level_dim": self.model.level_dim,
                              "complement_dim": self.model.complement_dim, "cyclic": self.model.cyclic},
                    **self.info}
        return {"levels": [c.to_json() for c in self.e], "p": self.p.to_json(), "q": self.q.to_json(),
                **self.info}


def verify_stack(sd: StackData) -> dict:
    """Exact checks of the stack relations; raises :class:`VerificationError`."""
    L = sd.length
    if sd.is_model:
        e, p, q = sd.e, sd.p, sd.q
        one = sd.model.identity()
        total = sum(e)
        pp = p @ p.T

        def nm(x):
            return norm(as_dense(x))

        # projections are mutually orthogonal iff their sum is a projection
        checks = {
            "orthogonal": nm(total @ total - total),
            "advance": max((nm(sd.alpha(e[i]) - e[i + 1]) for i in range(L - 1)), default=0.0),
            "q*q=e0": nm(q.T @ q - e[0]),
            "qq*=e1": nm(q @ q.T - e[1 % L]),
            "p*p=1-sum": nm(p.T @ p - (one - total)),
            "pp*<=e0": nm(e[0] @ pp - pp),
        }
        bad = {k: v for k, v in checks.items() if v > 1e-9}
        if bad or not pp.trace() < e[0].trace():
            raise VerificationError(f"stack relations fail: {bad or 'pp* = e0'}")
        return checks
    levels = sd.e
    for i in range(L):
        for j in range(i + 1, L):
            if not levels[i].isdisjoint(levels[j]):
                raise VerificationError(f"levels {i} and {j} intersect")
    for i in range(L - 1):
        if not levels[i].shift_by(1) == levels[i + 1]:
            raise VerificationError(f"alpha(e_{i}) != e_{i + 1}")
    if not (sd.q.domain() == levels[0] and sd.q.range() == levels[1 % L]):
        raise VerificationError("q*q = e_0 or qq* = e_1 fails")
    J = reduce(Interval.hull, [c.window for c in levels])
    rest = ClopenSet.full(levels[0].T, J)
    for c in levels:
        rest = rest - c
    if not sd.p.domain() == rest:
        raise VerificationError("p*p != 1 - sum e_i")
    rng = sd.p.range()
    if not (rng - levels[0]).is_empty() or rng == levels[0]:
        raise VerificationError("pp* is not a proper subprojection of e_0")
    return {"orthogonal": 0, "advance": 0, "q*q=e0": 0, "qq*=e1": 0, "p*p=1-sum": 0, "pp*<e0": 0}


STACK_WINDOW_SLACK = 4


def stack_from_tower(tw: Tower, L: int, config: RunConfig | None = None) -> StackData:
    """Stack ``e_i = phi(chi of s^i C)`` for ``i < L`` with pairings ``p`` and ``q``.

    The levels are translates of the base, so their windows span ``L - 1``
    more than the cap allows for a single set; pairings get that much plus
    ``STACK_WINDOW_SLACK``.
    """
    config = config or DEFAULT_CONFIG
    if L < 1:
        raise InputError("stack length must be >= 1")
    if tw.height != L:
        tw = build_tower(tw.T, L, config)
    C = tw.base
    budget = config.max_window + L - 1 + STACK_WINDOW_SLACK
    levels = [C.shift_by(i) for i in range(L)]
    q = pair_sets(levels[0], levels[1 % L], config, budget)
    J = reduce(Interval.hull, [c.window for c in levels])
    rest = ClopenSet.full(C.T, J, config.max_paths)
    for c in levels:
        rest = rest - c
    target = class_of_clopen(rest)
    if not less_than(target, class_of_clopen(C), config):
        raise VerificationError("[1 - sum e_i] < [e_0] fails")
    Ep = select_subclopen_with_class(C, target, config, budget)
    p = pair_sets(rest, Ep, config, budget)
    sd = StackData(levels, p, q, tower=tw, info={"length": L, "window": list(J.as_tuple())})
    sd.info["checks"] = verify_stack(sd)
    return sd


def model_stack(length: int, level_dim: int = 2, complement_dim: int = 1, cyclic: bool = False,
                max_dim: int | None = None) -> StackData:
    """Exact stack in the permutation model."""
    M = StackModel(length, level_dim, complement_dim, cyclic, max_dim)
    sd = StackData([M.level(i) for i in range(length)], M.p(), M.q(), model=M,
                   info={"length": length, "level_dim": level_dim, "complement_dim": complement_dim,
                         "cyclic": cyclic})
    if not cyclic:
        sd.info["checks"] = verify_stack(sd)
    return sd


def model_shape_from_tower(tw: Tower, max_level_dim: int = 3) -> tuple[int, int]:
    """``(level_dim, complement_dim)`` approximating the measure of the complement relative to a level."""
    from fractions import Fraction

    pd = perron_data(tw.T)
    mu = tw.base.measure(pd)
    ratio = Fraction((1 - tw.height * mu) / mu).limit_denominator(max_level_dim)
    c, D = ratio.numerator, ratio.denominator
    if c < 1:
        c, D = 1, max_level_dim
    if c >= D:
        c, D = max_level_dim - 1, max_level_dim
    return D, c


def collapse_stack(fs: Sequence, m: int) -> list:
    """``e_j = sum_i f_{im+j}``: a height-``m`` stack from one of height ``nm``."""
    if m < 1:
        raise InputError("m must be >= 1")
    if len(fs) % m:
        raise InputError(f"stack length {len(fs)} is not divisible by {m}")
    n = len(fs) // m
    out = []
    for j in range(m):
        parts = [fs[i * m + j] for i in range(n)]
        if isinstance(parts[0], ClopenSet):
            out.append(reduce(ClopenSet.union, parts))
        elif isinstance(parts[0], AlgebraElement):
            out.append(sum_elements(parts))
        else:
            out.append(sum(parts[1:], parts[0].copy()))  # dense or sparse matrices
    return out
