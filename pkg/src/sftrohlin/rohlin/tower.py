"""Clopen towers whose K_0 class is a shift-fixed, order-dense element."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import DEFAULT_CONFIG, RunConfig
from ..errors import InfeasibleError, InputError, ResourceCapError, VerificationError
from ..k_theory import (
    K0Class,
    class_of_clopen,
    dense_fixed_data,
    is_alpha_fixed,
    is_positive,
    less_than,
)
from ..measure import ClopenSet, perron_data
from ..sft_core import Interval, TransitionMatrix, all_paths, build_graph, matrix_power


@dataclass
class Tower:
    base: ClopenSet
    height: int
    cls: K0Class
    seed: tuple
    N: int
    base_superset: ClopenSet
    trimmed: ClopenSet
    info: dict = field(default_factory=dict)

    @property
    def T(self) -> TransitionMatrix:
        return self.base.T

    def levels(self) -> list[ClopenSet]:
        return [self.base.shift_by(k) for k in range(self.height)]

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "seed": list(self.seed),
            "N": self.N,
            "base": self.base.to_json(),
            "class": self.cls.to_json(),
            "trimmed_paths": len(self.trimmed),
            **self.info,
        }


def verify_tower(tw: Tower, config: RunConfig | None = None) -> dict:
    """Re-check the three tower properties exactly; raises on failure."""
    config = config or DEFAULT_CONFIG
    levels = tw.levels()
    for i in range(len(levels)):
        for j in range(i + 1, len(levels)):
            if not levels[i].isdisjoint(levels[j]):
                raise VerificationError(f"levels {i} and {j} intersect")
    c = class_of_clopen(tw.base)
    if not is_alpha_fixed(c):
        raise VerificationError("tower class is not fixed by alpha_*")
    one = K0Class.unit(tw.T, c.window)
    v = is_positive(c - (one - tw.height * c), config)
    if not v.positive:
        raise VerificationError(f"[1] - m[C] < [C] fails: {v.order.value}")
    return {"disjoint": True, "alpha_fixed": True, "order": v.to_json()}


def select_subclopen_with_class(C: ClopenSet, target: K0Class, config: RunConfig | None = None,
                                max_window: int | None = None) -> ClopenSet:
    """Clopen ``E`` inside ``C`` with class exactly ``target``.

    Windows ``[a - s1, b + s2]`` are tried in order of ``s1 + s2``, then
    ``s1``, until the pushed target is an integer matrix between 0 and the
    pushed member counts of ``C``.  Per block the first members in path order
    are taken.  ``max_window`` overrides the configured bound on ``b - a``.
    """
    config = config or DEFAULT_CONFIG
    max_window = config.max_window if max_window is None else max_window
    if target.T != C.T:
        raise InputError("class and set over different matrices")
    T = C.T
    J0 = C.window.hull(target.window)
    R0 = target.push(J0).rep
    counts0 = class_of_clopen(C).push(J0).rep
    for total in range(max_window - (J0.width - 1) + 1):
        for s1 in range(total + 1):
            s2 = total - s1
            L, Rm = matrix_power(T, s1), matrix_power(T, s2)
            R = L.dot(R0).dot(Rm)
            if not (all(x.denominator == 1 for x in R.ravel()) and np.all(R >= 0)
                    and np.all(R <= L.dot(counts0).dot(Rm))):
                continue
            J = Interval(J0.a - s1, J0.b + s2)
            D = C.refine(J, config.max_paths)
            g = build_graph(T)
            need = {(i, j): int(R[i, j]) for i in range(T.r) for j in range(T.r)}
            chosen = []
            for x in sorted(D.members):
                key = (int(g.source[x[0]]), int(g.target[x[-1]]))
                if need[key] > 0:
                    chosen.append(x)
                    need[key] -= 1
            return ClopenSet._trusted(T, J, chosen)
    raise InfeasibleError(
        f"no subset with the requested class within window length {max_window}; "
        f"class rep at [{J0.a},{J0.b}]: {[[str(x) for x in row] for row in R0]}"
    )


def _first_occurrence_sets(paths: np.ndarray, x: tuple, m: int, N: int) -> np.ndarray:
    """Mask of paths whose first occurrence of ``x`` starts at ``k <= Nm-1`` with ``k = m-1 mod m``."""
    n = len(x)
    K = N * m
    windows = np.lib.stride_tricks.sliding_window_view(paths, n, axis=1)[:, :K, :]
    hits = np.all(windows == np.asarray(x), axis=2)
    any_hit = hits.any(axis=1)
    first = hits.argmax(axis=1)
    return any_hit & (first % m == m - 1)


def fixed_class_candidates(T, m: int, config: RunConfig | None = None):
    """Shift-fixed classes ``g`` with ``m g < [1] < (m+1) g``, as ``(g, source)`` pairs.

    The first is :func:`dense_fixed_data`'s ``g``.  The rest are
    ``j [I at [1, k]]`` for longer ``k`` with ``j`` least such that
    ``(m+1) g > [1]``, shortest window first; they ask less coverage of a
    tower.
    """
    config = config or DEFAULT_CONFIG
    T = TransitionMatrix.of(T)
    data = dense_fixed_data(T, m, config)
    yield data.g, {"rule": "dense_fixed", **data.to_json()}
    pd = perron_data(T)
    eye = [[1 if i == j else 0 for j in range(T.r)] for i in range(T.r)]
    extra = []
    k0 = data.h.window.b
    for k in range(k0 + 1, config.max_window + 2):
        h = K0Class(T, Interval(1, k), eye)
        one = K0Class.unit(T, h.window)
        j = max(1, int(pd.lam ** k / (m + 1)) - 1)
        while not less_than(one, (m + 1) * j * h, config):
            j += 1
        g = j * h
        if less_than(m * g, one, config) and less_than(g, data.g, config):
            extra.append((j * pd.lam ** (-k), k, g))
    for tr, k, g in sorted(extra, key=lambda t: t[1]):
        yield g, {"rule": "least_multiple", "k": k, "trace": tr}


def _class_trace(g: K0Class, pd) -> float:
    M = np.array([[float(x) for x in row] for row in g.rep])
    return float(pd.lam ** (-g.window.width) * (pd.w @ M @ pd.v))


def _search_tower(T, m, g, source, pd, paths_for, config):
    gr = build_graph(T)
    g_trace = _class_trace(g, pd)
    # W is the width b - a + 1 of the window [0, W - 1] that C' is read on
    for W in range(1, config.max_window + 2):
        paths = paths_for(W)
        if paths is None:
            return None
        measures = pd.lam ** (-W) * pd.w[gr.source[paths[:, 0]]] * pd.v[gr.target[paths[:, -1]]]
        window = Interval(0, W - 1)
        for n in range(1, W + 1):
            if (W + 1 - n) % m:
                continue
            N = (W + 1 - n) // m
            for x in all_paths(T, n, config.max_paths):
                # mu(C') <= N mu(x)
                if N * pd.lam ** (-n) * pd.w[gr.source[x[0]]] * pd.v[gr.target[x[-1]]] <= g_trace * (1 - 1e-9):
                    continue
                mask = _first_occurrence_sets(paths, x, m, N)
                if measures[mask].sum() <= g_trace * (1 - 1e-9):
                    continue
                Cp = ClopenSet._trusted(T, window, map(tuple, paths[mask].tolist()))
                cp = class_of_clopen(Cp)
                if not less_than(g, cp, config):
                    continue
                try:
                    E = select_subclopen_with_class(Cp, cp - g, config)
                except InfeasibleError:
                    continue
                C = Cp.refine(E.window, config.max_paths) - E
                tw = Tower(C, m, class_of_clopen(C), tuple(x), N, Cp, E,
                           info={"window_width": W, "fixed_class": source})
                if not tw.cls == g:
                    raise VerificationError("trimmed tower base does not have class g")
                tw.info["checks"] = verify_tower(tw, config)
                return tw
    return None


def build_tower(T, m: int, config: RunConfig | None = None) -> Tower:
    """Clopen ``C`` with ``C, sC, ..., s^(m-1)C`` disjoint, shift-fixed class, and ``[1] - m[C] < [C]``.

    For each candidate class ``g`` (see :func:`fixed_class_candidates`) a
    seed path ``x`` and count ``N`` are searched in order of window width,
    then ``|x|``, then ``x``.  The first-occurrence set ``C'`` is accepted
    once ``[C'] > g`` holds exactly and a subset with class ``[C'] - g`` can
    be removed within the window cap.
    """
    config = config or DEFAULT_CONFIG
    T = TransitionMatrix.of(T)
    if m < 1:
        raise InputError("tower height must be >= 1")
    pd = perron_data(T)
    cache = {}

    def paths_for(W):
        if W not in cache:
            try:
                cache[W] = np.array(all_paths(T, W, config.max_paths), dtype=np.int64)
            except ResourceCapError:
                cache[W] = None
        return cache[W]

    for g, source in fixed_class_candidates(T, m, config):
        tw = _search_tower(T, m, g, source, pd, paths_for, config)
        if tw is not None:
            return tw
    raise ResourceCapError(f"no tower of height {m} with windows of length <= {config.max_window}",
                           required=None, cap=config.max_window)
