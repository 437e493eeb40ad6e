"""Approximate cyclic stack of height ``m`` from an exact stack of height ``(l-1)(m+2)m``.

Within each 2-dimensional block spanned by levels ``a = im + j`` and
``b = ((m+1)(l-1) + i)m + j`` the projection ``f_j`` picks the unit vector
``(sqrt((i+1)/l), sqrt((l-1-i)/l))``; levels in between belong to ``f_j``
whole.  The orthogonal vector in each block together with the complement of
the stack is moved into ``f_0`` by ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, PreconditionError, VerificationError
from ..perturbation import align_families, norm
from .model import as_dense
from .stack import StackData

UNIT_LAW_TOL = 1e-10
IDENTITY_TOL = 1e-9


def cyclic_stack_length(m: int, ell: int) -> int:
    return (ell - 1) * (m + 2) * m


class MatrixUnits:
    """``q_{i,j}``, the partial isometry from ``e_j`` onto ``e_i``, for a stack advanced by ``beta``.

    ``q_{0,j}`` is the chain ``beta^0(q)* beta^1(q)* ... beta^(j-1)(q)*`` and
    ``q_{i,j} = q_{0,i}* q_{0,j}``, which equals the chain from ``j`` down to
    ``i`` whenever ``beta`` advances the levels exactly.
    """

    def __init__(self, e0: np.ndarray, q: np.ndarray, beta, length: int):
        self._row = [e0]
        self._gens = []
        g = q
        for _ in range(length - 1):
            self._gens.append(g)
            self._row.append(self._row[-1] @ g.conj().T)
            g = beta(g)
        self.length = length

    def __call__(self, i: int, j: int) -> np.ndarray:
        if not (0 <= i < self.length and 0 <= j < self.length):
            raise InputError(f"matrix unit index ({i}, {j}) outside 0..{self.length - 1}")
        return self._row[i].conj().T @ self._row[j]

    def chain(self, i: int, j: int) -> np.ndarray:
        """Literal product of generators, for cross-checking ``__call__``."""
        if i == j:
            return self(i, i)
        lo, hi = min(i, j), max(i, j)
        x = self._gens[lo].conj().T
        for k in range(lo + 1, hi):
            x = x @ self._gens[k].conj().T
        return x if i < j else x.conj().T


@dataclass
class CyclicStack:
    f: list
    r: np.ndarray
    u: np.ndarray
    units: MatrixUnits
    m: int
    ell: int
    report: dict = field(default_factory=dict)

    def __iter__(self):
        # (f, r, report) unpacking
        return iter((self.f, self.r, self.report))


def _levels(m: int, ell: int, i: int, j: int) -> tuple[int, int]:
    return i * m + j, ((m + 1) * (ell - 1) + i) * m + j


def _middle(m: int, ell: int, i: int, j: int) -> int:
    return (ell - 1 + i * m + j) * m


def build_cyclic_stack(sd: StackData, m: int, ell: int, *, samples: int = 100, seed: int = 0) -> CyclicStack:
    """Cyclic stack ``f_0..f_{m-1}`` and ``r`` with ``rr* = 1 - sum f_j``, ``r*r <= f_0``.

    Fails with :class:`VerificationError` if an identity is off by more than
    1e-9, the matrix-unit law by more than 1e-10, or the cyclic defect
    exceeds ``2/sqrt(l)``.  Whether the defect meets ``1/l + 1/sqrt(l)`` is
    reported in ``report["within_sharp_bound"]``.
    """
    if m < 1:
        raise InputError("m must be >= 1")
    if ell <= 4:
        raise PreconditionError(f"need ell > 4, got {ell}")
    K = cyclic_stack_length(m, ell)
    if sd.length != K:
        raise PreconditionError(f"stack length {sd.length} != (ell-1)(m+2)m = {K}")
    if not sd.is_model:
        raise PreconditionError("cyclic stacks are built on dense model stacks")
    e, alpha = [as_dense(x) for x in sd.e], sd.alpha
    one = np.eye(e[0].shape[0])
    p, q = as_dense(sd.p), as_dense(sd.q)

    input_defect = max((norm(alpha(e[i]) - e[i + 1]) for i in range(K - 1)), default=0.0)
    w = align_families([alpha(e[i]) for i in range(K - 1)], e[1:]) if K > 1 else one
    u = w.conj().T
    trivial = np.array_equal(u, one)

    def beta(x):
        y = alpha(x)
        return y if trivial else u @ y @ w

    Q = MatrixUnits(e[0], q, beta, K)
    f = []
    for j in range(m):
        x = np.zeros_like(one, dtype=complex if np.iscomplexobj(u) else float)
        for i in range(ell - 1):
            a, b = _levels(m, ell, i, j)
            s, t = math.sqrt((i + 1) / ell), math.sqrt((ell - 1 - i) / ell)
            x = x + s * s * Q(a, a) + t * t * Q(b, b) + s * t * (Q(a, b) + Q(b, a))
        for i in range(ell - 1, (m + 1) * (ell - 1)):
            x = x + Q(i * m + j, i * m + j)
        f.append(x)

    # R maps 1 - sum f_j into f_0; r is its adjoint
    R = np.zeros_like(f[0], dtype=complex if np.iscomplexobj(p) or np.iscomplexobj(u) else float)
    for j in range(m):
        for i in range(ell - 1):
            a, b = _levels(m, ell, i, j)
            c = _middle(m, ell, i, j)
            R = R + math.sqrt((ell - 1 - i) / ell) * Q(c, a) - math.sqrt((i + 1) / ell) * Q(c, b)
    b0 = _levels(m, ell, 0, 0)[1]
    R = R + (math.sqrt(1 / ell) * e[0] + math.sqrt((ell - 1) / ell) * Q(b0, 0)) @ p
    r = R.conj().T

    cs = CyclicStack(f, r, u, Q, m, ell)
    cs.report = _measure(cs, sd, alpha, beta, one, input_defect, samples, seed)
    return cs


def _measure(cs, sd, alpha, beta, one, input_defect, samples, seed) -> dict:
    f, r, m, ell, Q = cs.f, cs.r, cs.m, cs.ell, cs.units
    K = Q.length
    total = sum(f)
    rr, rsr = r @ r.conj().T, r.conj().T @ r
    rng = np.random.default_rng(seed)
    unit_law = 0.0
    for _ in range(samples):
        i, j, k = (int(x) for x in rng.integers(0, K, size=3))
        jj = (j + 1 + int(rng.integers(0, K - 1))) % K if K > 1 else j
        unit_law = max(unit_law, norm(Q(i, j) @ Q(j, k) - Q(i, k)))
        if jj != j:
            unit_law = max(unit_law, norm(Q(i, j) @ Q(jj, k)))
    chain_check = max(norm(Q.chain(i, j) - Q(i, j))
                      for i, j in [(0, K - 1), (K - 1, 0), (1, K // 2), (K // 2, 1)] if K > 1) if K > 1 else 0.0
    measured = {
        "projection": max(max(norm(x @ x - x), norm(x - x.conj().T)) for x in f),
        "orthogonality": max((norm(f[i] @ f[j]) for i in range(m) for j in range(i + 1, m)), default=0.0),
        "advance": max((norm(alpha(f[j]) - f[j + 1]) for j in range(m - 1)), default=0.0),
        "advance_beta": max((norm(beta(f[j]) - f[j + 1]) for j in range(m - 1)), default=0.0),
        "cyclic_defect": norm(alpha(f[m - 1]) - f[0]),
        "cyclic_defect_beta": norm(beta(f[m - 1]) - f[0]),
        "rr*=1-sum f": norm(rr - (one - total)),
        "r*r projection": norm(rsr @ rsr - rsr),
        "r*r<=f0": norm(f[0] @ rsr - rsr),
        "unit_law": unit_law,
        "chain_vs_units": chain_check,
        "input_stack_defect": input_defect,
        "1-u": norm(one - cs.u),
    }
    bounds = {
        "sharp": 1 / ell + 1 / math.sqrt(ell),
        "coarse": 2 / math.sqrt(ell),
        "worst_case": math.sqrt(2 * ell - 1) / ell,
        "1-u": 8 * K * input_defect,
    }
    report = {"m": m, "ell": ell, "length": K, "aligning_unitary_is_identity": bool(np.array_equal(cs.u, one)),
              "measured": measured, "bounds": bounds,
              "within_sharp_bound": measured["cyclic_defect"] <= bounds["sharp"] + 1e-9}
    for key in ("projection", "orthogonality", "advance", "rr*=1-sum f", "r*r projection", "r*r<=f0"):
        if measured[key] > IDENTITY_TOL:
            raise VerificationError(f"cyclic stack identity {key!r} off by {measured[key]:.3g}", norm=measured[key])
    if unit_law > UNIT_LAW_TOL:
        raise VerificationError(f"matrix-unit law off by {unit_law:.3g}", norm=unit_law)
    if measured["cyclic_defect"] > bounds["coarse"] + 1e-9:
        raise VerificationError(f"cyclic defect {measured['cyclic_defect']:.6g} exceeds 2/sqrt(l)",
                                norm=measured["cyclic_defect"])
    return report
