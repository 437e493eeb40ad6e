"""Exact arithmetic in the field generated by the Perron eigenvalue.

Elements are rational polynomials in ``x`` reduced modulo the minimal
polynomial of ``lambda_T``.  Perron eigenvectors are taken from a nonzero
column (and row) of the adjugate of ``x I - T``, so they have entries in this
field without any floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
import sympy

from .errors import DegeneracyError, NotPrimitiveError
from .sft_core import TransitionMatrix, is_primitive

X = sympy.Symbol("x")
MAX_DEGREE = 12


@dataclass(frozen=True)
class PerronField:
    T: TransitionMatrix
    minpoly: sympy.Poly
    root: sympy.Expr  # exact CRootOf of the minimal polynomial
    v: tuple  # right eigenvector, entries are Polys reduced mod minpoly
    w: tuple  # left eigenvector

    @property
    def degree(self) -> int:
        return self.minpoly.degree()

    def reduce(self, p: sympy.Poly) -> sympy.Poly:
        return p.rem(self.minpoly)

    def evaluate(self, p: sympy.Poly, digits: int = 50):
        """Value of ``p(lambda)`` as an mpmath float with ``digits`` significant digits."""
        with mpmath.workdps(digits + 10):
            lam = mpmath.mpf(str(sympy.N(self.root, digits + 10)))
            return mpmath.polyval([mpmath.mpf(int(c.p)) / int(c.q) for c in p.all_coeffs()], lam)

    def sign(self, p: sympy.Poly) -> int:
        """Sign of ``p(lambda)``, exact: zero only if ``p`` vanishes in the field."""
        p = self.reduce(p)
        if p.is_zero:
            return 0
        digits = 50
        while digits <= 3200:
            val = self.evaluate(p, digits)
            bound = sum(abs(float(c)) for c in p.all_coeffs()) * mpmath.mpf(10) ** (-(digits - 5))
            if abs(val) > bound * max(1, float(sympy.N(self.root)) ** p.degree()):
                return 1 if val > 0 else -1
            digits *= 2
        raise DegeneracyError("could not separate a nonzero field element from 0")

    def pairing(self, M) -> sympy.Poly:
        """``w M v`` reduced in the field; ``M`` is a matrix of rationals."""
        r = self.T.r
        acc = sympy.Poly(0, X, domain="QQ")
        for i in range(r):
            for j in range(r):
                if M[i][j] != 0:
                    acc += self.w[i] * self.v[j] * sympy.Rational(M[i][j])
        return self.reduce(acc)

    def normalized_sign(self, M) -> int:
        """Sign of ``w M v`` for the positive Perron vectors."""
        s = self.sign(self.pairing(M))
        if s == 0:
            return 0
        return s * self._wv_sign

    @property
    def _wv_sign(self) -> int:
        r = self.T.r
        one = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
        return self.sign(self.pairing(one))


def _factor_with_perron_root(charpoly: sympy.Poly):
    factors = [f for f, _ in charpoly.factor_list()[1]]
    best, best_root = None, None
    for f in factors:
        roots = f.real_roots()
        if not roots:
            continue
        top = max(roots)
        if best_root is None or top > best_root:
            best, best_root = f, top
    return best, best_root


def perron_field(T) -> PerronField:
    """Minimal polynomial of the Perron eigenvalue and eigenvectors over ``Q(lambda)``."""
    return _perron_field(TransitionMatrix.of(T))


@lru_cache(maxsize=64)
def _perron_field(T: TransitionMatrix) -> PerronField:
    if not is_primitive(T):
        raise NotPrimitiveError("Perron field requires a primitive matrix")
    if T.r > MAX_DEGREE:
        raise DegeneracyError(f"matrix size {T.r} exceeds the supported degree {MAX_DEGREE}")
    S = sympy.Matrix(T.entries)
    xI = X * sympy.eye(T.r) - S
    charpoly = sympy.Poly(xI.det(), X, domain="QQ")
    minpoly, root = _factor_with_perron_root(charpoly)
    if minpoly is None:
        raise DegeneracyError("characteristic polynomial has no real root")
    minpoly = minpoly.monic()
    adj = xI.adjugate()
    polys = [[sympy.Poly(adj[i, j], X, domain="QQ").rem(minpoly) for j in range(T.r)] for i in range(T.r)]
    # adj(lambda I - T) has rank one: columns are right, rows are left eigenvectors
    col = next(j for j in range(T.r) if any(not polys[i][j].is_zero for i in range(T.r)))
    row = next(i for i in range(T.r) if any(not polys[i][j].is_zero for j in range(T.r)))
    v = tuple(polys[i][col] for i in range(T.r))
    w = tuple(polys[row][j] for j in range(T.r))
    return PerronField(T, minpoly, root, v, w)
