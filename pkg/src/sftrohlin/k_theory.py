"""K_0 of the shift's AF algebra in its matrix picture.

A class at window ``[a, b]`` is an ``r x r`` rational matrix ``M``; the class
of a minimal projection ``E_{u,u}`` is the elementary matrix at
``(initial(u), terminal(u))``.  Moving to a larger window ``[c, d]`` sends
``M`` to ``T^(a-c) M T^(d-b)``, and the unit at ``[a, b]`` is ``T^(b-a+1)``.
Every order and equality question here is answered exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from .config import DEFAULT_CONFIG, RunConfig
from .errors import InputError, ResourceCapError, VerificationError
from .measure import ClopenSet, PerronData
from .numberfield import perron_field
from .sft_core import Interval, TransitionMatrix, matrix_power


def _as_rational(M, r: int) -> np.ndarray:
    arr = np.empty((r, r), dtype=object)
    try:
        for i in range(r):
            for j in range(r):
                arr[i, j] = Fraction(M[i][j])
    except (IndexError, TypeError, ValueError) as exc:
        raise InputError(f"class representative must be an {r}x{r} rational matrix: {exc}") from None
    return arr


class K0Class:
    """Class ``[M]`` at a window; arithmetic pushes operands to a common window."""

    __slots__ = ("T", "window", "rep")

    def __init__(self, T, window, rep):
        self.T = TransitionMatrix.of(T)
        self.window = window if isinstance(window, Interval) else Interval(*window)
        self.rep = _as_rational(rep, self.T.r)

    @classmethod
    def zero(cls, T, window=(0, 0)):
        T = TransitionMatrix.of(T)
        return cls(T, window, [[0] * T.r for _ in range(T.r)])

    @classmethod
    def unit(cls, T, window):
        T = TransitionMatrix.of(T)
        window = window if isinstance(window, Interval) else Interval(*window)
        return cls(T, window, matrix_power(T, window.width))

    def push(self, J) -> "K0Class":
        J = J if isinstance(J, Interval) else Interval(*J)
        if not J.contains(self.window):
            raise InputError(f"window {J.as_tuple()} does not contain {self.window.as_tuple()}")
        left = matrix_power(self.T, self.window.a - J.a)
        right = matrix_power(self.T, J.b - self.window.b)
        return K0Class(self.T, J, left.dot(self.rep).dot(right))

    def _common(self, other: "K0Class"):
        if other.T != self.T:
            raise InputError("classes over different matrices")
        J = self.window.hull(other.window)
        return self.push(J), other.push(J)

    def __add__(self, other):
        a, b = self._common(other)
        return K0Class(self.T, a.window, a.rep + b.rep)

    def __sub__(self, other):
        a, b = self._common(other)
        return K0Class(self.T, a.window, a.rep - b.rep)

    def __neg__(self):
        return K0Class(self.T, self.window, -self.rep)

    def __mul__(self, n):
        if not isinstance(n, (int, Fraction)):
            return NotImplemented
        return K0Class(self.T, self.window, self.rep * Fraction(n))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, K0Class):
            return NotImplemented
        return classes_equal(self, other)

    __hash__ = None

    def integer_rep(self) -> bool:
        return all(x.denominator == 1 for x in self.rep.ravel())

    def __repr__(self):
        rows = ";".join(",".join(str(x) for x in row) for row in self.rep)
        return f"K0Class(window=[{self.window.a},{self.window.b}], rep={rows})"

    def to_json(self) -> dict:
        return {
            "window": [self.window.a, self.window.b],
            "rep": [[[x.numerator, x.denominator] for x in row] for row in self.rep],
        }

    @classmethod
    def from_json(cls, T, obj) -> "K0Class":
        try:
            rep = [[Fraction(n, d) for n, d in row] for row in obj["rep"]]
            return cls(T, Interval(*obj["window"]), rep)
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise InputError(f"malformed class JSON: {exc}") from None


def class_of_clopen(C: ClopenSet) -> K0Class:
    counts = C.block_counts()
    return K0Class(C.T, C.window, counts)


def _stable_zero(T: TransitionMatrix, M) -> bool:
    P = matrix_power(T, T.r)
    return not np.any(P.dot(M).dot(P) != 0)


def classes_equal(g1: K0Class, g2: K0Class) -> bool:
    a, b = g1._common(g2)
    return _stable_zero(a.T, a.rep - b.rep)


def alpha_star(g: K0Class, n: int = 1) -> K0Class:
    return K0Class(g.T, g.window.shift(-n), g.rep)


def is_alpha_fixed(g: K0Class) -> bool:
    return classes_equal(g, alpha_star(g))


class Order(enum.Enum):
    ZERO = "zero"
    POSITIVE = "positive"
    NEGATIVE = "negative"
    INFINITESIMAL = "infinitesimal"


@dataclass(frozen=True)
class OrderVerdict:
    order: Order
    method: str  # "stabilization", "certificate", "number-field"
    power: int | None = None  # n with T^n M T^n entrywise of one sign

    @property
    def positive(self) -> bool:
        return self.order is Order.POSITIVE

    def to_json(self) -> dict:
        return {"order": self.order.value, "method": self.method, "power": self.power}


def exact_pairing_sign(g: K0Class) -> int:
    """Sign of ``w M v`` for the Perron vectors, computed in the Perron field."""
    return perron_field(g.T).normalized_sign(g.rep.tolist())


def exact_infinitesimal_test(g: K0Class) -> bool:
    """``w M v == 0`` exactly.  The zero class passes vacuously."""
    return exact_pairing_sign(g) == 0


def is_positive(g: K0Class, config: RunConfig | None = None) -> OrderVerdict:
    """Exact order verdict.

    Order of attempts: zero test by stabilization, then an entrywise sign
    certificate ``T^n M T^n`` for ``n <= max_certificate_power``, then the
    sign of ``w M v`` in the Perron field.
    """
    config = config or DEFAULT_CONFIG
    T, M = g.T, g.rep
    if _stable_zero(T, M):
        return OrderVerdict(Order.ZERO, "stabilization")
    A = T.array()
    cur = M
    for n in range(config.max_certificate_power + 1):
        if n:
            cur = A.dot(cur).dot(A)
        nonneg = all(x >= 0 for x in cur.ravel())
        nonpos = all(x <= 0 for x in cur.ravel())
        if nonneg and not nonpos:
            return OrderVerdict(Order.POSITIVE, "certificate", n)
        if nonpos and not nonneg:
            return OrderVerdict(Order.NEGATIVE, "certificate", n)
    s = exact_pairing_sign(g)
    if s == 0:
        return OrderVerdict(Order.INFINITESIMAL, "number-field")
    return OrderVerdict(Order.POSITIVE if s > 0 else Order.NEGATIVE, "number-field")


def less_than(g1: K0Class, g2: K0Class, config: RunConfig | None = None) -> bool:
    """Strict order ``g1 < g2``."""
    return is_positive(g2 - g1, config).positive


def trace_of_class(g: K0Class, pd: PerronData) -> float:
    M = np.array([[float(x) for x in row] for row in g.rep])
    return float(pd.lam ** (-g.window.width) * (pd.w @ M @ pd.v))


def eventual_rank(S) -> int:
    """Rank of ``S^s`` over the rationals, ``s`` the size of ``S``."""
    S = TransitionMatrix.of(S) if not isinstance(S, sympy.Matrix) else S
    if isinstance(S, TransitionMatrix):
        S = sympy.Matrix(S.entries)
    return int((S ** S.shape[0]).rank())


def perron_degree(T) -> int:
    return perron_field(TransitionMatrix.of(T)).degree


def infinitesimal_rank(T) -> int:
    T = TransitionMatrix.of(T)
    return eventual_rank(T) ** 2 - perron_degree(T)


def small_fixed_class(T, n: int, config: RunConfig | None = None) -> K0Class:
    """Identity matrix at ``[1, k]`` with ``k`` least such that ``n g < [1]``."""
    config = config or DEFAULT_CONFIG
    T = TransitionMatrix.of(T)
    if n < 1:
        raise InputError("n must be a positive integer")
    eye = [[1 if i == j else 0 for j in range(T.r)] for i in range(T.r)]
    lam = float(sympy.N(perron_field(T).root, 30))
    for k in range(1, config.max_window + 2):
        # lambda^k <= n (1 - slack) cannot beat n; skip the exact test
        if lam ** k < n * (1 - 1e-9):
            continue
        g = K0Class(T, Interval(1, k), eye)
        if less_than(n * g, K0Class.unit(T, g.window), config):
            return g
    raise ResourceCapError(f"no window [1, k] with k - 1 <= {config.max_window} gives n g < [1] for n = {n}",
                           required=None, cap=config.max_window)


@dataclass(frozen=True)
class DenseFixedData:
    m: int
    h: K0Class
    N: int
    g: K0Class
    edge_case: str | None  # set when [1] - (N+1) h is zero or infinitesimal

    def to_json(self) -> dict:
        return {"m": self.m, "h": self.h.to_json(), "N": self.N, "g": self.g.to_json(),
                "edge_case": self.edge_case}


def dense_fixed_data(T, m: int, config: RunConfig | None = None) -> DenseFixedData:
    config = config or DEFAULT_CONFIG
    T = TransitionMatrix.of(T)
    if m < 1:
        raise InputError("m must be a positive integer")
    h = small_fixed_class(T, m * (m + 1), config)
    one = K0Class.unit(T, h.window)
    N = m * (m + 1)
    while True:
        v = is_positive(one - (N + 1) * h, config)
        if not v.positive:
            break
        N += 1
    edge = None
    if v.order is Order.ZERO:
        edge = "[1] = (N+1) h"
    elif v.order is Order.INFINITESIMAL:
        edge = "[1] - (N+1) h is infinitesimal"
    g = (N // m) * h
    if not (less_than(m * g, one, config) and less_than(one, (m + 1) * g, config)):
        raise VerificationError(f"m g < [1] < (m+1) g fails for m = {m}, N = {N}")
    return DenseFixedData(m, h, N, g, edge)


def dense_fixed_class(T, m: int, config: RunConfig | None = None) -> K0Class:
    """alpha_*-fixed class ``g`` with ``m g < [1] < (m+1) g``."""
    return dense_fixed_data(T, m, config).g
