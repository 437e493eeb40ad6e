"""Shift equivalence and strong shift equivalence certificates.

A lag-``l`` certificate for ``(U, V)`` is a pair of nonnegative integer
matrices with ``RS = U^l``, ``SR = V^l``, ``SU = VS`` and ``UR = RV``.
Searching is bounded: a negative answer only means that nothing exists
within the given lag and entry bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy

from .config import DEFAULT_CONFIG, RunConfig
from .errors import InputError, ResourceCapError, VerificationError
from .k_theory import eventual_rank
from .sft_core import TransitionMatrix, matrix_power

NONE_WITHIN_BOUNDS = "none within bounds"
# most points of a solution lattice enumerated per search stage
ENUMERATION_CAP = 2_000_000


def _int_matrix(X, name: str) -> np.ndarray:
    if isinstance(X, (TransitionMatrix, str)):
        X = TransitionMatrix.of(X).entries
    arr = np.array(X, dtype=object)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise InputError(f"{name} must be a matrix")
    try:
        arr = np.vectorize(lambda x: int(x) if int(x) == x else _raise(name), otypes=[object])(arr)
    except (TypeError, ValueError):
        raise InputError(f"{name} must have integer entries") from None
    if np.any(arr < 0):
        raise InputError(f"{name} must be nonnegative")
    return arr


def _raise(name):
    raise InputError(f"{name} must have integer entries")


def _square(X, name):
    A = _int_matrix(X, name)
    if A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be square")
    return A


def _mpow(A: np.ndarray, k: int) -> np.ndarray:
    out = np.identity(A.shape[0], dtype=object)
    for _ in range(k):
        out = out.dot(A)
    return out


@dataclass(frozen=True)
class SECertificate:
    R: tuple
    S: tuple
    lag: int

    @classmethod
    def of(cls, R, S, lag: int) -> "SECertificate":
        if not isinstance(lag, int) or lag < 1:
            raise InputError("lag must be a positive integer")
        R, S = _int_matrix(R, "R"), _int_matrix(S, "S")
        return cls(tuple(map(tuple, R.tolist())), tuple(map(tuple, S.tolist())), lag)

    def to_json(self) -> dict:
        return {"R": [list(r) for r in self.R], "S": [list(r) for r in self.S], "lag": self.lag}

    @classmethod
    def from_json(cls, obj) -> "SECertificate":
        try:
            return cls.of(obj["R"], obj["S"], obj["lag"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed certificate JSON: {exc}") from None


@dataclass
class SECheck:
    ok: bool
    residuals: dict

    def __bool__(self):
        return self.ok


def verify_se(U, V, cert: SECertificate) -> SECheck:
    """Check the four lag-``l`` equations exactly; residuals are max absolute entry differences."""
    U, V = _square(U, "U"), _square(V, "V")
    R, S = np.array(cert.R, dtype=object), np.array(cert.S, dtype=object)
    u, v = U.shape[0], V.shape[0]
    if R.shape != (u, v) or S.shape != (v, u):
        raise InputError(f"R must be {u}x{v} and S {v}x{u}; got {R.shape} and {S.shape}")

    def res(A, B):
        return int(np.max(np.abs(A - B))) if A.size else 0

    residuals = {
        "RS=U^l": res(R.dot(S), _mpow(U, cert.lag)),
        "SR=V^l": res(S.dot(R), _mpow(V, cert.lag)),
        "SU=VS": res(S.dot(U), V.dot(S)),
        "UR=RV": res(U.dot(R), R.dot(V)),
    }
    return SECheck(all(x == 0 for x in residuals.values()), residuals)


@dataclass
class ChainCheck:
    ok: bool
    failed_link: int | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def verify_sse_chain(U, V, chain) -> ChainCheck:
    """``chain`` is a list of ``(R_i, S_i)`` with ``R_i S_i = M_{i-1}``, ``S_i R_i = M_i``, ``M_0 = U``, ``M_k = V``."""
    M = _square(U, "U")
    target = _square(V, "V")
    for idx, (R, S) in enumerate(chain, start=1):
        R, S = _int_matrix(R, f"R_{idx}"), _int_matrix(S, f"S_{idx}")
        if R.shape[0] != M.shape[0] or R.shape[1] != S.shape[0] or S.shape[1] != M.shape[0]:
            return ChainCheck(False, idx, "shape mismatch")
        if not np.array_equal(R.dot(S), M):
            return ChainCheck(False, idx, f"R_{idx} S_{idx} != M_{idx - 1}")
        M = S.dot(R)
    if M.shape != target.shape or not np.array_equal(M, target):
        return ChainCheck(False, len(chain), "chain does not end at V")
    return ChainCheck(True)


@dataclass
class SESearchResult:
    certificate: SECertificate | None
    status: str
    lag_bound: int
    entry_bound: int
    checked: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.certificate is not None

    def to_json(self) -> dict:
        return {"status": self.status, "certificate": None if self.certificate is None else self.certificate.to_json(),
                "max_lag": self.lag_bound, "max_entry": self.entry_bound, "notes": list(self.notes)}


def _lattice_points(rows: list[list[Fraction]], rhs: list[Fraction], nvars: int, bound: int):
    """Integer solutions of ``rows x = rhs`` with ``0 <= x_i <= bound``, by enumerating free variables."""
    if rows:
        A = sympy.Matrix([[sympy.Rational(x) for x in row] + [sympy.Rational(b)] for row, b in zip(rows, rhs)])
        red, pivots = A.rref()
        if nvars in pivots:
            return
        pivot_rows = [(i, p) for i, p in enumerate(pivots)]
    else:
        red, pivots, pivot_rows = None, (), []
    free = [j for j in range(nvars) if j not in pivots]
    if (bound + 1) ** len(free) > ENUMERATION_CAP:
        raise ResourceCapError(f"{len(free)} free variables with entries <= {bound} exceed the enumeration cap",
                               required=(bound + 1) ** len(free), cap=ENUMERATION_CAP)
    for vals in itertools.product(range(bound + 1), repeat=len(free)):
        x = [None] * nvars
        for j, val in zip(free, vals):
            x[j] = sympy.Integer(val)
        ok = True
        for i, p in pivot_rows:
            val = red[i, nvars] - sum(red[i, j] * x[j] for j in free)
            if not (val.is_integer and 0 <= val <= bound):
                ok = False
                break
            x[p] = val
        if ok:
            yield [int(t) for t in x]


def _intertwiner_equations(U, V):
    """Rows of ``U X - X V = 0`` for ``X`` of shape ``(u, v)``, unknowns in row-major order."""
    u, v = U.shape[0], V.shape[0]
    rows = []
    for i in range(u):
        for j in range(v):
            row = [Fraction(0)] * (u * v)
            for k in range(u):
                row[k * v + j] += U[i, k]
            for k in range(v):
                row[i * v + k] -= V[k, j]
            rows.append(row)
    return rows


def search_se(U, V, max_lag: int | None = None, max_entry: int | None = None,
              config: RunConfig | None = None) -> SESearchResult:
    """Least certificate (by lag, then ``R``, then ``S`` in row-major order) within the bounds."""
    config = config or DEFAULT_CONFIG
    max_lag = config.max_lag if max_lag is None else max_lag
    max_entry = config.max_entry if max_entry is None else max_entry
    if max_lag < 1 or max_entry < 0:
        raise InputError("need max_lag >= 1 and max_entry >= 0")
    U, V = _square(U, "U"), _square(V, "V")
    u, v = U.shape[0], V.shape[0]
    notes = []
    lu, lv = spectral_radius(U), spectral_radius(V)
    if abs(lu - lv) > 1e-9:
        notes.append(f"spectral radii differ ({lu:.6g} vs {lv:.6g}); no certificate can exist")

    R_sols = list(_lattice_points(_intertwiner_equations(U, V), [Fraction(0)] * (u * v), u * v, max_entry))
    checked = {"R_candidates": len(R_sols)}
    S_eq = _intertwiner_equations(V, U)  # V S = S U
    for lag in range(1, max_lag + 1):
        Ul, Vl = _mpow(U, lag), _mpow(V, lag)
        best = None
        for rflat in sorted(R_sols):
            R = np.array(rflat, dtype=object).reshape(u, v)
            rows, rhs = [list(r) for r in S_eq], [Fraction(0)] * len(S_eq)
            # R S = U^l: row i of R times column j of S
            for i in range(u):
                for j in range(u):
                    row = [Fraction(0)] * (v * u)
                    for k in range(v):
                        row[k * u + j] += R[i, k]
                    rows.append(row)
                    rhs.append(Fraction(Ul[i, j]))
            # S R = V^l
            for i in range(v):
                for j in range(v):
                    row = [Fraction(0)] * (v * u)
                    for k in range(u):
                        row[i * u + k] += R[k, j]
                    rows.append(row)
                    rhs.append(Fraction(Vl[i, j]))
            sflat = min(_lattice_points(rows, rhs, v * u, max_entry), default=None)
            if sflat is not None:
                # R candidates are sorted, so the first hit is least
                best = (rflat, sflat)
                break
        if best is not None:
            cert = SECertificate.of(np.array(best[0], dtype=object).reshape(u, v),
                                    np.array(best[1], dtype=object).reshape(v, u), lag)
            if not verify_se(U, V, cert):
                raise VerificationError("search produced a certificate that fails verification")
            return SESearchResult(cert, "found", max_lag, max_entry, checked, notes)
    return SESearchResult(None, NONE_WITHIN_BOUNDS, max_lag, max_entry, checked,
                          notes + ["not a proof of inequivalence"])


def spectral_radius(A) -> float:
    A = np.array(A, dtype=float)
    return float(np.max(np.abs(np.linalg.eigvals(A)))) if A.size else 0.0


@dataclass(frozen=True)
class FullShiftVerdict:
    equivalent: bool
    n: int | None
    eventual_rank: int

    def to_json(self) -> dict:
        return {"full_shift": self.n if self.equivalent else False, "eventual_rank": self.eventual_rank}


def full_shift_test(T) -> FullShiftVerdict:
    """Shift equivalent to a full ``n``-shift iff the eventual rank is 1; then ``n`` is the Perron eigenvalue."""
    T = TransitionMatrix.of(T)
    k = eventual_rank(T)
    if k != 1:
        return FullShiftVerdict(False, None, k)
    s = T.r
    A, B = matrix_power(T, s), matrix_power(T, s + 1)
    lam = Fraction(int(np.trace(B)), int(np.trace(A)))
    if lam.denominator != 1:
        raise VerificationError(f"rank-one eventual range with non-integral eigenvalue {lam}")
    return FullShiftVerdict(True, int(lam), k)
