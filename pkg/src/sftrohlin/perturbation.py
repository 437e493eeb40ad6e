"""Small-perturbation constructions on dense matrices.

Each routine takes nearly-related projections (or a near partial isometry)
and returns an exact-up-to-rounding object with a norm bound linear in the
input defect.  Inputs are square ndarrays of equal shape.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DegeneracyError, InputError, PreconditionError

PROJECTION_TOL = 1e-9
GAP_GUARD = 1e-6
SINGULAR_GUARD = 1e-8


def norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x, 2)) if x.size else 0.0


def norm_bound(x: np.ndarray, tol: float) -> float:
    """Operator norm, or the Frobenius norm when that is already ``<= tol``."""
    fro = float(np.linalg.norm(x)) if x.size else 0.0
    return fro if fro <= tol else norm(x)


def small(x: np.ndarray, tol: float) -> bool:
    """``||x|| <= tol``, skipping the SVD when the Frobenius norm already decides it."""
    if not x.size or float(np.linalg.norm(x)) <= tol:
        return True
    return norm(x) <= tol


def _eye_like(x):
    return np.eye(x.shape[0], dtype=x.dtype)


def check_projection(e: np.ndarray, name: str = "e") -> None:
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise InputError(f"{name} must be a square matrix")
    if not (small(e @ e - e, PROJECTION_TOL) and small(e - e.conj().T, PROJECTION_TOL)):
        raise PreconditionError(f"{name} is not a projection within {PROJECTION_TOL}")


def projection_rank(e: np.ndarray) -> int:
    return int(round(float(np.trace(e).real)))


def _same_shape(*xs):
    shapes = {x.shape for x in xs}
    if len(shapes) != 1:
        raise InputError(f"shape mismatch: {sorted(shapes)}")


def orthogonalize_projection(e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Projection ``g`` with ``e g = 0`` and ``||f - g|| <= 4 ||e f||``."""
    _same_shape(e, f)
    check_projection(e, "e")
    check_projection(f, "f")
    d = norm(e @ f)
    if d >= 0.25:
        raise PreconditionError(f"||ef|| = {d:.6g} must be < 1/4")
    c = _eye_like(e) - e
    h = c @ f @ c
    h = (h + h.conj().T) / 2
    vals, vecs = np.linalg.eigh(h)
    if vals.size and np.min(np.abs(vals - 0.5)) < GAP_GUARD:
        raise DegeneracyError("eigenvalue at the rounding threshold 1/2; no spectral gap")
    V = vecs[:, vals > 0.5]
    g = V @ V.conj().T
    # restrict to the range of 1 - e
    return c @ g @ c


def conjugating_unitary(e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Unitary ``u`` with ``u* e u = f`` and ``||1 - u|| <= 4 ||e - f||``."""
    _same_shape(e, f)
    check_projection(e, "e")
    check_projection(f, "f")
    d = norm(e - f)
    if d >= 0.5:
        raise PreconditionError(f"||e - f|| = {d:.6g} must be < 1/2")
    if projection_rank(e) != projection_rank(f):
        raise PreconditionError(f"rank(e) = {projection_rank(e)} differs from rank(f) = {projection_rank(f)}")
    one = _eye_like(e)
    z = 2 * e @ f - e - f + one
    s = np.linalg.svd(z, compute_uv=False)
    if s.size and s[-1] < SINGULAR_GUARD:
        raise DegeneracyError(f"z is numerically singular (smallest singular value {s[-1]:.3g})")
    u, _ = scipy.linalg.polar(z, side="right")
    return u


def align_families(es: Sequence[np.ndarray], fs: Sequence[np.ndarray]) -> np.ndarray:
    """Unitary ``u`` with ``u* e_i u = f_i`` for every index.

    Both families must consist of mutually orthogonal projections with
    ``||e_i - f_i|| < 1/(2n)``.  The complements ``1 - sum e_i`` and
    ``1 - sum f_i`` are aligned as well.
    """
    if len(es) != len(fs):
        raise InputError(f"families have different lengths {len(es)} and {len(fs)}")
    if not es:
        raise InputError("empty families")
    _same_shape(*es, *fs)
    n = len(es)
    if all(np.array_equal(e, f) for e, f in zip(es, fs)):
        return _eye_like(es[0])
    for fam, label in ((es, "e"), (fs, "f")):
        for i, x in enumerate(fam):
            check_projection(x, f"{label}_{i + 1}")
            for j in range(i):
                if not small(x @ fam[j], PROJECTION_TOL):
                    raise PreconditionError(f"{label}_{j + 1} and {label}_{i + 1} are not orthogonal")
    worst = max(norm(e - f) for e, f in zip(es, fs))
    if worst >= 1 / (2 * n):
        raise PreconditionError(f"max ||e_i - f_i|| = {worst:.6g} must be < 1/(2n) = {1 / (2 * n):.6g}")
    one = _eye_like(es[0])
    e0 = one - sum(es)
    f0 = one - sum(fs)
    u = np.zeros_like(one)
    for e, f in zip([e0, *es], [f0, *fs]):
        if projection_rank(e) == 0 and projection_rank(f) == 0:
            continue
        u = u + e @ conjugating_unitary(e, f)
    return u


def snap_partial_isometry(p: np.ndarray, e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Partial isometry ``q`` with ``q* q = e`` and ``q q* = f`` close to ``p``."""
    _same_shape(p, e, f)
    check_projection(e, "e")
    check_projection(f, "f")
    eps = max(norm(p.conj().T @ p - e), norm(p @ p.conj().T - f))
    if eps >= 0.5:
        raise PreconditionError(f"defect {eps:.6g} must be < 1/2")
    k = projection_rank(e)
    if k != projection_rank(f):
        raise PreconditionError(f"rank(e) = {k} differs from rank(f) = {projection_rank(f)}; no such q")
    if k == 0:
        return np.zeros_like(p)
    W, s, Vh = np.linalg.svd(f @ p @ e)
    if s[k - 1] < SINGULAR_GUARD:
        raise DegeneracyError(f"f p e has rank below {k}")
    return W[:, :k] @ Vh[:k, :]
