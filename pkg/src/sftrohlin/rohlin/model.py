"""Dense permutation model of a stack of projections.

The space is ``R^(L*D + c)``: ``L`` levels of ``D`` basis vectors each plus a
complement of ``c < D`` vectors.  The automorphism is conjugation by a
permutation of the basis.  In the linear model level ``i`` moves to level
``i+1``; the top level moves into the complement (first ``c`` slots) and the
bottom level (remaining slots); the complement moves into the bottom level.
In the cyclic model the levels rotate and the complement is fixed.
Generators are sparse matrices; ``alpha`` accepts sparse or dense input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..errors import InputError, ResourceCapError


def as_dense(x) -> np.ndarray:
    return x.toarray() if sp.issparse(x) else np.asarray(x)


@dataclass(frozen=True)
class StackModel:
    length: int
    level_dim: int = 2
    complement_dim: int = 1
    cyclic: bool = False
    max_dim: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.length < 1:
            raise InputError("stack length must be >= 1")
        if not 1 <= self.complement_dim < self.level_dim:
            raise InputError("need 1 <= complement_dim < level_dim")
        if self.max_dim is not None and self.dim > self.max_dim:
            raise ResourceCapError(f"model dimension {self.dim} exceeds cap {self.max_dim}",
                                   required=self.dim, cap=self.max_dim)

    @property
    def dim(self) -> int:
        return self.length * self.level_dim + self.complement_dim

    def level_index(self, i: int, k: int) -> int:
        return i * self.level_dim + k

    def complement_index(self, j: int) -> int:
        return self.length * self.level_dim + j

    @cached_property
    def perm(self) -> np.ndarray:
        """``perm[b]`` is the image of basis vector ``b``."""
        L, D, c = self.length, self.level_dim, self.complement_dim
        out = np.empty(self.dim, dtype=np.intp)
        for i in range(L):
            for k in range(D):
                b = self.level_index(i, k)
                if i < L - 1:
                    out[b] = self.level_index(i + 1, k)
                elif self.cyclic:
                    out[b] = self.level_index(0, k)
                else:
                    out[b] = self.complement_index(k) if k < c else self.level_index(0, k)
        for j in range(c):
            b = self.complement_index(j)
            out[b] = b if self.cyclic else self.level_index(0, j)
        return out

    @cached_property
    def inverse_perm(self) -> np.ndarray:
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.dim)
        return inv

    def alpha(self, x, n: int = 1):
        """``P^n x P^-n`` for the basis permutation ``P``."""
        idx = np.arange(self.dim)
        for _ in range(abs(n)):
            idx = self.inverse_perm[idx] if n > 0 else self.perm[idx]
        if sp.issparse(x):
            S = sp.csr_array((np.ones(self.dim), (np.arange(self.dim), idx)), shape=(self.dim, self.dim))
            return (S @ x @ S.T).tocsr()
        return x[np.ix_(idx, idx)]

    def _partial(self, rows, cols):
        return sp.csr_array((np.ones(len(rows)), (rows, cols)), shape=(self.dim, self.dim))

    def identity(self):
        return sp.identity(self.dim, format="csr")

    def level(self, i: int):
        idx = [self.level_index(i, k) for k in range(self.level_dim)]
        return self._partial(idx, idx)

    def complement(self):
        idx = [self.complement_index(j) for j in range(self.complement_dim)]
        return self._partial(idx, idx)

    def p(self):
        """Partial isometry from the complement onto the first slots of level 0."""
        c = self.complement_dim
        return self._partial([self.level_index(0, j) for j in range(c)], [self.complement_index(j) for j in range(c)])

    def q(self):
        """Partial isometry from level 0 onto level 1 (or back to 0 if there is one level)."""
        tgt = 1 % self.length
        D = self.level_dim
        return self._partial([self.level_index(tgt, k) for k in range(D)], [self.level_index(0, k) for k in range(D)])
