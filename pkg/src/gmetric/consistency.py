"""Alignment-consistent tuples and their block-matrix characterizations.

A family ``{P_ij}`` is consistent when ``P_ii = I`` and
``P_ik P_kj = P_ij`` for all triples. Every such family factors as
``P_ij = Q_i Q_j^{-1}``, so tuples are stored by their ``n`` factors and
blocks are derived on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .pscore import Alignment


@dataclass(frozen=True, eq=False)
class ConsistentTuple:
    """Consistent alignments ``P_ij = Q_i Q_j^T`` from invertible factors.

    Only permutation and orthogonal factors are accepted: for them the
    inverse is the transpose. Doubly stochastic factors may be singular and
    are refused.
    """

    q_factors: tuple

    def __post_init__(self):
        qs = tuple(q if isinstance(q, Alignment) else Alignment(q, "permutation")
                   for q in self.q_factors)
        if not qs:
            raise ValueError("need at least one factor")
        kinds = {q.kind for q in qs}
        if "doubly_stochastic" in kinds:
            raise ValueError("doubly stochastic factors are not invertible in general")
        if len({q.m for q in qs}) != 1:
            raise ValueError("factors differ in size")
        object.__setattr__(self, "q_factors", qs)

    @property
    def n(self) -> int:
        return len(self.q_factors)

    @property
    def m(self) -> int:
        return self.q_factors[0].m

    @property
    def kind(self) -> str:
        kinds = {q.kind for q in self.q_factors}
        return "permutation" if kinds == {"permutation"} else "orthogonal"

    def block(self, i: int, j: int) -> Alignment:
        if i == j:
            return Alignment.identity(self.m, self.kind)
        return Alignment(self.q_factors[i].matrix @ self.q_factors[j].matrix.T, self.kind)

    def blocks(self) -> dict:
        return {(i, j): self.block(i, j) for i in range(self.n) for j in range(self.n)}

    def block_matrix(self) -> np.ndarray:
        Q = np.vstack([q.matrix for q in self.q_factors])
        P = Q @ Q.T
        # diagonal blocks are I exactly, not up to rounding
        m = self.m
        for i in range(self.n):
            P[i * m:(i + 1) * m, i * m:(i + 1) * m] = np.eye(m)
        return P

    def normalized(self) -> "ConsistentTuple":
        """Equivalent tuple with the last factor equal to ``I``."""
        R = self.q_factors[-1].matrix
        return ConsistentTuple(tuple(Alignment(q.matrix @ R.T, q.kind) for q in self.q_factors))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "q_factors": [q.matrix.tolist() for q in self.q_factors]}


def from_q_factors(qs: Sequence) -> ConsistentTuple:
    return ConsistentTuple(tuple(qs))


def _matrix(P) -> np.ndarray:
    return P.matrix if isinstance(P, Alignment) else np.asarray(P, dtype=float)


def _block_size(P_set: Mapping) -> tuple[int, int]:
    keys = list(P_set)
    n = max(max(i, j) for i, j in keys) + 1
    missing = [(i, j) for i in range(n) for j in range(n) if (i, j) not in P_set]
    if missing:
        raise ValueError(f"incomplete block set, missing {missing[:3]}")
    return n, _matrix(P_set[(0, 0)]).shape[0]


def is_consistent(P_set: Mapping, tol: float = 1e-9) -> bool:
    """Check ``P_ii = I``, ``P_ij P_ji = I`` and ``P_ik P_kj = P_ij`` within ``tol``."""
    n, m = _block_size(P_set)
    P = {k: _matrix(v) for k, v in P_set.items()}
    I = np.eye(m)
    for i in range(n):
        if np.abs(P[i, i] - I).max() > tol:
            return False
        for j in range(n):
            if np.abs(P[i, j] @ P[j, i] - I).max() > tol:
                return False
            for k in range(n):
                if np.abs(P[i, k] @ P[k, j] - P[i, j]).max() > tol:
                    return False
    return True


def block_matrix(P_set) -> np.ndarray:
    """Assemble the ``nm x nm`` matrix whose ``(i, j)`` block is ``P_ij``."""
    if isinstance(P_set, ConsistentTuple):
        return P_set.block_matrix()
    if isinstance(P_set, np.ndarray):
        return P_set
    n, m = _block_size(P_set)
    return np.block([[_matrix(P_set[i, j]) for j in range(n)] for i in range(n)])


def numerical_rank(M: np.ndarray, rtol: float = 1e-8) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def check_rank_characterization(t) -> tuple[int, bool]:
    """Numerical rank of the block matrix; consistent tuples have rank ``m``."""
    P = block_matrix(t)
    m = t.m if isinstance(t, ConsistentTuple) else _block_size(t)[1]
    r = numerical_rank(P)
    return r, r == m


def min_eigenvalue(P: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (P + P.T))[0])


def check_psd_characterization(P_set, tol: float = 1e-8) -> bool:
    """True iff the symmetrized block matrix has no eigenvalue below ``-tol``."""
    return min_eigenvalue(block_matrix(P_set)) >= -tol


def block_nuclear_norm(P_set) -> float:
    return float(np.linalg.svd(block_matrix(P_set), compute_uv=False).sum())


def random_consistent_tuple(rng: np.random.Generator, n: int, m: int,
                            kind: str = "permutation") -> ConsistentTuple:
    """Random tuple with the last factor fixed to ``I``."""
    from .pscore import random_alignment

    qs = [random_alignment(rng, m, kind) for _ in range(n - 1)]
    qs.append(Alignment.identity(m, kind))
    return ConsistentTuple(tuple(qs))
