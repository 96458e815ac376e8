"""P-scores ``s(A, B, P) = |||AP - PB|||`` and two-graph SB-distances.

The SB-distance is ``min_P |||AP - PB||| + tr(P^T D)`` over a matching set.
The exact version enumerates permutations; the relaxed one optimizes over
doubly stochastic matrices (see :mod:`gmetric.relax`).

Note: one example in the source literature writes the score as
``|||AP - BP|||``; that is a typo, the score used everywhere is ``AP - PB``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .linalg import FROBENIUS, NormKind, as_norm, batched_norm, is_doubly_stochastic

KINDS = ("permutation", "doubly_stochastic", "orthogonal")

# sb_distance_exact refuses m above this (8! = 40320 permutations)
BRUTE_FORCE_CAP = 8

# relative slack used when picking the lexicographically first minimizer
TIE_RTOL = 1e-12


class CapExceededError(ValueError):
    """An exhaustive enumeration would exceed its configured cap."""


@dataclass(frozen=True, eq=False)
class Alignment:
    """A pairwise matching matrix tagged with the set it belongs to."""

    matrix: np.ndarray
    kind: str = "permutation"

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"alignment must be square, got shape {M.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown alignment kind {self.kind!r}")
        if not _in_kind(M, self.kind, 1e-9):
            raise ValueError(f"matrix is not a valid {self.kind} alignment")
        M.flags.writeable = False
        object.__setattr__(self, "matrix", M)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def inverse(self) -> "Alignment":
        if self.kind == "doubly_stochastic":
            raise ValueError("inversion is not defined for doubly stochastic alignments")
        return Alignment(self.matrix.T, self.kind)

    def as_permutation(self) -> tuple[int, ...]:
        """``perm`` with ``matrix[i, perm[i]] == 1`` (permutation kind only)."""
        if self.kind != "permutation":
            raise ValueError("not a permutation alignment")
        return tuple(int(j) for j in self.matrix.argmax(axis=1))

    @classmethod
    def identity(cls, m: int, kind: str = "permutation") -> "Alignment":
        return cls(np.eye(m), kind)

    @classmethod
    def from_permutation(cls, perm) -> "Alignment":
        return cls(perm_matrix(perm), "permutation")

    def __eq__(self, other):
        if not isinstance(other, Alignment):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.kind, self.matrix.tobytes()))


def _in_kind(M: np.ndarray, kind: str, tol: float) -> bool:
    m = M.shape[0]
    if kind == "permutation":
        return bool(np.all((M == 0) | (M == 1))
                    and np.all(M.sum(axis=0) == 1) and np.all(M.sum(axis=1) == 1))
    if kind == "doubly_stochastic":
        return is_doubly_stochastic(M, tol)
    return bool(np.linalg.norm(M.T @ M - np.eye(m)) <= tol)


def perm_matrix(perm) -> np.ndarray:
    """Permutation matrix with ``P[i, perm[i]] = 1``."""
    perm = np.asarray(perm, dtype=int)
    return np.eye(perm.size)[perm]


@lru_cache(maxsize=16)
def all_permutations(m: int) -> np.ndarray:
    """All permutations of ``range(m)`` in lexicographic order, shape ``(m!, m)``."""
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.intp)
    perms.flags.writeable = False
    return perms


@lru_cache(maxsize=16)
def permutation_matrices(m: int) -> np.ndarray:
    mats = np.eye(m)[all_permutations(m)]
    mats.flags.writeable = False
    return mats


def _as_matrix(P) -> np.ndarray:
    return P.matrix if isinstance(P, Alignment) else np.asarray(P, dtype=float)


def pscore(A, B, P, norm: NormKind | str = FROBENIUS) -> float:
    """``|||AP - PB|||`` under the given norm."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    P = _as_matrix(P)
    if not (A.shape == B.shape == P.shape) or A.ndim != 2:
        raise ValueError(f"dimension mismatch: A{A.shape}, B{B.shape}, P{P.shape}")
    return float(batched_norm(A @ P - P @ B, as_norm(norm)))


def score_table(A, B, norm: NormKind | str = FROBENIUS) -> np.ndarray:
    """``s(A, B, P)`` for every permutation in :func:`all_permutations` order."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: A{A.shape}, B{B.shape}")
    mats = permutation_matrices(A.shape[0])
    return batched_norm(A @ mats - mats @ B, as_norm(norm))


def first_argmin(values: np.ndarray) -> int:
    """Index of the first entry within :data:`TIE_RTOL` of the minimum."""
    vmin = values.min()
    return int(np.argmax(values <= vmin + TIE_RTOL * (1.0 + abs(vmin))))


def sb_distance_exact(A, B, D=None, norm: NormKind | str = FROBENIUS,
                      cap: int = BRUTE_FORCE_CAP) -> tuple[float, Alignment]:
    """Exact SB-distance over permutations by enumeration.

    Returns the minimum of ``|||AP - PB||| + tr(P^T D)`` and the
    lexicographically smallest minimizing permutation.
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if m > cap:
        raise CapExceededError(f"m={m} exceeds the brute-force cap {cap}")
    values = score_table(A, B, norm)
    if D is not None:
        D = np.asarray(D, dtype=float)
        if D.shape != (m, m) or D.min() < 0:
            raise ValueError("D must be a nonnegative m x m matrix")
        values = values + D[np.arange(m), all_permutations(m)].sum(axis=1)
    k = first_argmin(values)
    return float(values[k]), Alignment.from_permutation(all_permutations(m)[k])


def sb_distance_relaxed(A, B, D=None, norm: NormKind | str = FROBENIUS, cfg=None):
    """SB-distance with ``P`` relaxed to the Birkhoff polytope.

    Returns ``(value, Alignment)`` with a doubly stochastic alignment. The
    value never exceeds the exact permutation value by more than the solver
    tolerance.
    """
    from .relax import solve_pair

    res = solve_pair(A, B, D, as_norm(norm), cfg)
    return res.value, res.blocks[(0, 1)]


def random_alignment(rng: np.random.Generator, m: int, kind: str) -> Alignment:
    if kind == "permutation":
        return Alignment.from_permutation(rng.permutation(m))
    if kind == "orthogonal":
        Q, R = np.linalg.qr(rng.standard_normal((m, m)))
        return Alignment(Q * np.sign(np.diag(R)), "orthogonal")
    if kind == "doubly_stochastic":
        # random convex combination of permutations
        k = m + 1
        w = rng.dirichlet(np.ones(k))
        M = sum(wi * perm_matrix(rng.permutation(m)) for wi in w)
        return Alignment(M, "doubly_stochastic")
    raise ValueError(f"unknown alignment kind {kind!r}")


def _random_symmetric(rng: np.random.Generator, m: int) -> np.ndarray:
    if rng.random() < 0.5:
        M = (rng.random((m, m)) < 0.5).astype(float)
        M = np.triu(M, 1)
    else:
        M = rng.standard_normal((m, m))
    return M + M.T


@dataclass
class PScoreReport:
    norm: str
    kind: str
    samples: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"norm": self.norm, "kind": self.kind, "samples": self.samples,
                "violations": [list(v) for v in self.violations]}


def verify_pscore_axioms(norm: NormKind | str = FROBENIUS, kind: str = "permutation",
                         samples: int = 1000, seed: int = 0, m: int = 5,
                         tol: float = 1e-9) -> PScoreReport:
    """Sample random triples and alignments and test the P-score properties.

    For permutation and orthogonal alignments the symmetry property uses
    the inverse; for doubly stochastic alignments (the modified P-score) it
    uses the transpose. Violations are reported, not raised.
    """
    norm = as_norm(norm)
    rng = np.random.default_rng(seed)
    report = PScoreReport(str(norm), kind, samples)
    I = np.eye(m)
    for t in range(samples):
        A, B, C = (_random_symmetric(rng, m) for _ in range(3))
        P = random_alignment(rng, m, kind).matrix
        Q = random_alignment(rng, m, kind).matrix
        s_ab = pscore(A, B, P, norm)
        s_bc = pscore(B, C, Q, norm)
        scale = tol * (1.0 + s_ab + s_bc)
        if s_ab < 0:
            report.violations.append(("nonnegativity", t, s_ab, 0.0))
        self_score = pscore(A, A, I, norm)
        if self_score > scale:
            report.violations.append(("identity", t, self_score, 0.0))
        # P^{-1} == P^T for permutation and orthogonal kinds
        back = pscore(B, A, P.T, norm)
        if abs(back - s_ab) > scale:
            report.violations.append(("symmetry", t, s_ab, back))
        s_ac = pscore(A, C, P @ Q, norm)
        if s_ac > s_ab + s_bc + scale:
            report.violations.append(("composition", t, s_ac, s_ab + s_bc))
    return report
