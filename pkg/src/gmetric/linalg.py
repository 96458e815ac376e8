"""Dense symmetric linear algebra used by the distance and relaxation code.

Spectra are always sorted ascending.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration budget before meeting tolerance."""


@dataclass(frozen=True)
class NormKind:
    """A matrix norm: ``frobenius``, ``operator2`` or ``entrywise`` with exponent ``p``."""

    kind: str = "frobenius"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("frobenius", "operator2", "entrywise"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "entrywise":
            if self.p is None or not self.p >= 1:
                raise ValueError("entrywise norm needs p >= 1")
        elif self.p is not None:
            raise ValueError(f"{self.kind} norm takes no exponent")

    @classmethod
    def parse(cls, text: str) -> "NormKind":
        """Parse ``frobenius``, ``operator2`` or ``p:<value>`` (``p:inf`` allowed)."""
        text = text.strip().lower()
        if text in ("frobenius", "fro"):
            return cls("frobenius")
        if text in ("operator2", "op2", "spectral"):
            return cls("operator2")
        if text.startswith("p:"):
            return cls("entrywise", float(text[2:]))
        raise ValueError(f"cannot parse norm {text!r}")

    def __str__(self) -> str:
        if self.kind == "entrywise":
            return f"p:{self.p:g}"
        return self.kind

    @property
    def is_euclidean(self) -> bool:
        return self.kind == "frobenius" or (self.kind == "entrywise" and self.p == 2)

    def __call__(self, M) -> float:
        return matrix_norm(M, self)


FROBENIUS = NormKind("frobenius")
OPERATOR2 = NormKind("operator2")


def as_norm(norm) -> NormKind:
    if norm is None:
        return FROBENIUS
    if isinstance(norm, NormKind):
        return norm
    return NormKind.parse(str(norm))


def batched_norm(M: np.ndarray, norm: NormKind) -> np.ndarray:
    """Norm of each trailing ``(m, m)`` matrix of a stacked array."""
    M = np.asarray(M, dtype=float)
    if norm.is_euclidean:
        return np.sqrt(np.einsum("...ij,...ij->...", M, M))
    if norm.kind == "operator2":
        return np.linalg.norm(M, ord=2, axis=(-2, -1))
    flat = M.reshape(M.shape[:-2] + (-1,))
    return np.linalg.norm(flat, ord=norm.p, axis=-1)


def matrix_norm(M, kind=FROBENIUS) -> float:
    """Matrix norm of ``M``; ``kind`` may be a :class:`NormKind` or its string form."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("matrix_norm expects a 2-d array")
    if M.size == 0:
        return 0.0
    return float(batched_norm(M, as_norm(kind)))


def nuclear_norm(M) -> float:
    """Sum of singular values."""
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    return float(s.sum())


def _check_symmetric_square(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")


def sym_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix.

    The reconstruction residual ``||A - U diag(w) U^T||_F`` is checked against
    ``1e-8 * (1 + ||A||_F)``; a failure raises :class:`ConvergenceError`.
    """
    A = np.asarray(A, dtype=float)
    _check_symmetric_square(A)
    w, U = np.linalg.eigh(A)
    residual = np.linalg.norm(A - (U * w) @ U.T)
    if residual > 1e-8 * (1.0 + np.linalg.norm(A)):
        raise ConvergenceError(f"eigendecomposition residual {residual:.3e} too large")
    return w, U


def sorted_spectrum(A) -> np.ndarray:
    """Eigenvalues of symmetric ``A`` in ascending order."""
    return sym_eig(A)[0]


def project_psd(M) -> np.ndarray:
    """Nearest (Frobenius) positive semidefinite matrix to ``(M + M^T) / 2``."""
    M = np.asarray(M, dtype=float)
    _check_symmetric_square(M)
    S = 0.5 * (M + M.T)
    w, U = np.linalg.eigh(S)
    out = (U * np.clip(w, 0.0, None)) @ U.T
    return 0.5 * (out + out.T)


def project_capped_simplex(v, radius: float) -> np.ndarray:
    """Project ``v`` onto ``{x >= 0, sum(x) <= radius}``."""
    v = np.asarray(v, dtype=float)
    x = np.clip(v, 0.0, None)
    if x.sum() <= radius:
        return x
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.clip(v - theta, 0.0, None)


def project_nuclear_ball(M, radius: float) -> np.ndarray:
    """Project ``M`` onto the nuclear-norm ball of the given radius."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    M = np.asarray(M, dtype=float)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.sum() <= radius:
        return M.copy()
    s = project_capped_simplex(s, radius)
    return (U * s) @ Vt


def _affine_doubly(M: np.ndarray) -> np.ndarray:
    # projection onto {X : X 1 = 1, X^T 1 = 1}, batched over leading axes
    m = M.shape[-1]
    r = M.sum(axis=-1, keepdims=True) - 1.0
    c = M.sum(axis=-2, keepdims=True) - 1.0
    total = M.sum(axis=(-2, -1), keepdims=True) - m
    return M - r / m - c / m + total / m**2


def project_birkhoff(M, tol: float = 1e-9, max_iter: int = 10000) -> np.ndarray:
    """Euclidean projection onto the doubly stochastic matrices.

    Dykstra's alternating projection between the affine row/column-sum
    constraints and the nonnegative orthant. Works on a single ``(m, m)``
    matrix or a stack ``(..., m, m)``.
    """
    X = np.asarray(M, dtype=float)
    if X.shape[-1] != X.shape[-2]:
        raise ValueError("project_birkhoff expects square matrices")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite entries")
    correction = np.zeros_like(X)
    Y = X
    for _ in range(max_iter):
        A = _affine_doubly(Y)
        Y = np.clip(A + correction, 0.0, None)
        correction = A + correction - Y
        if A.min() >= -tol:
            out = np.clip(A, 0.0, 1.0)
            if (np.abs(out.sum(axis=-1) - 1.0).max() <= tol
                    and np.abs(out.sum(axis=-2) - 1.0).max() <= tol):
                return out
    raise ConvergenceError(f"Birkhoff projection did not reach tol={tol} in {max_iter} iterations")


def is_doubly_stochastic(P, tol: float = 1e-9) -> bool:
    P = np.asarray(P, dtype=float)
    return bool(P.min() >= -tol
                and np.abs(P.sum(axis=-1) - 1.0).max() <= tol
                and np.abs(P.sum(axis=-2) - 1.0).max() <= tol)


def _median_residual(points: np.ndarray, c: np.ndarray) -> tuple[float, np.ndarray]:
    diff = c - points
    dist = np.linalg.norm(diff, axis=1)
    at = dist < 1e-12
    grad = (diff[~at] / dist[~at, None]).sum(axis=0)
    # subgradient at a data point: coincident points contribute a unit ball each
    return max(np.linalg.norm(grad) - at.sum(), 0.0), dist


def geometric_median(points, tol: float = 1e-9, max_iter: int = 10000) -> tuple[np.ndarray, float]:
    """Minimize ``sum_i ||x_i - c||`` over ``c`` with Weiszfeld's iteration.

    Starts from the coordinatewise mean. Data points are tested first with
    the subgradient optimality condition, which also resolves the singular
    case where an iterate lands on a data point (the modified step excludes
    the coincident point). Returns the median and the objective.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("need at least one point")
    if X.shape[0] == 1:
        return X[0].copy(), 0.0

    # a data point is optimal iff the pull of the others has norm <= its multiplicity
    for k in range(X.shape[0]):
        res, dist = _median_residual(X, X[k])
        if res <= tol:
            return X[k].copy(), float(dist.sum())

    c = X.mean(axis=0)
    for _ in range(max_iter):
        res, dist = _median_residual(X, c)
        if res <= tol:
            return c, float(dist.sum())
        at = dist < 1e-12
        w = np.zeros_like(dist)
        w[~at] = 1.0 / dist[~at]
        t = (w[:, None] * X).sum(axis=0) / w.sum()
        if at.any():
            # Vardi-Zhang step away from a coincident data point
            r = np.linalg.norm(((X[~at] - c) * w[~at, None]).sum(axis=0))
            eta = at.sum()
            gamma = min(1.0, eta / r) if r > 0 else 1.0
            t = (1.0 - gamma) * t + gamma * c
        c = t
    raise ConvergenceError(f"Weiszfeld did not reach tol={tol} in {max_iter} iterations")


def _project_lq_ball(v: np.ndarray, q: float, radius: float) -> np.ndarray:
    """Euclidean projection of a flat vector onto ``{x : ||x||_q <= radius}``."""
    if np.linalg.norm(v, ord=q) <= radius:
        return v.copy()
    if q == 2:
        return v * (radius / np.linalg.norm(v))
    if np.isinf(q):
        return np.clip(v, -radius, radius)
    a = np.abs(v)
    if q == 1:
        return np.sign(v) * project_capped_simplex(a, radius)

    # KKT: t_i + mu * q * t_i^(q-1) = a_i, with sum t_i^q = radius^q
    def coords(mu):
        lo = np.zeros_like(a)
        hi = a.copy()
        for _ in range(45):
            mid = 0.5 * (lo + hi)
            over = mid + mu * q * mid ** (q - 1) > a
            hi = np.where(over, mid, hi)
            lo = np.where(over, lo, mid)
        return hi

    def excess(mu):
        return np.sum(coords(mu) ** q) - radius**q

    mu_hi = 1.0
    while excess(mu_hi) > 0:
        mu_hi *= 2.0
    mu = brentq(excess, 0.0, mu_hi, xtol=1e-15, rtol=1e-13)
    return np.sign(v) * coords(mu)


def norm_prox(V, norm: NormKind, t: float) -> np.ndarray:
    """Proximal operator of ``t * |||.|||`` evaluated at the matrix ``V``."""
    V = np.asarray(V, dtype=float)
    if t <= 0:
        return V.copy()
    if norm.is_euclidean:
        nv = np.linalg.norm(V)
        if nv <= t:
            return np.zeros_like(V)
        return (1.0 - t / nv) * V
    if norm.kind == "operator2":
        # Moreau: the dual of the spectral norm is the nuclear norm
        return V - project_nuclear_ball(V, t)
    p = norm.p
    q = np.inf if p == 1 else (1.0 if np.isinf(p) else p / (p - 1.0))
    return V - _project_lq_ball(V.ravel(), q, t).reshape(V.shape)
