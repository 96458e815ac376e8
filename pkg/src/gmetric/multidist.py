"""Multi-graph distances: Fermat and G-align, exact and spectral.

Fermat: ``min_B sum_i d(A_i, B)``, a center graph ``B`` aligned to every
input. G-align: ``min sum_{i<j} s(A_i, A_j, P_ij)`` over consistent
alignment tuples. With orthogonal alignments both have closed forms in the
sorted spectra: G-align is the sum of pairwise spectrum distances, Fermat
is the geometric-median objective of the spectra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .consistency import ConsistentTuple
from .graphs import GraphSet
from .linalg import (FROBENIUS, NormKind, as_norm, batched_norm, geometric_median,
                     sorted_spectrum, sym_eig)
from .pscore import (Alignment, CapExceededError, all_permutations, first_argmin,
                     permutation_matrices, score_table)

GALIGN_CAP = 10**6
FERMAT_MAX_M = 4
FERMAT_MAX_N = 4
SET_FUNCTION_MAX_N = 8


@dataclass
class MultiDistanceResult:
    value: float
    method: str
    witness: ConsistentTuple | None = None
    center: np.ndarray | None = None
    alignments: tuple | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"value": self.value, "method": self.method}
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        if self.center is not None:
            out["center"] = np.asarray(self.center).tolist()
        if self.alignments is not None:
            out["alignments"] = [a.matrix.tolist() for a in self.alignments]
        out.update(self.extra)
        return out


def _graphs(gs) -> list:
    if isinstance(gs, GraphSet):
        return list(gs.graphs)
    return [np.asarray(g, dtype=float) for g in gs]


@lru_cache(maxsize=8)
def _compose_table(m: int) -> np.ndarray:
    """``comp[a, b]`` is the index of ``Q_a Q_b^T`` among lexicographic permutations."""
    perms = all_permutations(m)
    index = {tuple(p): k for k, p in enumerate(perms)}
    inv = np.argsort(perms, axis=1)
    # (Q_a Q_b^T)[r, c] = 1 iff c = inv_b[perm_a[r]]
    comp = np.empty((len(perms), len(perms)), dtype=np.intp)
    for a, pa in enumerate(perms):
        for b, ib in enumerate(inv):
            comp[a, b] = index[tuple(ib[pa])]
    return comp


def galign_bruteforce(gs, norm: NormKind | str = FROBENIUS, cap: int = GALIGN_CAP) -> MultiDistanceResult:
    """Exact G-align distance by enumerating consistent permutation tuples.

    Tuples are enumerated as factor sequences ``(Q_1, ..., Q_{n-1}, I)``;
    ties go to the lexicographically smallest factor sequence.
    """
    graphs = _graphs(gs)
    n = len(graphs)
    if n == 0:
        raise ValueError("need at least one graph")
    m = graphs[0].shape[0]
    perms = all_permutations(m)
    k = len(perms)
    if k ** (n - 1) > cap:
        raise CapExceededError(f"(m!)^(n-1) = {k ** (n - 1)} exceeds the cap {cap}")
    norm = as_norm(norm)
    if n == 1:
        return MultiDistanceResult(0.0, "bruteforce", ConsistentTuple((Alignment.identity(m),)))

    comp = _compose_table(m)
    identity = 0
    # factor index grid in lexicographic order, last factor fixed to identity
    grid = np.indices((k,) * (n - 1)).reshape(n - 1, -1)
    factors = list(grid) + [np.full(grid.shape[1], identity)]
    total = np.zeros(grid.shape[1])
    for i in range(n):
        for j in range(i + 1, n):
            table = score_table(graphs[i], graphs[j], norm)
            total = total + table[comp[factors[i], factors[j]]]
    best = first_argmin(total)
    qs = tuple(Alignment.from_permutation(perms[f[best]]) for f in factors)
    return MultiDistanceResult(float(total[best]), "bruteforce", ConsistentTuple(qs))


def spectra(gs) -> np.ndarray:
    """Stacked ascending spectra, shape ``(n, m)``."""
    return np.array([sorted_spectrum(g) for g in _graphs(gs)])


def _pairwise_spectral(L: np.ndarray) -> float:
    n = L.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += float(np.linalg.norm(L[i] - L[j]))
    return total


def galign_spectral(gs) -> MultiDistanceResult:
    """Closed-form G-align with orthogonal alignments and the Frobenius norm.

    Sum over pairs of the Euclidean distance between sorted spectra. The
    witness uses the eigenvector matrices as factors, ``P_ij = U_i U_j^T``;
    with repeated eigenvalues it is one optimal choice among many.
    """
    graphs = _graphs(gs)
    eig = [sym_eig(g) for g in graphs]
    L = np.array([w for w, _ in eig])
    witness = ConsistentTuple(tuple(Alignment(U, "orthogonal") for _, U in eig)) if eig else None
    return MultiDistanceResult(_pairwise_spectral(L), "spectral", witness)


def galign_mean_variance(gs) -> float:
    """Square-root of ``1/2 sum_{i,j} ||L_i - L_j||^2`` over ordered pairs.

    Equals ``n * sqrt(Var)`` where ``Var`` is the mean squared distance of
    the spectra to their mean; both sides are computed and compared.
    """
    L = spectra(gs)
    n = L.shape[0]
    diffs = L[:, None, :] - L[None, :, :]
    squared = 0.5 * float(np.sum(diffs**2))
    var = float(np.mean(np.sum((L - L.mean(axis=0)) ** 2, axis=1))) if n else 0.0
    if abs(squared - n**2 * var) > 1e-8 * (1.0 + squared):
        raise ArithmeticError(f"variance identity mismatch: {squared} vs {n**2 * var}")
    return float(np.sqrt(squared))


def _fermat_from_spectra(L: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, float]:
    return geometric_median(L, tol=tol, max_iter=max_iter)


def fermat_spectral(gs, tol: float = 1e-9, max_iter: int = 10000) -> MultiDistanceResult:
    """Closed-form Fermat distance with orthogonal alignments (Frobenius norm).

    The objective of the geometric median of the sorted spectra; the center
    is ``diag(median)`` and each input aligns to it through its eigenvectors.
    """
    graphs = _graphs(gs)
    eig = [sym_eig(g) for g in graphs]
    L = np.array([w for w, _ in eig])
    c, value = _fermat_from_spectra(L, tol, max_iter)
    aligns = tuple(Alignment(U, "orthogonal") for _, U in eig)
    return MultiDistanceResult(value, "spectral", ConsistentTuple(aligns), np.diag(c), aligns)


@lru_cache(maxsize=8)
def _binary_centers(m: int) -> np.ndarray:
    iu = np.triu_indices(m, 1)
    count = len(iu[0])
    out = np.zeros((2**count, m, m))
    for mask in range(2**count):
        bits = [(mask >> b) & 1 for b in range(count)]
        out[mask][iu] = bits
    out = out + out.transpose(0, 2, 1)
    out.flags.writeable = False
    return out


def _center_distances(A: np.ndarray, norm: NormKind) -> tuple[np.ndarray, np.ndarray]:
    """Permutation distance from ``A`` to every binary center, and the argmin index."""
    m = A.shape[0]
    P = permutation_matrices(m)
    B = _binary_centers(m)
    scores = batched_norm((A @ P)[None] - P[None] @ B[:, None], norm)
    vmin = scores.min(axis=1, keepdims=True)
    arg = np.argmax(scores <= vmin + 1e-12 * (1.0 + np.abs(vmin)), axis=1)
    return scores[np.arange(len(B)), arg], arg


def fermat_bruteforce(gs, center_space: str = "binary_graphs",
                      norm: NormKind | str = FROBENIUS) -> MultiDistanceResult:
    """Exact Fermat distance with simple-graph centers and permutation alignments."""
    if center_space != "binary_graphs":
        raise ValueError("only the 'binary_graphs' center space is enumerable")
    graphs = _graphs(gs)
    n = len(graphs)
    m = graphs[0].shape[0]
    if m > FERMAT_MAX_M or n > FERMAT_MAX_N:
        raise CapExceededError(f"fermat_bruteforce needs m <= {FERMAT_MAX_M}, n <= {FERMAT_MAX_N}")
    norm = as_norm(norm)
    dists, args = zip(*(_center_distances(g, norm) for g in graphs))
    total = np.sum(dists, axis=0)
    c = first_argmin(total)
    perms = all_permutations(m)
    aligns = tuple(Alignment.from_permutation(perms[a[c]]) for a in args)
    return MultiDistanceResult(float(total[c]), "bruteforce", ConsistentTuple(aligns),
                               _binary_centers(m)[c].copy(), aligns)


def quotient_equal(A, B, tol: float = 1e-9) -> bool:
    """Zero-distance equivalence under the orthogonal pseudometric: equal spectra."""
    a, b = sorted_spectrum(A), sorted_spectrum(B)
    return a.shape == b.shape and bool(np.max(np.abs(a - b), initial=0.0) <= tol)


@dataclass
class SetFunctionReport:
    n: int
    galign_super_violations: list
    fermat_super_violations: list
    fermat_sub_violations: list
    values_galign: dict
    values_fermat: dict

    @property
    def galign_supermodular(self) -> bool:
        return not self.galign_super_violations

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "galign_supermodular": self.galign_supermodular,
            "galign_super_violations": len(self.galign_super_violations),
            "fermat_super_violations": len(self.fermat_super_violations),
            "fermat_sub_violations": len(self.fermat_sub_violations),
            "fermat_examples": {
                "super": [list(v) for v in self.fermat_super_violations[:5]],
                "sub": [list(v) for v in self.fermat_sub_violations[:5]],
            },
        }


def _subsets(n: int) -> list[tuple[int, ...]]:
    return [s for r in range(n + 1) for s in itertools.combinations(range(n), r)]


def set_function_report(gs, tol: float = 1e-9) -> SetFunctionReport:
    """Evaluate spectral G-align and Fermat on every subset and test (super/sub)modularity.

    A set function ``f`` is supermodular when ``f(S+x) - f(S) <= f(T+x) - f(T)``
    for all ``S`` contained in ``T`` and ``x`` outside ``T``; submodular with the
    inequality reversed. Violations are recorded as ``(S, T, x, gain_S, gain_T)``.
    """
    L = spectra(gs)
    n = L.shape[0]
    if n > SET_FUNCTION_MAX_N:
        raise CapExceededError(f"set_function_report needs n <= {SET_FUNCTION_MAX_N}")
    subsets = _subsets(n)
    fg = {s: _pairwise_spectral(L[list(s)]) for s in subsets}
    ff = {s: (_fermat_from_spectra(L[list(s)], 1e-12, 100000)[1] if len(s) > 1 else 0.0)
          for s in subsets}
    g_super, f_super, f_sub = [], [], []
    for T in subsets:
        Tset = set(T)
        for x in range(n):
            if x in Tset:
                continue
            Tx = tuple(sorted(Tset | {x}))
            gain_g_T = fg[Tx] - fg[T]
            gain_f_T = ff[Tx] - ff[T]
            for r in range(len(T) + 1):
                for S in itertools.combinations(T, r):
                    Sx = tuple(sorted(set(S) | {x}))
                    gain_g_S = fg[Sx] - fg[S]
                    gain_f_S = ff[Sx] - ff[S]
                    if gain_g_S > gain_g_T + tol:
                        g_super.append((S, T, x, gain_g_S, gain_g_T))
                    if gain_f_S > gain_f_T + tol:
                        f_super.append((S, T, x, gain_f_S, gain_f_T))
                    if gain_f_S < gain_f_T - tol:
                        f_sub.append((S, T, x, gain_f_S, gain_f_T))
    return SetFunctionReport(n, g_super, f_super, f_sub, fg, ff)


def multidistance(method: str, gs, norm: NormKind | str = FROBENIUS, cfg=None) -> MultiDistanceResult:
    """Dispatch by method id (``galign-bruteforce``, ``scg``, ...)."""
    from .relax import d_cg, d_scg

    key = method.replace("-", "_")
    if key == "galign_bruteforce":
        return galign_bruteforce(gs, norm)
    if key == "galign_spectral":
        return galign_spectral(gs)
    if key == "fermat_spectral":
        return fermat_spectral(gs)
    if key == "fermat_bruteforce":
        return fermat_bruteforce(gs, norm=norm)
    if key in ("scg", "d_scg", "cg", "d_cg"):
        solver = d_scg if key in ("scg", "d_scg") else d_cg
        res = solver(gs, norm, cfg)
        return MultiDistanceResult(res.value, "relaxed", extra={
            "blocks": res.to_dict()["blocks"], "diagnostics": res.diagnostics()})
    raise ValueError(f"unknown method {method!r}")


METHODS: Sequence[str] = ("galign-bruteforce", "galign-spectral", "fermat-spectral",
                          "fermat-bruteforce", "scg", "cg")
