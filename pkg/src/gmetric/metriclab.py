"""Randomized checks of the generalized metric axioms and related estimates.

Distances are looked up by id in :data:`DISTANCES` and treated as opaque
callables on a list of graphs. Every trial draws from its own seeded
substream, so reports do not depend on how trials are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graphs import GraphSet, random_graph
from .linalg import FROBENIUS, as_norm, sorted_spectrum
from .multidist import (FERMAT_MAX_M, FERMAT_MAX_N, GALIGN_CAP, fermat_bruteforce,
                        fermat_spectral, galign_bruteforce, galign_spectral)
from .pscore import sb_distance_exact
from .relax import SolverConfig, d_cg, d_scg

DEFAULT_TOL = 1e-7


@dataclass(frozen=True)
class DistanceMethod:
    id: str
    fn: Callable[[list], float]
    # the tolerance the axiom suite should use for this method
    tol: float = DEFAULT_TOL
    max_m: int | None = None
    max_n: int | None = None

    def __call__(self, graphs) -> float:
        return self.fn(list(graphs))

    def check_size(self, n: int, m: int) -> None:
        if self.max_n is not None and n > self.max_n:
            raise ValueError(f"{self.id} supports n <= {self.max_n}")
        if self.max_m is not None and m > self.max_m:
            raise ValueError(f"{self.id} supports m <= {self.max_m}")
        if self.id == "galign_bruteforce" and math.factorial(m) ** max(n - 1, 0) > GALIGN_CAP:
            raise ValueError("galign_bruteforce enumeration cap exceeded")


_RELAXED_CFG = SolverConfig()


def _scg(graphs):
    return d_scg(graphs, FROBENIUS, _RELAXED_CFG).value


def _cg(graphs):
    return d_cg(graphs, FROBENIUS, _RELAXED_CFG).value


def _galign_bruteforce(graphs):
    return galign_bruteforce(graphs).value


def _galign_spectral(graphs):
    return galign_spectral(graphs).value


def _fermat_spectral(graphs):
    return fermat_spectral(graphs).value


def _fermat_bruteforce(graphs):
    return fermat_bruteforce(graphs).value


DISTANCES: dict[str, DistanceMethod] = {
    "galign_bruteforce": DistanceMethod("galign_bruteforce", _galign_bruteforce, 1e-9),
    "galign_spectral": DistanceMethod("galign_spectral", _galign_spectral, 1e-8),
    "fermat_spectral": DistanceMethod("fermat_spectral", _fermat_spectral, 1e-7),
    "fermat_bruteforce": DistanceMethod("fermat_bruteforce", _fermat_bruteforce, 1e-9,
                                        FERMAT_MAX_M, FERMAT_MAX_N + 1),
    # solver inexactness: ten times the primal tolerance
    "d_scg": DistanceMethod("d_scg", _scg, 10 * _RELAXED_CFG.tol_primal),
    "d_cg": DistanceMethod("d_cg", _cg, 10 * _RELAXED_CFG.tol_primal),
}

_ALIASES = {"scg": "d_scg", "cg": "d_cg"}


def get_distance(dist) -> DistanceMethod:
    if isinstance(dist, DistanceMethod):
        return dist
    if callable(dist):
        return DistanceMethod(getattr(dist, "__name__", "custom"), dist)
    key = str(dist).replace("-", "_")
    key = _ALIASES.get(key, key)
    if key not in DISTANCES:
        raise ValueError(f"unknown distance method {dist!r}; choose from {sorted(DISTANCES)}")
    return DISTANCES[key]


@dataclass
class MetricReport:
    method: str
    n: int
    m: int
    trials: int
    tol: float
    violations: list = field(default_factory=list)
    max_violation: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def counts(self) -> dict:
        out = {p: 0 for p in ("nonnegativity", "self_identity", "symmetry", "triangle")}
        for v in self.violations:
            out[v[1]] += 1
        return out

    def to_dict(self) -> dict:
        return {
            "method": self.method, "n": self.n, "m": self.m, "trials": self.trials,
            "tol": self.tol, "max_violation": self.max_violation,
            "violation_counts": self.counts(),
            "violations": [list(v) for v in self.violations],
        }


def _graph_tuple(rng: np.random.Generator, count: int, m: int, pool=None) -> list:
    if pool is not None:
        return [pool[k] for k in rng.integers(len(pool), size=count)]
    return [random_graph(rng, m) for _ in range(count)]


def check_generalized_triangle(dist, gs, extra, tol: float = DEFAULT_TOL) -> tuple[float, float, bool]:
    """``d(A_1..A_n) <= sum_i d(A_1..A_n with A_i replaced by extra)``.

    Returns ``(lhs, rhs, lhs <= rhs + tol)``.
    """
    method = get_distance(dist)
    graphs = list(gs.graphs) if isinstance(gs, GraphSet) else list(gs)
    lhs = method(graphs)
    rhs = 0.0
    for i in range(len(graphs)):
        replaced = graphs[:i] + [np.asarray(extra, dtype=float)] + graphs[i + 1:]
        rhs += method(replaced)
    return lhs, rhs, lhs <= rhs + tol


def _axiom_trial(args) -> list:
    method_id, n, m, tol, seed_seq, pool = args
    method = get_distance(method_id)
    rng = np.random.default_rng(seed_seq)
    graphs = _graph_tuple(rng, n + 1, m, pool)
    tup, extra = graphs[:n], graphs[n]
    trial = int(seed_seq.spawn_key[-1]) if seed_seq.spawn_key else 0
    out = []

    d = method(tup)
    if d < -tol:
        out.append((trial, "nonnegativity", d, 0.0, -d))
    same = method([tup[0]] * n)
    if abs(same) > tol:
        out.append((trial, "self_identity", same, 0.0, abs(same)))
    sigma = rng.permutation(n)
    d_sigma = method([tup[k] for k in sigma])
    if abs(d_sigma - d) > tol * (1.0 + abs(d)):
        out.append((trial, "symmetry", d_sigma, d, abs(d_sigma - d)))
    lhs, rhs, _ = check_generalized_triangle(method, tup, extra, tol)
    if lhs > rhs + tol * (1.0 + abs(rhs)):
        out.append((trial, "triangle", lhs, rhs, lhs - rhs))
    return out


def _run(fn, tasks, jobs: int) -> list:
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [fn(t) for t in tasks]


def check_n_metric_axioms(dist, n: int, m: int, trials: int, seed: int = 0,
                          tol: float | None = None, jobs: int = 1,
                          pool: Sequence | None = None) -> MetricReport:
    """Random-tuple test of nonnegativity, self-identity, symmetry and the
    generalized triangle inequality.

    Tuples mix generator models (or are drawn from ``pool`` when given).
    Violations are ``(trial, property, lhs, rhs, margin)``.
    """
    method = get_distance(dist)
    method.check_size(n + (1 if method.id == "fermat_bruteforce" else 0), m)
    tol = method.tol if tol is None else tol
    if pool is not None:
        pool = [np.asarray(g, dtype=float) for g in pool]
        m = pool[0].shape[0]
    seqs = np.random.SeedSequence(seed).spawn(trials)
    tasks = [(method.id if method.id in DISTANCES else method, n, m, tol, s, pool) for s in seqs]
    results = _run(_axiom_trial, tasks, jobs)
    report = MetricReport(method.id, n, m, trials, tol)
    for r in results:
        report.violations.extend(r)
    report.max_violation = max((v[4] for v in report.violations), default=0.0)
    return report


@dataclass
class CnEstimate:
    method: str
    n: int
    m: int
    trials: int
    max_ratio: float
    argmax: dict = field(default_factory=dict)
    skipped: int = 0

    def to_dict(self) -> dict:
        return {"method": self.method, "n": self.n, "m": self.m, "trials": self.trials,
                "max_ratio": self.max_ratio, "argmax": self.argmax, "skipped": self.skipped}


def _ratio_trial(args):
    method_id, n, m, seed_seq, pool = args
    method = get_distance(method_id)
    rng = np.random.default_rng(seed_seq)
    if pool is None and rng.random() < 0.5:
        # repeated members make near-extremal instances common
        pool = [random_graph(rng, m) for _ in range(int(rng.integers(2, n + 2)))]
    graphs = _graph_tuple(rng, n + 1, m, pool)
    lhs, rhs, _ = check_generalized_triangle(method, graphs[:n], graphs[n])
    trial = int(seed_seq.spawn_key[-1]) if seed_seq.spawn_key else 0
    return trial, lhs, rhs


def estimate_c_constant(dist, n: int, m: int, trials: int, seed: int = 0,
                        jobs: int = 1, pool: Sequence | None = None) -> CnEstimate:
    """Largest observed ``d(A_1..A_n) / sum_i d(A^i)`` over random instances.

    Instances with a denominator below ``1e-12`` are skipped and counted.
    """
    method = get_distance(dist)
    method.check_size(n + (1 if method.id == "fermat_bruteforce" else 0), m)
    if pool is not None:
        pool = [np.asarray(g, dtype=float) for g in pool]
        m = pool[0].shape[0]
    seqs = np.random.SeedSequence(seed).spawn(trials)
    tasks = [(method.id if method.id in DISTANCES else method, n, m, s, pool) for s in seqs]
    est = CnEstimate(method.id, n, m, trials, 0.0)
    for trial, lhs, rhs in _run(_ratio_trial, tasks, jobs):
        if rhs < 1e-12:
            est.skipped += 1
            continue
        ratio = lhs / rhs
        if ratio > est.max_ratio:
            est.max_ratio = ratio
            est.argmax = {"trial": trial, "lhs": lhs, "rhs": rhs}
    return est


PAIRWISE = ("spectral", "exact")


def pairwise_distance_matrix(gs, dist: str = "spectral", norm=FROBENIUS) -> np.ndarray:
    graphs = list(gs.graphs) if isinstance(gs, GraphSet) else list(gs)
    N = len(graphs)
    D = np.zeros((N, N))
    if dist == "spectral":
        L = np.array([sorted_spectrum(g) for g in graphs])
        D = np.linalg.norm(L[:, None, :] - L[None, :, :], axis=-1)
    elif dist == "exact":
        norm = as_norm(norm)
        for i in range(N):
            for j in range(i + 1, N):
                D[i, j] = D[j, i] = sb_distance_exact(graphs[i], graphs[j], norm=norm)[0]
    else:
        raise ValueError(f"pairwise method must be one of {PAIRWISE}")
    return D


@dataclass
class DiameterEstimate:
    delta_hat: float
    exact_delta: float
    ratio: float
    evaluations: int
    pair: tuple = ()

    def to_dict(self) -> dict:
        return {"delta_hat": self.delta_hat, "exact_delta": self.exact_delta,
                "ratio": self.ratio, "evaluations": self.evaluations, "pair": list(self.pair)}


def estimate_diameter(gs, dist: str = "spectral", budget: int | None = None, seed: int = 0,
                      D: np.ndarray | None = None) -> DiameterEstimate:
    """Diameter from ``budget`` random distinct pairs versus all pairs.

    With a metric, sampling ``O(|S|)`` pairs finds a pair at distance at
    least half the diameter with good probability. A budget at least the
    number of pairs evaluates every pair.
    """
    N = len(gs)
    if N < 2:
        raise ValueError("need at least two graphs")
    if D is None:
        D = pairwise_distance_matrix(gs, dist)
    iu = np.triu_indices(N, 1)
    values = D[iu]
    npairs = values.size
    budget = 2 * N if budget is None else int(budget)
    rng = np.random.default_rng(seed)
    k = min(max(budget, 1), npairs)
    picked = np.arange(npairs) if k == npairs else rng.choice(npairs, size=k, replace=False)
    best = picked[np.argmax(values[picked])]
    delta_hat = float(values[best])
    delta = float(values.max())
    ratio = 1.0 if delta == 0 else delta_hat / delta
    return DiameterEstimate(delta_hat, delta, ratio, int(k), (int(iu[0][best]), int(iu[1][best])))
