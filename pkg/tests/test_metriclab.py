import itertools

import numpy as np
import pytest

from gmetric.graphs import GraphSet, random_graph, random_graph_set
from gmetric.metriclab import (DISTANCES, check_generalized_triangle, check_n_metric_axioms,
                               estimate_c_constant, estimate_diameter, get_distance,
                               pairwise_distance_matrix)


def test_registry():
    assert set(DISTANCES) == {"galign_bruteforce", "galign_spectral", "fermat_spectral",
                              "fermat_bruteforce", "d_scg", "d_cg"}
    assert get_distance("galign-spectral").id == "galign_spectral"
    assert get_distance("scg").id == "d_scg"
    with pytest.raises(ValueError):
        get_distance("nope")
    assert DISTANCES["d_scg"].tol > DISTANCES["galign_spectral"].tol


def test_caps_enforced():
    with pytest.raises(ValueError):
        check_n_metric_axioms("fermat_bruteforce", 3, 5, 1)
    with pytest.raises(ValueError):
        check_n_metric_axioms("galign_bruteforce", 4, 6, 1)


def test_triangle_identical(rng):
    A = random_graph(rng, 4)
    lhs, rhs, holds = check_generalized_triangle("galign_spectral", [A] * 3, A)
    assert lhs == rhs == 0 and holds


def test_triangle_bruteforce_n4(rng):
    for _ in range(5):
        graphs = [random_graph(rng, 3) for _ in range(5)]
        lhs, rhs, holds = check_generalized_triangle("galign_bruteforce", graphs[:4], graphs[4])
        assert holds


def test_triangle_spectral_expansion(rng):
    graphs = [random_graph(rng, 5) for _ in range(5)]
    L = [np.linalg.eigvalsh(g) for g in graphs]
    tup, extra = L[:4], L[4]

    def d(lams):
        return sum(np.linalg.norm(a - b) for a, b in itertools.combinations(lams, 2))

    expected = sum(d(tup[:i] + [extra] + tup[i + 1:]) for i in range(4))
    lhs, rhs, _ = check_generalized_triangle("galign_spectral", graphs[:4], graphs[4])
    assert lhs == pytest.approx(d(tup), abs=1e-10)
    assert rhs == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("method,n,m,trials", [
    ("galign_bruteforce", 3, 3, 200),
    ("fermat_spectral", 3, 4, 200),
    ("fermat_bruteforce", 3, 3, 50),
    ("d_scg", 3, 3, 10),
    ("d_cg", 3, 3, 10),
])
def test_axiom_suites(method, n, m, trials):
    rep = check_n_metric_axioms(method, n, m, trials, seed=5)
    assert rep.ok, rep.violations[:3]
    assert rep.to_dict()["violation_counts"]["triangle"] == 0


def test_zero_trials():
    rep = check_n_metric_axioms("galign_spectral", 3, 4, 0)
    assert rep.ok and rep.trials == 0 and rep.max_violation == 0


def test_pool_and_jobs_deterministic(rng):
    pool = list(random_graph_set(rng, 6, 4).graphs)
    a = check_n_metric_axioms("galign_spectral", 3, 4, 20, seed=1, pool=pool)
    b = check_n_metric_axioms("galign_spectral", 3, 4, 20, seed=1, pool=pool, jobs=2)
    assert a.to_dict() == b.to_dict()
    c = estimate_c_constant("galign_spectral", 3, 4, 30, seed=2)
    d = estimate_c_constant("galign_spectral", 3, 4, 30, seed=2, jobs=2)
    assert c.to_dict() == d.to_dict()


def test_detects_broken_distance():
    # squared spectral distance is not an n-metric
    def squared(graphs):
        L = [np.linalg.eigvalsh(g) for g in graphs]
        return sum(np.sum((a - b) ** 2) for a, b in itertools.combinations(L, 2))
    rep = check_n_metric_axioms(squared, 2, 5, 200, seed=0)
    assert rep.counts()["triangle"] > 0


def test_c_constant_skips_degenerate(rng):
    A = random_graph(rng, 4)
    est = estimate_c_constant("galign_spectral", 3, 4, 200, seed=0, pool=[A])
    assert est.skipped == 200 and est.max_ratio == 0


def test_c_constant_fermat_range():
    est = estimate_c_constant("fermat_spectral", 3, 4, 300, seed=1)
    assert 0.5 - 1e-9 <= est.max_ratio <= 1 + 1e-8


def test_diameter_examples(rng):
    A = random_graph(rng, 5)
    d = estimate_diameter(GraphSet([A] * 4), "spectral", 2, seed=0)
    assert d.delta_hat == d.exact_delta == 0 and d.ratio == 1
    gs = random_graph_set(rng, 10, 5)
    d = estimate_diameter(gs, "spectral", 1000, seed=0)
    assert d.ratio == 1 and d.evaluations == 45
    with pytest.raises(ValueError):
        estimate_diameter(GraphSet([A]), "spectral", 3)


def test_diameter_exact_distance(rng):
    gs = random_graph_set(rng, 6, 4)
    D = pairwise_distance_matrix(gs, "exact")
    S = pairwise_distance_matrix(gs, "spectral")
    assert np.all(S <= D + 1e-9)
    assert estimate_diameter(gs, "exact", 100).ratio == 1


def test_diameter_pair_not_within_half():
    # no third graph sits within half the diameter of both extreme members
    for seed in range(20):
        gs = random_graph_set(np.random.default_rng(seed), 12, 6)
        D = pairwise_distance_matrix(gs)
        i, j = np.unravel_index(np.argmax(D), D.shape)
        delta = D[i, j]
        for k in range(12):
            if k not in (i, j):
                assert not (D[i, k] < delta / 2 and D[j, k] < delta / 2)
