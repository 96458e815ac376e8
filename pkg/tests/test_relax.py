import numpy as np
import pytest

from gmetric.consistency import block_matrix, min_eigenvalue, random_consistent_tuple
from gmetric.graphs import GraphSet, permute_graph, random_graph, random_graph_set
from gmetric.linalg import as_norm, is_doubly_stochastic, nuclear_norm
from gmetric.multidist import galign_bruteforce
from gmetric.pscore import sb_distance_exact
from gmetric.relax import SolverConfig, d_cg, d_scg, relaxation_gap, solve_pair

from conftest import E3, K3, P3

cp = pytest.importorskip("cvxpy")


def _cvx_norm(M, nk):
    if nk.kind == "frobenius":
        return cp.norm(M, "fro")
    if nk.kind == "operator2":
        return cp.sigma_max(M)
    return cp.pnorm(cp.vec(M, order="C"), nk.p)


def cvx_relaxation(graphs, kind, norm="frobenius"):
    """Reference value from a conic solver on the same convex program."""
    nk = as_norm(norm)
    n, m = len(graphs), graphs[0].shape[0]
    X = cp.Variable((n * m, n * m), symmetric=(kind == "scg"))
    cons, obj = [], 0
    for i in range(n):
        for j in range(n):
            B = X[i * m:(i + 1) * m, j * m:(j + 1) * m]
            if i == j:
                cons.append(B == np.eye(m))
                continue
            cons += [B >= 0, cp.sum(B, axis=0) == 1, cp.sum(B, axis=1) == 1]
            obj += 0.5 * _cvx_norm(graphs[i] @ B - B @ graphs[j], nk)
    cons.append(X >> 0 if kind == "scg" else cp.normNuc(X) <= n * m)
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


def cvx_pair(A, B, D, norm):
    nk = as_norm(norm)
    m = A.shape[0]
    P = cp.Variable((m, m))
    prob = cp.Problem(cp.Minimize(_cvx_norm(A @ P - P @ B, nk) + cp.sum(cp.multiply(P, D))),
                      [P >= 0, cp.sum(P, axis=0) == 1, cp.sum(P, axis=1) == 1])
    prob.solve(solver="CLARABEL")
    return prob.value


def _check_blocks(res, n, tol):
    for (i, j), P in res.blocks.items():
        assert P.kind == "doubly_stochastic"
        assert is_doubly_stochastic(P.matrix, 1e-9)
        if i == j:
            np.testing.assert_array_equal(P.matrix, np.eye(P.m))
    assert len(res.blocks) == n * n


@pytest.mark.parametrize("seed", range(4))
def test_scg_cg_match_conic_solver(seed):
    gs = random_graph_set(np.random.default_rng(seed), 3, 4)
    graphs = list(gs.graphs)
    r = d_scg(gs)
    assert r.converged
    assert r.value == pytest.approx(cvx_relaxation(graphs, "scg"), abs=1e-5)
    _check_blocks(r, 3, 1e-5)
    assert r.min_eig >= -1e-5
    r = d_cg(gs)
    assert r.converged
    assert r.value == pytest.approx(cvx_relaxation(graphs, "cg"), abs=1e-5)
    _check_blocks(r, 3, 1e-5)
    assert r.nuclear_norm <= 12 + 1e-5


@pytest.mark.parametrize("norm", ["operator2", "p:1", "p:3", "p:inf"])
def test_other_norms_match_conic_solver(norm):
    rng = np.random.default_rng(7)
    gs = random_graph_set(rng, 3, 4)
    A, B = gs[0], gs[1]
    D = 0.3 * rng.random((4, 4))
    v = solve_pair(A, B, D, norm).value
    assert v == pytest.approx(cvx_pair(A, B, D, norm), abs=1e-5)
    assert d_scg(gs, norm).value == pytest.approx(cvx_relaxation(list(gs.graphs), "scg", norm), abs=1e-5)


def test_identical_graphs(rng):
    A = random_graph(rng, 4)
    for solver in (d_scg, d_cg):
        r = solver([A, A, A])
        assert r.value <= 1e-5
        for P in r.blocks.values():
            np.testing.assert_allclose(P.matrix, np.eye(4), atol=1e-6)


def test_sandwich_small():
    exact = galign_bruteforce([P3, K3, E3]).value
    assert d_scg([P3, K3, E3]).value <= exact + 1e-5
    assert d_cg([P3, K3, E3]).value <= exact + 1e-5


def test_n2_cross_solver(rng):
    for _ in range(3):
        A, B = random_graph(rng, 4), random_graph(rng, 4)
        exact = sb_distance_exact(A, B)[0]
        pair = solve_pair(A, B).value
        scg = d_scg([A, B]).value
        assert -1e-9 <= scg <= exact + 1e-5
        assert pair <= scg + 1e-5


def test_isomorphic_family(rng):
    A = random_graph(rng, 4)
    gs = [A, permute_graph(A, rng.permutation(4)), permute_graph(A, rng.permutation(4))]
    rep = relaxation_gap(gs)
    assert rep.exact == pytest.approx(0, abs=1e-12)
    assert rep.scg <= 1e-5 and rep.cg <= 1e-5


def test_gap_report():
    rep = relaxation_gap([P3, K3])
    assert rep.scg <= np.sqrt(2) + 1e-5
    assert rep.ordered
    d = rep.to_dict()
    assert d["gap_scg"] >= -1e-5
    assert relaxation_gap([P3, K3], "p:1").spectral == -np.inf


def test_consistent_tuple_nuclear_feasible(rng):
    t = random_consistent_tuple(rng, 3, 4)
    P = block_matrix(t)
    assert nuclear_norm(P) == pytest.approx(12, abs=1e-9)
    assert min_eigenvalue(P) >= -1e-9


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(rho=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    with pytest.raises(ValueError):
        SolverConfig(init="zeros")


def test_nonconvergence_flagged():
    gs = random_graph_set(np.random.default_rng(1), 3, 4)
    r = d_scg(gs, cfg=SolverConfig(max_iter=2, adapt_rho=False))
    assert not r.converged
    # the returned blocks are still feasible
    _check_blocks(r, 3, 1e-5)
    assert r.best_trace == sorted(r.best_trace, reverse=True)


def test_random_init_same_value():
    gs = random_graph_set(np.random.default_rng(2), 3, 3)
    a = d_scg(gs).value
    b = d_scg(gs, cfg=SolverConfig(init="random", seed=5)).value
    assert a == pytest.approx(b, abs=1e-5)


def test_deterministic():
    gs = random_graph_set(np.random.default_rng(3), 3, 3)
    assert d_cg(gs).to_json() == d_cg(gs).to_json()
