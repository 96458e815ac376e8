import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmetric.graphs import permute_graph, random_graph
from gmetric.linalg import is_doubly_stochastic
from gmetric.pscore import (Alignment, CapExceededError, all_permutations, perm_matrix, pscore,
                            random_alignment, sb_distance_exact, sb_distance_relaxed, score_table,
                            verify_pscore_axioms)

from conftest import K3, P3

SQRT2 = np.sqrt(2.0)


def brute_sb(A, B, D=None, norm="fro"):
    # independent oracle: loop over itertools permutations
    m = A.shape[0]
    D = np.zeros((m, m)) if D is None else D
    best = np.inf
    for perm in itertools.permutations(range(m)):
        P = np.zeros((m, m))
        P[np.arange(m), perm] = 1
        v = np.linalg.norm(A @ P - P @ B, norm) + np.trace(P.T @ D)
        best = min(best, v)
    return best


def test_pscore_examples():
    assert pscore(K3, K3, np.eye(3)) == 0
    assert pscore(P3, K3, np.eye(3)) == pytest.approx(SQRT2)
    for perm in itertools.permutations(range(3)):
        assert pscore(P3, K3, perm_matrix(perm)) == pytest.approx(SQRT2)


def test_pscore_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        pscore(K3, np.zeros((4, 4)), np.eye(3))


def test_score_table_order():
    perms = all_permutations(3)
    assert perms[0].tolist() == [0, 1, 2] and perms[-1].tolist() == [2, 1, 0]
    A, B = P3, np.diag([1.0, 2.0, 3.0])
    table = score_table(A, B)
    for k, p in enumerate(perms):
        assert table[k] == pytest.approx(pscore(A, B, perm_matrix(p)))


def test_sb_exact_examples(rng):
    v, P = sb_distance_exact(K3, K3)
    assert v == 0 and P == Alignment.identity(3)
    v, P = sb_distance_exact(P3, K3)
    assert v == pytest.approx(SQRT2)
    # all six tie, first in lexicographic order wins
    assert P.as_permutation() == (0, 1, 2)
    A = random_graph(rng, 6)
    perm = rng.permutation(6)
    v, P = sb_distance_exact(A, permute_graph(A, perm))
    assert v == pytest.approx(0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5), st.sampled_from(["fro", 2, "p1"]))
def test_sb_exact_matches_loop(seed, m, norm):
    rng = np.random.default_rng(seed)
    A, B = random_graph(rng, m), random_graph(rng, m)
    D = rng.random((m, m))
    ours = {"fro": "frobenius", 2: "operator2", "p1": "p:1"}[norm]
    if norm == "p1":
        oracle = min(np.abs(A @ P - P @ B).sum() + np.trace(P.T @ D)
                     for P in (np.eye(m)[list(p)] for p in itertools.permutations(range(m))))
    else:
        oracle = brute_sb(A, B, D, norm)
    assert sb_distance_exact(A, B, D, ours)[0] == pytest.approx(oracle, abs=1e-12)


def test_sb_exact_cap_and_bias_validation():
    with pytest.raises(CapExceededError):
        sb_distance_exact(np.zeros((9, 9)), np.zeros((9, 9)))
    with pytest.raises(ValueError):
        sb_distance_exact(K3, K3, -np.ones((3, 3)))


def test_sb_relaxed_examples(rng):
    v, P = sb_distance_relaxed(K3, K3)
    assert v <= 1e-6
    v, P = sb_distance_relaxed(P3, K3)
    assert v <= SQRT2 + 1e-5
    assert P.kind == "doubly_stochastic" and is_doubly_stochastic(P.matrix, 1e-9)
    A = random_graph(rng, 5)
    v, _ = sb_distance_relaxed(A, permute_graph(A, rng.permutation(5)))
    assert v <= 1e-5


def test_alignment_validation():
    with pytest.raises(ValueError):
        Alignment(np.ones((3, 3)), "permutation")
    with pytest.raises(ValueError):
        Alignment(np.ones((3, 3)), "orthogonal")
    Alignment(np.ones((3, 3)) / 3, "doubly_stochastic")
    with pytest.raises(ValueError):
        Alignment(np.ones((3, 3)) / 3, "doubly_stochastic").inverse()
    with pytest.raises(ValueError):
        Alignment(np.eye(2), "bogus")


def test_alignment_inverse_and_perm():
    a = Alignment.from_permutation([2, 0, 1])
    assert a.as_permutation() == (2, 0, 1)
    np.testing.assert_array_equal(a.matrix @ a.inverse().matrix, np.eye(3))
    assert a.matrix[0, 2] == 1
    with pytest.raises(ValueError):
        a.matrix[0, 0] = 5


@pytest.mark.parametrize("kind", ["permutation", "orthogonal", "doubly_stochastic"])
def test_random_alignment_kinds(kind, rng):
    for _ in range(10):
        a = random_alignment(rng, 5, kind)
        assert a.kind == kind


@pytest.mark.parametrize("kind", ["permutation", "orthogonal", "doubly_stochastic"])
@pytest.mark.parametrize("norm", ["frobenius", "operator2"])
def test_pscore_axioms(kind, norm):
    report = verify_pscore_axioms(norm, kind, samples=1000, seed=3)
    assert report.ok, report.violations[:3]


@pytest.mark.parametrize("norm", ["p:1", "p:3", "p:inf"])
def test_pscore_axioms_entrywise_permutations(norm):
    # entrywise norms are invariant under permutations only
    assert verify_pscore_axioms(norm, "permutation", samples=300, seed=4).ok
