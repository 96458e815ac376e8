"""Graph matrices, graph sets, seeded generators and the JSON file format.

A graph is a real symmetric ``(m, m)`` array. Weighted graphs are allowed;
generators emit 0/1 adjacency with a zero diagonal. All graphs of a set
share the same ``m``; padding smaller graphs with isolated nodes is left to
the caller (see :func:`add_isolated_nodes`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import networkx as nx
import numpy as np


class GraphSetError(ValueError):
    """Invalid graph or graph-set input."""


MODELS = (
    "erdos_renyi",
    "barabasi_albert",
    "power_law_tree",
    "regular",
    "small_world",
    "empty",
    "complete",
    "path",
    "cycle",
    "star",
)

# models used when drawing random tuples for property checks
RANDOM_MODELS = ("erdos_renyi", "barabasi_albert", "power_law_tree", "regular", "small_world")


def validate_omega(A, tol: float = 0.0) -> bool:
    """True iff ``max |A - A^T| <= tol``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.size == 0:
        return True
    return bool(np.max(np.abs(A - A.T)) <= tol)


def as_graph(A, tol: float = 0.0) -> np.ndarray:
    """Validate ``A`` as a graph matrix and return a read-only float copy."""
    try:
        G = np.array(A, dtype=float)
    except (TypeError, ValueError) as exc:
        raise GraphSetError(f"parse error: {exc}") from None
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise GraphSetError(f"parse error: adjacency must be square, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise GraphSetError("non-finite entries")
    if not validate_omega(G, tol):
        raise GraphSetError("asymmetric matrix")
    G.flags.writeable = False
    return G


@dataclass(frozen=True)
class GraphSet:
    """An ordered collection of equal-sized graphs with string labels."""

    graphs: tuple
    ids: tuple

    def __init__(self, graphs: Sequence, ids: Sequence[str] | None = None):
        gs = tuple(as_graph(g) for g in graphs)
        if ids is None:
            ids = tuple(f"g{i}" for i in range(len(gs)))
        ids = tuple(str(i) for i in ids)
        if len(ids) != len(gs):
            raise GraphSetError("ids and graphs differ in length")
        sizes = {g.shape[0] for g in gs}
        if len(sizes) > 1:
            raise GraphSetError(f"size mismatch: graphs have sizes {sorted(sizes)}")
        object.__setattr__(self, "graphs", gs)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return len(self.graphs)

    @property
    def m(self) -> int:
        return self.graphs[0].shape[0] if self.graphs else 0

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]

    def __iter__(self):
        return iter(self.graphs)

    def subset(self, idx: Sequence[int]) -> "GraphSet":
        return GraphSet([self.graphs[i] for i in idx], [self.ids[i] for i in idx])

    def __eq__(self, other):
        if not isinstance(other, GraphSet):
            return NotImplemented
        return (self.ids == other.ids and len(self.graphs) == len(other.graphs)
                and all(np.array_equal(a, b) for a, b in zip(self.graphs, other.graphs)))

    def __hash__(self):
        return hash((self.ids, tuple(g.tobytes() for g in self.graphs)))


def _to_matrix(g: nx.Graph, m: int) -> np.ndarray:
    A = nx.to_numpy_array(g, nodelist=range(m), dtype=float, weight=None)
    np.fill_diagonal(A, 0.0)
    return A


def generate_graph(model: str, m: int, params: dict | None = None, seed: int = 0) -> np.ndarray:
    """Deterministic 0/1 adjacency matrix of a graph from a named model.

    Parameters per model (defaults in brackets): ``erdos_renyi`` p [0.5];
    ``barabasi_albert`` k [2, capped at m-1]; ``power_law_tree`` gamma [3];
    ``regular`` d [2]; ``small_world`` k [2], p [0.3]. The deterministic
    models take none.
    """
    params = dict(params or {})
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise GraphSetError("m must be a positive integer")
    m = int(m)
    seed = int(seed)
    if model == "empty":
        A = np.zeros((m, m))
    elif model == "complete":
        A = np.ones((m, m)) - np.eye(m)
    elif model == "path":
        A = _to_matrix(nx.path_graph(m), m)
    elif model == "cycle":
        if m < 3:
            raise GraphSetError("a cycle needs m >= 3")
        A = _to_matrix(nx.cycle_graph(m), m)
    elif model == "star":
        A = _to_matrix(nx.star_graph(m - 1), m)
    elif model == "erdos_renyi":
        p = float(params.get("p", 0.5))
        if not 0.0 <= p <= 1.0:
            raise GraphSetError("edge probability p must lie in [0, 1]")
        A = _to_matrix(nx.gnp_random_graph(m, p, seed=seed), m)
    elif model == "barabasi_albert":
        k = int(params.get("k", min(2, max(m - 1, 1))))
        if m < 2 or not 1 <= k < m:
            raise GraphSetError("barabasi_albert needs 1 <= k < m")
        A = _to_matrix(nx.barabasi_albert_graph(m, k, seed=seed), m)
    elif model == "power_law_tree":
        gamma = float(params.get("gamma", 3.0))
        if gamma <= 1:
            raise GraphSetError("power_law_tree needs gamma > 1")
        if m == 1:
            A = np.zeros((1, 1))
        else:
            A = _to_matrix(nx.random_powerlaw_tree(m, gamma=gamma, seed=seed, tries=10000), m)
    elif model == "regular":
        d = int(params.get("d", 2))
        if not 0 <= d < m or (m * d) % 2:
            raise GraphSetError("regular needs 0 <= d < m and m*d even")
        A = _to_matrix(nx.random_regular_graph(d, m, seed=seed), m)
    elif model == "small_world":
        k = int(params.get("k", 2))
        p = float(params.get("p", 0.3))
        if not 0.0 <= p <= 1.0 or not 0 <= k < m:
            raise GraphSetError("small_world needs 0 <= k < m and p in [0, 1]")
        A = _to_matrix(nx.watts_strogatz_graph(m, k, p, seed=seed), m)
    else:
        raise GraphSetError(f"unknown model {model!r}")
    return as_graph(A)


def random_graph(rng: np.random.Generator, m: int, models: Sequence[str] = RANDOM_MODELS) -> np.ndarray:
    """Draw a graph from a randomly chosen model, with valid random parameters."""
    model = models[rng.integers(len(models))]
    seed = int(rng.integers(2**31 - 1))
    if model == "erdos_renyi":
        params = {"p": float(rng.uniform(0.2, 0.8))}
    elif model == "barabasi_albert":
        params = {"k": int(rng.integers(1, max(m - 1, 1) + 1))} if m > 1 else None
        if m < 2:
            model, params = "empty", None
    elif model == "regular":
        choices = [d for d in range(m) if (m * d) % 2 == 0]
        params = {"d": int(choices[rng.integers(len(choices))])}
    elif model == "small_world":
        params = {"k": int(rng.integers(0, m)), "p": float(rng.uniform(0.0, 0.5))}
    else:
        params = None
    return generate_graph(model, m, params, seed)


def random_graph_set(rng: np.random.Generator, n: int, m: int) -> "GraphSet":
    return GraphSet([random_graph(rng, m) for _ in range(n)])


def add_isolated_nodes(A, k: int) -> np.ndarray:
    """Return ``A`` padded with ``k`` isolated nodes."""
    A = np.asarray(A, dtype=float)
    out = np.zeros((A.shape[0] + k,) * 2)
    out[: A.shape[0], : A.shape[0]] = A
    return as_graph(out)


def permute_graph(A, perm) -> np.ndarray:
    """Relabel nodes: returns ``P A P^T`` with ``P[i, perm[i]] = 1``."""
    perm = np.asarray(perm)
    A = np.asarray(A, dtype=float)
    return as_graph(A[np.ix_(perm, perm)])


def _graph_from_entry(entry: dict, m: int) -> np.ndarray:
    if "adjacency" in entry:
        return as_graph(entry["adjacency"])
    if "edges" in entry:
        A = np.zeros((m, m))
        for edge in entry["edges"]:
            if len(edge) not in (2, 3):
                raise GraphSetError(f"parse error: bad edge {edge!r}")
            i, j = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) == 3 else 1.0
            if not (0 <= i < m and 0 <= j < m):
                raise GraphSetError(f"parse error: edge {edge!r} out of range for m={m}")
            if i == j:
                raise GraphSetError(f"parse error: self-loop {edge!r} in edge list")
            A[i, j] = A[j, i] = w
        return as_graph(A)
    raise GraphSetError("parse error: graph entry needs 'adjacency' or 'edges'")


def graph_set_from_dict(data: dict) -> GraphSet:
    if not isinstance(data, dict) or "graphs" not in data:
        raise GraphSetError("parse error: expected an object with a 'graphs' list")
    entries = data["graphs"]
    m = data.get("m")
    if m is None:
        first = entries[0] if entries else {}
        if "adjacency" not in first:
            raise GraphSetError("parse error: 'm' is required for edge lists")
        m = len(first["adjacency"])
    m = int(m)
    graphs, ids = [], []
    for k, entry in enumerate(entries):
        A = _graph_from_entry(entry, m)
        if A.shape[0] != m:
            raise GraphSetError(f"size mismatch: graph {k} has {A.shape[0]} nodes, expected {m}")
        graphs.append(A)
        ids.append(entry.get("id", f"g{k}"))
    return GraphSet(graphs, ids)


def graph_set_to_dict(gs: GraphSet) -> dict:
    return {
        "m": gs.m,
        "graphs": [{"id": i, "adjacency": g.tolist()} for i, g in zip(gs.ids, gs.graphs)],
    }


def load_graph_set(path) -> GraphSet:
    """Read a graph-set JSON file (adjacency or edge-list entries)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphSetError(f"parse error: {exc}") from None
    return graph_set_from_dict(data)


def save_graph_set(gs: GraphSet, path) -> None:
    Path(path).write_text(json.dumps(graph_set_to_dict(gs)), encoding="utf-8")
