"""Weighted undirected graphs and their Laplacian matrices.

A graph is a node count plus a list of weighted edges over 0-based node
indices.  Graphs are immutable after construction and validated eagerly:
simple (no self loops, no duplicate pairs) and connected over the
positive-weight edges.  The on-disk format is plain text: a first line
``n m`` followed by ``m`` lines ``i j w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DisconnectedError,
    DuplicateEdgeError,
    GraphError,
    NonpositiveWeightError,
    SelfLoopError,
)


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected simple graph with per-edge weights.

    ``edges`` keeps the construction order; each entry is normalized to
    ``(min(i, j), max(i, j), w)``.  In strict mode all weights are > 0.
    Non-strict graphs (optimizer iterates) may carry zero weights as long
    as the positive-weight subgraph stays connected.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...] = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges], dtype=np.float64)

    def with_weights(self, weights) -> "WeightedGraph":
        """Same support with replaced weights (non-strict validation)."""
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (self.m,):
            raise GraphError(f"expected {self.m} weights, got {weights.shape}")
        return build_graph(
            self.n,
            [(i, j, float(w)) for (i, j, _), w in zip(self.edges, weights)],
            strict=False,
        )

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edge endpoints and weights as flat arrays (kernel input)."""
        ei = np.array([i for i, _, _ in self.edges], dtype=np.int64)
        ej = np.array([j for _, j, _ in self.edges], dtype=np.int64)
        ew = self.weights()
        return ei, ej, ew

    def csr_adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR neighbor lists: (ptr, neighbor, weight), both edge directions."""
        deg = np.zeros(self.n + 1, dtype=np.int64)
        for i, j, _ in self.edges:
            deg[i + 1] += 1
            deg[j + 1] += 1
        ptr = np.cumsum(deg)
        nbr = np.empty(2 * self.m, dtype=np.int64)
        wts = np.empty(2 * self.m, dtype=np.float64)
        fill = ptr[:-1].copy()
        for i, j, w in self.edges:
            nbr[fill[i]] = j
            wts[fill[i]] = w
            fill[i] += 1
            nbr[fill[j]] = i
            wts[fill[j]] = w
            fill[j] += 1
        return ptr, nbr, wts


def build_graph(n: int, edges, strict: bool = True) -> WeightedGraph:
    """Validate and construct a WeightedGraph.

    Raises SelfLoopError, DuplicateEdgeError, NonpositiveWeightError (any
    w <= 0 in strict mode, w < 0 otherwise) or DisconnectedError when the
    positive-weight subgraph does not span all nodes.
    """
    n = int(n)
    if n < 2:
        raise GraphError(f"need at least 2 nodes, got {n}")
    seen: set[tuple[int, int]] = set()
    normalized: list[tuple[int, int, float]] = []
    for i, j, w in edges:
        i, j, w = int(i), int(j), float(w)
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise SelfLoopError(f"self loop at node {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdgeError(f"duplicate edge {key}")
        seen.add(key)
        if strict and w <= 0.0:
            raise NonpositiveWeightError(f"edge {key} has weight {w} <= 0")
        if not strict and w < 0.0:
            raise NonpositiveWeightError(f"edge {key} has weight {w} < 0")
        if not np.isfinite(w):
            raise NonpositiveWeightError(f"edge {key} has non-finite weight {w}")
        normalized.append((key[0], key[1], w))
    _check_connected(n, normalized)
    return WeightedGraph(n=n, edges=tuple(normalized))


def _check_connected(n: int, edges) -> None:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j, w in edges:
        if w > 0.0:
            adj[i].append(j)
            adj[j].append(i)
    seen = [False] * n
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    if count != n:
        raise DisconnectedError(
            f"positive-weight subgraph reaches {count} of {n} nodes"
        )


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Weighted graph Laplacian: off-diagonal -w_ij, diagonal weighted degree."""
    L = np.zeros((g.n, g.n), dtype=np.float64)
    for i, j, w in g.edges:
        L[i, j] -= w
        L[j, i] -= w
        L[i, i] += w
        L[j, j] += w
    row_sums = L.sum(axis=1)
    assert np.max(np.abs(row_sums)) <= 1e-12 * max(1.0, np.max(np.abs(L)))
    return L


def edge_laplacian(n: int, i: int, j: int) -> np.ndarray:
    """Unweighted Laplacian of the single edge {i, j} on n nodes."""
    L = np.zeros((n, n), dtype=np.float64)
    L[i, i] = L[j, j] = 1.0
    L[i, j] = L[j, i] = -1.0
    return L


def path_graph(n: int, w: float = 1.0) -> WeightedGraph:
    return build_graph(n, [(i, i + 1, w) for i in range(n - 1)])


def star_graph(n: int, w: float = 1.0) -> WeightedGraph:
    """Star on n nodes, node 0 at the center."""
    return build_graph(n, [(0, i, w) for i in range(1, n)])


def complete_graph(n: int, w: float = 1.0) -> WeightedGraph:
    return build_graph(n, [(i, j, w) for i in range(n) for j in range(i + 1, n)])


def cycle_graph(n: int, w: float = 1.0) -> WeightedGraph:
    edges = [(i, i + 1, w) for i in range(n - 1)] + [(0, n - 1, w)]
    return build_graph(n, edges)


def read_graph(path) -> WeightedGraph:
    """Read the ``n m`` / ``i j w`` text format."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise GraphError(f"empty graph file: {path}")
    try:
        head = lines[0].split()
        n, m = int(head[0]), int(head[1])
        edges = []
        for ln in lines[1 : m + 1]:
            parts = ln.split()
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    except (IndexError, ValueError) as exc:
        raise GraphError(f"malformed graph file {path}: {exc}") from exc
    if len(edges) != m:
        raise GraphError(f"graph file {path} declares {m} edges, has {len(edges)}")
    return build_graph(n, edges)


def write_graph(g: WeightedGraph, path) -> None:
    """Write the text format; weights carry 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for i, j, w in g.edges:
            fh.write(f"{i} {j} {w:.17g}\n")
