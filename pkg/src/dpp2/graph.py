"""Communication topology and the consensus weight matrix.

Every network carries an N x N symmetric PSD matrix ``P`` whose null space
contains the consensus direction; the stacked mixing operator used by the
algorithm is ``P (x) I_d`` and is always applied blockwise, never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Network",
    "build_laplacian",
    "random_geometric_graph",
    "apply_L",
    "save_edge_list",
    "load_edge_list",
    "path_edges",
    "cycle_edges",
    "complete_edges",
    "GraphConnectivityError",
]

#: eigenvalues below this are treated as the consensus (zero) eigenvalue
_ZERO_EIG_TOL = 1e-10


class GraphConnectivityError(RuntimeError):
    """Raised when a connected graph cannot be produced."""


@dataclass(frozen=True)
class Network:
    """Communication graph plus its consensus weight matrix and spectrum.

    Attributes
    ----------
    n : int
        Number of nodes.
    edges : frozenset of (int, int)
        Unordered edges, 1-indexed, stored as (min, max) pairs.
    P : ndarray, shape (n, n)
        Symmetric PSD weight matrix (unweighted graph Laplacian), with
        ``p_ij = 0`` for non-adjacent ``i != j`` and ``P @ 1 = 0``.
    eigenvalues : ndarray, shape (n,)
        Spectrum of ``P`` in ascending order.
    lambda_max : float
        Largest eigenvalue of ``P``.
    lambda_min_pos : float
        Second-smallest eigenvalue of ``P`` (the smallest positive one for a
        connected graph; near zero otherwise).
    kappa : float
        ``lambda_max / lambda_min_pos``; ``inf`` for a disconnected graph.
    connected : bool
        Whether the graph is connected. Disconnected networks are permitted
        objects but are flagged, and the experiment runner refuses them
        unless explicitly overridden.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    P: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    lambda_max: float
    lambda_min_pos: float
    kappa: float
    connected: bool

    def mix(self, block: np.ndarray) -> np.ndarray:
        """Apply ``P`` to per-node rows: ``block`` has shape (n, d).

        Equivalent to the neighbor-sum aggregation
        ``sum_{j in N_i u {i}} p_ij block_j`` at every node.
        """
        if block.shape[0] != self.n:
            raise ValueError(f"expected {self.n} node rows, got {block.shape[0]}")
        return self.P @ block

    def neighbors(self, i: int) -> list[int]:
        """1-indexed neighbors of node ``i``."""
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)


def _normalize_edges(edges, n: int) -> frozenset[tuple[int, int]]:
    normalized = set()
    for edge in edges:
        i, j = edge
        i, j = int(i), int(j)
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"edge ({i}, {j}) references a node outside [1, {n}]")
        if i == j:
            raise ValueError(f"self-loop ({i}, {j}) is not allowed")
        normalized.add((min(i, j), max(i, j)))
    return frozenset(normalized)


def build_laplacian(edges, n: int) -> Network:
    """Build a :class:`Network` whose ``P`` is the unweighted graph Laplacian.

    Parameters
    ----------
    edges : iterable of (i, j)
        Unordered node pairs, 1-indexed, no self-loops.
    n : int
        Number of nodes, >= 1.

    Returns
    -------
    Network
        With degree on the diagonal and -1 on adjacent off-diagonals, plus
        the spectral summary from a dense symmetric eigendecomposition.
    """
    if n < 1:
        raise ValueError("node count must be positive")
    edge_set = _normalize_edges(edges, n)
    P = np.zeros((n, n))
    for i, j in edge_set:
        P[i - 1, j - 1] = -1.0
        P[j - 1, i - 1] = -1.0
        P[i - 1, i - 1] += 1.0
        P[j - 1, j - 1] += 1.0
    eigenvalues = np.linalg.eigvalsh(P)
    lam_max = float(eigenvalues[-1])
    lam_min_pos = float(eigenvalues[1]) if n > 1 else 0.0
    connected = n == 1 or lam_min_pos > _ZERO_EIG_TOL
    kappa = lam_max / lam_min_pos if connected and n > 1 else float("inf")
    P.setflags(write=False)
    eigenvalues.setflags(write=False)
    return Network(
        n=n,
        edges=edge_set,
        P=P,
        eigenvalues=eigenvalues,
        lambda_max=lam_max,
        lambda_min_pos=lam_min_pos,
        kappa=kappa,
        connected=connected,
    )


def _is_connected(n: int, edges) -> bool:
    if n <= 1:
        return True
    adjacency: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
    for i, j in edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    seen = {1}
    stack = [1]
    while stack:
        node = stack.pop()
        for other in adjacency[node]:
            if other not in seen:
                seen.add(other)
                stack.append(other)
    return len(seen) == n


def random_geometric_graph(
    n: int,
    radius: float,
    seed: int,
    max_retries: int = 50,
) -> frozenset[tuple[int, int]]:
    """Sample a connected random geometric graph on the unit square.

    ``n`` points are drawn uniformly from the stream seeded by ``seed``;
    nodes are adjacent iff their Euclidean distance is at most ``radius``.
    If the draw is disconnected, successor seeds ``seed + 1, seed + 2, ...``
    are tried, up to ``max_retries`` resamples.

    Returns the edge set (1-indexed pairs); build the weight matrix with
    :func:`build_laplacian`.

    Raises
    ------
    GraphConnectivityError
        If no connected graph is found; the message names the last seed
        tried.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if radius <= 0:
        raise ValueError("radius must be positive")
    last_seed = seed
    for attempt in range(max_retries + 1):
        last_seed = seed + attempt
        rng = np.random.default_rng(last_seed)
        points = rng.random((n, 2))
        diff = points[:, None, :] - points[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        edges = set()
        for i in range(n):
            for j in range(i + 1, n):
                if dist[i, j] <= radius:
                    edges.add((i + 1, j + 1))
        if _is_connected(n, edges):
            return frozenset(edges)
    raise GraphConnectivityError(
        f"no connected geometric graph with n={n}, radius={radius} after "
        f"{max_retries + 1} attempts; last seed tried was {last_seed}"
    )


def apply_L(network: Network, v: np.ndarray) -> np.ndarray:
    """Apply the stacked operator ``P (x) I_d`` to a vector of length n*d.

    Computed blockwise per node (one (n, d) reshape and a neighbor-sum
    matrix product); the n*d x n*d Kronecker product is never formed.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size % network.n != 0:
        raise ValueError(f"vector length {v.size} is not a multiple of n={network.n}")
    d = v.size // network.n
    return (network.P @ v.reshape(network.n, d)).reshape(-1)


def path_edges(n: int) -> frozenset[tuple[int, int]]:
    """Edges of the path graph 1-2-...-n."""
    return frozenset((i, i + 1) for i in range(1, n))


def cycle_edges(n: int) -> frozenset[tuple[int, int]]:
    """Edges of the n-cycle."""
    return frozenset({(i, i + 1) for i in range(1, n)} | {(1, n)})


def complete_edges(n: int) -> frozenset[tuple[int, int]]:
    """Edges of the complete graph K_n."""
    return frozenset((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1))


def save_edge_list(path, n: int, edges) -> None:
    """Write an edge list: an ``N`` header line, then one ``i j`` pair per line."""
    edge_set = sorted(_normalize_edges(edges, n))
    with open(path, "w", encoding="ascii") as handle:
        handle.write(f"{n}\n")
        for i, j in edge_set:
            handle.write(f"{i} {j}\n")


def load_edge_list(path) -> tuple[int, frozenset[tuple[int, int]]]:
    """Read an edge list written by :func:`save_edge_list`."""
    with open(path, encoding="ascii") as handle:
        tokens = handle.read().split()
    if not tokens:
        raise ValueError(f"{path}: empty edge-list file")
    n = int(tokens[0])
    rest = tokens[1:]
    if len(rest) % 2 != 0:
        raise ValueError(f"{path}: odd number of node indices")
    pairs = [(int(rest[t]), int(rest[t + 1])) for t in range(0, len(rest), 2)]
    return n, _normalize_edges(pairs, n)
