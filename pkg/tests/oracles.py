"""Independent brute-force references used to check the graph algorithms.

These deliberately avoid the library's search code: distances come from
Floyd-Warshall over the adjacency matrix, paths from exhaustive greedy
reconstruction, and the goal selector from a literal re-enumeration of every
candidate with its own entropy arithmetic.
"""
import math

import numpy as np

INF = float("inf")


def floyd_warshall(adjacency: np.ndarray) -> np.ndarray:
    n = adjacency.shape[0]
    dist = np.full((n, n), INF)
    for i in range(n):
        dist[i, i] = 0.0
    for i in range(n):
        for j in range(n):
            if i != j and adjacency[i, j]:
                dist[i, j] = 1.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i, k] + dist[k, j] < dist[i, j]:
                    dist[i, j] = dist[i, k] + dist[k, j]
    return dist


def lexicographic_shortest_path(adjacency: np.ndarray, src: int, dst: int) -> list[int] | None:
    """Smallest minimal-hop path under elementwise node-id comparison."""
    dist = floyd_warshall(adjacency)
    if dist[src, dst] == INF:
        return None
    path = [src]
    node = src
    while node != dst:
        node = min(
            j for j in range(adjacency.shape[0])
            if adjacency[node, j] and dist[j, dst] == dist[node, dst] - 1
        )
        path.append(node)
    return path


def entropy_of_counts(counts) -> float:
    total = float(sum(counts))
    acc = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            acc -= p * math.log(p)
    return acc


def enumerate_practice_goal(adjacency: np.ndarray, visit_counts, current: int) -> int:
    """Re-enumeration of the entropy-maximizing goal selection loop."""
    n = adjacency.shape[0]
    best = None
    for candidate in range(n):
        if candidate == current:
            path = [current]
            first_step = current
        else:
            path = lexicographic_shortest_path(adjacency, current, candidate)
            if path is None:
                continue
            first_step = path[1]
        hypothetical = [float(c) for c in visit_counts]
        if len(path) == 1:
            hypothetical[current] += 1.0
        else:
            for node in path[1:]:
                hypothetical[node] += 1.0
        score = entropy_of_counts(hypothetical)
        key = (-score, visit_counts[candidate], candidate)
        if best is None or key < best[0]:
            best = (key, first_step)
    return best[1]


def random_strongly_connected(rng: np.random.Generator, max_nodes: int = 8) -> np.ndarray:
    """Random directed graph guaranteed strongly connected via a random cycle."""
    n = int(rng.integers(2, max_nodes + 1))
    adj = np.zeros((n, n), dtype=bool)
    order = rng.permutation(n)
    for a, b in zip(order, np.roll(order, -1)):
        adj[a, b] = True
    extra = rng.random((n, n)) < rng.uniform(0.1, 0.5)
    np.fill_diagonal(extra, False)
    return adj | extra
