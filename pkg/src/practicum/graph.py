"""Directed task graph over goals of interest and both of its uses.

The graph is estimated by counting which goal-to-goal transitions appear in
the demonstrations. At training time it drives autonomous practicing: the
next goal to command is the first step of the shortest path whose execution
would push the visit distribution closest to uniform (maximum entropy),
recomputed after every episode. At test time the same graph answers
shortest-path queries for chaining subgoals toward a distant configuration.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .demos import DemoCorpus, changepoint_goals
from .errors import ConfigError, PlanningError


@dataclass
class TaskGraph:
    """Transition counts between goals of interest; edges are nonzero counts."""

    n_goals: int
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.n_goals, self.n_goals):
            raise ConfigError(
                f"counts must be {self.n_goals}x{self.n_goals}, got {self.counts.shape}"
            )
        if np.any(self.counts < 0):
            raise ConfigError("transition counts must be non-negative")

    @property
    def adjacency(self) -> np.ndarray:
        adj = self.counts > 0
        np.fill_diagonal(adj, False)
        return adj

    def successors(self, node: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.adjacency[node])]

    # Graphs are queried far more often than they are built, so shortest-path
    # structure is cached on first use. Mutating ``counts`` afterwards requires
    # ``invalidate_cache()``.
    def _search_cache(self) -> tuple[np.ndarray, np.ndarray]:
        cache = getattr(self, "_cache", None)
        if cache is None:
            cache = _build_search_cache(self.adjacency)
            object.__setattr__(self, "_cache", cache)
        return cache

    def invalidate_cache(self) -> None:
        object.__setattr__(self, "_cache", None)

    def to_json(self) -> str:
        return json.dumps({"n_goals": self.n_goals, "counts": self.counts.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "TaskGraph":
        d = json.loads(text)
        return cls(n_goals=int(d["n_goals"]), counts=np.asarray(d["counts"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TaskGraph":
        return cls.from_json(Path(path).read_text())


@dataclass
class GoalDensity:
    """Running visit counts over goals, normalized on demand."""

    visit_counts: np.ndarray

    @classmethod
    def zeros(cls, n_goals: int) -> "GoalDensity":
        return cls(visit_counts=np.zeros(n_goals, dtype=np.int64))

    def add(self, goal_id: int, count: int = 1) -> None:
        self.visit_counts[goal_id] += count

    def copy(self) -> "GoalDensity":
        return GoalDensity(self.visit_counts.copy())

    @property
    def total(self) -> int:
        return int(self.visit_counts.sum())


@dataclass
class GoalPath:
    """Sequence of adjacent goal ids, starting at the query start node."""

    nodes: list[int]

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1


def build_graph(corpus: DemoCorpus) -> TaskGraph:
    """Count consecutive changepoint goal pairs across all episodes."""
    n = corpus.n_goals
    counts = np.zeros((n, n), dtype=np.int64)
    for episode in corpus.episodes:
        goals = changepoint_goals(episode)
        for a, b in zip(goals, goals[1:]):
            if not (0 <= a < n and 0 <= b < n):
                raise ConfigError(f"changepoint goal {max(a, b)} out of range for {n} goals")
            if a != b:
                counts[a, b] += 1
    return TaskGraph(n_goals=n, counts=counts)


UNREACHABLE = -1


def _build_search_cache(adjacency: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs hop counts and the lexicographic next-hop table.

    ``dist[i, j]`` is the minimal hop count (UNREACHABLE if none) and
    ``next_hop[i, j]`` the smallest-id successor of ``i`` that stays on some
    shortest path to ``j``. Walking ``next_hop`` therefore reproduces the
    smallest minimal-hop path under node-id comparison.
    """
    n = adjacency.shape[0]
    dist = np.full((n, n), UNREACHABLE, dtype=np.int64)
    for target in range(n):
        dist[target, target] = 0
        queue = deque([target])
        while queue:
            node = queue.popleft()
            for pred in np.flatnonzero(adjacency[:, node]):
                if dist[pred, target] < 0:
                    dist[pred, target] = dist[node, target] + 1
                    queue.append(int(pred))

    ids = np.arange(n)
    next_hop = np.full((n, n), UNREACHABLE, dtype=np.int64)
    for target in range(n):
        on_shortest = adjacency & (dist[:, target][None, :] == dist[:, target][:, None] - 1)
        candidates = np.where(on_shortest, ids[None, :], n)
        best = candidates.min(axis=1)
        reachable = (dist[:, target] > 0) & (best < n)
        next_hop[reachable, target] = best[reachable]
    return dist, next_hop


def dijkstra(graph: TaskGraph, from_id: int, to_id: int) -> GoalPath | None:
    """Minimal-hop path with deterministic tie-breaking, or None if unreachable.

    Edges are unweighted, so hop counts come from breadth-first search; among
    equal-hop paths the one taking the smallest next-node id at every step is
    returned.
    """
    n = graph.n_goals
    for node in (from_id, to_id):
        if not 0 <= node < n:
            raise ConfigError(f"goal id {node} out of range for {n} goals")
    if from_id == to_id:
        return GoalPath([from_id])

    dist, next_hop = graph._search_cache()
    if dist[from_id, to_id] == UNREACHABLE:
        return None
    path = [from_id]
    node = from_id
    while node != to_id:
        node = int(next_hop[node, to_id])
        path.append(node)
    return GoalPath(path)


def entropy(density: "GoalDensity | np.ndarray") -> float:
    """Shannon entropy in nats of the normalized count vector."""
    counts = density.visit_counts if isinstance(density, GoalDensity) else np.asarray(density)
    total = float(counts.sum())
    if total <= 0:
        raise ValueError("entropy of an all-zero density is undefined")
    p = counts / total
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def practice_goal_select(
    graph: TaskGraph,
    density: GoalDensity,
    current_goal_id: int,
    return_score: bool = False,
):
    """Choose the next goal to command during autonomous practicing.

    Every goal is considered as a candidate destination. For each reachable
    candidate, the visit counts are hypothetically incremented along the
    shortest path to it (every node except the start; the stay-put candidate
    increments the current node), and the candidate whose updated counts have
    maximum entropy wins. Only the first step of the winning path is
    commanded; the choice is re-evaluated after the episode (receding
    horizon). Ties break toward the candidate with the smallest visit count,
    then the smallest id.
    """
    n = graph.n_goals
    if not 0 <= current_goal_id < n:
        raise ConfigError(f"goal id {current_goal_id} out of range for {n} goals")
    if not graph.adjacency[current_goal_id].any():
        raise PlanningError(
            f"goal {current_goal_id} has no outgoing edges; graph cannot support practicing",
            from_id=current_goal_id,
        )

    dist, next_hop = graph._search_cache()
    counts = density.visit_counts
    base = counts.astype(np.float64)
    best_key = None
    best_next = None
    for candidate in range(n):
        hypothetical = base.copy()
        if candidate == current_goal_id:
            hypothetical[current_goal_id] += 1.0
            next_goal = current_goal_id
        else:
            if dist[current_goal_id, candidate] == UNREACHABLE:
                continue
            node = current_goal_id
            while node != candidate:
                node = int(next_hop[node, candidate])
                hypothetical[node] += 1.0
            next_goal = int(next_hop[current_goal_id, candidate])
        score = entropy(hypothetical)
        key = (-score, int(counts[candidate]), candidate)
        if best_key is None or key < best_key:
            best_key = key
            best_next = next_goal

    if return_score:
        return best_next, -best_key[0]
    return best_next


def long_horizon_next(graph: TaskGraph, current_goal_id: int, desired_goal_id: int) -> int:
    """Next goal to command on the shortest path toward a distant goal."""
    if current_goal_id == desired_goal_id:
        return desired_goal_id
    path = dijkstra(graph, current_goal_id, desired_goal_id)
    if path is None:
        raise PlanningError(
            f"goal {desired_goal_id} is unreachable from goal {current_goal_id}",
            from_id=current_goal_id,
            to_id=desired_goal_id,
        )
    return path.nodes[1]
