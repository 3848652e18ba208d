import math

import numpy as np
import pytest

from practicum import graph as taskgraph
from practicum.demos import scripted_play, single_toggle_neighbors, transition_heatmap
from practicum.env import default_config
from practicum.errors import ConfigError, PlanningError
from practicum.graph import (
    GoalDensity,
    TaskGraph,
    build_graph,
    dijkstra,
    entropy,
    long_horizon_next,
    practice_goal_select,
)

from .oracles import (
    enumerate_practice_goal,
    floyd_warshall,
    lexicographic_shortest_path,
    random_strongly_connected,
)


def graph_from_edges(n, edges):
    counts = np.zeros((n, n), dtype=np.int64)
    for a, b in edges:
        counts[a, b] += 1
    return TaskGraph(n_goals=n, counts=counts)


def square_graph():
    # E=2 single-toggle square: 0=00, 1=01, 2=10, 3=11.
    edges = []
    for i in range(4):
        edges.extend((i, j) for j in single_toggle_neighbors(i, 2))
    return graph_from_edges(4, edges)


def chain(n):
    edges = [(i, i + 1) for i in range(n - 1)] + [(i + 1, i) for i in range(n - 1)]
    return graph_from_edges(n, edges)


# --- build_graph -------------------------------------------------------------


def test_build_graph_from_known_sequence():
    env2 = default_config(2)
    corpus = scripted_play(env2, num_changepoints=50, seed=0)
    graph = build_graph(corpus)
    heat = transition_heatmap(corpus)
    assert np.array_equal(graph.counts, heat)
    assert np.array_equal(graph.adjacency, heat > 0)


def test_build_graph_uniform_play_recovers_toggle_square():
    env2 = default_config(2)
    corpus = scripted_play(env2, num_changepoints=400, seed=1)
    graph = build_graph(corpus)
    expected = square_graph().adjacency
    assert np.array_equal(graph.adjacency, expected)


def test_build_graph_empty_corpus():
    from practicum.demos import DemoCorpus

    corpus = DemoCorpus(episodes=[], env_config_hash="x", num_elements=2)
    graph = build_graph(corpus)
    assert graph.counts.sum() == 0
    assert not graph.adjacency.any()


def test_graph_json_round_trip(tmp_path):
    graph = square_graph()
    path = tmp_path / "graph.json"
    graph.save(path)
    loaded = TaskGraph.load(path)
    assert loaded.n_goals == graph.n_goals
    assert np.array_equal(loaded.counts, graph.counts)


# --- dijkstra ----------------------------------------------------------------


def test_dijkstra_identity():
    path = dijkstra(square_graph(), 2, 2)
    assert path.nodes == [2]
    assert path.hops == 0


def test_dijkstra_line_graph():
    assert dijkstra(chain(4), 0, 3).nodes == [0, 1, 2, 3]


def test_dijkstra_unreachable_is_none():
    graph = graph_from_edges(3, [(0, 1)])
    assert dijkstra(graph, 1, 2) is None
    assert dijkstra(graph, 1, 0) is None  # directed: no reverse edge


def test_dijkstra_tie_break_smallest_next_id():
    assert dijkstra(square_graph(), 0, 3).nodes == [0, 1, 3]


def test_dijkstra_matches_floyd_warshall_on_random_graphs():
    rng = np.random.default_rng(7)
    for _ in range(60):
        adj = random_strongly_connected(rng)
        n = adj.shape[0]
        graph = TaskGraph(n_goals=n, counts=adj.astype(np.int64))
        dist = floyd_warshall(adj)
        for i in range(n):
            for j in range(n):
                path = dijkstra(graph, i, j)
                assert path is not None
                assert path.hops == dist[i, j]
                # Path must follow graph edges node by node.
                for a, b in zip(path.nodes, path.nodes[1:]):
                    assert adj[a, b]
                assert path.nodes == lexicographic_shortest_path(adj, i, j)


# --- entropy -------------------------------------------------------------------


def test_entropy_uniform_four():
    assert entropy(np.array([3, 3, 3, 3])) == pytest.approx(math.log(4), abs=1e-12)


def test_entropy_point_mass():
    assert entropy(np.array([0, 9, 0])) == 0.0


def test_entropy_mixed_counts():
    # counts (1,1,2): -(1/4 ln 1/4 + 1/4 ln 1/4 + 1/2 ln 1/2)
    expected = -(0.25 * math.log(0.25) * 2 + 0.5 * math.log(0.5))
    assert entropy(np.array([1, 1, 2])) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(1.0397, abs=1e-4)


def test_entropy_all_zero_raises():
    with pytest.raises(ValueError):
        entropy(np.zeros(4))


# --- practice_goal_select -------------------------------------------------------


def test_select_spreads_away_from_visited():
    graph = square_graph()
    density = GoalDensity(np.array([5, 0, 0, 0]))
    choice = practice_goal_select(graph, density, 0)
    assert choice in (1, 2)
    assert choice == enumerate_practice_goal(graph.adjacency, density.visit_counts, 0)


def test_select_uniform_density_tie_breaks_to_smallest_neighbor():
    graph = square_graph()
    density = GoalDensity(np.array([3, 3, 3, 3]))
    assert practice_goal_select(graph, density, 0) == enumerate_practice_goal(
        graph.adjacency, density.visit_counts, 0
    )


def test_select_chain_heads_toward_unvisited_side():
    graph = chain(5)
    density = GoalDensity(np.array([10, 4, 0, 0, 0]))
    assert practice_goal_select(graph, density, 0) == 1
    assert practice_goal_select(graph, density, 0) == enumerate_practice_goal(
        graph.adjacency, density.visit_counts, 0
    )


def test_select_returns_neighbor_or_self():
    rng = np.random.default_rng(11)
    for _ in range(40):
        adj = random_strongly_connected(rng)
        n = adj.shape[0]
        graph = TaskGraph(n_goals=n, counts=adj.astype(np.int64))
        density = GoalDensity(rng.integers(0, 20, size=n))
        current = int(rng.integers(n))
        choice = practice_goal_select(graph, density, current)
        assert choice == current or adj[current, choice]


def test_select_matches_enumeration_on_random_graphs():
    rng = np.random.default_rng(13)
    for _ in range(60):
        adj = random_strongly_connected(rng)
        n = adj.shape[0]
        graph = TaskGraph(n_goals=n, counts=adj.astype(np.int64))
        density = GoalDensity(rng.integers(0, 12, size=n))
        current = int(rng.integers(n))
        assert practice_goal_select(graph, density, current) == enumerate_practice_goal(
            adj, density.visit_counts, current
        )


def test_select_isolated_node_errors():
    graph = graph_from_edges(3, [(1, 2), (2, 1)])
    with pytest.raises(PlanningError):
        practice_goal_select(graph, GoalDensity.zeros(3), 0)


# --- long_horizon_next -----------------------------------------------------------


def test_long_horizon_square_tie_break():
    assert long_horizon_next(square_graph(), 0, 3) == 1


def test_long_horizon_terminal_noop():
    assert long_horizon_next(square_graph(), 3, 3) == 3


def test_long_horizon_chain():
    assert long_horizon_next(chain(3), 0, 2) == 1


def test_long_horizon_unreachable_raises_with_ids():
    graph = graph_from_edges(3, [(0, 1)])
    with pytest.raises(PlanningError) as err:
        long_horizon_next(graph, 1, 2)
    assert err.value.from_id == 1
    assert err.value.to_id == 2


# --- invariants ------------------------------------------------------------------


def test_repeated_selection_drives_entropy_up_on_square():
    # With a perfect executor, receding-horizon selection should cover the
    # square nearly uniformly, beating a random neighbor walk.
    graph = square_graph()
    rng = np.random.default_rng(0)
    ent = {}
    for method in ("graph", "random"):
        density = GoalDensity.zeros(4)
        current = 0
        density.add(current)
        for _ in range(400):
            if method == "graph":
                current = practice_goal_select(graph, density, current)
            else:
                current = int(rng.choice(graph.successors(current)))
            density.add(current)
        ent[method] = entropy(density)
    assert ent["graph"] >= ent["random"]
    assert ent["graph"] == pytest.approx(math.log(4), abs=0.01)
