"""Quantitative studies: long-horizon evaluation, chain-walk entropy, idealized
sequencer comparisons, reset-frequency ablation, and CSV metric export.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import env as kitchen
from . import graph as taskgraph
from . import rl
from .demos import DemoCorpus, single_toggle_neighbors
from .env import EnvConfig, GoalOfInterest
from .errors import ConfigError, PlanningError
from .graph import GoalDensity, TaskGraph
from .practice import BCHighLevel, PracticeConfig, practice, rollout_episode, current_goal_of

DEFAULT_MAX_HL_STEPS = 6


@dataclass(frozen=True)
class LongHorizonTask:
    """Invert the open/closed state of every element."""

    start_goal_id: int
    desired_goal_id: int


def invert_all_tasks(num_elements: int) -> list[LongHorizonTask]:
    """One task per start configuration, targeting its bitwise complement."""
    mask = (1 << num_elements) - 1
    return [LongHorizonTask(i, i ^ mask) for i in range(1 << num_elements)]


@dataclass
class TaskResult:
    task: LongHorizonTask
    trial: int
    success: bool
    path_length: int


@dataclass
class EvalMetrics:
    success_rate: float
    avg_path_length: float
    per_task: dict[tuple[int, int], tuple[float, float]]
    results: list[TaskResult] = field(default_factory=list)


class GraphSequencer:
    def __init__(self, graph: TaskGraph):
        self.graph = graph

    def next_goal(self, current: int, desired: int, rng) -> int:
        return taskgraph.long_horizon_next(self.graph, current, desired)


class BCSequencer:
    def __init__(self, model: BCHighLevel):
        self.model = model

    def next_goal(self, current: int, desired: int, rng) -> int:
        return self.model.sample(current, desired, rng)


class RandomSequencer:
    def __init__(self, n_goals: int):
        self.n_goals = n_goals

    def next_goal(self, current: int, desired: int, rng) -> int:
        return int(rng.integers(self.n_goals))


def make_sequencer(kind: str, graph: TaskGraph | None = None, bc_model: BCHighLevel | None = None,
                   n_goals: int | None = None):
    if kind == "graph":
        if graph is None:
            raise ConfigError("graph sequencer needs a task graph")
        return GraphSequencer(graph)
    if kind == "bc":
        if bc_model is None:
            raise ConfigError("bc sequencer needs a trained model")
        return BCSequencer(bc_model)
    if kind == "random":
        if n_goals is None:
            raise ConfigError("random sequencer needs n_goals")
        return RandomSequencer(n_goals)
    raise ConfigError(f"unknown sequencer kind {kind!r}")


def eval_long_horizon(
    env_config: EnvConfig,
    sequencer,
    tasks: list[LongHorizonTask],
    low_level: str = "policy",
    params: rl.PolicyParams | None = None,
    train_config: rl.TrainConfig | None = None,
    max_hl_steps: int = DEFAULT_MAX_HL_STEPS,
    trials: int = 5,
    seed: int = 0,
) -> EvalMetrics:
    """Chain subgoals from the sequencer until the desired goal or budget.

    Each trial resets to the task's start goal, then repeatedly commands the
    sequencer's next goal and rolls the low level (deterministic policy or the
    scripted oracle) for one episode per subgoal. Failures consume the full
    high-level budget.
    """
    results: list[TaskResult] = []
    for task in tasks:
        for trial in range(trials):
            rng = np.random.default_rng((seed, task.start_goal_id, trial))
            state = kitchen.reset(env_config, start=task.start_goal_id, seed=seed)
            current = task.start_goal_id
            hl_steps = 0
            success = current == task.desired_goal_id
            while not success and hl_steps < max_hl_steps:
                try:
                    commanded = sequencer.next_goal(current, task.desired_goal_id, rng)
                except PlanningError:
                    hl_steps = max_hl_steps
                    break
                goal = GoalOfInterest.from_id(commanded, env_config.num_elements)
                state, _, _ = rollout_episode(
                    env_config, state, goal, low_level, params, train_config, rng,
                    deterministic=True,
                )
                hl_steps += 1
                current = current_goal_of(env_config, state)
                success = kitchen.discretize(env_config, state) == task.desired_goal_id
            results.append(
                TaskResult(task=task, trial=trial, success=success,
                           path_length=hl_steps if success else max_hl_steps)
            )

    per_task: dict[tuple[int, int], tuple[float, float]] = {}
    for task in tasks:
        rows = [r for r in results if r.task == task]
        per_task[(task.start_goal_id, task.desired_goal_id)] = (
            float(np.mean([r.success for r in rows])),
            float(np.mean([r.path_length for r in rows])),
        )
    return EvalMetrics(
        success_rate=float(np.mean([r.success for r in results])),
        avg_path_length=float(np.mean([r.path_length for r in results])),
        per_task=per_task,
        results=results,
    )


# ---------------------------------------------------------------------------
# Chain-walk entropy study


def chain_graph(num_states: int) -> TaskGraph:
    counts = np.zeros((num_states, num_states), dtype=np.int64)
    for i in range(num_states - 1):
        counts[i, i + 1] = 1
        counts[i + 1, i] = 1
    return TaskGraph(n_goals=num_states, counts=counts)


def chain_mdp_experiment(
    num_states: int = 32,
    steps: int = 5000,
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4),
    start_state: int = 0,
    marginal_window: int | None = None,
) -> dict[str, np.ndarray]:
    """Visit-entropy curves on a chain, assuming every transition succeeds.

    One arm picks each move with the entropy-maximizing goal selector (which
    plans against its cumulative visit counts), the other takes a uniformly
    random neighbor. The headline curves are the entropy of the marginal
    state-visit distribution, estimated over a sliding window of recent steps:
    a cumulative average would converge to near-uniform for any recurrent
    walk and wash out the difference in how the two processes cover states.
    Cumulative-count entropy is returned alongside under ``*_cumulative``.

    Returns arrays of shape (len(seeds), steps).
    """
    from collections import deque

    window = marginal_window or max(4 * num_states, 128)
    graph = chain_graph(num_states)
    curves = {
        "graph": np.zeros((len(seeds), steps)),
        "random_walk": np.zeros((len(seeds), steps)),
        "graph_cumulative": np.zeros((len(seeds), steps)),
        "random_walk_cumulative": np.zeros((len(seeds), steps)),
    }
    for row, seed in enumerate(seeds):
        for method in ("graph", "random_walk"):
            rng = np.random.default_rng((seed, method == "graph"))
            density = GoalDensity.zeros(num_states)
            recent = deque()
            window_counts = np.zeros(num_states)
            current = start_state

            def visit(node):
                density.add(node)
                recent.append(node)
                window_counts[node] += 1
                if len(recent) > window:
                    window_counts[recent.popleft()] -= 1

            visit(current)
            for t in range(steps):
                if method == "graph":
                    nxt = taskgraph.practice_goal_select(graph, density, current)
                else:
                    nxt = int(rng.choice(graph.successors(current)))
                current = nxt
                visit(current)
                curves[method][row, t] = taskgraph.entropy(window_counts)
                curves[f"{method}_cumulative"][row, t] = taskgraph.entropy(density)
    return curves


# ---------------------------------------------------------------------------
# Idealized sequencer comparison (perfect low level)


def idealized_path_length(
    graph: TaskGraph,
    sequencers: dict[str, object],
    tasks: list[LongHorizonTask],
    trials: int = 5,
    max_hl_steps: int = DEFAULT_MAX_HL_STEPS,
    seed: int = 0,
) -> dict[str, list[int]]:
    """Path lengths when every commanded transition succeeds instantly."""
    lengths: dict[str, list[int]] = {name: [] for name in sequencers}
    for name, sequencer in sequencers.items():
        for task in tasks:
            for trial in range(trials):
                rng = np.random.default_rng((seed, task.start_goal_id, trial))
                current = task.start_goal_id
                hops = 0
                while current != task.desired_goal_id and hops < max_hl_steps:
                    try:
                        current = sequencer.next_goal(current, task.desired_goal_id, rng)
                    except PlanningError:
                        hops = max_hl_steps
                        break
                    hops += 1
                lengths[name].append(hops)
    return lengths


# ---------------------------------------------------------------------------
# Reset-frequency ablation


@dataclass
class MetricRow:
    phase: str
    seed: int
    metric: str
    value: float


def reset_ablation(
    env_config: EnvConfig,
    corpus: DemoCorpus,
    train_config: rl.TrainConfig,
    n_values: tuple[int, ...] = (10, 20, 50),
    seeds: tuple[int, ...] = (0, 1, 2),
    total_env_steps: int = 200_000,
    trials: int = 5,
    max_hl_steps: int = DEFAULT_MAX_HL_STEPS,
) -> list[MetricRow]:
    """Pretrain once per seed, then practice and evaluate at each reset period."""
    from .graph import build_graph

    graph = build_graph(corpus)
    tasks = invert_all_tasks(env_config.num_elements)
    rows: list[MetricRow] = []
    for seed in seeds:
        params0, buffer0 = rl.pretrain(corpus, env_config, train_config, seed=seed)
        pre_metrics = eval_long_horizon(
            env_config, GraphSequencer(graph), tasks,
            low_level="policy", params=params0, train_config=train_config,
            trials=trials, max_hl_steps=max_hl_steps, seed=seed,
        )
        rows.append(MetricRow("pretrain", seed, "success_rate", pre_metrics.success_rate))
        rows.append(MetricRow("pretrain", seed, "avg_path_length", pre_metrics.avg_path_length))
        for n in n_values:
            params = params0.clone()
            buffer = _clone_buffer(buffer0, env_config, train_config)
            cfg = PracticeConfig(total_env_steps=total_env_steps, reset_period=n)
            params, log = practice(
                env_config, params, graph, cfg, seed=seed,
                train_config=train_config, buffer=buffer,
            )
            metrics = eval_long_horizon(
                env_config, GraphSequencer(graph), tasks,
                low_level="policy", params=params, train_config=train_config,
                trials=trials, max_hl_steps=max_hl_steps, seed=seed,
            )
            phase = f"practice_n{n}"
            rows.append(MetricRow(phase, seed, "success_rate", metrics.success_rate))
            rows.append(MetricRow(phase, seed, "avg_path_length", metrics.avg_path_length))
            rows.append(MetricRow(phase, seed, "external_resets", float(log.num_external_resets)))
            rows.append(MetricRow(phase, seed, "episodes", float(len(log))))
    return rows


def _clone_buffer(buffer: rl.ReplayBuffer, env_config: EnvConfig, config: rl.TrainConfig) -> rl.ReplayBuffer:
    clone = rl.make_buffer(env_config, config)
    snap = buffer.snapshot()
    n = len(snap)
    clone.s[:n] = snap.s
    clone.a[:n] = snap.a
    clone.r[:n] = snap.r
    clone.s_next[:n] = snap.s_next
    clone.goal[:n] = snap.goal
    clone.done[:n] = snap.done
    clone._size = n
    clone._head = n % clone.capacity
    return clone


# ---------------------------------------------------------------------------
# Metric export


METRIC_COLUMNS = ["phase", "seed", "metric", "value"]


def export_metrics(rows: list[MetricRow], path: str | Path) -> None:
    """Write metric rows as CSV with a stable column order; overwrites."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        for row in rows:
            writer.writerow([row.phase, row.seed, row.metric, repr(float(row.value))])


def load_metrics(path: str | Path) -> list[MetricRow]:
    rows: list[MetricRow] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRIC_COLUMNS:
            raise ConfigError(f"unexpected metric columns {reader.fieldnames}")
        for rec in reader:
            rows.append(
                MetricRow(rec["phase"], int(rec["seed"]), rec["metric"], float(rec["value"]))
            )
    return rows
