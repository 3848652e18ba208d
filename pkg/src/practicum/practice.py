"""Autonomous practicing loop with rationed external resets.

Episodes run back to back: each one starts wherever the previous ended, a
high-level controller picks the next goal of interest to attempt, the
low-level policy rolls out toward it, collected steps feed online updates,
and only every ``reset_period``-th episode boundary receives an external
reset. Alternative high-level controllers (random, reset-style alternation,
behavior-cloned sequencing) cover the baselines.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import env as kitchen
from . import graph as taskgraph
from . import rl
from .demos import DemoCorpus, changepoint_goals, oracle_policy
from .env import EnvConfig, GoalOfInterest
from .errors import ConfigError, TrainingDiverged
from .graph import GoalDensity, TaskGraph
from .nets import MLP, Adam

HIGH_LEVEL_KINDS = ("graph", "random", "bc", "reset_controller")


@dataclass
class PracticeConfig:
    total_env_steps: int = 200_000
    reset_period: int = 10
    high_level_kind: str = "graph"
    pretrained: bool = True
    low_level: str = "policy"  # "policy" or "oracle"
    reset_goal: "int | str" = 0  # goal id, or "random" to draw one per reset
    count_commanded: bool = False  # density counts commanded instead of achieved goals
    checkpoint_every: int = 0  # episodes between checkpoints, 0 disables
    checkpoint_dir: str | None = None
    log_path: str | None = None
    max_episodes: int | None = None

    def __post_init__(self):
        if self.reset_period < 1:
            raise ConfigError("reset_period must be >= 1")
        if self.high_level_kind not in HIGH_LEVEL_KINDS:
            raise ConfigError(f"unknown high level kind {self.high_level_kind!r}")
        if self.low_level not in ("policy", "oracle"):
            raise ConfigError(f"unknown low level {self.low_level!r}")


@dataclass
class EpisodeRecord:
    episode: int
    commanded_goal: int
    achieved_goal: int
    episode_return: float
    external_reset: bool
    entropy: float
    rho: tuple[int, ...]
    env_steps: int


@dataclass
class PracticeLog:
    records: list[EpisodeRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def num_external_resets(self) -> int:
        return sum(r.external_reset for r in self.records)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["episode", "commanded_goal", "achieved_goal", "return", "reset_flag", "entropy"]
            )
            for r in self.records:
                writer.writerow(
                    [r.episode, r.commanded_goal, r.achieved_goal,
                     f"{r.episode_return:.6f}", int(r.external_reset), f"{r.entropy:.6f}"]
                )


# ---------------------------------------------------------------------------
# High-level controllers


@dataclass
class BCHighLevel:
    """Behavior-cloned task sequencer: p(next goal | current goal, desired goal)."""

    net: MLP
    n_goals: int

    def logits(self, current_goal_id: int, desired_goal_id: int) -> np.ndarray:
        x = np.zeros((1, 2 * self.n_goals))
        x[0, current_goal_id] = 1.0
        x[0, self.n_goals + desired_goal_id] = 1.0
        return self.net(x)[0]

    def predict_proba(self, current_goal_id: int, desired_goal_id: int) -> np.ndarray:
        z = self.logits(current_goal_id, desired_goal_id)
        z = z - z.max()
        p = np.exp(z)
        return p / p.sum()

    def sample(self, current_goal_id: int, desired_goal_id: int, rng: np.random.Generator) -> int:
        p = self.predict_proba(current_goal_id, desired_goal_id)
        return int(rng.choice(self.n_goals, p=p))


def bc_high_level_train(
    corpus: DemoCorpus,
    window: int = 3,
    seed: int = 0,
    hidden: tuple[int, ...] = (64, 64),
    steps: int = 3000,
    lr: float = 1e-3,
) -> BCHighLevel:
    """Fit the sequencer on windowed relabels of the demonstrated goal chains.

    Every changepoint k yields a sample (current=g_k, desired=g_{k+window},
    next=g_{k+1}), with the desired index clipped at the chain end. Trained by
    full-batch cross entropy.
    """
    if window < 1:
        raise ConfigError("window must be >= 1")
    n = corpus.n_goals
    rows = []
    labels = []
    for episode in corpus.episodes:
        goals = changepoint_goals(episode)
        for k in range(len(goals) - 1):
            desired = goals[min(k + window, len(goals) - 1)]
            x = np.zeros(2 * n)
            x[goals[k]] = 1.0
            x[n + desired] = 1.0
            rows.append(x)
            labels.append(goals[k + 1])
    if not rows:
        raise ConfigError("corpus has no changepoint pairs to train the sequencer on")

    x = np.stack(rows)
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    net = MLP(2 * n, hidden, n, rng)
    opt = Adam(net.params(), lr=lr)
    onehot = np.zeros((len(y), n))
    onehot[np.arange(len(y)), y] = 1.0
    for _ in range(steps):
        logits, cache = net.forward(x)
        shifted = logits - logits.max(axis=1, keepdims=True)
        expz = np.exp(shifted)
        p = expz / expz.sum(axis=1, keepdims=True)
        grads = net.backward(cache, (p - onehot) / len(y))
        opt.step(net.params(), grads)
    return BCHighLevel(net=net, n_goals=n)


def select_high_level(
    kind: str,
    current_goal_id: int,
    graph: TaskGraph | None,
    density: GoalDensity | None,
    bc_model: BCHighLevel | None,
    rng: np.random.Generator,
    episode_idx: int,
) -> int:
    """Next practicing goal under the configured high-level controller."""
    if kind == "graph":
        return taskgraph.practice_goal_select(graph, density, current_goal_id)
    if kind == "random":
        n = graph.n_goals if graph is not None else bc_model.n_goals
        return int(rng.integers(n))
    if kind == "reset_controller":
        if episode_idx % 2 == 0:
            return 0
        n = graph.n_goals if graph is not None else bc_model.n_goals
        return int(rng.integers(n))
    if kind == "bc":
        if bc_model is None:
            raise ConfigError("high level kind 'bc' requires a trained bc_model")
        desired = int(rng.integers(bc_model.n_goals))
        return bc_model.sample(current_goal_id, desired, rng)
    raise ConfigError(f"unknown high level kind {kind!r}")


# ---------------------------------------------------------------------------
# The practicing loop


def rollout_episode(
    env_config: EnvConfig,
    state: kitchen.SimState,
    goal: GoalOfInterest,
    low_level: str,
    params: rl.PolicyParams | None,
    train_config: rl.TrainConfig | None,
    rng: np.random.Generator,
    buffer: rl.ReplayBuffer | None = None,
    on_step=None,
    deterministic: bool = False,
) -> tuple[kitchen.SimState, float, int]:
    """Run one episode toward ``goal``; stops early on arrival.

    Returns (terminal state, return, steps taken). Transitions labeled with
    the commanded goal are appended to ``buffer`` when given, and ``on_step``
    fires after each environment step.
    """
    onehot = goal.onehot(env_config.n_goals)
    ep_return = 0.0
    steps = 0
    for _ in range(env_config.horizon):
        if low_level == "oracle":
            action = oracle_policy(env_config, state, goal)
        else:
            action = rl.policy_sample(
                params, state.to_vector(), onehot, train_config, rng, deterministic
            )
        next_state = kitchen.step(env_config, state, action)
        r = kitchen.reward(env_config, next_state, goal)
        done = kitchen.discretize(env_config, next_state) == goal.id
        if buffer is not None:
            buffer.add_step(state.to_vector(), action, r, next_state.to_vector(), onehot, done)
        state = next_state
        ep_return += r
        steps += 1
        if on_step is not None:
            on_step()
        if done:
            break
    return state, ep_return, steps


def current_goal_of(env_config: EnvConfig, state: kitchen.SimState) -> int:
    """Discretized goal id, snapping mid-motion states to the nearest goal."""
    goal_id = kitchen.discretize(env_config, state)
    if goal_id is None:
        goal_id = kitchen.snap_to_goal(env_config, state)
    return goal_id


def practice(
    env_config: EnvConfig,
    params: rl.PolicyParams | None,
    graph: TaskGraph,
    config: PracticeConfig,
    seed: int = 0,
    train_config: rl.TrainConfig | None = None,
    buffer: rl.ReplayBuffer | None = None,
    bc_model: BCHighLevel | None = None,
) -> tuple[rl.PolicyParams | None, PracticeLog]:
    """Practice tasks back to back, learning online, with rationed resets.

    The loop alternates goal selection, a low-level rollout, replay-buffer
    appends, and gradient updates (``grad_steps_per_env_step`` per step);
    every ``reset_period`` episodes the environment is restored externally.
    A non-finite loss aborts with a rescue checkpoint.
    """
    training = config.low_level == "policy"
    if training:
        if params is None:
            raise ConfigError("low_level='policy' requires params (set pretrained=False to init fresh)")
        if train_config is None:
            raise ConfigError("low_level='policy' requires a train config")
        if buffer is None:
            buffer = rl.make_buffer(env_config, train_config)

    rng = np.random.default_rng(seed)
    density = GoalDensity.zeros(env_config.n_goals)
    log = PracticeLog()
    state = kitchen.reset(env_config, start=_reset_goal(config, rng, env_config.n_goals), seed=seed)
    env_steps = 0
    episode = 0

    def do_updates():
        if not training:
            return
        for _ in range(train_config.grad_steps_per_env_step):
            try:
                rl.train_step(params, buffer, train_config, rng)
            except TrainingDiverged as exc:
                path = _rescue_checkpoint(config, params, train_config, rng, buffer)
                raise TrainingDiverged(str(exc), checkpoint_path=path) from exc

    while env_steps < config.total_env_steps:
        if config.max_episodes is not None and episode >= config.max_episodes:
            break
        current = current_goal_of(env_config, state)
        commanded = select_high_level(
            config.high_level_kind, current, graph, density, bc_model, rng, episode
        )
        goal = GoalOfInterest.from_id(commanded, env_config.num_elements)
        state, ep_return, steps = rollout_episode(
            env_config, state, goal,
            config.low_level, params, train_config, rng,
            buffer=buffer if training else None,
            on_step=do_updates,
        )
        env_steps += steps
        achieved = kitchen.discretize(env_config, state)
        achieved = achieved if achieved is not None else kitchen.snap_to_goal(env_config, state)
        density.add(commanded if config.count_commanded else achieved)

        episode += 1
        external = episode % config.reset_period == 0
        if external:
            state = kitchen.reset(
                env_config, start=_reset_goal(config, rng, env_config.n_goals), seed=seed + episode
            )
        log.records.append(
            EpisodeRecord(
                episode=episode,
                commanded_goal=commanded,
                achieved_goal=achieved,
                episode_return=ep_return,
                external_reset=external,
                entropy=taskgraph.entropy(density),
                rho=tuple(int(c) for c in density.visit_counts),
                env_steps=env_steps,
            )
        )
        if (
            training
            and config.checkpoint_every
            and episode % config.checkpoint_every == 0
            and config.checkpoint_dir
        ):
            path = Path(config.checkpoint_dir) / f"practice_ep{episode}.npz"
            rl.save_checkpoint(path, params, train_config, rng, buffer)

    if config.log_path:
        log.write_csv(config.log_path)
    return params, log


def _reset_goal(config: PracticeConfig, rng: np.random.Generator, n_goals: int) -> int:
    if config.reset_goal == "random":
        return int(rng.integers(n_goals))
    return int(config.reset_goal)


def _rescue_checkpoint(config, params, train_config, rng, buffer) -> str | None:
    directory = Path(config.checkpoint_dir) if config.checkpoint_dir else Path.cwd()
    try:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "diverged.npz"
        rl.save_checkpoint(path, params, train_config, rng, buffer)
        return str(path)
    except OSError:
        return None
