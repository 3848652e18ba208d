"""Goal-conditioned advantage-weighted actor critic, trained offline then online.

The actor is a squashed diagonal Gaussian over end-effector displacements,
conditioned on the flat state vector concatenated with a one-hot goal id. The
critic is a Q network over (state, goal, action). Actor updates are weighted
maximum likelihood with weights exp(advantage * temperature) clipped at
``weight_clip``; the critic takes TD(0) steps against a Polyak-averaged
target network. Plain behavior cloning reuses the same machinery with unit
weights.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .demos import DemoCorpus, LabeledTransition, to_transitions
from .env import EnvConfig
from .errors import ConfigError, TrainingDiverged
from .nets import MLP, Adam, gaussian_log_prob, split_head, squash, unsquash

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    gamma: float = 0.99
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    batch_size: int = 1024
    tau_polyak: float = 5e-3
    # Actor weight = exp(advantage * advantage_temperature), clipped at
    # weight_clip. The default is the reciprocal reading of a Lagrangian
    # temperature of 30, i.e. w = exp(A / 30): with this environment's reward
    # scale, multiplying advantages by 30 saturates every weight at the clip
    # and degrades the update to training on whichever half of the batch a
    # noisy critic happens to rank higher (measured: offline success collapses
    # versus plain cloning).
    advantage_temperature: float = 1.0 / 30.0
    advantage_samples: int = 4
    weight_clip: float = 100.0
    pretrain_steps: int = 30_000
    grad_steps_per_env_step: int = 1
    actor_hidden: tuple[int, ...] = (256, 256)
    critic_hidden: tuple[int, ...] = (128, 128)
    actor_weight_decay: float = 1e-4
    buffer_capacity: int = 500_000
    std_floor: float = 1e-5
    twin_q: bool = False

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        if self.advantage_temperature <= 0:
            raise ConfigError("advantage_temperature must be positive")
        if self.advantage_samples < 1:
            raise ConfigError("advantage_samples must be >= 1")

    @property
    def log_std_min(self) -> float:
        return float(np.log(self.std_floor))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["actor_hidden"] = list(self.actor_hidden)
        d["critic_hidden"] = list(self.critic_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["actor_hidden"] = tuple(d.get("actor_hidden", (64, 64)))
        d["critic_hidden"] = tuple(d.get("critic_hidden", (128, 128)))
        return cls(**d)


@dataclass
class PolicyParams:
    """Actor, critic(s), lagged targets, and their optimizer states."""

    actor: MLP
    critic: MLP
    critic_target: MLP
    actor_opt: Adam
    critic_opt: Adam
    state_dim: int
    n_goals: int
    action_dim: int
    a_max: float
    critic2: MLP | None = None
    critic2_target: MLP | None = None
    critic2_opt: Adam | None = None

    def critics(self) -> list[tuple[MLP, MLP, Adam]]:
        nets = [(self.critic, self.critic_target, self.critic_opt)]
        if self.critic2 is not None:
            nets.append((self.critic2, self.critic2_target, self.critic2_opt))
        return nets

    def clone(self) -> "PolicyParams":
        import copy

        return copy.deepcopy(self)


def init_params(env_config: EnvConfig, config: TrainConfig, seed: int = 0) -> PolicyParams:
    rng = np.random.default_rng(seed)
    state_dim = env_config.state_dim
    n_goals = env_config.n_goals
    action_dim = 2
    actor = MLP(state_dim + n_goals, config.actor_hidden, 2 * action_dim, rng)
    critic = MLP(state_dim + n_goals + action_dim, config.critic_hidden, 1, rng)
    params = PolicyParams(
        actor=actor,
        critic=critic,
        critic_target=critic.clone(),
        actor_opt=Adam(actor.params(), lr=config.actor_lr),
        critic_opt=Adam(critic.params(), lr=config.critic_lr),
        state_dim=state_dim,
        n_goals=n_goals,
        action_dim=action_dim,
        a_max=env_config.a_max,
    )
    if config.twin_q:
        critic2 = MLP(state_dim + n_goals + action_dim, config.critic_hidden, 1, rng)
        params.critic2 = critic2
        params.critic2_target = critic2.clone()
        params.critic2_opt = Adam(critic2.params(), lr=config.critic_lr)
    return params


# ---------------------------------------------------------------------------
# Replay buffer


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    goal: np.ndarray
    done: np.ndarray

    def __len__(self) -> int:
        return self.s.shape[0]


class ReplayBuffer:
    """Fixed-capacity ring buffer with FIFO eviction."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int, n_goals: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.goal = np.zeros((capacity, n_goals))
        self.done = np.zeros(capacity)
        self._size = 0
        self._head = 0  # next write slot

    def __len__(self) -> int:
        return self._size

    def add_step(self, s, a, r, s_next, goal_onehot, done) -> None:
        i = self._head
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s_next[i] = s_next
        self.goal[i] = goal_onehot
        self.done[i] = float(done)
        self._head = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def add(self, tr: LabeledTransition) -> None:
        self.add_step(tr.s, tr.a, tr.r, tr.s_next, tr.goal_onehot, tr.done)

    def extend(self, transitions) -> None:
        for tr in transitions:
            self.add(tr)

    def _order(self) -> np.ndarray:
        """Indices oldest to newest."""
        if self._size < self.capacity:
            return np.arange(self._size)
        return (self._head + np.arange(self.capacity)) % self.capacity

    def snapshot(self) -> Batch:
        idx = self._order()
        return Batch(
            self.s[idx].copy(), self.a[idx].copy(), self.r[idx].copy(),
            self.s_next[idx].copy(), self.goal[idx].copy(), self.done[idx].copy(),
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        idx = rng.integers(0, self._size, size=batch_size)
        return Batch(
            self.s[idx], self.a[idx], self.r[idx],
            self.s_next[idx], self.goal[idx], self.done[idx],
        )


# ---------------------------------------------------------------------------
# Policy evaluation and sampling


def actor_forward(params: PolicyParams, x: np.ndarray, config: TrainConfig):
    out, cache = params.actor.forward(x)
    mean, log_std, inside = split_head(out, config.log_std_min)
    return mean, log_std, inside, cache


def sample_actions(
    params: PolicyParams,
    x: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator | None,
    deterministic: bool = False,
) -> np.ndarray:
    mean, log_std, _, _ = actor_forward(params, x, config)
    if deterministic:
        return squash(mean, params.a_max)
    noise = rng.standard_normal(mean.shape)
    return squash(mean + np.exp(log_std) * noise, params.a_max)


def policy_sample(
    params: PolicyParams,
    state: np.ndarray,
    goal_onehot: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator | None = None,
    deterministic: bool = False,
) -> np.ndarray:
    """Draw one action for a single (state, goal) pair."""
    state = np.asarray(state, dtype=float)
    goal_onehot = np.asarray(goal_onehot, dtype=float)
    if state.shape != (params.state_dim,) or goal_onehot.shape != (params.n_goals,):
        raise ConfigError(
            f"policy input dims {state.shape}/{goal_onehot.shape} do not match "
            f"({params.state_dim},)/({params.n_goals},)"
        )
    x = np.concatenate([state, goal_onehot])[None, :]
    return sample_actions(params, x, config, rng, deterministic)[0]


def q_values(critic: MLP, x_sg: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return critic(np.concatenate([x_sg, actions], axis=1))[:, 0]


def advantage_batch(
    params: PolicyParams,
    batch: Batch,
    config: TrainConfig,
    rng: np.random.Generator,
    baseline_actions: np.ndarray | None = None,
) -> np.ndarray:
    """Q(s, a, g) minus the mean Q over actions sampled from the current actor.

    ``baseline_actions`` (shape (B, M, action_dim)) overrides the sampled
    baseline; used by tests to pin the estimator.
    """
    x_sg = np.concatenate([batch.s, batch.goal], axis=1)
    q = q_values(params.critic, x_sg, batch.a)
    m = config.advantage_samples if baseline_actions is None else baseline_actions.shape[1]
    x_rep = np.repeat(x_sg, m, axis=0)
    if baseline_actions is None:
        # One actor pass for all M samples: the tiled inputs are identical,
        # only the noise differs.
        mean, log_std, _, _ = actor_forward(params, x_sg, config)
        noise = rng.standard_normal((len(batch) * m, params.action_dim))
        u = np.repeat(mean, m, axis=0) + np.repeat(np.exp(log_std), m, axis=0) * noise
        sampled = squash(u, params.a_max)
    else:
        sampled = baseline_actions.reshape(-1, params.action_dim)
    q_base = q_values(params.critic, x_rep, sampled).reshape(len(batch), m).mean(axis=1)
    return q - q_base


def advantage(
    params: PolicyParams,
    s: np.ndarray,
    goal_onehot: np.ndarray,
    a: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
    baseline_actions: np.ndarray | None = None,
) -> float:
    """Single-sample advantage estimate."""
    batch = Batch(
        s=np.asarray(s, dtype=float)[None, :],
        a=np.asarray(a, dtype=float)[None, :],
        r=np.zeros(1),
        s_next=np.zeros((1, params.state_dim)),
        goal=np.asarray(goal_onehot, dtype=float)[None, :],
        done=np.zeros(1),
    )
    if baseline_actions is not None:
        baseline_actions = np.asarray(baseline_actions, dtype=float)[None, ...]
    return float(advantage_batch(params, batch, config, rng, baseline_actions)[0])


# ---------------------------------------------------------------------------
# Losses (analytic gradients, finite-difference checkable)


def weighted_nll_loss(
    params: PolicyParams,
    batch: Batch,
    weights: np.ndarray,
    config: TrainConfig,
    forward=None,
) -> tuple[float, list[np.ndarray]]:
    """Negative weighted log-likelihood of batch actions, plus L2 decay.

    loss = -(1/B) sum_i w_i log pi(a_i | s_i, g_i) + (wd/2) ||theta||^2

    ``forward`` reuses a precomputed actor_forward result for the same batch.
    """
    if forward is None:
        x = np.concatenate([batch.s, batch.goal], axis=1)
        forward = actor_forward(params, x, config)
    mean, log_std, inside, cache = forward
    u = unsquash(batch.a, params.a_max)
    logp, d_mean, d_log_std = gaussian_log_prob(u, mean, log_std, params.a_max)
    b = len(batch)
    loss = float(-(weights * logp).sum() / b)

    coeff = -(weights / b)[:, None]
    grad_out = np.concatenate([coeff * d_mean, coeff * d_log_std * inside], axis=1)
    grads = params.actor.backward(cache, grad_out)

    wd = config.actor_weight_decay
    if wd:
        for g, p in zip(grads, params.actor.params()):
            g += wd * p
            loss += 0.5 * wd * float((p * p).sum())
    return loss, grads


def awac_weights(
    params: PolicyParams, batch: Batch, config: TrainConfig, rng: np.random.Generator
) -> np.ndarray:
    """exp(advantage * temperature), clipped into (0, weight_clip]."""
    adv = advantage_batch(params, batch, config, rng)
    exponent = np.minimum(adv * config.advantage_temperature, np.log(config.weight_clip))
    return np.exp(np.maximum(exponent, -700.0))


def actor_update(
    params: PolicyParams, batch: Batch, config: TrainConfig, rng: np.random.Generator
) -> float:
    """One advantage-weighted maximum-likelihood ascent step. Returns the loss.

    The actor forward pass is shared between the advantage baseline sampler
    and the likelihood gradient; both see the same inputs.
    """
    x = np.concatenate([batch.s, batch.goal], axis=1)
    forward = actor_forward(params, x, config)
    mean, log_std = forward[0], forward[1]
    m = config.advantage_samples
    noise = rng.standard_normal((len(batch) * m, params.action_dim))
    baseline = squash(
        np.repeat(mean, m, axis=0) + np.repeat(np.exp(log_std), m, axis=0) * noise,
        params.a_max,
    ).reshape(len(batch), m, params.action_dim)
    adv = advantage_batch(params, batch, config, rng, baseline_actions=baseline)
    exponent = np.minimum(adv * config.advantage_temperature, np.log(config.weight_clip))
    weights = np.exp(np.maximum(exponent, -700.0))

    loss, grads = weighted_nll_loss(params, batch, weights, config, forward=forward)
    if not np.isfinite(loss):
        raise TrainingDiverged(f"actor loss is non-finite: {loss}")
    params.actor_opt.step(params.actor.params(), grads)
    return loss


def bc_update(params: PolicyParams, batch: Batch, config: TrainConfig) -> float:
    """Plain maximum-likelihood step: the unit-weight case of the actor update."""
    weights = np.ones(len(batch))
    loss, grads = weighted_nll_loss(params, batch, weights, config)
    if not np.isfinite(loss):
        raise TrainingDiverged(f"behavior cloning loss is non-finite: {loss}")
    params.actor_opt.step(params.actor.params(), grads)
    return loss


def td_targets(
    params: PolicyParams, batch: Batch, config: TrainConfig, rng: np.random.Generator
) -> np.ndarray:
    """r + gamma * (1 - done) * Q_target(s', a' ~ pi(s', g), g)."""
    x_next = np.concatenate([batch.s_next, batch.goal], axis=1)
    a_next = sample_actions(params, x_next, config, rng)
    q_next = q_values(params.critic_target, x_next, a_next)
    if params.critic2_target is not None:
        q_next = np.minimum(q_next, q_values(params.critic2_target, x_next, a_next))
    return batch.r + config.gamma * (1.0 - batch.done) * q_next


def critic_loss_and_grads(
    critic: MLP, batch: Batch, targets: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    """Mean squared TD error against fixed targets."""
    x = np.concatenate([batch.s, batch.goal, batch.a], axis=1)
    q, cache = critic.forward(x)
    err = q[:, 0] - targets
    loss = float((err * err).mean())
    grads = critic.backward(cache, (2.0 / len(batch)) * err[:, None])
    return loss, grads


def polyak_update(target: MLP, online: MLP, tau: float) -> None:
    for t, o in zip(target.params(), online.params()):
        t *= 1.0 - tau
        t += tau * o


def critic_update(
    params: PolicyParams, batch: Batch, config: TrainConfig, rng: np.random.Generator
) -> float:
    """One TD(0) step on every critic, then Polyak-average the targets."""
    targets = td_targets(params, batch, config, rng)
    total = 0.0
    for critic, critic_target, opt in params.critics():
        loss, grads = critic_loss_and_grads(critic, batch, targets)
        if not np.isfinite(loss):
            raise TrainingDiverged(f"critic loss is non-finite: {loss}")
        opt.step(critic.params(), grads)
        polyak_update(critic_target, critic, config.tau_polyak)
        total += loss
    return total


def train_step(
    params: PolicyParams, buffer: ReplayBuffer, config: TrainConfig, rng: np.random.Generator
) -> tuple[float, float] | None:
    """One critic-then-actor update on a fresh batch; None if the buffer is short."""
    if len(buffer) < config.batch_size:
        return None
    batch = buffer.sample(config.batch_size, rng)
    c_loss = critic_update(params, batch, config, rng)
    a_loss = actor_update(params, batch, config, rng)
    return c_loss, a_loss


# ---------------------------------------------------------------------------
# Offline pretraining


def make_buffer(env_config: EnvConfig, config: TrainConfig) -> ReplayBuffer:
    return ReplayBuffer(
        capacity=config.buffer_capacity,
        state_dim=env_config.state_dim,
        action_dim=2,
        n_goals=env_config.n_goals,
    )


def pretrain(
    corpus: DemoCorpus,
    env_config: EnvConfig,
    config: TrainConfig,
    seed: int = 0,
    steps: int | None = None,
    progress_every: int = 0,
) -> tuple[PolicyParams, ReplayBuffer]:
    """Bootstrap the policy offline from demonstrations.

    Fills a fresh replay buffer with the corpus transitions and runs
    alternating critic/actor updates; returns the trained params together
    with the warm-started buffer for continued online use.
    """
    if not corpus.episodes:
        raise ConfigError("cannot pretrain on an empty corpus")
    steps = config.pretrain_steps if steps is None else steps
    buffer = make_buffer(env_config, config)
    buffer.extend(to_transitions(corpus, env_config))
    params = init_params(env_config, config, seed)
    rng = np.random.default_rng(seed)
    for i in range(steps):
        train_step(params, buffer, config, rng)
        if progress_every and (i + 1) % progress_every == 0:
            print(f"pretrain step {i + 1}/{steps}", flush=True)
    return params, buffer


# ---------------------------------------------------------------------------
# Checkpointing


def _net_arrays(prefix: str, net: MLP) -> dict[str, np.ndarray]:
    return {f"{prefix}_{i}": p for i, p in enumerate(net.params())}


def _load_net(prefix: str, net: MLP, data) -> None:
    for i, p in enumerate(net.params()):
        p[...] = data[f"{prefix}_{i}"]


def save_checkpoint(
    path: str | Path,
    params: PolicyParams,
    config: TrainConfig,
    rng: np.random.Generator,
    buffer: ReplayBuffer | None = None,
) -> None:
    """Write a single-file checkpoint that resumes training bit-exactly."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": config.to_dict(),
        "rng_state": rng.bit_generator.state,
        "dims": {
            "state_dim": params.state_dim,
            "n_goals": params.n_goals,
            "action_dim": params.action_dim,
            "a_max": params.a_max,
        },
        "has_buffer": buffer is not None,
        "twin_q": params.critic2 is not None,
    }
    arrays: dict[str, np.ndarray] = {}
    arrays.update(_net_arrays("actor", params.actor))
    arrays.update(_net_arrays("critic", params.critic))
    arrays.update(_net_arrays("critic_target", params.critic_target))
    arrays.update({f"actor_opt_{k}": v for k, v in params.actor_opt.state_arrays().items()})
    arrays.update({f"critic_opt_{k}": v for k, v in params.critic_opt.state_arrays().items()})
    if params.critic2 is not None:
        arrays.update(_net_arrays("critic2", params.critic2))
        arrays.update(_net_arrays("critic2_target", params.critic2_target))
        arrays.update({f"critic2_opt_{k}": v for k, v in params.critic2_opt.state_arrays().items()})
    if buffer is not None:
        snap = buffer.snapshot()
        arrays.update(
            buf_s=snap.s, buf_a=snap.a, buf_r=snap.r,
            buf_s_next=snap.s_next, buf_goal=snap.goal, buf_done=snap.done,
            buf_capacity=np.asarray(buffer.capacity),
        )
    np.savez_compressed(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_checkpoint(
    path: str | Path,
) -> tuple[PolicyParams, TrainConfig, np.random.Generator, ReplayBuffer | None]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {meta['version']}")
        config = TrainConfig.from_dict(meta["config"])
        dims = meta["dims"]

        rng = np.random.default_rng()
        rng.bit_generator.state = meta["rng_state"]

        seed_rng = np.random.default_rng(0)
        actor = MLP(dims["state_dim"] + dims["n_goals"], config.actor_hidden, 2 * dims["action_dim"], seed_rng)
        critic_in = dims["state_dim"] + dims["n_goals"] + dims["action_dim"]
        critic = MLP(critic_in, config.critic_hidden, 1, seed_rng)
        params = PolicyParams(
            actor=actor,
            critic=critic,
            critic_target=critic.clone(),
            actor_opt=Adam(actor.params(), lr=config.actor_lr),
            critic_opt=Adam(critic.params(), lr=config.critic_lr),
            state_dim=dims["state_dim"],
            n_goals=dims["n_goals"],
            action_dim=dims["action_dim"],
            a_max=dims["a_max"],
        )
        _load_net("actor", params.actor, data)
        _load_net("critic", params.critic, data)
        _load_net("critic_target", params.critic_target, data)
        params.actor_opt.load_state_arrays(
            {k.removeprefix("actor_opt_"): data[k] for k in data.files if k.startswith("actor_opt_")}
        )
        params.critic_opt.load_state_arrays(
            {k.removeprefix("critic_opt_"): data[k] for k in data.files if k.startswith("critic_opt_")}
        )
        if meta.get("twin_q"):
            critic2 = MLP(critic_in, config.critic_hidden, 1, seed_rng)
            params.critic2 = critic2
            params.critic2_target = critic2.clone()
            params.critic2_opt = Adam(critic2.params(), lr=config.critic_lr)
            _load_net("critic2", params.critic2, data)
            _load_net("critic2_target", params.critic2_target, data)
            params.critic2_opt.load_state_arrays(
                {k.removeprefix("critic2_opt_"): data[k] for k in data.files if k.startswith("critic2_opt_")}
            )

        buffer = None
        if meta.get("has_buffer"):
            buffer = ReplayBuffer(
                capacity=int(data["buf_capacity"]),
                state_dim=dims["state_dim"],
                action_dim=dims["action_dim"],
                n_goals=dims["n_goals"],
            )
            n = data["buf_s"].shape[0]
            buffer.s[:n] = data["buf_s"]
            buffer.a[:n] = data["buf_a"]
            buffer.r[:n] = data["buf_r"]
            buffer.s_next[:n] = data["buf_s_next"]
            buffer.goal[:n] = data["buf_goal"]
            buffer.done[:n] = data["buf_done"]
            buffer._size = n
            buffer._head = n % buffer.capacity
        return params, config, rng, buffer
