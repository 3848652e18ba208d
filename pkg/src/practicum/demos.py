"""Play-style demonstration corpus.

A demonstration episode is one continuous trajectory in which goals of
interest are completed back to back, with the completion instants annotated
("changepoints"). Record ``t`` of an episode stores the state at time ``t``
together with the action that produced it (record 0 carries a zero action),
so consecutive records define the transitions used for policy training.

Persistence is JSONL: a header line binding the data to an environment
config, then one object per record:

    {"env_config_hash": "...", "num_elements": E}
    {"episode": 0, "t": 0, "state": [...], "action": [...],
     "changepoint": true, "goal_id": 0}
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import env as kitchen
from .env import ElementSpec, EnvConfig, GoalOfInterest, SimState
from .errors import ConfigError, CorpusError, OracleError

log = logging.getLogger(__name__)


@dataclass
class DemoStep:
    """State at one timestep plus the action that led into it."""

    state: np.ndarray
    action: np.ndarray
    changepoint: bool = False
    goal_id: int | None = None

    def __eq__(self, other) -> bool:
        if not isinstance(other, DemoStep):
            return NotImplemented
        return (
            np.array_equal(self.state, other.state)
            and np.array_equal(self.action, other.action)
            and self.changepoint == other.changepoint
            and self.goal_id == other.goal_id
        )


@dataclass
class DemoCorpus:
    """Validated episodes bound to an environment config by checksum."""

    episodes: list[list[DemoStep]]
    env_config_hash: str
    num_elements: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, DemoCorpus):
            return NotImplemented
        return (
            self.env_config_hash == other.env_config_hash
            and self.num_elements == other.num_elements
            and self.episodes == other.episodes
        )

    @property
    def n_goals(self) -> int:
        return 2 ** self.num_elements

    def total_steps(self) -> int:
        """Total number of actions across episodes (records minus one each)."""
        return sum(len(ep) - 1 for ep in self.episodes)


@dataclass
class LabeledTransition:
    """Replay-buffer entry: a step labeled with the goal its segment reached."""

    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    goal_onehot: np.ndarray
    done: bool

    @property
    def goal_id(self) -> int:
        return int(np.argmax(self.goal_onehot))


@dataclass
class EpisodeRejection:
    episode: int
    reason: str


def changepoint_indices(episode: list[DemoStep]) -> list[int]:
    return [t for t, step in enumerate(episode) if step.changepoint]


def changepoint_goals(episode: list[DemoStep]) -> list[int]:
    return [step.goal_id for step in episode if step.changepoint]


def validate_episode(config: EnvConfig, episode: list[DemoStep]) -> str | None:
    """Reason the episode violates the corpus contract, or None if valid."""
    state_dim = config.state_dim
    for t, step in enumerate(episode):
        if step.state.shape != (state_dim,):
            return f"record {t}: state has shape {step.state.shape}, expected ({state_dim},)"
        if step.action.shape != (2,):
            return f"record {t}: action has shape {step.action.shape}, expected (2,)"
        if step.changepoint != (step.goal_id is not None):
            return f"record {t}: goal_id must be present iff changepoint"
        if step.changepoint:
            derived = kitchen.discretize(config, step.state)
            if derived is None:
                return f"record {t}: changepoint state does not discretize to any goal"
            if derived != step.goal_id:
                return f"record {t}: recorded goal {step.goal_id} != derived goal {derived}"
    goals = changepoint_goals(episode)
    if len(goals) < 2:
        return f"episode has {len(goals)} changepoints, need at least 2"
    for a, b in zip(goals, goals[1:]):
        if a == b:
            return f"consecutive changepoints share goal {a}"
    return None


# ---------------------------------------------------------------------------
# Scripted demonstrator


def _move_along(direction: np.ndarray, remaining: float, a_max: float) -> np.ndarray:
    """Displacement of at most a_max (per component) toward a point on a line."""
    peak = float(np.max(np.abs(direction)))
    step = np.clip(remaining, -a_max / peak, a_max / peak)
    return direction * step


def oracle_policy(
    config: EnvConfig,
    state: SimState,
    goal: "GoalOfInterest | int",
    work_eps: float | None = None,
) -> np.ndarray:
    """Scripted demonstrator standing in for a human teleoperator.

    Works the nearest element whose joint differs from the goal, in three
    legs: cross onto the element's track (moving perpendicular to every
    track, so no joint is disturbed), travel along the track to a staging
    point half a grab radius behind the handle on the side it will be pushed
    from (overshooting the handle on the way only presses the joint into the
    stop it already rests on), then push through the handle and drag the
    remaining joint travel.

    The staging detour is what makes the data clonable: a policy fit to
    demonstrations that approach the handle against the push direction sees
    oppositely signed action labels meet at the attachment boundary and
    stalls there. With push-side engagement the only sign change sits inside
    grab range, where any forward drift already drags the joint and moves
    the boundary off the stall point.

    Joints are worked to ``work_eps`` (half the discretization band by
    default): finishing each motion well inside the band leaves slack for the
    small joint drift that later track crossings can impart, which otherwise
    pops a finished element back out of its band mid-segment and sends the
    controller thrashing between elements.

    Returns a zero action when every joint is within ``work_eps`` of the goal.
    """
    goal = kitchen._as_goal(config, goal)
    if work_eps is None:
        work_eps = config.eps / 2
    diff = [
        e for e in range(config.num_elements)
        if abs(float(state.joints[e]) - goal.bits[e]) > work_eps
    ]
    if not diff:
        return np.zeros(2)

    handles = {e: config.elements[e].handle(float(state.joints[e])) for e in diff}
    target = min(diff, key=lambda e: (float(np.linalg.norm(state.ee_pos - handles[e])), e))
    spec = config.elements[target]
    theta = float(state.joints[target])
    want = goal.bits[target]
    radius = spec.grab_radius

    length = spec.axis_length
    along = spec.axis / length
    across = np.array([-along[1], along[0]])
    rel = state.ee_pos - np.asarray(spec.axis_start, dtype=float)
    l_pos = float(rel @ along)
    t_pos = float(rel @ across)
    l_handle = theta * length
    push = 1.0 if want > theta else -1.0

    # Drag: attached on the push side, move the remaining joint travel.
    dist = float(np.linalg.norm(state.ee_pos - handles[target]))
    if dist <= radius and (l_pos - l_handle) * push <= 1e-9:
        return _move_along(along, (want - theta) * length, config.a_max)

    # Cross onto the track before any motion along it.
    if abs(t_pos) > radius / 2:
        return _move_along(across, -t_pos, config.a_max)

    # On the track: push forward anywhere between staging and handle, else
    # travel back behind the staging point first.
    l_staging = l_handle - push * (radius / 2)
    if (l_staging - l_pos) * push >= -radius / 2:
        return _move_along(along, push * config.a_max, config.a_max)
    return _move_along(along, l_staging - l_pos, config.a_max)


def single_toggle_neighbors(goal_id: int, num_elements: int) -> list[int]:
    """Goal ids reachable by flipping exactly one element."""
    return [goal_id ^ (1 << e) for e in range(num_elements)]


def scripted_play(
    config: EnvConfig,
    num_changepoints: int,
    seed: int = 0,
    bias: np.ndarray | None = None,
    action_noise: float = 0.01,
    session_changepoints: int = 25,
) -> DemoCorpus:
    """Play-style demonstrations: random walks over adjacent goals.

    Play is recorded in sessions of ``session_changepoints`` changepoints
    each. Within a session the trajectory is continuous, with no resets
    between segments: the demonstrator repeatedly draws a single-toggle
    neighbor (uniform, or weighted by ``bias[i, j]``), drives there, and marks
    the arrival. Between sessions the scene persists but the end effector
    returns home, the way a teleoperator pauses between stints; the session
    opens with a changepoint annotating the configuration it starts from.
    Home-start coverage is what lets a cloned policy cope with evaluation
    resets.

    ``action_noise`` adds seeded Gaussian jitter to the executed actions,
    imitating human sloppiness. Besides realism it matters for cloning: jitter
    spreads the data over a tube around the nominal routes, so a policy fit
    to it sees corrective labels near route corners instead of knife-edge
    switches.
    """
    if num_changepoints < 2:
        raise ConfigError("num_changepoints must be >= 2")
    if session_changepoints < 2:
        raise ConfigError("session_changepoints must be >= 2")
    n_goals = config.n_goals
    if bias is not None:
        bias = np.asarray(bias, dtype=float)
        if bias.shape != (n_goals, n_goals):
            raise ConfigError(f"bias must be {n_goals}x{n_goals}, got {bias.shape}")
        if np.any(bias < 0):
            raise ConfigError("bias weights must be non-negative")

    rng = np.random.default_rng(seed)
    state = kitchen.reset(config, start=0, seed=seed)
    current = 0
    episodes: list[list[DemoStep]] = []
    episode: list[DemoStep] = []
    marks_in_session = 0
    total_marks = 0

    def open_session():
        nonlocal state, episode, marks_in_session, total_marks
        state = SimState(
            ee_pos=np.array(kitchen.HOME_POSITION, dtype=float),
            joints=state.joints.copy(),
            step_count=0,
        )
        episode = [DemoStep(state.to_vector(), np.zeros(2), changepoint=True, goal_id=current)]
        episodes.append(episode)
        marks_in_session = 1
        total_marks += 1

    open_session()
    while total_marks < num_changepoints:
        remaining = num_changepoints - total_marks
        # Never strand a final session with a lone changepoint.
        if marks_in_session >= session_changepoints and remaining >= 2:
            open_session()
            continue

        neighbors = single_toggle_neighbors(current, config.num_elements)
        if bias is None:
            weights = np.ones(len(neighbors))
        else:
            weights = bias[current, neighbors]
        total = weights.sum()
        if total <= 0:
            raise ConfigError(f"bias leaves goal {current} with no outgoing weight")
        nxt = int(rng.choice(neighbors, p=weights / total))

        steps_in_segment = 0
        while True:
            action = oracle_policy(config, state, nxt)
            # Mark only once the motion is fully finished (zero action), not
            # merely inside the discretization band.
            if kitchen.discretize(config, state) == nxt and not action.any():
                break
            if action_noise > 0:
                action = np.clip(
                    action + action_noise * rng.standard_normal(2),
                    -config.a_max, config.a_max,
                )
            state = kitchen.step(config, state, action)
            episode.append(DemoStep(state.to_vector(), action))
            steps_in_segment += 1
            if steps_in_segment > config.horizon:
                raise OracleError(
                    f"changepoint {total_marks}: oracle failed to reach goal {nxt} from "
                    f"goal {current} within {config.horizon} steps (joints={state.joints})"
                )
        episode[-1].changepoint = True
        episode[-1].goal_id = nxt
        current = nxt
        marks_in_session += 1
        total_marks += 1

    return DemoCorpus(
        episodes=episodes,
        env_config_hash=config.config_hash(),
        num_elements=config.num_elements,
    )


# ---------------------------------------------------------------------------
# Persistence


def save_demos(corpus: DemoCorpus, path: str | Path) -> None:
    with open(path, "w") as fh:
        for line in serialize_lines(corpus):
            fh.write(line + "\n")


def serialize_lines(corpus: DemoCorpus) -> Iterator[str]:
    yield json.dumps(
        {"env_config_hash": corpus.env_config_hash, "num_elements": corpus.num_elements}
    )
    for i, episode in enumerate(corpus.episodes):
        for t, step in enumerate(episode):
            yield json.dumps(
                {
                    "episode": i,
                    "t": t,
                    "state": [float(x) for x in step.state],
                    "action": [float(x) for x in step.action],
                    "changepoint": step.changepoint,
                    "goal_id": step.goal_id,
                }
            )


def ingest(
    source: "str | Path | Iterable[str]",
    config: EnvConfig,
) -> tuple[DemoCorpus, list[EpisodeRejection]]:
    """Parse and validate a JSONL record stream against the current environment.

    Episodes that violate the corpus contract are dropped and itemized in the
    returned rejection list; a header that binds to a different environment
    aborts the whole ingest.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            return ingest(list(fh), config)

    lines = [ln.strip() for ln in source if ln.strip()]
    expected_hash = config.config_hash()
    if not lines:
        log.warning("ingest: empty record stream, returning empty corpus")
        return (
            DemoCorpus(episodes=[], env_config_hash=expected_hash, num_elements=config.num_elements),
            [],
        )

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed header line: {exc}") from exc
    if "env_config_hash" not in header or "num_elements" not in header:
        raise CorpusError("header must carry env_config_hash and num_elements")
    if header["env_config_hash"] != expected_hash:
        raise CorpusError(
            f"corpus bound to env {header['env_config_hash']}, current env is {expected_hash}"
        )
    if int(header["num_elements"]) != config.num_elements:
        raise CorpusError(
            f"corpus has {header['num_elements']} elements, current env has {config.num_elements}"
        )

    raw_episodes: dict[int, list[dict]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
            ep = int(rec["episode"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"line {lineno}: unattributable record: {exc}") from exc
        raw_episodes.setdefault(ep, []).append(rec)

    episodes: list[list[DemoStep]] = []
    rejections: list[EpisodeRejection] = []
    for ep_id in sorted(raw_episodes):
        records = sorted(raw_episodes[ep_id], key=lambda r: r.get("t", 0))
        reason = None
        steps: list[DemoStep] = []
        for idx, rec in enumerate(records):
            try:
                if int(rec["t"]) != idx:
                    reason = f"record {idx}: non-consecutive t={rec['t']}"
                    break
                goal_id = rec["goal_id"]
                steps.append(
                    DemoStep(
                        state=np.asarray(rec["state"], dtype=float),
                        action=np.asarray(rec["action"], dtype=float),
                        changepoint=bool(rec["changepoint"]),
                        goal_id=None if goal_id is None else int(goal_id),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                reason = f"record {idx}: schema violation: {exc}"
                break
        if reason is None:
            reason = validate_episode(config, steps)
        if reason is None:
            episodes.append(steps)
        else:
            rejections.append(EpisodeRejection(episode=ep_id, reason=reason))

    corpus = DemoCorpus(
        episodes=episodes,
        env_config_hash=expected_hash,
        num_elements=config.num_elements,
    )
    return corpus, rejections


# ---------------------------------------------------------------------------
# Conversion to RL training data


def to_transitions(corpus: DemoCorpus, config: EnvConfig) -> list[LabeledTransition]:
    """Label every step between consecutive changepoints with the goal reached.

    The segment ending at changepoint k+1 is labeled with that changepoint's
    goal; rewards are recomputed from raw states and the arrival step is
    terminal. Steps before the first changepoint carry no start label and are
    dropped, as are steps after the last changepoint. No windowed hindsight
    relabeling is applied.
    """
    if corpus.env_config_hash != config.config_hash():
        raise CorpusError("corpus is bound to a different environment config")
    n_goals = corpus.n_goals
    transitions: list[LabeledTransition] = []
    for episode in corpus.episodes:
        cps = changepoint_indices(episode)
        for c_from, c_to in zip(cps, cps[1:]):
            goal = GoalOfInterest.from_id(episode[c_to].goal_id, corpus.num_elements)
            onehot = goal.onehot(n_goals)
            for t in range(c_from + 1, c_to + 1):
                s_next = episode[t].state
                transitions.append(
                    LabeledTransition(
                        s=episode[t - 1].state,
                        a=episode[t].action,
                        r=kitchen.reward(config, SimState.from_vector(s_next), goal),
                        s_next=s_next,
                        goal_onehot=onehot,
                        done=(t == c_to),
                    )
                )
    return transitions


def transition_heatmap(corpus: DemoCorpus) -> np.ndarray:
    """Counts of consecutive changepoint goal pairs, as an N x N matrix."""
    counts = np.zeros((corpus.n_goals, corpus.n_goals), dtype=np.int64)
    for episode in corpus.episodes:
        goals = changepoint_goals(episode)
        for a, b in zip(goals, goals[1:]):
            counts[a, b] += 1
    return counts
