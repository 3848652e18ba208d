"""Planar multi-element manipulation simulator.

A point end effector moves inside the unit square and drags the handles of
articulated elements (sliders, doors, knobs flattened to tracks) along fixed
line segments. Each element has a joint value in [0, 1]: 0 is closed, 1 is
open. Thresholding every joint to open/closed yields the 2^E discrete
configurations ("goals of interest") that everything downstream plans over.

State serialization used everywhere (files, wire, replay buffer):
flat vector [ee_x, ee_y, joint_0, ..., joint_{E-1}].
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

# End-effector displacement per step, shape (2,), components within +/- a_max.
Action = np.ndarray

HOME_POSITION = (0.5, 0.5)
DISTANCE_PENALTY = 20.0
MAX_ELEMENTS = 16


@dataclass(frozen=True)
class ElementSpec:
    """Linear track for one articulated element.

    The handle sits at ``axis_start`` when the joint is 0 and at ``axis_end``
    when it is 1. The end effector is attached whenever it is within
    ``grab_radius`` of the handle.
    """

    axis_start: tuple[float, float]
    axis_end: tuple[float, float]
    grab_radius: float = 0.08

    def __post_init__(self):
        if tuple(self.axis_start) == tuple(self.axis_end):
            raise ConfigError("element axis is degenerate: axis_start == axis_end")
        if self.grab_radius <= 0:
            raise ConfigError(f"grab_radius must be positive, got {self.grab_radius}")

    @property
    def axis(self) -> np.ndarray:
        return np.asarray(self.axis_end, dtype=float) - np.asarray(self.axis_start, dtype=float)

    @property
    def axis_length(self) -> float:
        return float(np.linalg.norm(self.axis))

    def handle(self, theta: float) -> np.ndarray:
        """Handle position for joint value ``theta``."""
        return np.asarray(self.axis_start, dtype=float) + theta * self.axis


@dataclass(frozen=True)
class EnvConfig:
    """Full environment specification; hashable into a corpus-binding checksum."""

    elements: tuple[ElementSpec, ...]
    eps: float = 0.1
    horizon: int = 100
    a_max: float = 0.05

    def __post_init__(self):
        if not 1 <= len(self.elements) <= MAX_ELEMENTS:
            raise ConfigError(f"need 1..{MAX_ELEMENTS} elements, got {len(self.elements)}")
        if not 0 < self.eps < 0.5:
            raise ConfigError(f"eps must lie in (0, 0.5), got {self.eps}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.a_max <= 0:
            raise ConfigError("a_max must be positive")

    @property
    def num_elements(self) -> int:
        return len(self.elements)

    @property
    def n_goals(self) -> int:
        return 2 ** len(self.elements)

    @property
    def state_dim(self) -> int:
        return 2 + len(self.elements)

    def to_dict(self) -> dict:
        return {
            "elements": [
                {
                    "axis_start": list(e.axis_start),
                    "axis_end": list(e.axis_end),
                    "grab_radius": e.grab_radius,
                }
                for e in self.elements
            ],
            "eps": self.eps,
            "horizon": self.horizon,
            "a_max": self.a_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        try:
            elements = tuple(
                ElementSpec(
                    axis_start=tuple(e["axis_start"]),
                    axis_end=tuple(e["axis_end"]),
                    grab_radius=float(e.get("grab_radius", 0.08)),
                )
                for e in d["elements"]
            )
            return cls(
                elements=elements,
                eps=float(d.get("eps", 0.1)),
                horizon=int(d.get("horizon", 100)),
                a_max=float(d.get("a_max", 0.05)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed environment config: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "EnvConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def default_config(num_elements: int, **overrides) -> EnvConfig:
    """Standard bench: horizontal tracks stacked on separate rows.

    Rows sit at y = (e+1)/(E+1) and tracks span x in [0.2, 0.8], so for small E
    the rows are farther apart than the grab radius and dragging one element
    can never disturb another.
    """
    if not 1 <= num_elements <= MAX_ELEMENTS:
        raise ConfigError(f"need 1..{MAX_ELEMENTS} elements, got {num_elements}")
    elements = tuple(
        ElementSpec(
            axis_start=(0.2, (e + 1) / (num_elements + 1)),
            axis_end=(0.8, (e + 1) / (num_elements + 1)),
            grab_radius=0.08,
        )
        for e in range(num_elements)
    )
    return EnvConfig(elements=elements, **overrides)


@dataclass
class SimState:
    """Environment snapshot: end-effector position plus per-element joints."""

    ee_pos: np.ndarray
    joints: np.ndarray
    step_count: int = 0

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.ee_pos, self.joints])

    @classmethod
    def from_vector(cls, vec: np.ndarray, step_count: int = 0) -> "SimState":
        vec = np.asarray(vec, dtype=float)
        return cls(ee_pos=vec[:2].copy(), joints=vec[2:].copy(), step_count=step_count)

    def copy(self) -> "SimState":
        return SimState(self.ee_pos.copy(), self.joints.copy(), self.step_count)


def bits_to_id(bits) -> int:
    """Element 0 is the least-significant bit."""
    return int(sum((1 << e) for e, b in enumerate(bits) if b))


def id_to_bits(goal_id: int, num_elements: int) -> tuple[int, ...]:
    return tuple((goal_id >> e) & 1 for e in range(num_elements))


@dataclass(frozen=True)
class GoalOfInterest:
    """One of the 2^E discrete element configurations."""

    id: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if bits_to_id(self.bits) != self.id:
            raise ConfigError(f"goal id {self.id} inconsistent with bits {self.bits}")

    @property
    def target_joints(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=float)

    @classmethod
    def from_id(cls, goal_id: int, num_elements: int) -> "GoalOfInterest":
        if not 0 <= goal_id < 2 ** num_elements:
            raise ConfigError(f"goal id {goal_id} out of range for {num_elements} elements")
        return cls(id=goal_id, bits=id_to_bits(goal_id, num_elements))

    def onehot(self, n_goals: int) -> np.ndarray:
        vec = np.zeros(n_goals)
        vec[self.id] = 1.0
        return vec


def goal_catalog(num_elements: int) -> list[GoalOfInterest]:
    """All 2^E goals of interest, in id order."""
    if not 1 <= num_elements <= MAX_ELEMENTS:
        raise ConfigError(f"need 1..{MAX_ELEMENTS} elements, got {num_elements}")
    return [GoalOfInterest.from_id(i, num_elements) for i in range(2 ** num_elements)]


def _as_goal(config: EnvConfig, goal: "GoalOfInterest | int") -> GoalOfInterest:
    if isinstance(goal, GoalOfInterest):
        if not 0 <= goal.id < config.n_goals:
            raise ConfigError(f"goal id {goal.id} out of range for {config.num_elements} elements")
        return goal
    return GoalOfInterest.from_id(int(goal), config.num_elements)


def reset(config: EnvConfig, start: "GoalOfInterest | int | None", seed: int = 0) -> SimState:
    """Place the environment exactly at a goal of interest.

    Joints are set to the goal's target values exactly and the end effector
    returns to the fixed home position. ``start=None`` draws a goal uniformly
    from the catalog using ``seed``.
    """
    if start is None:
        rng = np.random.default_rng(seed)
        start = int(rng.integers(config.n_goals))
    goal = _as_goal(config, start)
    return SimState(
        ee_pos=np.array(HOME_POSITION, dtype=float),
        joints=goal.target_joints.copy(),
        step_count=0,
    )


def step(config: EnvConfig, state: SimState, action: Action) -> SimState:
    """Advance one step; out-of-bounds actions are clamped, never rejected.

    Attachment test uses handle positions before the move, and only the single
    nearest in-radius element is dragged. The joint advances by the projection
    of the displacement onto the element axis, normalized by axis length.
    """
    delta = np.clip(np.asarray(action, dtype=float), -config.a_max, config.a_max)
    joints = state.joints.copy()

    nearest, nearest_dist = None, np.inf
    for e, spec in enumerate(config.elements):
        dist = float(np.linalg.norm(state.ee_pos - spec.handle(joints[e])))
        if dist <= spec.grab_radius and dist < nearest_dist:
            nearest, nearest_dist = e, dist
    if nearest is not None:
        spec = config.elements[nearest]
        dtheta = float(delta @ spec.axis) / spec.axis_length ** 2
        joints[nearest] = np.clip(joints[nearest] + dtheta, 0.0, 1.0)

    return SimState(
        ee_pos=np.clip(state.ee_pos + delta, 0.0, 1.0),
        joints=joints,
        step_count=state.step_count + 1,
    )


def differing_elements(config: EnvConfig, state: SimState, goal: "GoalOfInterest | int") -> list[int]:
    """Elements whose joint is outside the eps band around the goal bit."""
    goal = _as_goal(config, goal)
    return [
        e for e in range(config.num_elements)
        if abs(float(state.joints[e]) - goal.bits[e]) > config.eps
    ]


def reward(config: EnvConfig, state: SimState, goal: "GoalOfInterest | int") -> float:
    """Distance-shaped reward; 0 exactly when the state discretizes to the goal.

    Sums the joint gap penalty over every differing element and adds a single
    reach penalty toward the nearest differing handle. Normal operation only
    ever sees one differing element (goals are commanded one toggle at a time).
    """
    goal = _as_goal(config, goal)
    diff = differing_elements(config, state, goal)
    if not diff:
        return 0.0
    total = 0.0
    nearest_dist = np.inf
    for e in diff:
        total -= DISTANCE_PENALTY * abs(float(state.joints[e]) - goal.bits[e])
        handle = config.elements[e].handle(float(state.joints[e]))
        nearest_dist = min(nearest_dist, float(np.linalg.norm(state.ee_pos - handle)))
    return total - DISTANCE_PENALTY * nearest_dist


def discretize(config: EnvConfig, state: "SimState | np.ndarray", eps: float | None = None) -> int | None:
    """Goal id for the state, or None if any joint sits mid-range.

    A joint maps to 1 when within eps of 1, to 0 when within eps of 0. The
    end-effector pose is ignored.
    """
    eps = config.eps if eps is None else eps
    joints = state.joints if isinstance(state, SimState) else np.asarray(state, dtype=float)[2:]
    bits = []
    for theta in joints:
        theta = float(theta)
        if abs(theta - 1.0) <= eps:
            bits.append(1)
        elif abs(theta) <= eps:
            bits.append(0)
        else:
            return None
    return bits_to_id(bits)


def snap_to_goal(config: EnvConfig, state: SimState) -> int:
    """Nearest goal id by joint-space distance; ties go to the smallest id."""
    joints = state.joints
    best_id, best_dist = 0, np.inf
    for goal in goal_catalog(config.num_elements):
        dist = float(np.linalg.norm(joints - goal.target_joints))
        if dist < best_dist - 1e-12:
            best_id, best_dist = goal.id, dist
    return best_id
