import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from practicum import env as kitchen
from practicum.env import ElementSpec, EnvConfig, GoalOfInterest, SimState, default_config
from practicum.errors import ConfigError


@pytest.fixture
def env2():
    return default_config(2)


@pytest.fixture
def env3():
    return default_config(3)


# --- reset ---------------------------------------------------------------


def test_reset_all_closed(env2):
    state = kitchen.reset(env2, start=0, seed=7)
    assert np.array_equal(state.joints, [0.0, 0.0])
    assert np.array_equal(state.ee_pos, [0.5, 0.5])
    assert state.step_count == 0


def test_reset_all_open(env3):
    state = kitchen.reset(env3, start=7, seed=123)
    assert np.array_equal(state.joints, [1.0, 1.0, 1.0])


def test_reset_binary_decode(env3):
    state = kitchen.reset(env3, start=5, seed=0)
    assert np.array_equal(state.joints, [1.0, 0.0, 1.0])


def test_reset_invalid_goal_id(env2):
    with pytest.raises(ConfigError):
        kitchen.reset(env2, start=4, seed=0)


def test_reset_random_start_is_seeded(env3):
    a = kitchen.reset(env3, start=None, seed=5)
    b = kitchen.reset(env3, start=None, seed=5)
    assert np.array_equal(a.joints, b.joints)


# --- step ----------------------------------------------------------------


def test_step_no_attachment_moves_ee_only(env2):
    state = SimState(ee_pos=np.array([0.5, 0.5]), joints=np.array([0.0, 0.0]))
    # Handles sit at (0.2, 1/3) and (0.2, 2/3): far from (0.5, 0.5).
    nxt = kitchen.step(env2, state, np.array([0.05, 0.0]))
    assert np.allclose(nxt.ee_pos, [0.55, 0.5])
    assert np.array_equal(nxt.joints, [0.0, 0.0])
    assert nxt.step_count == 1


def test_step_projection_ratio():
    # Horizontal axis of length 0.5; pushing 0.05 along it advances the joint
    # by 0.05 / 0.5 = 0.1 (hand-computed projection over axis length).
    cfg = EnvConfig(elements=(ElementSpec((0.2, 0.5), (0.7, 0.5), grab_radius=0.08),))
    state = SimState(ee_pos=np.array([0.2, 0.5]), joints=np.array([0.0]))
    nxt = kitchen.step(cfg, state, np.array([0.05, 0.0]))
    assert nxt.joints[0] == pytest.approx(0.1, abs=1e-12)


def test_step_joint_clamped_at_open():
    cfg = EnvConfig(elements=(ElementSpec((0.2, 0.5), (0.7, 0.5)),))
    state = SimState(ee_pos=np.array([0.7, 0.5]), joints=np.array([1.0]))
    nxt = kitchen.step(cfg, state, np.array([0.05, 0.0]))
    assert nxt.joints[0] == 1.0


def test_step_clamps_action_and_workspace(env2):
    state = SimState(ee_pos=np.array([0.99, 0.01]), joints=np.array([0.0, 0.0]))
    nxt = kitchen.step(env2, state, np.array([5.0, -5.0]))
    # Requested displacement clamps to (0.05, -0.05), then the workspace clips.
    assert np.allclose(nxt.ee_pos, [1.0, 0.0])


def test_step_only_nearest_element_moves():
    # Two parallel tracks close enough that both handles are in radius.
    cfg = EnvConfig(
        elements=(
            ElementSpec((0.2, 0.50), (0.8, 0.50), grab_radius=0.1),
            ElementSpec((0.2, 0.56), (0.8, 0.56), grab_radius=0.1),
        )
    )
    state = SimState(ee_pos=np.array([0.2, 0.52]), joints=np.array([0.0, 0.0]))
    nxt = kitchen.step(cfg, state, np.array([0.05, 0.0]))
    assert nxt.joints[0] > 0.0
    assert nxt.joints[1] == 0.0


def test_step_determinism(env3):
    actions = np.random.default_rng(3).uniform(-0.05, 0.05, size=(40, 2))
    runs = []
    for _ in range(2):
        state = kitchen.reset(env3, start=2, seed=1)
        traj = []
        for a in actions:
            state = kitchen.step(env3, state, a)
            traj.append(state.to_vector())
        runs.append(np.stack(traj))
    assert np.array_equal(runs[0], runs[1])


@given(theta=st.floats(0.0, 1.0), push=st.floats(0.0, 0.05))
def test_positive_axis_push_never_decreases_joint(theta, push):
    cfg = EnvConfig(elements=(ElementSpec((0.2, 0.5), (0.8, 0.5)),))
    handle = cfg.elements[0].handle(theta)
    state = SimState(ee_pos=handle.copy(), joints=np.array([theta]))
    nxt = kitchen.step(cfg, state, np.array([push, 0.0]))
    assert nxt.joints[0] >= theta - 1e-15


# --- reward --------------------------------------------------------------


def test_reward_zero_at_goal(env2):
    state = kitchen.reset(env2, start=3, seed=0)
    assert kitchen.reward(env2, state, 3) == 0.0


def test_reward_matches_distance_formula():
    # ee exactly 0.1 from the handle, joint 0.5 away from target:
    # -20 * 0.1 - 20 * 0.5 = -12.
    cfg = EnvConfig(elements=(ElementSpec((0.2, 0.5), (0.8, 0.5)),))
    theta = 0.5
    handle = cfg.elements[0].handle(theta)
    state = SimState(ee_pos=handle + np.array([0.0, 0.1]), joints=np.array([theta]))
    assert kitchen.reward(cfg, state, 1) == pytest.approx(-12.0, abs=1e-12)


def test_reward_on_handle_full_gap():
    cfg = EnvConfig(elements=(ElementSpec((0.2, 0.5), (0.8, 0.5)),))
    state = SimState(ee_pos=cfg.elements[0].handle(0.0), joints=np.array([0.0]))
    assert kitchen.reward(cfg, state, 1) == pytest.approx(-20.0, abs=1e-12)


@given(
    ee=st.tuples(st.floats(0, 1), st.floats(0, 1)),
    joints=st.tuples(st.floats(0, 1), st.floats(0, 1)),
    goal_id=st.integers(0, 3),
)
def test_reward_nonpositive_and_zero_iff_at_goal(ee, joints, goal_id):
    cfg = default_config(2)
    state = SimState(ee_pos=np.array(ee), joints=np.array(joints))
    r = kitchen.reward(cfg, state, goal_id)
    assert r <= 0.0
    assert (r == 0.0) == (kitchen.discretize(cfg, state) == goal_id)


# --- discretize / encoding ------------------------------------------------


def test_discretize_examples(env2, env3):
    assert kitchen.discretize(env2, SimState(np.zeros(2), np.array([0.02, 0.97]))) == 2
    assert kitchen.discretize(env2, SimState(np.zeros(2), np.array([0.5, 0.0]))) is None
    assert kitchen.discretize(env3, SimState(np.zeros(2), np.array([1.0, 1.0, 1.0]))) == 7


def test_discretize_accepts_flat_vector(env2):
    assert kitchen.discretize(env2, np.array([0.4, 0.4, 1.0, 0.0])) == 1


def test_discretize_reset_round_trip(env3):
    for goal in kitchen.goal_catalog(3):
        state = kitchen.reset(env3, start=goal, seed=0)
        assert kitchen.discretize(env3, state) == goal.id


@given(goal_id=st.integers(0, 255))
def test_encoding_bijection(goal_id):
    goal = GoalOfInterest.from_id(goal_id, 8)
    assert kitchen.bits_to_id(goal.bits) == goal_id
    assert np.array_equal(goal.target_joints, np.array(goal.bits, dtype=float))


def test_goal_catalog_sizes():
    assert len(kitchen.goal_catalog(3)) == 8
    assert len(kitchen.goal_catalog(2)) == 4
    assert [g.id for g in kitchen.goal_catalog(1)] == [0, 1]
    with pytest.raises(ConfigError):
        kitchen.goal_catalog(0)
    with pytest.raises(ConfigError):
        kitchen.goal_catalog(17)


def test_snap_to_goal(env2):
    state = SimState(np.zeros(2), np.array([0.8, 0.1]))
    assert kitchen.snap_to_goal(env2, state) == 1
    # Equidistant joints tie toward the smaller id.
    state = SimState(np.zeros(2), np.array([0.5, 0.5]))
    assert kitchen.snap_to_goal(env2, state) == 0


# --- config --------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError):
        ElementSpec((0.2, 0.5), (0.2, 0.5))
    with pytest.raises(ConfigError):
        ElementSpec((0.2, 0.5), (0.8, 0.5), grab_radius=0.0)
    with pytest.raises(ConfigError):
        EnvConfig(elements=(ElementSpec((0.2, 0.5), (0.8, 0.5)),), eps=0.5)


def test_config_round_trip(tmp_path, env3):
    path = tmp_path / "env.json"
    env3.save(path)
    loaded = EnvConfig.from_file(path)
    assert loaded == env3
    assert loaded.config_hash() == env3.config_hash()


def test_state_vector_layout(env2):
    state = SimState(ee_pos=np.array([0.1, 0.2]), joints=np.array([0.3, 0.4]))
    vec = state.to_vector()
    assert np.array_equal(vec, [0.1, 0.2, 0.3, 0.4])
    back = SimState.from_vector(vec, step_count=5)
    assert np.array_equal(back.ee_pos, state.ee_pos)
    assert np.array_equal(back.joints, state.joints)
    assert back.step_count == 5
