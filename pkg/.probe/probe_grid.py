import time
import numpy as np
from practicum.demos import scripted_play, to_transitions, single_toggle_neighbors
from practicum.env import default_config, GoalOfInterest
from practicum import env as kitchen, rl
from practicum.graph import build_graph
from practicum.bench import eval_long_horizon, invert_all_tasks, make_sequencer
from practicum.practice import PracticeConfig, practice


def single_toggle_eval(env2, params, cfg, trials=2, seed0=0):
    hits = []
    for start in range(4):
        for tgt in single_toggle_neighbors(start, 2):
            for trial in range(trials):
                state = kitchen.reset(env2, start=start, seed=seed0 + trial)
                goal = GoalOfInterest.from_id(tgt, 2)
                onehot = goal.onehot(4)
                for t in range(env2.horizon):
                    a = rl.policy_sample(params, state.to_vector(), onehot, cfg, deterministic=True)
                    state = kitchen.step(env2, state, a)
                    if kitchen.discretize(env2, state) == tgt:
                        break
                hits.append(kitchen.discretize(env2, state) == tgt)
    return sum(hits), len(hits)


t0 = time.time()
env2 = default_config(2)

for n_cp in (200, 500):
    corpus = scripted_play(env2, num_changepoints=n_cp, seed=0)
    cfg = rl.TrainConfig()
    buffer = rl.make_buffer(env2, cfg)
    buffer.extend(to_transitions(corpus, env2))
    params = rl.init_params(env2, cfg, seed=0)
    rng = np.random.default_rng(0)
    for i in range(30000):
        rl.bc_update(params, buffer.sample(cfg.batch_size, rng), cfg)
    h, n = single_toggle_eval(env2, params, cfg)
    print(f"[{time.time()-t0:.0f}s] BC-30k on {n_cp}cp ({len(buffer)} tr): single-toggle {h}/{n}", flush=True)

# AWAC reciprocal temperature on the 200cp corpus + online practice probe
corpus = scripted_play(env2, num_changepoints=200, seed=0)
graph = build_graph(corpus)
cfg = rl.TrainConfig(advantage_temperature=1.0 / 30.0)
params, buffer = rl.pretrain(corpus, env2, cfg, seed=0)
h, n = single_toggle_eval(env2, params, cfg)
m = eval_long_horizon(env2, make_sequencer("graph", graph=graph), invert_all_tasks(2),
                      low_level="policy", params=params, train_config=cfg, trials=5, seed=0)
print(f"[{time.time()-t0:.0f}s] AWAC-30k beta=1/30 200cp: toggle {h}/{n} LH success={m.success_rate:.2f} path={m.avg_path_length:.2f}", flush=True)

pc = PracticeConfig(total_env_steps=30_000, reset_period=10)
params, log = practice(env2, params, graph, pc, seed=0, train_config=cfg, buffer=buffer)
hit = np.mean([r.commanded_goal == r.achieved_goal for r in log.records[-100:]])
h, n = single_toggle_eval(env2, params, cfg)
m2 = eval_long_horizon(env2, make_sequencer("graph", graph=graph), invert_all_tasks(2),
                       low_level="policy", params=params, train_config=cfg, trials=5, seed=0)
print(f"[{time.time()-t0:.0f}s] +practice30k: episode hit {hit:.2f} toggle {h}/{n} LH success={m2.success_rate:.2f} path={m2.avg_path_length:.2f}", flush=True)
