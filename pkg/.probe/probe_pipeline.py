import sys
import time
import numpy as np
from practicum.demos import scripted_play, to_transitions, single_toggle_neighbors
from practicum.env import default_config, GoalOfInterest
from practicum import env as kitchen, rl
from practicum.graph import build_graph
from practicum.bench import eval_long_horizon, invert_all_tasks, make_sequencer
from practicum.practice import PracticeConfig, practice

hidden = tuple(int(x) for x in sys.argv[1].split(","))
practice_steps = int(sys.argv[2]) if len(sys.argv) > 2 else 30_000


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
corpus = scripted_play(env2, num_changepoints=200, seed=0)
graph = build_graph(corpus)
tasks = invert_all_tasks(2)
seq = make_sequencer("graph", graph=graph)
cfg = rl.TrainConfig(actor_hidden=hidden)

params, buffer = rl.pretrain(corpus, env2, cfg, seed=0)
h, n = single_toggle_eval(env2, params, cfg)
m = eval_long_horizon(env2, seq, tasks, low_level="policy", params=params, train_config=cfg, trials=5, seed=0)
print(f"[{time.time()-t0:.0f}s] {hidden} pretrain-200cp: toggle {h}/{n} LH {m.success_rate:.2f}/{m.avg_path_length:.2f}", flush=True)

pc = PracticeConfig(total_env_steps=practice_steps, reset_period=10)
params, log = practice(env2, params, graph, pc, seed=0, train_config=cfg, buffer=buffer)
hit = np.mean([r.commanded_goal == r.achieved_goal for r in log.records[-100:]])
h, n = single_toggle_eval(env2, params, cfg)
m2 = eval_long_horizon(env2, seq, tasks, low_level="policy", params=params, train_config=cfg, trials=5, seed=0)
print(f"[{time.time()-t0:.0f}s] {hidden} +practice{practice_steps}: hit {hit:.2f} toggle {h}/{n} LH {m2.success_rate:.2f}/{m2.avg_path_length:.2f}", flush=True)

corpus5 = scripted_play(env2, num_changepoints=500, seed=0)
params5, _ = rl.pretrain(corpus5, env2, cfg, seed=0)
h, n = single_toggle_eval(env2, params5, cfg, trials=5)
print(f"[{time.time()-t0:.0f}s] {hidden} pretrain-500cp: toggle {h}/{n} ({h/n:.2f})", flush=True)
