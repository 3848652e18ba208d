import time
import numpy as np
from practicum.demos import scripted_play, to_transitions, single_toggle_neighbors
from practicum.env import default_config, GoalOfInterest
from practicum import env as kitchen, rl
from practicum.graph import build_graph
from practicum.bench import eval_long_horizon, invert_all_tasks, make_sequencer


def single_toggle_eval(env2, params, cfg, trials=1, seed0=0):
    hits = []
    per = {}
    for start in range(4):
        for tgt in single_toggle_neighbors(start, 2):
            ok_count = 0
            for trial in range(trials):
                state = kitchen.reset(env2, start=start, seed=seed0 + trial)
                goal = GoalOfInterest.from_id(tgt, 2)
                onehot = goal.onehot(4)
                for t in range(env2.horizon):
                    a = rl.policy_sample(params, state.to_vector(), onehot, cfg, deterministic=True)
                    state = kitchen.step(env2, state, a)
                    if kitchen.discretize(env2, state) == tgt:
                        break
                ok = kitchen.discretize(env2, state) == tgt
                hits.append(ok)
                ok_count += ok
            per[(start, tgt)] = ok_count
    return sum(hits), len(hits), per


t0 = time.time()
env2 = default_config(2)
corpus = scripted_play(env2, num_changepoints=200, seed=0)
print(f"sessions: {len(corpus.episodes)} steps: {corpus.total_steps()}", flush=True)
cfg = rl.TrainConfig()
buffer = rl.make_buffer(env2, cfg)
buffer.extend(to_transitions(corpus, env2))
print(f"transitions: {len(buffer)}", flush=True)

params = rl.init_params(env2, cfg, seed=0)
rng = np.random.default_rng(0)
for i in range(30000):
    rl.bc_update(params, buffer.sample(cfg.batch_size, rng), cfg)
    if (i + 1) % 15000 == 0:
        h, n, per = single_toggle_eval(env2, params, cfg)
        print(f"[{time.time()-t0:.0f}s] BC step {i+1}: single-toggle {h}/{n} {per}", flush=True)

graph = build_graph(corpus)
for name, temp in [("beta=30", 30.0), ("beta=1/30", 1.0 / 30.0)]:
    c = rl.TrainConfig(advantage_temperature=temp)
    p, _ = rl.pretrain(corpus, env2, c, seed=0)
    h, n, per = single_toggle_eval(env2, p, c, trials=5)
    print(f"[{time.time()-t0:.0f}s] AWAC-30k ({name}): single-toggle {h}/{n} {per}", flush=True)
    m = eval_long_horizon(env2, make_sequencer("graph", graph=graph), invert_all_tasks(2),
                          low_level="policy", params=p, train_config=c, trials=5, seed=0)
    print(f"[{time.time()-t0:.0f}s] AWAC-30k ({name}) long-horizon: success={m.success_rate:.3f} path={m.avg_path_length:.2f}", flush=True)
