import time
import numpy as np

import practicum.nets as nets
from practicum.demos import scripted_play, to_transitions, single_toggle_neighbors
from practicum.env import default_config, GoalOfInterest
from practicum import env as kitchen, rl


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

for clip in (1 - 1e-6, 1 - 1e-3, 1 - 1e-2):
    for hidden in ((64, 64), (256, 256)):
        nets.ATANH_CLIP = clip
        cfg = rl.TrainConfig(actor_hidden=hidden)
        buffer = rl.make_buffer(env2, cfg)
        buffer.extend(to_transitions(corpus, env2))
        params = rl.init_params(env2, cfg, seed=0)
        rng = np.random.default_rng(0)
        losses = []
        for i in range(30000):
            batch = buffer.sample(cfg.batch_size, rng)
            losses.append(rl.bc_update(params, batch, cfg))
        h, n = single_toggle_eval(env2, params, cfg)
        print(
            f"[{time.time()-t0:.0f}s] clip={clip} hidden={hidden}: "
            f"single-toggle {h}/{n} loss {np.mean(losses[:200]):.2f}->{np.mean(losses[-200:]):.2f}",
            flush=True,
        )
