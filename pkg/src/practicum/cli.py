"""Command-line entry point for the full pipeline.

Commands: gen-demos, pretrain, practice, eval, ablate, chain-mdp, serve.
Every run is reproducible from its arguments and seed; errors exit nonzero.
"""
from __future__ import annotations

import argparse
import os
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, demos, graph as taskgraph, rl
from .bench import MetricRow, export_metrics, invert_all_tasks, make_sequencer
from .env import EnvConfig, default_config
from .errors import PracticumError
from .practice import HIGH_LEVEL_KINDS, PracticeConfig, bc_high_level_train
from .practice import practice as run_practice


def load_env(args) -> EnvConfig:
    if getattr(args, "env", None):
        return EnvConfig.from_file(args.env)
    return default_config(args.elements)


def add_env_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--env", help="environment config JSON (overrides --elements)")
    parser.add_argument("--elements", type=int, default=2, help="number of elements for the default bench")


def cmd_gen_demos(args) -> int:
    config = load_env(args)
    bias = None
    if args.bias:
        bias = np.asarray(json.loads(Path(args.bias).read_text()), dtype=float)
    corpus = demos.scripted_play(config, args.changepoints, seed=args.seed, bias=bias)
    demos.save_demos(corpus, args.out)
    heat = demos.transition_heatmap(corpus)
    print(f"wrote {corpus.total_steps()} steps, {args.changepoints} changepoints to {args.out}")
    print(f"transition edges covered: {int((heat > 0).sum())}")
    return 0


def _load_corpus(args, config: EnvConfig) -> demos.DemoCorpus:
    corpus, rejections = demos.ingest(args.demos, config)
    for rejection in rejections:
        print(f"rejected episode {rejection.episode}: {rejection.reason}", file=sys.stderr)
    if not corpus.episodes:
        raise PracticumError(f"no valid episodes in {args.demos}")
    return corpus


def cmd_pretrain(args) -> int:
    config = load_env(args)
    corpus = _load_corpus(args, config)
    train_config = rl.TrainConfig()
    if args.steps is not None:
        train_config.pretrain_steps = args.steps
    params, buffer = rl.pretrain(
        corpus, config, train_config, seed=args.seed,
        progress_every=args.progress_every,
    )
    rng = np.random.default_rng(args.seed)
    rl.save_checkpoint(args.out, params, train_config, rng, buffer)
    print(f"pretrained {train_config.pretrain_steps} steps on {len(buffer)} transitions -> {args.out}")
    return 0


def cmd_practice(args) -> int:
    config = load_env(args)
    corpus = _load_corpus(args, config)
    graph = taskgraph.build_graph(corpus)
    if args.graph_out:
        graph.save(args.graph_out)

    bc_model = None
    if args.high_level == "bc":
        bc_model = bc_high_level_train(corpus, seed=args.seed)

    if args.checkpoint:
        params, train_config, rng, buffer = rl.load_checkpoint(args.checkpoint)
        pretrained = True
    else:
        train_config = rl.TrainConfig()
        if args.no_pretrain:
            params = rl.init_params(config, train_config, seed=args.seed)
            buffer = rl.make_buffer(config, train_config)
            buffer.extend(demos.to_transitions(corpus, config))
            pretrained = False
        else:
            params, buffer = rl.pretrain(corpus, config, train_config, seed=args.seed)
            pretrained = True

    practice_config = PracticeConfig(
        total_env_steps=args.steps,
        reset_period=args.reset_period,
        high_level_kind=args.high_level,
        pretrained=pretrained,
        log_path=args.log,
        checkpoint_every=args.checkpoint_every,
        checkpoint_dir=str(Path(args.out).parent),
    )
    params, log = run_practice(
        config, params, graph, practice_config, seed=args.seed,
        train_config=train_config, buffer=buffer, bc_model=bc_model,
    )
    rng = np.random.default_rng(args.seed)
    rl.save_checkpoint(args.out, params, train_config, rng, buffer)
    print(
        f"practiced {log.records[-1].env_steps if log.records else 0} env steps over "
        f"{len(log)} episodes with {log.num_external_resets} external resets -> {args.out}"
    )
    return 0


def cmd_eval(args) -> int:
    config = load_env(args)
    params, train_config, _, _ = rl.load_checkpoint(args.checkpoint)
    if args.graph:
        graph = taskgraph.TaskGraph.load(args.graph)
    elif args.demos:
        graph = taskgraph.build_graph(_load_corpus(args, config))
    else:
        raise PracticumError("eval needs --graph or --demos to build the task graph")

    if args.tasks != "invert-all":
        raise PracticumError(f"unknown task set {args.tasks!r}")
    tasks = invert_all_tasks(config.num_elements)
    sequencer = make_sequencer(args.sequencer, graph=graph, n_goals=config.n_goals)
    metrics = bench.eval_long_horizon(
        config, sequencer, tasks,
        low_level=args.low_level, params=params, train_config=train_config,
        max_hl_steps=args.max_hl_steps, trials=args.trials, seed=args.seed,
    )
    rows = [
        MetricRow(
            phase="eval", seed=args.seed,
            metric=f"task_{start}_to_{desired}_success", value=success,
        )
        for (start, desired), (success, _) in metrics.per_task.items()
    ]
    export_metrics(rows, args.out)
    print(f"success_rate={metrics.success_rate:.3f} avg_path_length={metrics.avg_path_length:.3f}")
    print(f"per-task metrics -> {args.out}")
    return 0


def cmd_ablate(args) -> int:
    recipe = json.loads(Path(args.recipe).read_text())
    recipe_hash = hashlib.sha256(
        json.dumps(recipe, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()[:12]
    out_dir = Path(args.results_dir) / recipe_hash
    out_dir.mkdir(parents=True, exist_ok=True)

    config = default_config(int(recipe.get("elements", 2)))
    corpus = demos.scripted_play(
        config, int(recipe.get("changepoints", 200)), seed=int(recipe.get("demo_seed", 0))
    )
    train_config = rl.TrainConfig()
    if "pretrain_steps" in recipe:
        train_config.pretrain_steps = int(recipe["pretrain_steps"])
    rows = bench.reset_ablation(
        config, corpus, train_config,
        n_values=tuple(recipe.get("reset_periods", [10, 20, 50])),
        seeds=tuple(recipe.get("seeds", [0, 1, 2])),
        total_env_steps=int(recipe.get("practice_steps", 200_000)),
        trials=int(recipe.get("trials", 5)),
    )
    out = out_dir / "metrics.csv"
    export_metrics(rows, out)
    print(f"ablation metrics -> {out}")
    return 0


def cmd_chain_mdp(args) -> int:
    curves = bench.chain_mdp_experiment(
        num_states=args.states, steps=args.steps, seeds=tuple(range(args.seeds))
    )
    curves = {k: v for k, v in curves.items() if not k.endswith("_cumulative")}
    rows = []
    for method, data in curves.items():
        for seed in range(data.shape[0]):
            for t in range(0, data.shape[1], args.log_every):
                rows.append(
                    MetricRow("chain_mdp", seed, f"{method}_entropy@{t + 1}", data[seed, t])
                )
            rows.append(
                MetricRow("chain_mdp", seed, f"{method}_entropy_final", data[seed, -1])
            )
    export_metrics(rows, args.out)
    for method, data in curves.items():
        print(f"{method}: mean final entropy {data[:, -1].mean():.4f}")
    return 0


def cmd_serve(args) -> int:
    from . import service

    config = load_env(args)
    service.serve(
        config,
        host=args.host,
        port=args.port,
        demos_path=args.demos_out,
        max_sessions=args.max_sessions,
    )
    return 0


def _bind_env_default() -> tuple[str, int]:
    """PRACTICUM_TELEOP_BIND=host:port overrides the serve defaults."""
    bind = os.environ.get("PRACTICUM_TELEOP_BIND", "127.0.0.1:8765")
    host, _, port = bind.rpartition(":")
    return host or "127.0.0.1", int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="practicum",
        description="Autonomous practicing on a desk-scale manipulation bench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-demos", help="generate scripted play-style demonstrations")
    add_env_args(p)
    p.add_argument("--changepoints", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bias", help="JSON file with an NxN transition weight matrix")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_demos)

    p = sub.add_parser("pretrain", help="bootstrap the policy offline from demos")
    add_env_args(p)
    p.add_argument("--demos", required=True)
    p.add_argument("--steps", type=int, default=None, help="override pretrain steps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--progress-every", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("practice", help="autonomous practicing with rationed resets")
    add_env_args(p)
    p.add_argument("--demos", required=True)
    p.add_argument("--checkpoint", help="resume from a pretrained checkpoint")
    p.add_argument("--no-pretrain", action="store_true", help="start the policy from scratch")
    p.add_argument("--steps", type=int, default=200_000, help="total environment steps")
    p.add_argument("--reset-period", type=int, default=10)
    p.add_argument("--high-level", default="graph", choices=HIGH_LEVEL_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", help="episode log CSV path")
    p.add_argument("--graph-out", help="write the estimated task graph JSON here")
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--out", required=True, help="final checkpoint path")
    p.set_defaults(func=cmd_practice)

    p = sub.add_parser("eval", help="long-horizon goal-reaching evaluation")
    add_env_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--demos", help="demos JSONL to build the task graph from")
    p.add_argument("--graph", help="task graph JSON (alternative to --demos)")
    p.add_argument("--tasks", default="invert-all")
    p.add_argument("--sequencer", default="graph", choices=["graph", "random"])
    p.add_argument("--low-level", default="policy", choices=["policy", "oracle"])
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--max-hl-steps", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="eval_metrics.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="reset-frequency ablation from a recipe file")
    p.add_argument("--recipe", required=True, help="JSON recipe: elements, seeds, reset_periods, budgets")
    p.add_argument("--results-dir", default="results")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("chain-mdp", help="chain-walk visit-entropy study")
    p.add_argument("--states", type=int, default=32)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--log-every", type=int, default=100)
    p.add_argument("--out", default="chain_mdp_metrics.csv")
    p.set_defaults(func=cmd_chain_mdp)

    p = sub.add_parser("serve", help="run the teleop demonstration service")
    add_env_args(p)
    default_host, default_port = _bind_env_default()
    p.add_argument("--host", default=default_host)
    p.add_argument("--port", type=int, default=default_port)
    p.add_argument(
        "--demos-out", default=os.environ.get("PRACTICUM_DEMOS_OUT", "teleop_demos.jsonl")
    )
    p.add_argument("--max-sessions", type=int, default=8)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PracticumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
