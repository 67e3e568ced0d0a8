"""Command-line entry points: gen-demos, train, eval, rollout, heatmap, serve."""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np


def _add_gen_demos(sub):
    p = sub.add_parser("gen-demos", help="generate scripted demonstration episodes")
    p.add_argument("--scenario", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--per-product", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.008, help="waypoint noise sigma (m)")
    p.add_argument("--horizon", type=int, default=150)


def _add_train(sub):
    p = sub.add_parser("train", help="train the policy on a demo directory")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--chunk", type=int, default=20)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--beta", type=float, default=10.0)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--resume", default=None)


def _add_eval(sub):
    p = sub.add_parser("eval", help="scenario evaluation over seeded trials")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--scenario", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--trials", type=int, default=10, help="trials per category")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("ensemble", "replan"), default="ensemble")
    p.add_argument("--report", default=None, help="CSV output path")


def _add_rollout(sub):
    p = sub.add_parser("rollout", help="single rollout with trace output")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--scenario", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("ensemble", "replan"), default="ensemble")
    p.add_argument("--trace", default=None, help="trace JSON output path")
    p.add_argument("--pick", type=int, default=None, help="object id (default: seeded choice)")


def _add_heatmap(sub):
    p = sub.add_parser("heatmap", help="attention heatmap PNG for an episode step")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--episode", required=True, help="path to an .acte episode file")
    p.add_argument("--t", type=int, default=0)
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--head", default="mean")
    p.add_argument("--out", required=True)


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--max-sessions", type=int, default=8)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="actvp")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for add in (_add_gen_demos, _add_train, _add_eval, _add_rollout, _add_heatmap, _add_serve):
        add(sub)
    args = ap.parse_args(argv)

    if args.cmd == "gen-demos":
        from .demos import DemoConfig, generate_demos
        from .episodes import save_dataset

        config = DemoConfig(waypoint_noise_sigma=args.noise, horizon=args.horizon,
                            per_product=args.per_product, seed=args.seed)
        episodes = generate_demos(args.scenario, args.per_product, args.seed, config)
        entries = save_dataset(args.out, episodes)
        print(f"wrote {len(entries)} episodes to {args.out}")

    elif args.cmd == "train":
        from .episodes import load_dataset
        from .model import ModelConfig
        from .trainer import TrainConfig, train

        episodes = load_dataset(args.data)
        mc = ModelConfig(d_model=args.d_model, chunk_size=args.chunk)
        tc = TrainConfig(batch_size=args.batch, steps=args.steps, learning_rate=args.lr,
                         beta=args.beta, seed=args.seed,
                         checkpoint_every=args.checkpoint_every)
        ckpt, metrics = train(episodes, mc, tc, args.out, resume_from=args.resume)
        print(f"checkpoint: {ckpt}")
        print(f"final total loss: {metrics[-1][3]:.6f}")

    elif args.cmd == "eval":
        from .model import ActModel
        from .runtime import evaluate

        model, stats, _, _ = ActModel.load(args.ckpt)
        report = evaluate(model, stats, args.scenario, args.trials, args.seed,
                          mode=args.mode)
        print(report.table())
        print(f"overall: {report.overall_rate():.0%}")
        if args.report:
            report.to_csv(args.report)
            print(f"report: {args.report}")

    elif args.cmd == "rollout":
        from .demos import task_for
        from .model import ActModel
        from .runtime import rollout, save_trace
        from .sim import make_scene

        model, stats, _, _ = ActModel.load(args.ckpt)
        scene = make_scene(args.scenario, args.seed)
        rng = np.random.default_rng([args.seed, 11])
        if args.pick is None:
            candidates = [o.id for o in scene.objects if o.category != "flexible-bowl"]
            pick = int(candidates[rng.integers(len(candidates))])
        else:
            pick = args.pick
        task = task_for(scene, pick)
        outcome, trace = rollout(scene, task, model, stats, mode=args.mode, rng=rng)
        print(f"outcome: {outcome}")
        if args.trace:
            save_trace(args.trace, trace)
            print(f"trace: {args.trace}")

    elif args.cmd == "heatmap":
        from PIL import Image

        from .episodes import read_episode
        from .model import ActModel
        from .prompting import overlay
        from .runtime import heatmap as compute_heatmap

        model, stats, _, _ = ActModel.load(args.ckpt)
        ep = read_episode(args.episode)
        t = args.t
        front = overlay(ep.front[t], ep.boxes())
        hm = compute_heatmap(model, front, ep.hand[t], ep.proprio[t].astype(np.float64),
                             stats, layer=args.layer, head=args.head)
        Image.fromarray((hm * 255).astype(np.uint8), mode="L").save(args.out)
        print(f"heatmap: {args.out}")

    elif args.cmd == "serve":
        from .service import serve

        serve(args.ckpt, port=args.port, max_sessions=args.max_sessions)


if __name__ == "__main__":
    main()
