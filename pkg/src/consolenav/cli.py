"""Command-line entry point wiring priors, worlds, training, and evaluation.

Subcommands: ``gen-priors``, ``synth``, ``train``, ``eval``, ``report``.
Exit codes: 0 success, 1 usage error, 2 runtime error. Diagnostics go to
stderr; results go to files or stdout. Every subcommand is reproducible
byte-for-byte under a fixed ``--seed``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .agent import (
    ActionPredictor,
    TrainConfig,
    load_predictor,
    rollout,
    save_predictor,
    train,
)
from .errors import ClientError, ConsoleNavError, UsageError
from .metrics import evaluate
from .priors import (
    LiveClient,
    PriorCache,
    ReplayClient,
    extract_priors,
    write_priors_file,
)
from .scoring import ScoringParams, load_scoring_params, save_scoring_params
from .simenv import SynthConfig, generate_world, load_world, save_world


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="console-nav",
                     description="landmark-cooccurrence navigation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-priors", help="extract landmark priors for instructions")
    p.add_argument("--instructions", required=True,
                   help="JSONL file of {instruction_id, instruction}")
    p.add_argument("--out", required=True, help="output priors JSONL")
    p.add_argument("--llm", default=None,
                   help="'live' or 'replay:<transcripts.jsonl>' (default: replay "
                        "from <world>/transcripts.jsonl style path)")
    p.add_argument("--style", default="fine_grained",
                   choices=["fine_grained", "high_level"])
    p.add_argument("--n-co", type=int, default=5)
    p.add_argument("--cache", default=None, help="transcript cache JSONL")

    p = sub.add_parser("synth", help="generate a synthetic world bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=36)
    p.add_argument("--branching", type=int, default=4)
    p.add_argument("--train-episodes", type=int, default=30)
    p.add_argument("--eval-episodes", type=int, default=10)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--path-min", type=int, default=3)
    p.add_argument("--path-max", type=int, default=5)
    p.add_argument("--n-co", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--distractor-rate", type=float, default=0.0)
    p.add_argument("--mu-sig", type=float, default=3.0)
    p.add_argument("--kappa", type=float, default=1.5)
    p.add_argument("--kappa-distractor", type=float, default=None)

    p = sub.add_parser("train", help="teacher-forced training on a world bundle")
    p.add_argument("--world", required=True)
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--log", default=None, help="training log JSONL "
                                               "(default <out>/train_log.jsonl)")
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr-scoring", type=float, default=0.1)
    p.add_argument("--lr-agent", type=float, default=0.01)
    p.add_argument("--lam1", type=float, default=0.1)
    p.add_argument("--lam2", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--scores-mode", default="learned",
                   choices=["learned", "zero", "uniform"])
    p.add_argument("--warm-start", type=int, default=0)

    p = sub.add_parser("eval", help="greedy evaluation with the metric suite")
    p.add_argument("--world", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", default=None, help="metrics JSON (default stdout)")
    p.add_argument("--split", default="eval", choices=["train", "eval"])
    p.add_argument("--report", default="structured", choices=["text", "structured"])
    p.add_argument("--scores-mode", default="learned",
                   choices=["learned", "zero", "uniform"])
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("report", help="summarize a training log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", default=None, help="directory for plot files")
    p.add_argument("--plots", action="store_true")

    return parser


def _make_client(spec_text, cache_path):
    if spec_text is None:
        raise UsageError("--llm is required (live or replay:<path>)")
    if spec_text == "live":
        return LiveClient()
    if spec_text.startswith("replay:"):
        path = spec_text.split(":", 1)[1]
        if not os.path.exists(path):
            raise ClientError(f"replay transcript file not found: {path}")
        return ReplayClient(path=path)
    raise UsageError(f"unknown --llm mode {spec_text!r}")


def cmd_gen_priors(args) -> int:
    client = _make_client(args.llm, args.cache)
    cache = PriorCache(args.cache) if args.cache else None
    records = []
    with open(args.instructions, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            priors = extract_priors(rec["instruction"], args.style, client,
                                    cache=cache, n_co=args.n_co)
            records.append((rec["instruction_id"], priors))
    write_priors_file(args.out, records)
    print(f"wrote {len(records)} prior records to {args.out}", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_nodes=args.nodes, branching=args.branching,
        path_hops=(args.path_min, args.path_max), dim=args.dim,
        mu_sig=args.mu_sig, kappa=args.kappa,
        kappa_distractor=args.kappa_distractor,
        noise=args.noise, distractor_rate=args.distractor_rate,
        n_co=args.n_co, n_train=args.train_episodes, n_eval=args.eval_episodes,
        seed=args.seed,
    )
    bundle = generate_world(cfg)
    save_world(bundle, args.out)
    print(f"wrote world bundle ({len(bundle.episodes)} episodes, "
          f"{len(bundle.store)} vectors) to {args.out}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    world = load_world(args.world)
    cfg = TrainConfig(
        lr_scoring=args.lr_scoring, lr_agent=args.lr_agent,
        lam1=args.lam1, lam2=args.lam2, tau=args.tau,
        epochs=args.epochs, batch_size=args.batch_size, seed=args.seed,
        warm_start_epochs=args.warm_start, scores_mode=args.scores_mode,
    )
    episodes = world.split("train")
    params, predictor, history = train(world, episodes, cfg,
                                       eval_episodes=world.split("eval"))
    os.makedirs(args.out, exist_ok=True)
    save_scoring_params(params, os.path.join(args.out, "scoring.bin"))
    save_predictor(predictor, os.path.join(args.out, "agent.bin"))
    log_path = args.log or os.path.join(args.out, "train_log.jsonl")
    with open(log_path, "w", encoding="utf-8") as fh:
        for row in history:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    final = history[-1] if history else {}
    print(f"trained {cfg.epochs} epochs on {len(episodes)} episodes; "
          f"final eval SR {final.get('eval_sr', 'n/a')}", file=sys.stderr)
    return 0


def _eval_chunk(world, episodes, params, predictor, cfg):
    return [rollout(world, e, params, predictor, cfg, "greedy")[0]
            for e in episodes]


def run_eval(world, episodes, params, predictor, cfg, jobs=1):
    if jobs <= 1 or len(episodes) < 2:
        traces = _eval_chunk(world, episodes, params, predictor, cfg)
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [episodes[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_eval_chunk, [world] * jobs, chunks,
                                  [params] * jobs, [predictor] * jobs,
                                  [cfg] * jobs))
        by_id = {t.instruction_id: t for part in parts for t in part}
        traces = [by_id[e.instruction_id] for e in episodes]
    return evaluate(traces, world.graph, episodes)


def _format_text_report(report) -> str:
    doc = report.to_dict()
    lines = ["metric  value"]
    for key in ("TL", "NE", "SR", "SPL", "CLS", "nDTW", "SDTW"):
        lines.append(f"{key:<7s} {doc[key]:.4f}")
    return "\n".join(lines)


def cmd_eval(args) -> int:
    world = load_world(args.world)
    params = load_scoring_params(os.path.join(args.ckpt, "scoring.bin"))
    predictor = load_predictor(os.path.join(args.ckpt, "agent.bin"))
    cfg = TrainConfig(tau=args.tau, scores_mode=args.scores_mode)
    episodes = world.split(args.split)
    report = run_eval(world, episodes, params, predictor, cfg, jobs=args.jobs)
    if args.report == "text":
        payload = _format_text_report(report) + "\n"
    else:
        payload = json.dumps({
            "config": {"split": args.split, "scores_mode": args.scores_mode,
                       "tau": args.tau, "world": world.config},
            "metrics": {k: v for k, v in report.to_dict().items()
                        if k != "per_episode"},
            "per_episode": report.per_episode,
        }, sort_keys=True, indent=1) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        print(f"wrote metrics to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(payload)
    return 0


def cmd_report(args) -> int:
    rows = []
    with open(args.log, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    if not rows:
        raise ConsoleNavError(f"empty training log {args.log}")
    header = f"{'epoch':>5s} {'il':>8s} {'cs':>8s} {'ct':>8s} {'eval_sr':>8s}"
    print(header)
    for row in rows:
        print(f"{row['epoch']:>5d} {row['mean_il']:>8.4f} {row['mean_cs']:>8.4f} "
              f"{row['mean_ct']:>8.4f} {row['eval_sr']:>8.4f}")
    if args.plots:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        out_dir = args.out or "."
        os.makedirs(out_dir, exist_ok=True)
        epochs = [r["epoch"] for r in rows]
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
        for key in ("mean_il", "mean_cs", "mean_ct"):
            ax1.plot(epochs, [r[key] for r in rows], label=key)
        ax1.set_xlabel("epoch")
        ax1.set_ylabel("loss")
        ax1.legend()
        ax2.plot(epochs, [r["eval_sr"] for r in rows], color="tab:green")
        ax2.set_xlabel("epoch")
        ax2.set_ylabel("eval SR")
        ax2.set_ylim(0, 1.05)
        fig.tight_layout()
        path = os.path.join(out_dir, "training_curves.png")
        fig.savefig(path, dpi=120)
        print(f"wrote {path}", file=sys.stderr)
    return 0


_COMMANDS = {
    "gen-priors": cmd_gen_priors,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "report": cmd_report,
}


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConsoleNavError, OSError) as exc:
        print(f"{type(exc).__module__}.{type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
