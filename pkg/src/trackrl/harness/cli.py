"""Command-line entry point: train / eval / plot.

``trackrl train --config <file> --algo <tag> --seed <n> --out <dir>``
    trains one seed to completion, appending evaluation rows to
    ``metrics_<algo>_seed<n>.csv`` and writing a checkpoint. Omitting
    ``--config`` runs the benchmark-scale defaults.

``trackrl eval --checkpoint <file> --episodes <n>``
    replays frozen evaluation episodes from a checkpoint and prints one
    CSV row per episode to stdout.

``trackrl plot --in <dir> --out <dir> [--best-k K]``
    merges per-seed metrics files into per-algorithm plot tables.
"""

import argparse
import sys

from ..errors import ConfigError, TrainingError, UsageError
from .config import ALGOS, experiment_config, parse_config_file
from .plots import emit_plots
from .run import _eval_rng, eval_actor_for, evaluate, load_checkpoint, \
    run_experiment

EVAL_HEADER = ("episode,return,ect_mean,egamma_mean,ex_mean,ay_mean,"
               "alat_mean,along_mean,laps,termination")


def _cmd_train(args):
    overrides = parse_config_file(args.config) if args.config else {}
    overrides["train.seeds"] = str(args.seed)
    cfg = experiment_config(args.algo, overrides)
    paths = run_experiment(cfg, args.out, log=print)
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_eval(args):
    cfg, seed, step, objects = load_checkpoint(args.checkpoint)
    env = cfg.make_env()
    actor = eval_actor_for(cfg, objects, _eval_rng(seed, step))
    records = evaluate(actor, env, args.episodes, step=step)
    print(EVAL_HEADER)
    for i, rec in enumerate(records):
        cells = [str(i)] + [repr(v) for v in
                            (rec.ret, rec.ect, rec.egamma, rec.ex, rec.ay,
                             rec.alat, rec.along)] + \
            [str(rec.laps), rec.termination]
        print(",".join(cells))
    return 0


def _cmd_plot(args):
    for path in emit_plots(args.in_dir, args.out, best_k=args.best_k):
        print(f"wrote {path}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="trackrl",
        description="Trajectory-following RL benchmark on a surrogate "
                    "vehicle model.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("train", help="train one seed of one algorithm")
    t.add_argument("--config", help="flat key-value settings file")
    t.add_argument("--algo", required=True, choices=ALGOS)
    t.add_argument("--seed", required=True, type=int)
    t.add_argument("--out", required=True, help="output directory")
    t.set_defaults(fn=_cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--episodes", required=True, type=int)
    e.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("plot", help="merge metrics into plot tables")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--best-k", dest="best_k", type=int, default=None,
                   help="aggregate only the k best seeds by final return")
    p.set_defaults(fn=_cmd_plot)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, UsageError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except TrainingError as err:
        print(f"training aborted: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
