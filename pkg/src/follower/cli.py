"""Command-line entry points: synthetic dataset generation, experiment
runs, CSV conversion and the live session server."""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (ExperimentConfig, SyntheticConfig,
                      generate_synthetic_manifest, run_experiment)
from .io_formats import convert_csv, write_manifest


def _cmd_synth(args) -> int:
    config = SyntheticConfig(
        objects=args.objects, sequences_per_object=args.sequences,
        frames_per_sequence=args.frames, dim=args.dim,
        intra_object_sigma=args.sigma, inter_object_spread=args.spread,
        seed=args.seed)
    manifest = generate_synthetic_manifest(config)
    path = write_manifest(manifest, args.out)
    print(f"wrote {len(manifest)} sequences to {path}")
    return 0


def _cmd_run(args) -> int:
    if args.config:
        config = ExperimentConfig.from_json(args.config)
    else:
        config = ExperimentConfig(
            alpha=args.alpha, policy=args.policy,
            eval_policy=args.eval_policy, folds=args.folds, seed=args.seed,
            dataset=args.dataset, baseline=args.baseline)
    result = run_experiment(config, out_dir=args.out)
    mean = result.summary["mean"]
    print(json.dumps(mean, sort_keys=True, indent=2))
    if args.out:
        print(f"outputs written under {args.out}")
    return 0


def _cmd_convert_csv(args) -> int:
    path = convert_csv(args.csv, args.out)
    print(f"wrote {path}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="follower",
        description="Open-world instance recognition over embedding streams")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--objects", type=int, default=100)
    p.add_argument("--sequences", type=int, default=5)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--sigma", type=float, default=1.55,
                   help="frame noise scale around each object center")
    p.add_argument("--spread", type=float, default=1.0,
                   help="scale of the object center distribution")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("run", help="run a multi-fold experiment")
    p.add_argument("--config", help="experiment config JSON (overrides flags)")
    p.add_argument("--out", help="run directory for traces and summaries")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--policy", choices=["random", "devel"], default="random")
    p.add_argument("--eval-policy", choices=["random", "devel"],
                   default="random")
    p.add_argument("--folds", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dataset", help="manifest path (default: synthetic)")
    p.add_argument("--baseline", action="store_true",
                   help="also run the always-ask baseline")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("convert-csv",
                       help="convert a frame-per-line CSV to the archive format")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convert_csv)

    p = sub.add_parser("serve", help="start the live session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default=".",
                   help="root for manifests, thumbnails and session snapshots")
    p.add_argument("--ui-dir", default=None,
                   help="built labeler UI assets to serve at /ui")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
