"""Command line entry point: ``python -m distcma <subcommand>``.

Mirrors the native ``distcma`` tool and adds one capability: ``--model`` may
name any HuggingFace sequence-classification checkpoint, which is loaded
through :class:`distcma.external.HFCheckpointAdapter`.
"""

import argparse
import sys

import distcma
from distcma import _core

BUILTIN_MODELS = ("toy", "overlap")


def _add_common(p, with_model=True):
    p.add_argument("--lexicon", default=None, help="lexicon JSON path")
    p.add_argument("--dataset", default=None,
                   help="dataset JSONL path; omit to generate in memory")
    if with_model:
        p.add_argument("--model", default="toy",
                       help="'toy', 'overlap', or a HuggingFace checkpoint name")
        p.add_argument("--device", default="cpu",
                       help="device for external checkpoints")
        p.add_argument("--alignment", default="min_length",
                       choices=["strict", "min_length"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pairs", type=int, default=164,
                   help="matched sets per group")
    p.add_argument("--out", default="out")


def _add_analysis(p):
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--set-average", action="store_true",
                   help="average odds within matched sets before effects")


def _add_sweep(p):
    p.add_argument("--coords", default="",
                   help="restrict the sweep, e.g. '1:5,0:*'")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--checkpoint-every", type=int, default=64)
    p.add_argument("--max-coords", type=int, default=None)
    p.add_argument("--topk-fraction", type=float, default=0.01)
    p.add_argument("--layer-mode", default="joint",
                   choices=["joint", "mean_of_neurons"])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="python -m distcma",
        description=(
            "Generate minimal-pair NLI datasets probing predicative "
            "distributivity and measure classifier sensitivity with causal "
            "mediation analysis."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a matched-pair dataset")
    _add_common(gen, with_model=False)

    te = sub.add_parser("te", help="per-pair total effects and the t-test")
    _add_common(te)
    _add_analysis(te)

    nie = sub.add_parser("nie", help="neuron sweep and layerwise mediation")
    _add_common(nie)
    _add_analysis(nie)
    _add_sweep(nie)

    rep = sub.add_parser("report", help="full bundle: tables plus figures")
    _add_common(rep)
    _add_analysis(rep)
    _add_sweep(rep)

    return parser


def make_config(args):
    config = _core.RunConfig()
    config.lexicon_path = str(
        args.lexicon if args.lexicon else distcma.seed_lexicon_path()
    )
    if args.dataset:
        config.dataset_path = args.dataset
    config.seed = args.seed
    config.pairs_per_group = args.pairs
    config.out = args.out
    if hasattr(args, "model"):
        config.model = args.model
        config.alignment = getattr(_core.Alignment, args.alignment)
    if hasattr(args, "alpha"):
        config.alpha = args.alpha
        config.set_average = args.set_average
    if hasattr(args, "coords"):
        config.coords = args.coords
        config.jobs = args.jobs
        config.resume = args.resume
        config.checkpoint_every = args.checkpoint_every
        if args.max_coords is not None:
            config.max_coords = args.max_coords
        config.topk_fraction = args.topk_fraction
        config.layer_mode = getattr(_core.LayerMode, args.layer_mode)
    return config


def make_adapter(args):
    """None for built-in model names, an HF adapter otherwise."""
    if not hasattr(args, "model") or args.model in BUILTIN_MODELS:
        return None
    from distcma.external import HFCheckpointAdapter

    return HFCheckpointAdapter(args.model, device=args.device)


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = make_config(args)
    adapter = make_adapter(args)
    try:
        if args.command == "generate":
            _core.run_generate(config)
        elif args.command == "te":
            _core.run_te(config, adapter)
        elif args.command == "nie":
            _core.run_nie(config, adapter)
        elif args.command == "report":
            _core.run_report(config, adapter)
    except _core.SweepInterrupted as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - single reporting point
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
