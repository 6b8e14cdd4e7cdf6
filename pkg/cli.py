"""
cli.py
Command-line surface of the side-tuning harness.

  python cli.py [--config PATH] [--seed N] [--deterministic | --no-deterministic]
                [--precision {single,double}] [--out DIR] <command> ...

Commands: generate | train | evaluate | sweep | cost | verify

Any project or I/O error ends the run with exit code 1 and one line on stderr:
  FAILED <ErrorClass>: <message>
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from accounting.costs import COST_STRATEGIES, CostConfig
from accounting.report import cost_table, render_text
from backbone.transformer import BackboneConfig
from config import DATA_DIR, REFERENCE_SCALE, SWEEP_AXES
from errors import StagError
from generator.synthetic_generator import generate_synthetic
from pipeline.experiment import build_backbone_config, build_stag_config, evaluate_saved, load_config, run_experiment
from pipeline.sweep import sweep
from pipeline.verify import SUITES, verify
from storage.local_storage import save_table, save_text

logger = logging.getLogger(__name__)

DEFAULT_COST_STRATEGIES = ["head_only", "stag_std", "stag_sl", "full"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stag", description="Side-tuning of frozen point-cloud Transformers")
    parser.add_argument("--config", type=Path, help="flat JSON experiment config")
    parser.add_argument("--seed", type=int, help="run a single seed instead of the config's seed list")
    parser.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None,
                        help="byte-reproducible outputs (epoch times go to a sidecar file)")
    parser.add_argument("--precision", choices=["single", "double"])
    parser.add_argument("--out", type=Path, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", help="write the synthetic primitive dataset")
    sub.add_parser("train", help="fine-tune once per seed and write metrics, summary, cost and params")
    sub.add_parser("evaluate", help="reload saved parameters and report test accuracy")

    p = sub.add_parser("sweep", help="one experiment per value of a config axis")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, nargs="+")
    p.add_argument("--cost-only", action="store_true", help="skip training, tabulate the cost model only")

    p = sub.add_parser("cost", help="efficiency comparison across strategies")
    p.add_argument("--strategies", nargs="*", default=DEFAULT_COST_STRATEGIES, choices=COST_STRATEGIES)
    p.add_argument("--scale", choices=["config", "reference"], default="config")

    p = sub.add_parser("verify", help="run the self-check suites")
    p.add_argument("--suite", action="append", choices=list(SUITES), help="repeatable; all suites by default")
    return parser


def effective_from_args(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seeds"] = [args.seed]
    if args.deterministic is not None:
        cfg["deterministic"] = args.deterministic
    if args.precision is not None:
        cfg["precision"] = args.precision
    if args.out is not None:
        cfg["out_dir"] = str(args.out)
    return cfg


def _cost(cfg: dict, strategies: list[str], scale: str) -> str:
    if scale == "reference":
        backbone = BackboneConfig(
            d=REFERENCE_SCALE["d"], L=REFERENCE_SCALE["L"], n=REFERENCE_SCALE["n"], heads=REFERENCE_SCALE["heads"],
            mlp_ratio=REFERENCE_SCALE["mlp_ratio"], group_size=REFERENCE_SCALE["group_size"],
        )
        cost_cfg = CostConfig(backbone, REFERENCE_SCALE["num_classes"], batch_size=REFERENCE_SCALE["batch_size"],
                              precision=cfg["precision"], k=REFERENCE_SCALE["k"])
    else:
        stag = build_stag_config(cfg) if cfg["strategy"] == "stag_custom" else None
        cost_cfg = CostConfig(
            build_backbone_config(cfg), len(cfg["synthetic_classes"]), batch_size=cfg["batch_size"],
            precision=cfg["precision"], k=cfg["k"], d_prime=cfg["d_prime"], refine_fn=cfg["refine_fn"], stag=stag,
        )
    df = cost_table(cost_cfg, strategies)
    out = Path(cfg["out_dir"])
    save_table(df, out / "cost.csv")
    text = render_text(df)
    save_text(text, out / "cost.txt")
    return text


def dispatch(args: argparse.Namespace) -> int:
    cfg = effective_from_args(args)
    if args.command == "generate":
        out = args.out or DATA_DIR
        manifests = generate_synthetic(
            out, classes=cfg["synthetic_classes"], per_class=cfg["per_class"], points=cfg["points"],
            noise_sigma=cfg["noise_sigma"], seed=cfg["data_seed"], test_per_class=cfg["test_per_class"],
        )
        print(f"train manifest: {manifests['train']}\ntest manifest:  {manifests['test']}")
    elif args.command == "train":
        result = run_experiment(cfg)
        print(result.summary.to_string(index=False))
    elif args.command == "evaluate":
        acc = evaluate_saved(cfg, args.seed)
        print(f"test_acc {acc:.4f}")
    elif args.command == "sweep":
        df = sweep(cfg, args.axis, args.values, cost_only=args.cost_only)
        print(df.to_string(index=False))
    elif args.command == "cost":
        print(_cost(cfg, args.strategies, args.scale))
    elif args.command == "verify":
        results = verify(args.suite)
        for r in results:
            print(f"{r.name:<12} {'PASS' if r.passed else 'FAIL'}")
            for failure in r.failures:
                print(f"  {failure}")
        if not all(r.passed for r in results):
            failed = [r.name for r in results if not r.passed]
            print(f"FAILED VerificationFailure: {', '.join(failed)}", file=sys.stderr)
            return 1
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return dispatch(args)
    except (StagError, OSError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"FAILED {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s  %(message)s")
    sys.exit(main())
