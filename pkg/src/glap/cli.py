"""Command-line interface.

Subcommands: ``train``, ``predict``, ``check-transfer``, ``generate``,
``synth-bench``, ``npc-sweep``.  Every command is a pure function of its
input files and flags; re-running produces byte-identical outputs.

Exit codes: 0 success, 1 input/validation error, 2 numerical failure
(singular system or non-convergence).
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from . import io
from .datasets import ZslSplit
from .errors import NumericalError
from .model import Metric, Strategy, StrategyConfig, predict, train
from .prototypes import (
    compute_class_means,
    default_sigma2,
    generate_virtual,
    reconstruct_weights,
)
from .solvers import RegularizerSpec
from .synthetic import (
    Mixing,
    SyntheticConfig,
    evaluate_strategies_multi,
    npc_sweep_multi,
)
from .transfer import DEFAULT_TOLERANCE, check_transferability


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for
    # numerical failures here, so remap to the input-error code.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_reg_flags(parser):
    parser.add_argument("--reg", choices=["l2", "l1"], default="l2",
                        help="reconstruction-weight regularizer (default l2)")
    parser.add_argument("--reg-weight", type=float, default=1e-3,
                        help="regularizer weight (default 1e-3)")


def _add_sampling_flags(parser):
    parser.add_argument("--npc", type=int, default=50,
                        help="virtual instances per unseen class (default 50)")
    parser.add_argument("--sigma2", type=float, default=None,
                        help="virtual sampling variance (default: 0.1 x mean "
                             "within-class variance of the source data)")
    parser.add_argument("--seed", type=int, default=0, help="sampling seed")


def _add_world_flags(parser):
    parser.add_argument("--latent-dim", type=int, default=10)
    parser.add_argument("--feature-dim", type=int, default=50)
    parser.add_argument("--semantic-dim", type=int, default=20)
    parser.add_argument("--seen", type=int, default=15, help="number of seen classes")
    parser.add_argument("--unseen", type=int, default=5, help="number of unseen classes")
    parser.add_argument("--samples-per-class", type=int, default=100)
    parser.add_argument("--obs-noise", type=float, default=0.5)
    parser.add_argument("--mixing", choices=[m.value for m in Mixing],
                        default=Mixing.CONVEX_COMBINATION.value)
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--trials", type=int, default=10,
                        help="independent worlds to average over (default 10)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="glap", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model from CSV data")
    p.add_argument("--features", required=True, help="feature CSV, one instance per row")
    p.add_argument("--labels", required=True, help="label file, one class id per line")
    p.add_argument("--seen-sem", required=True, help="seen-class semantic table CSV")
    p.add_argument("--unseen-sem", default=None, help="unseen-class semantic table CSV")
    p.add_argument("--strategy", required=True, choices=[s.value for s in Strategy])
    p.add_argument("--lambda", dest="lambda_", type=float, default=None,
                   help="source/virtual trade-off (glap2; default 0.5)")
    _add_sampling_flags(p)
    _add_reg_flags(p)
    p.add_argument("--ridge-eps", type=float, default=None,
                   help="diagonal loading for the map solve (default: trace-scaled)")
    p.add_argument("--metric", choices=[m.value for m in Metric],
                   default=Metric.EUCLIDEAN.value)
    p.add_argument("--normalize-features", action="store_true",
                   help="L2-normalize each feature instance at ingestion")
    p.add_argument("--normalize-semantics", action="store_true",
                   help="L2-normalize each semantic vector at ingestion")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify feature rows with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--normalize-features", action="store_true")
    p.add_argument("--out", required=True, help="output prediction CSV path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("check-transfer",
                       help="residual of unseen semantics against the seen span")
    p.add_argument("--seen-sem", required=True)
    p.add_argument("--unseen-sem", required=True)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--normalize-semantics", action="store_true")
    p.add_argument("--out", required=True, help="output report JSON path")
    p.set_defaults(func=cmd_check_transfer)

    p = sub.add_parser("generate", help="sample virtual unseen-class instances")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--seen-sem", required=True)
    p.add_argument("--unseen-sem", required=True)
    _add_sampling_flags(p)
    _add_reg_flags(p)
    p.add_argument("--normalize-features", action="store_true")
    p.add_argument("--normalize-semantics", action="store_true")
    p.add_argument("--workers", type=int, default=None,
                   help="generate classes in parallel (same output either way)")
    p.add_argument("--out-features", required=True)
    p.add_argument("--out-labels", default=None)
    p.add_argument("--out-semantics", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("synth-bench",
                       help="strategy comparison on synthetic worlds")
    _add_world_flags(p)
    p.add_argument("--strategies", default="baseline,glap1,glap2,glap3",
                   help="comma-separated strategy list")
    p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    p.add_argument("--npc", type=int, default=50)
    p.add_argument("--sigma2", type=float, default=None)
    _add_reg_flags(p)
    p.add_argument("--ridge-eps", type=float, default=None)
    p.add_argument("--metric", choices=[m.value for m in Metric],
                   default=Metric.EUCLIDEAN.value)
    p.add_argument("--out", required=True, help="output report JSON path")
    p.set_defaults(func=cmd_synth_bench)

    p = sub.add_parser("npc-sweep",
                       help="accuracy vs number of virtual instances per class")
    _add_world_flags(p)
    p.add_argument("--npc-values", default="1,5,10,20,50,100,200",
                   help="comma-separated ascending npc values")
    p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=None)
    _add_reg_flags(p)
    p.add_argument("--ridge-eps", type=float, default=None)
    p.add_argument("--metric", choices=[m.value for m in Metric],
                   default=Metric.EUCLIDEAN.value)
    p.add_argument("--out", required=True, help="output sweep CSV path")
    p.set_defaults(func=cmd_npc_sweep)

    return parser


def _require_unseen(args) -> None:
    if args.unseen_sem is None:
        if args.strategy == Strategy.BASELINE.value:
            raise ValueError("unseen semantics required (stored in the model for prediction)")
        raise ValueError("unseen semantics required for virtual generation")


def cmd_train(args) -> int:
    _require_unseen(args)
    features = io.load_features(args.features, normalize=args.normalize_features)
    labels = io.load_labels(args.labels)
    seen = io.load_semantics(args.seen_sem, normalize=args.normalize_semantics)
    unseen = io.load_semantics(args.unseen_sem, normalize=args.normalize_semantics)
    config = StrategyConfig(
        strategy=Strategy(args.strategy),
        lambda_=args.lambda_,
        npc=args.npc,
        sigma2=args.sigma2,
        reg=RegularizerSpec(args.reg, args.reg_weight),
        ridge_eps=args.ridge_eps,
        seed=args.seed,
        metric=Metric(args.metric),
    )
    model = train(ZslSplit(features, labels, seen, unseen), config)
    io.save_model(args.out, model)
    return 0


def cmd_predict(args) -> int:
    model = io.load_model(args.model)
    features = io.load_features(args.features, normalize=args.normalize_features)
    result = predict(model, features)
    io.write_predictions_csv(args.out, result)
    return 0


def cmd_check_transfer(args) -> int:
    seen = io.load_semantics(args.seen_sem, normalize=args.normalize_semantics)
    unseen = io.load_semantics(args.unseen_sem, normalize=args.normalize_semantics)
    report = check_transferability(seen, unseen, args.tolerance)
    io.write_json(args.out, io.transfer_report_to_dict(report))
    return 0


def cmd_generate(args) -> int:
    features = io.load_features(args.features, normalize=args.normalize_features)
    labels = io.load_labels(args.labels)
    seen = io.load_semantics(args.seen_sem, normalize=args.normalize_semantics)
    unseen = io.load_semantics(args.unseen_sem, normalize=args.normalize_semantics)
    means = compute_class_means(features, labels, seen)
    weights = reconstruct_weights(seen, unseen, RegularizerSpec(args.reg, args.reg_weight))
    sigma2 = args.sigma2 if args.sigma2 is not None else default_sigma2(features, labels)
    dataset = generate_virtual(
        means, weights, unseen, args.npc, sigma2, args.seed, workers=args.workers
    )
    io.write_virtual_dataset(dataset, args.out_features, args.out_labels, args.out_semantics)
    return 0


def _world_config(args) -> SyntheticConfig:
    return SyntheticConfig(
        latent_dim=args.latent_dim,
        feature_dim=args.feature_dim,
        semantic_dim=args.semantic_dim,
        n_seen=args.seen,
        n_unseen=args.unseen,
        samples_per_class=args.samples_per_class,
        obs_noise=args.obs_noise,
        mixing=Mixing(args.mixing),
        seed=args.seed,
    )


def _strategy_config(args, strategy: Strategy) -> StrategyConfig:
    lambda_ = args.lambda_ if strategy is Strategy.GLAP2 else None
    return StrategyConfig(
        strategy=strategy,
        lambda_=lambda_,
        npc=args.npc,
        sigma2=args.sigma2,
        reg=RegularizerSpec(args.reg, args.reg_weight),
        ridge_eps=args.ridge_eps,
        seed=args.seed,
        metric=Metric(args.metric),
    )


def cmd_synth_bench(args) -> int:
    names = [name.strip() for name in args.strategies.split(",") if name.strip()]
    if not names:
        raise ValueError("no strategies given")
    configs = [_strategy_config(args, Strategy(name)) for name in names]
    report = evaluate_strategies_multi(_world_config(args), configs, args.trials, args.seed)
    io.write_json(args.out, io.eval_report_to_dict(report))
    return 0


def cmd_npc_sweep(args) -> int:
    try:
        npc_values = [int(tok) for tok in args.npc_values.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"bad --npc-values list: {args.npc_values!r}") from None
    args.npc = npc_values[0] if npc_values else 1
    base = _strategy_config(args, Strategy.GLAP1)
    report = npc_sweep_multi(_world_config(args), base, npc_values, args.trials, args.seed)
    io.write_sweep_csv(args.out, report)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints its own message
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"glap: numerical error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"glap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
