"""Synthetic benchmark harness.

Builds desk-scale worlds from the same generative story the model assumes:
each class owns a latent prototype, and images/semantics are independent
linear-Gaussian views of it.  Unseen prototypes are either convex
combinations of the seen ones (so their semantics stay inside the seen
span and are transferable by construction) or independent draws (which
generically escape the span, for negative tests).

The harness trains the four strategies, scores exact accuracies and
confusions on held-out unseen-class instances, and sweeps the number of
virtual instances per class.  Everything is reproducible from a single
master seed via derived per-trial seeds.
"""

from __future__ import annotations

import dataclasses
import enum
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import rng
from .datasets import FeatureMatrix, LabelVector, SemanticTable, ZslSplit
from .model import Metric, Strategy, StrategyConfig, predict, train

# stream domains (domain 1 is reserved by the virtual-instance sampler)
_SEEN_PROTO = 2
_UNSEEN_PROTO = 3
_MIX_WEIGHTS = 4
_PROJ_X = 5
_PROJ_K = 6
_SOURCE_NOISE = 7
_TEST_NOISE = 8


class Mixing(str, enum.Enum):
    CONVEX_COMBINATION = "convex_combination"
    GAUSSIAN_PROTOTYPES = "gaussian_prototypes"


@dataclass(frozen=True)
class SyntheticConfig:
    """World shape for the generator; defaults run in seconds."""

    latent_dim: int = 10
    feature_dim: int = 50
    semantic_dim: int = 20
    n_seen: int = 15
    n_unseen: int = 5
    samples_per_class: int = 100
    obs_noise: float = 0.5
    mixing: Mixing = Mixing.CONVEX_COMBINATION
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mixing", Mixing(self.mixing))
        for name in ("latent_dim", "feature_dim", "semantic_dim", "samples_per_class"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_seen < 2 or self.n_unseen < 2:
            raise ValueError("need at least 2 seen and 2 unseen classes")
        if not (np.isfinite(self.obs_noise) and self.obs_noise >= 0):
            raise ValueError("obs_noise must be finite and non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.feature_dim < self.latent_dim:
            warnings.warn(
                "feature_dim below latent_dim: observations cannot span the "
                "latent space",
                stacklevel=2,
            )


@dataclass(frozen=True, eq=False)
class StrategyOutcome:
    name: str
    accuracy: float  # pooled over trials: correct / total
    mean_accuracy: float  # mean of per-trial accuracies
    std_accuracy: float  # population std of per-trial accuracies
    per_trial: Tuple[float, ...]
    confusion: np.ndarray  # true (rows, unseen order) x predicted, summed
    class_ids: np.ndarray


@dataclass(frozen=True, eq=False)
class EvalReport:
    strategies: Tuple[StrategyOutcome, ...]
    seeds: Tuple[int, ...]
    config: Optional[SyntheticConfig]
    margins: Dict[str, float]


@dataclass(frozen=True)
class SweepPoint:
    npc: int
    strategy: str
    mean_accuracy: float
    std_accuracy: float


@dataclass(frozen=True, eq=False)
class SweepReport:
    rows: Tuple[SweepPoint, ...]
    seeds: Tuple[int, ...]
    config: Optional[SyntheticConfig]


def generate_synthetic_split(
    cfg: SyntheticConfig,
) -> Tuple[ZslSplit, FeatureMatrix, LabelVector]:
    """Sample a ZSL world; returns (split, test features, test labels).

    Seen class ids are 0..k-1, unseen k..k+l-1.  Semantic tables are
    noiseless projections of the prototypes; image features carry isotropic
    observation noise.  The held-out test set has ``samples_per_class``
    instances of every unseen class.  Deterministic given ``cfg.seed``.
    """
    m, d, a = cfg.latent_dim, cfg.feature_dim, cfg.semantic_dim
    k, l, n = cfg.n_seen, cfg.n_unseen, cfg.samples_per_class
    seed = cfg.seed

    z_seen = rng.standard_normal((m, k), seed, rng.stream_id(_SEEN_PROTO))
    if cfg.mixing is Mixing.CONVEX_COMBINATION:
        u = rng.uniform_open((k, l), seed, rng.stream_id(_MIX_WEIGHTS))
        z_unseen = z_seen @ (u / u.sum(axis=0))
    else:
        z_unseen = rng.standard_normal((m, l), seed, rng.stream_id(_UNSEEN_PROTO))

    proj_x = rng.standard_normal((d, m), seed, rng.stream_id(_PROJ_X)) / np.sqrt(m)
    proj_k = rng.standard_normal((a, m), seed, rng.stream_id(_PROJ_K)) / np.sqrt(m)

    seen_table = SemanticTable(np.arange(k), proj_k @ z_seen)
    unseen_table = SemanticTable(np.arange(k, k + l), proj_k @ z_unseen)

    source = np.empty((d, k * n))
    seen_means = proj_x @ z_seen
    for i in range(k):
        noise = rng.standard_normal((d, n), seed, rng.stream_id(_SOURCE_NOISE, i))
        source[:, i * n : (i + 1) * n] = seen_means[:, i, None] + cfg.obs_noise * noise
    source_labels = np.repeat(np.arange(k), n)

    test = np.empty((d, l * n))
    unseen_means = proj_x @ z_unseen
    for j in range(l):
        noise = rng.standard_normal((d, n), seed, rng.stream_id(_TEST_NOISE, j))
        test[:, j * n : (j + 1) * n] = unseen_means[:, j, None] + cfg.obs_noise * noise
    test_labels = np.repeat(np.arange(k, k + l), n)

    split = ZslSplit(
        FeatureMatrix(source), LabelVector(source_labels), seen_table, unseen_table
    )
    return split, FeatureMatrix(test), LabelVector(test_labels)


def accuracy_score(predicted: np.ndarray, truth: LabelVector) -> float:
    """Exact fraction of correct predictions."""
    if predicted.shape != truth.labels.shape:
        raise ValueError("prediction / truth length mismatch")
    return int(np.sum(predicted == truth.labels)) / truth.labels.size


def confusion_counts(
    predicted: np.ndarray, truth: LabelVector, class_ids: np.ndarray
) -> np.ndarray:
    """Counts[i, j] = instances of class_ids[i] predicted as class_ids[j]."""
    index = {int(c): i for i, c in enumerate(class_ids)}
    counts = np.zeros((class_ids.size, class_ids.size), dtype=np.int64)
    for t, p in zip(truth.labels, predicted):
        counts[index[int(t)], index[int(p)]] += 1
    return counts


def _outcome_names(configs: Sequence[StrategyConfig]) -> List[str]:
    names = []
    seen: Dict[str, int] = {}
    for cfg in configs:
        base = cfg.strategy.value
        count = seen.get(base, 0)
        seen[base] = count + 1
        names.append(base if count == 0 else f"{base}#{count + 1}")
    return names


def _margins(outcomes: Sequence[StrategyOutcome]) -> Dict[str, float]:
    baseline = next((o for o in outcomes if o.name == "baseline"), None)
    if baseline is None:
        return {}
    return {
        f"{o.name}_minus_baseline": o.mean_accuracy - baseline.mean_accuracy
        for o in outcomes
        if o.name != "baseline"
    }


def _aggregate(
    names: Sequence[str],
    per_trial: Sequence[Sequence[float]],
    confusions: Sequence[np.ndarray],
    counts_per_trial: Sequence[Sequence[Tuple[int, int]]],
    class_ids: np.ndarray,
    seeds: Tuple[int, ...],
    config: Optional[SyntheticConfig],
) -> EvalReport:
    outcomes = []
    for s, name in enumerate(names):
        trials = tuple(per_trial[s])
        correct = sum(c for c, _ in counts_per_trial[s])
        total = sum(t for _, t in counts_per_trial[s])
        outcomes.append(
            StrategyOutcome(
                name=name,
                accuracy=correct / total,
                mean_accuracy=float(np.mean(trials)),
                std_accuracy=float(np.std(trials)),
                per_trial=trials,
                confusion=confusions[s],
                class_ids=class_ids,
            )
        )
    return EvalReport(tuple(outcomes), seeds, config, _margins(outcomes))


def evaluate_strategies(
    split: ZslSplit,
    test_features: FeatureMatrix,
    test_labels: LabelVector,
    configs: Sequence[StrategyConfig],
    seeds: Tuple[int, ...] = (),
    config: Optional[SyntheticConfig] = None,
) -> EvalReport:
    """Train every config on the split and score it on the held-out set."""
    if not configs:
        raise ValueError("no strategy configs given")
    if test_labels.labels.size == 0:
        raise ValueError("empty test set")
    names = _outcome_names(configs)
    class_ids = split.unseen.class_ids
    per_trial, confusions, counts = [], [], []
    for cfg in configs:
        model = train(split, cfg)
        result = predict(model, test_features)
        per_trial.append([accuracy_score(result.labels, test_labels)])
        confusions.append(confusion_counts(result.labels, test_labels, class_ids))
        counts.append(
            [(int(np.sum(result.labels == test_labels.labels)), test_labels.labels.size)]
        )
    return _aggregate(names, per_trial, confusions, counts, class_ids, seeds, config)


def evaluate_strategies_multi(
    cfg: SyntheticConfig,
    configs: Sequence[StrategyConfig],
    n_trials: int,
    master_seed: int,
) -> EvalReport:
    """Average strategy accuracies over independently generated worlds.

    Trial t regenerates the world with seed ``derive_seed(master, t, 0)``
    and samples virtual data with seed ``derive_seed(master, t, 1)``; the
    aggregate is therefore schedule-independent and reproducible from
    ``master_seed`` alone.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    names = _outcome_names(configs)
    trial_seeds = []
    per_trial = [[] for _ in configs]
    counts = [[] for _ in configs]
    confusions = None
    class_ids = None
    for t in range(n_trials):
        split_seed = rng.derive_seed(master_seed, t, 0)
        sample_seed = rng.derive_seed(master_seed, t, 1)
        trial_seeds.append(split_seed)
        world = dataclasses.replace(cfg, seed=split_seed)
        split, test_features, test_labels = generate_synthetic_split(world)
        if class_ids is None:
            class_ids = split.unseen.class_ids
            confusions = [
                np.zeros((class_ids.size, class_ids.size), dtype=np.int64)
                for _ in configs
            ]
        for s, strat in enumerate(configs):
            model = train(split, dataclasses.replace(strat, seed=sample_seed))
            result = predict(model, test_features)
            per_trial[s].append(accuracy_score(result.labels, test_labels))
            counts[s].append(
                (int(np.sum(result.labels == test_labels.labels)), test_labels.labels.size)
            )
            confusions[s] += confusion_counts(result.labels, test_labels, class_ids)
    return _aggregate(
        names, per_trial, confusions, counts, class_ids, tuple(trial_seeds), cfg
    )


def _sweep_variant(base: StrategyConfig, strategy: Strategy, npc: int) -> StrategyConfig:
    lam = base.lambda_ if strategy is Strategy.GLAP2 and 0.0 < base.lambda_ < 1.0 else None
    return StrategyConfig(
        strategy=strategy,
        lambda_=lam,
        npc=npc,
        sigma2=base.sigma2,
        reg=base.reg,
        ridge_eps=base.ridge_eps,
        seed=base.seed,
        metric=base.metric,
    )


def _check_npc_values(npc_values: Sequence[int]) -> List[int]:
    values = [int(v) for v in npc_values]
    if not values:
        raise ValueError("no npc values given")
    if any(v < 1 for v in values):
        raise ValueError("npc values must be positive")
    if sorted(values) != values:
        raise ValueError("npc values must be sorted ascending")
    return values


def npc_sweep(
    split: ZslSplit,
    test_features: FeatureMatrix,
    test_labels: LabelVector,
    base: StrategyConfig,
    npc_values: Sequence[int],
) -> List[Tuple[int, EvalReport]]:
    """Re-evaluate the virtual-data strategies at each virtual-set size.

    Runs glap1 and glap2 (derived from ``base``) per npc value on the one
    given split, keeping the sampling seed fixed.
    """
    values = _check_npc_values(npc_values)
    out = []
    for npc in values:
        configs = [
            _sweep_variant(base, Strategy.GLAP1, npc),
            _sweep_variant(base, Strategy.GLAP2, npc),
        ]
        out.append((npc, evaluate_strategies(split, test_features, test_labels, configs)))
    return out


def npc_sweep_multi(
    cfg: SyntheticConfig,
    base: StrategyConfig,
    npc_values: Sequence[int],
    n_trials: int,
    master_seed: int,
) -> SweepReport:
    """Accuracy-vs-npc series averaged over regenerated worlds.

    Uses the same per-trial seed family as :func:`evaluate_strategies_multi`
    so every npc value sees identical worlds.
    """
    values = _check_npc_values(npc_values)
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    strategies = (Strategy.GLAP1, Strategy.GLAP2)
    acc = {(npc, s.value): [] for npc in values for s in strategies}
    trial_seeds = []
    for t in range(n_trials):
        split_seed = rng.derive_seed(master_seed, t, 0)
        sample_seed = rng.derive_seed(master_seed, t, 1)
        trial_seeds.append(split_seed)
        world = dataclasses.replace(cfg, seed=split_seed)
        split, test_features, test_labels = generate_synthetic_split(world)
        for npc in values:
            for strat in strategies:
                variant = dataclasses.replace(
                    _sweep_variant(base, strat, npc), seed=sample_seed
                )
                model = train(split, variant)
                result = predict(model, test_features)
                acc[(npc, strat.value)].append(accuracy_score(result.labels, test_labels))
    rows = tuple(
        SweepPoint(
            npc=npc,
            strategy=s.value,
            mean_accuracy=float(np.mean(acc[(npc, s.value)])),
            std_accuracy=float(np.std(acc[(npc, s.value)])),
        )
        for npc in values
        for s in strategies
    )
    return SweepReport(rows, tuple(trial_seeds), cfg)
