"""Model core: combined-objective fitting, training strategies, prediction.

The trained artifact is a linear map from image features to the semantic
space plus the unseen classes' semantic table.  Training follows one of
four strategies differing in which data feeds the normal equations:

* ``baseline``  - labeled source instances only (trade-off 1);
* ``glap1``     - virtual unseen-class instances only (trade-off 0);
* ``glap2``     - both, Gram matrices blended convexly by the trade-off;
* ``glap3``     - virtual instances blended with the seen class MEANS
                  (one column per class) at trade-off 1/2.

Prediction maps a test instance into semantic space and picks the nearest
unseen class vector (Euclidean, the faithful reading of the isotropic
Gaussian posterior) or the most-aligned one (cosine).
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .datasets import FeatureMatrix, LabelVector, SemanticTable, ZslSplit, validate_split
from .prototypes import (
    VirtualDataset,
    compute_class_means,
    default_sigma2,
    generate_virtual,
    reconstruct_weights,
)
from .solvers import LinearMap, RegularizerSpec, solve_map_from_moments

DEFAULT_NPC = 50


class Strategy(str, enum.Enum):
    BASELINE = "baseline"
    GLAP1 = "glap1"
    GLAP2 = "glap2"
    GLAP3 = "glap3"


class Metric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"


# trade-off values forced (or defaulted) per strategy
_LAMBDA_FIXED = {Strategy.BASELINE: 1.0, Strategy.GLAP1: 0.0, Strategy.GLAP3: 0.5}


@dataclass(frozen=True)
class StrategyConfig:
    """Everything that determines a training run besides the data."""

    strategy: Strategy = Strategy.BASELINE
    lambda_: Optional[float] = None
    npc: int = DEFAULT_NPC
    sigma2: Optional[float] = None  # None: 0.1 x mean within-class variance
    reg: RegularizerSpec = field(default_factory=RegularizerSpec)
    ridge_eps: Optional[float] = None  # None: trace-scaled default
    seed: int = 0
    metric: Metric = Metric.EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "metric", Metric(self.metric))

        lam = self.lambda_
        fixed = _LAMBDA_FIXED.get(self.strategy)
        if fixed is not None:
            if lam is None:
                lam = fixed
            elif lam != fixed:
                raise ValueError(
                    f"strategy {self.strategy.value} requires trade-off {fixed}, got {lam}"
                )
        else:  # glap2: strictly between the endpoints
            if lam is None:
                lam = 0.5
            if not (0.0 < lam < 1.0):
                raise ValueError(
                    f"strategy glap2 requires a trade-off in (0, 1), got {lam}"
                )
        if not np.isfinite(lam):
            raise ValueError("trade-off must be finite")
        object.__setattr__(self, "lambda_", float(lam))

        if self.npc < 1:
            raise ValueError("npc must be positive")
        if self.sigma2 is not None and not (np.isfinite(self.sigma2) and self.sigma2 >= 0):
            raise ValueError(f"sigma2 must be finite and non-negative, got {self.sigma2}")
        if self.ridge_eps is not None and not (
            np.isfinite(self.ridge_eps) and self.ridge_eps >= 0
        ):
            raise ValueError(f"ridge_eps must be finite and non-negative, got {self.ridge_eps}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True, eq=False)
class GlapModel:
    """Trained artifact: linear map + unseen semantics + run metadata."""

    map: LinearMap
    unseen: SemanticTable
    config: StrategyConfig
    provenance: Dict[str, int]

    def __post_init__(self):
        if self.map.out_dim != self.unseen.dim:
            raise ValueError(
                f"map output dimension {self.map.out_dim} does not match "
                f"unseen semantic dimension {self.unseen.dim}"
            )


@dataclass(frozen=True, eq=False)
class PredictionResult:
    """Predicted class ids plus the full per-class score matrix.

    ``scores`` has one row per test instance and one column per unseen
    table entry (in table order): Euclidean distances (lower is better) or
    cosine similarities (higher is better).  Instances where a zero-norm
    semantic projection forced a Euclidean fallback are flagged, and their
    score row holds distances.
    """

    labels: np.ndarray
    scores: np.ndarray
    class_ids: np.ndarray
    metric: Metric
    cosine_fallback: np.ndarray


def fit_combined(
    features: Optional[FeatureMatrix | np.ndarray],
    semantics: Optional[np.ndarray],
    virtual: Optional[VirtualDataset],
    lambda_: float,
    ridge_eps: Optional[float] = None,
) -> LinearMap:
    """Fit the map on a convex Gram-matrix blend of real and virtual data.

    Solves ``A (G + eps I) = C`` with

        G = lam * X X^T + (1 - lam) * Xv Xv^T
        C = lam * K X^T + (1 - lam) * Kv Xv^T

    At ``lambda_ = 1`` this reduces bitwise to the plain source fit and the
    virtual operand may be omitted; at ``lambda_ = 0`` the source operands
    are ignored entirely.  The blend weighs Gram matrices, not instances,
    so differing column counts need no rebalancing.
    """
    if not 0.0 <= lambda_ <= 1.0:
        raise ValueError(f"trade-off must be in [0, 1], got {lambda_}")

    have_source = features is not None and semantics is not None
    if lambda_ > 0.0 and not have_source:
        raise ValueError("source data required when the trade-off is positive")
    if lambda_ < 1.0 and (virtual is None or virtual.n_instances == 0):
        raise ValueError("virtual data required when the trade-off is below 1")

    if have_source:
        x = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=np.float64)
        k = np.asarray(semantics, dtype=np.float64)
        if k.shape[1] != x.shape[1]:
            raise ValueError(
                f"source features have {x.shape[1]} instances but semantics have {k.shape[1]}"
            )

    if lambda_ == 1.0:
        gram = x @ x.T
        cross = k @ x.T
    elif lambda_ == 0.0:
        xv, kv = virtual.features, virtual.semantics
        gram = xv @ xv.T
        cross = kv @ xv.T
    else:
        xv, kv = virtual.features, virtual.semantics
        if xv.shape[0] != x.shape[0]:
            raise ValueError(
                f"virtual feature dimension {xv.shape[0]} does not match source {x.shape[0]}"
            )
        lam = float(lambda_)
        gram = lam * (x @ x.T) + (1.0 - lam) * (xv @ xv.T)
        cross = lam * (k @ x.T) + (1.0 - lam) * (kv @ xv.T)

    return solve_map_from_moments(gram, cross, ridge_eps)


def train(split: ZslSplit, config: StrategyConfig) -> GlapModel:
    """Run the full training pipeline for the configured strategy.

    Reconstruction weights are solved in semantic space, seen-class means
    are estimated, virtual unseen instances are sampled (for the strategies
    that use them), and the map is fitted on the strategy's operands.
    """
    report = validate_split(split)
    if not report.ok:
        raise ValueError("invalid split: " + "; ".join(report.violations))

    n_source = split.features.n_instances

    if config.strategy is Strategy.BASELINE:
        semantics = split.seen.columns_for(split.labels)
        linmap = fit_combined(split.features, semantics, None, 1.0, config.ridge_eps)
        model_config = config
        provenance = {"real_columns": n_source, "virtual_columns": 0}
        return GlapModel(linmap, split.unseen, model_config, provenance)

    weights = reconstruct_weights(split.seen, split.unseen, config.reg)
    means = compute_class_means(split.features, split.labels, split.seen)
    sigma2 = config.sigma2
    if sigma2 is None:
        sigma2 = default_sigma2(split.features, split.labels)
    virtual = generate_virtual(
        means, weights, split.unseen, config.npc, sigma2, config.seed
    )
    model_config = dataclasses.replace(config, sigma2=sigma2)

    if config.strategy is Strategy.GLAP1:
        linmap = fit_combined(None, None, virtual, 0.0, config.ridge_eps)
        provenance = {"real_columns": 0, "virtual_columns": virtual.n_instances}
    elif config.strategy is Strategy.GLAP2:
        semantics = split.seen.columns_for(split.labels)
        linmap = fit_combined(
            split.features, semantics, virtual, config.lambda_, config.ridge_eps
        )
        provenance = {"real_columns": n_source, "virtual_columns": virtual.n_instances}
    else:  # glap3: source replaced by the per-class means
        linmap = fit_combined(
            means.means, split.seen.vectors, virtual, 0.5, config.ridge_eps
        )
        provenance = {
            "real_columns": means.n_classes,
            "virtual_columns": virtual.n_instances,
        }
    return GlapModel(linmap, split.unseen, model_config, provenance)


def _pick_classes(scores: np.ndarray, class_ids: np.ndarray, minimize: bool) -> np.ndarray:
    """Best class per column; exact ties resolved to the lowest class id."""
    best = scores.min(axis=0) if minimize else scores.max(axis=0)
    tied = scores == best
    candidates = np.where(tied, class_ids[:, None], np.iinfo(np.int64).max)
    return candidates.min(axis=0)


def predict(model: GlapModel, features: FeatureMatrix) -> PredictionResult:
    """Classify test instances against the model's unseen classes.

    Each instance is projected into semantic space; Euclidean picks the
    nearest unseen vector, cosine the most similar direction.  Instances
    whose projection has zero norm cannot be scored by cosine and fall back
    to Euclidean, flagged in the result.  Ties go to the lowest class id.
    """
    projected = model.map.apply(features.values)  # a x N
    table = model.unseen.vectors  # a x l
    ids = model.unseen.class_ids
    n = projected.shape[1]

    diffs = projected[:, None, :] - table[:, :, None]  # a x l x N
    distances = np.sqrt(np.einsum("aln,aln->ln", diffs, diffs))
    fallback = np.zeros(n, dtype=bool)

    if model.config.metric is Metric.EUCLIDEAN:
        labels = _pick_classes(distances, ids, minimize=True)
        scores = distances
    else:
        proj_norms = np.linalg.norm(projected, axis=0)
        table_norms = np.linalg.norm(table, axis=0)
        fallback = proj_norms == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            sims = (table.T @ projected) / (table_norms[:, None] * proj_norms[None, :])
        sims[table_norms == 0.0, :] = -np.inf  # zero candidates are never aligned
        labels = _pick_classes(sims, ids, minimize=False)
        if fallback.any():
            labels[fallback] = _pick_classes(distances[:, fallback], ids, minimize=True)
            sims[:, fallback] = distances[:, fallback]
        scores = sims

    return PredictionResult(labels, scores.T.copy(), ids, model.config.metric, fallback)
