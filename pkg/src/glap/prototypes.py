"""Class prototypes in feature space and virtual unseen-class instances.

Seen-class prototypes are simply the per-class mean feature vectors.  An
unseen class's prototype is reconstructed as a weighted combination of the
seen means, with weights solved in semantic space (see
:func:`reconstruct_weights`).  Virtual instances are then drawn from an
isotropic Gaussian around the reconstructed prototype.

Sampling uses one Philox substream per unseen class, keyed by
``(seed, class index)``, so generating classes in parallel or in any order
yields bit-identical datasets.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .datasets import FeatureMatrix, LabelVector, SemanticTable
from .solvers import (
    LASSO_MAX_ITER,
    LASSO_TOL,
    Regularizer,
    RegularizerSpec,
    solve_weights_l1,
    solve_weights_l2,
)

#: stream domain for virtual-instance noise (one substream per unseen class)
VIRTUAL_NOISE_DOMAIN = 1


@dataclass(frozen=True, eq=False)
class ClassMeans:
    """Per-class mean feature vectors, one column per seen class.

    Columns follow the seen semantic table's entry order; ``counts`` holds
    the number of source instances behind each mean.
    """

    means: np.ndarray
    class_ids: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        ids = np.array(self.class_ids, dtype=np.int64)
        counts = np.array(self.counts, dtype=np.int64)
        if means.ndim != 2 or ids.shape != (means.shape[1],) or counts.shape != ids.shape:
            raise ValueError("inconsistent class-means shapes")
        if counts.min(initial=1) < 1:
            raise ValueError("every class mean needs at least one instance")
        if not np.all(np.isfinite(means)):
            raise ValueError("class means contain non-finite entries")
        for arr in (means, ids, counts):
            arr.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "class_ids", ids)
        object.__setattr__(self, "counts", counts)

    @property
    def n_classes(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True, eq=False)
class ReconstructionWeights:
    """Weight matrix (seen classes x unseen classes) from the semantic solve."""

    weights: np.ndarray
    regularizer: RegularizerSpec

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("weights must be a 2-d matrix")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights contain non-finite entries")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True, eq=False)
class VirtualDataset:
    """Sampled unseen-class instances with exact per-class semantic labels."""

    features: np.ndarray  # d x (npc * l)
    semantics: np.ndarray  # a x (npc * l), exact copies of the class vectors
    labels: np.ndarray  # npc * l class ids
    sigma2: float
    seed: int
    npc: int

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64)
        sems = np.array(self.semantics, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if feats.ndim != 2 or sems.ndim != 2:
            raise ValueError("virtual features and semantics must be 2-d")
        if feats.shape[1] != sems.shape[1] or labels.shape != (feats.shape[1],):
            raise ValueError("virtual dataset parts disagree on instance count")
        if self.npc < 1:
            raise ValueError("npc must be positive")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")
        _, counts = np.unique(labels, return_counts=True)
        if labels.size and not np.all(counts == self.npc):
            raise ValueError("each class must appear exactly npc times")
        for arr in (feats, sems, labels):
            arr.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "semantics", sems)
        object.__setattr__(self, "labels", labels)

    @property
    def n_instances(self) -> int:
        return self.features.shape[1]


def compute_class_means(
    features: FeatureMatrix, labels: LabelVector, seen: SemanticTable
) -> ClassMeans:
    """Mean feature vector of every seen class, in table entry order."""
    if len(labels) != features.n_instances:
        raise ValueError("labels do not match feature instances")
    means = np.empty((features.dim, seen.n_classes))
    counts = np.empty(seen.n_classes, dtype=np.int64)
    for i, class_id in enumerate(seen.class_ids):
        mask = labels.labels == class_id
        n = int(mask.sum())
        if n == 0:
            raise ValueError(f"seen class {int(class_id)} has no source instances")
        means[:, i] = features.values[:, mask].mean(axis=1)
        counts[i] = n
    return ClassMeans(means, seen.class_ids, counts)


def reconstruct_weights(
    seen: SemanticTable,
    unseen: SemanticTable,
    reg: RegularizerSpec,
    max_iter: int = LASSO_MAX_ITER,
    tol: float = LASSO_TOL,
) -> ReconstructionWeights:
    """Express each unseen semantic vector in terms of the seen table.

    Column i solves ``min_w ||k_i - S w||^2 + weight * Omega(w)`` where S
    stacks the seen vectors and k_i is unseen class i's vector, using the
    L2 or L1 solver selected by ``reg.kind``.
    """
    if seen.dim != unseen.dim:
        raise ValueError(
            f"semantic dimension mismatch: seen {seen.dim} vs unseen {unseen.dim}"
        )
    table = seen.vectors
    columns = []
    for i in range(unseen.n_classes):
        target = unseen.vectors[:, i]
        if reg.kind is Regularizer.L2:
            columns.append(solve_weights_l2(table, target, reg.weight))
        else:
            columns.append(
                solve_weights_l1(table, target, reg.weight, max_iter=max_iter, tol=tol)
            )
    return ReconstructionWeights(np.column_stack(columns), reg)


def default_sigma2(features: FeatureMatrix, labels: LabelVector) -> float:
    """Default sampling variance: 0.1 x mean within-class coordinate variance.

    Per-class population variances (ddof=0) are averaged over coordinates
    and classes with equal class weight; singleton classes contribute zero.
    """
    class_vars = []
    for class_id in np.unique(labels.labels):
        block = features.values[:, labels.labels == class_id]
        class_vars.append(block.var(axis=1).mean())
    return 0.1 * float(np.mean(class_vars))


def generate_virtual(
    means: ClassMeans,
    weights: ReconstructionWeights,
    unseen: SemanticTable,
    npc: int,
    sigma2: float,
    seed: int,
    workers: Optional[int] = None,
) -> VirtualDataset:
    """Sample ``npc`` virtual instances per unseen class.

    Class i's instances are ``p_i + sqrt(sigma2) * g`` with ``p_i`` the
    reconstructed prototype (seen means weighted by column i) and ``g``
    standard-normal noise from the class's own substream.  Semantic columns
    are exact copies of the class vectors and labels are deterministic.

    ``workers`` > 1 generates classes in a thread pool; the per-class
    substreams make the result identical to the sequential path.
    """
    if npc < 1:
        raise ValueError("npc must be positive")
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    if weights.weights.shape != (means.n_classes, unseen.n_classes):
        raise ValueError(
            f"weights shape {weights.weights.shape} does not match "
            f"{means.n_classes} seen x {unseen.n_classes} unseen classes"
        )

    prototypes = means.means @ weights.weights  # d x l
    d = prototypes.shape[0]
    l = unseen.n_classes
    features = np.empty((d, npc * l))
    scale = float(np.sqrt(sigma2))

    def fill_class(i: int) -> None:
        block = slice(i * npc, (i + 1) * npc)
        if sigma2 == 0.0:
            features[:, block] = prototypes[:, i, None]
        else:
            noise = rng.standard_normal(
                (d, npc), seed, rng.stream_id(VIRTUAL_NOISE_DOMAIN, i)
            )
            features[:, block] = prototypes[:, i, None] + scale * noise

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill_class, range(l)))
    else:
        for i in range(l):
            fill_class(i)

    semantics = np.repeat(unseen.vectors, npc, axis=1)
    labels = np.repeat(unseen.class_ids, npc)
    return VirtualDataset(features, semantics, labels, float(sigma2), int(seed), int(npc))
