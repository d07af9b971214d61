"""Core data types: feature matrices, labels, semantic tables, ZSL splits.

Convention used throughout the package: instances are COLUMNS of every
matrix handed to mathematical code.  The CSV interchange formats store one
instance per row; ingestion (see :mod:`glap.io`) transposes.

All types are immutable after construction and validate their own local
invariants eagerly.  Cross-object consistency (disjoint label sets, matching
semantic dimensions, ...) is checked by :func:`validate_split`, which
reports violations instead of raising so callers can surface all problems
at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np


def _frozen_array(values, dtype=np.float64, ndim=None, name="array") -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Real feature matrix with one instance per column (d rows, N columns)."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, ndim=2, name="feature matrix")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"feature matrix must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature matrix contains non-finite entries")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def n_instances(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class LabelVector:
    """Per-instance class ids (non-negative integers)."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.labels, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError(f"labels must be 1-dimensional, got shape {arr.shape}")
        if arr.size and arr.min() < 0:
            raise ValueError("class ids must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    def __len__(self) -> int:
        return self.labels.size


@dataclass(frozen=True, eq=False)
class SemanticTable:
    """Ordered per-class semantic vectors.

    ``vectors`` holds one column per class, in entry order aligned with
    ``class_ids``.  Class ids are arbitrary non-negative integers; the table
    maps them to dense positions internally.
    """

    class_ids: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        ids = np.array(self.class_ids, dtype=np.int64)
        vecs = _frozen_array(self.vectors, ndim=2, name="semantic vectors")
        if ids.ndim != 1:
            raise ValueError("class_ids must be 1-dimensional")
        if ids.size != vecs.shape[1]:
            raise ValueError(
                f"{ids.size} class ids for {vecs.shape[1]} semantic columns"
            )
        if ids.size < 1:
            raise ValueError("semantic table must have at least one entry")
        if ids.min() < 0:
            raise ValueError("class ids must be non-negative")
        if np.unique(ids).size != ids.size:
            raise ValueError("duplicate class ids in semantic table")
        if not np.all(np.isfinite(vecs)):
            raise ValueError("semantic table contains non-finite entries")
        if not np.any(np.linalg.norm(vecs, axis=0) > 0):
            raise ValueError("semantic table must contain at least one nonzero vector")
        ids.setflags(write=False)
        object.__setattr__(self, "class_ids", ids)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "_position", {int(c): i for i, c in enumerate(ids)})

    @classmethod
    def from_entries(cls, entries: Iterable[Tuple[int, Sequence[float]]]) -> "SemanticTable":
        entries = list(entries)
        if not entries:
            raise ValueError("semantic table must have at least one entry")
        ids = [int(c) for c, _ in entries]
        vecs = np.column_stack([np.asarray(v, dtype=np.float64) for _, v in entries])
        return cls(np.asarray(ids), vecs)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_classes(self) -> int:
        return self.vectors.shape[1]

    def position(self, class_id: int) -> int:
        try:
            return self._position[int(class_id)]
        except KeyError:
            raise KeyError(f"class id {class_id} not in semantic table") from None

    def vector(self, class_id: int) -> np.ndarray:
        return self.vectors[:, self.position(class_id)]

    def __contains__(self, class_id) -> bool:
        return int(class_id) in self._position

    def entries(self):
        for i, c in enumerate(self.class_ids):
            yield int(c), self.vectors[:, i]

    def columns_for(self, labels: LabelVector) -> np.ndarray:
        """Per-instance semantic matrix: column j is the vector of labels[j]."""
        positions = np.array([self.position(c) for c in labels.labels], dtype=np.intp)
        return self.vectors[:, positions]


@dataclass(frozen=True, eq=False)
class ZslSplit:
    """Labeled source data plus seen/unseen semantic tables.

    Deliberately does not cross-validate its parts; use
    :func:`validate_split` to obtain a full report.
    """

    features: FeatureMatrix
    labels: LabelVector
    seen: SemanticTable
    unseen: SemanticTable


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_split(split: ZslSplit) -> ValidationReport:
    """Check all cross-object invariants of a split; never raises.

    Returns an empty report iff the split is well-formed.  Each distinct
    violation contributes one entry.
    """
    violations = []

    if len(split.labels) != split.features.n_instances:
        violations.append(
            f"label count {len(split.labels)} does not match "
            f"instance count {split.features.n_instances}"
        )

    seen_ids = set(int(c) for c in split.seen.class_ids)
    unseen_ids = set(int(c) for c in split.unseen.class_ids)
    overlap = seen_ids & unseen_ids
    if overlap:
        violations.append(f"overlapping class ids: {sorted(overlap)}")

    unknown = sorted(set(int(c) for c in split.labels.labels) - seen_ids)
    if unknown:
        violations.append(f"source labels missing from seen semantics: {unknown}")

    if split.seen.dim != split.unseen.dim:
        violations.append(
            f"semantic dimension mismatch: seen {split.seen.dim} vs "
            f"unseen {split.unseen.dim}"
        )

    return ValidationReport(tuple(violations))


def aggregate_per_image_semantics(
    features: FeatureMatrix, labels: LabelVector, per_image: np.ndarray
) -> SemanticTable:
    """Reduce per-image semantic annotations to a per-class table.

    Each distinct label gets one entry whose vector is the arithmetic mean
    of the per-image columns carrying that label.  Entries are ordered by
    ascending class id, so the result is invariant to instance order.
    """
    per_image = np.asarray(per_image, dtype=np.float64)
    if per_image.ndim != 2:
        raise ValueError("per-image semantics must be a 2-d matrix")
    if per_image.shape[1] != features.n_instances:
        raise ValueError(
            f"per-image semantics have {per_image.shape[1]} columns for "
            f"{features.n_instances} instances"
        )
    if len(labels) != features.n_instances:
        raise ValueError("labels do not match feature instances")
    if not np.all(np.isfinite(per_image)):
        raise ValueError("per-image semantics contain non-finite entries")

    ids = np.unique(labels.labels)
    means = np.empty((per_image.shape[0], ids.size))
    for i, c in enumerate(ids):
        means[:, i] = per_image[:, labels.labels == c].mean(axis=1)
    return SemanticTable(ids, means)
