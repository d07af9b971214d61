"""Transferability of unseen semantic vectors.

An unseen class whose semantic vector lies outside the span of the seen
classes' vectors cannot be told apart from any other such class by a map
fitted on seen data: its scores degenerate to ties.  This module quantifies
that with the relative residual of each unseen vector against the seen
column space, computed through a rank-revealing orthogonal projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .datasets import SemanticTable

#: singular values below RANK_CUTOFF x the largest are treated as zero
RANK_CUTOFF = 1e-10

DEFAULT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ClassTransfer:
    class_id: int
    relative_residual: float
    transferable: bool


@dataclass(frozen=True)
class TransferReport:
    per_class: Tuple[ClassTransfer, ...]
    tolerance: float

    @property
    def all_transferable(self) -> bool:
        return all(entry.transferable for entry in self.per_class)


def span_basis(table: SemanticTable) -> np.ndarray:
    """Orthonormal basis of the table's column space (numerical rank)."""
    u, s, _ = np.linalg.svd(table.vectors, full_matrices=False)
    rank = int(np.sum(s > RANK_CUTOFF * s[0]))
    return u[:, :rank]


def check_transferability(
    seen: SemanticTable, unseen: SemanticTable, tolerance: float = DEFAULT_TOLERANCE
) -> TransferReport:
    """Relative residual of each unseen vector against the seen span.

    ``relative_residual = ||k - proj(k)|| / ||k||`` lies in [0, 1]; a class
    is flagged transferable iff its residual is at most ``tolerance``.
    Zero unseen vectors are rejected (their residual is undefined).
    """
    if seen.dim != unseen.dim:
        raise ValueError(
            f"semantic dimension mismatch: seen {seen.dim} vs unseen {unseen.dim}"
        )
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")

    basis = span_basis(seen)
    entries = []
    for class_id, vector in unseen.entries():
        norm = np.linalg.norm(vector)
        if norm == 0.0:
            raise ValueError(
                f"unseen class {class_id} has a zero semantic vector; "
                f"its residual is undefined"
            )
        residual = vector - basis @ (basis.T @ vector)
        rel = float(np.linalg.norm(residual) / norm)
        entries.append(ClassTransfer(class_id, rel, rel <= tolerance))
    return TransferReport(tuple(entries), float(tolerance))
