"""Deterministic linear-algebra kernels.

Two families live here:

* the regularized linear-map fit, solving ``A (X X^T + eps I) = K X^T`` for
  the image-to-semantic map ``A`` (a x d), via a dense symmetric
  positive-definite factorization;
* the reconstruction-weight solvers, expressing one semantic vector as a
  combination of table columns under an L2 (closed form) or L1 (cyclic
  coordinate descent) penalty:

      minimize ||target - M w||^2 + weight * Omega(w)

All three are pure functions: identical inputs give bitwise-identical
outputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .datasets import FeatureMatrix
from .errors import ConvergenceError, SingularMatrixError

#: relative scale of the default ridge term: eps = RIDGE_SCALE * trace(G) / d
RIDGE_SCALE = 1e-6

LASSO_MAX_ITER = 10000
LASSO_TOL = 1e-8


class Regularizer(str, enum.Enum):
    L2 = "l2"
    L1 = "l1"


@dataclass(frozen=True)
class RegularizerSpec:
    """Penalty choice for the reconstruction-weight solve."""

    kind: Regularizer = Regularizer.L2
    weight: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "kind", Regularizer(self.kind))
        if not np.isfinite(self.weight) or self.weight < 0:
            raise ValueError(f"regularizer weight must be >= 0, got {self.weight}")


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Fitted linear image-to-semantic map ``s = A x`` (bias fixed at zero)."""

    matrix: np.ndarray
    bias: np.ndarray
    ridge_eps: float

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.float64)
        bias = np.array(self.bias, dtype=np.float64)
        if mat.ndim != 2:
            raise ValueError("map matrix must be 2-dimensional")
        if bias.shape != (mat.shape[0],):
            raise ValueError("bias length must equal the map's output dimension")
        if not np.all(np.isfinite(mat)):
            raise ValueError("map matrix contains non-finite entries")
        if np.any(bias != 0.0):
            raise ValueError("bias is fixed to zero in this model")
        if self.ridge_eps < 0:
            raise ValueError("ridge_eps must be non-negative")
        mat.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "bias", bias)

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    def apply(self, features: np.ndarray) -> np.ndarray:
        """Map feature columns to semantic columns."""
        features = np.asarray(features, dtype=np.float64)
        if features.shape[0] != self.in_dim:
            raise ValueError(
                f"feature dimension {features.shape[0]} does not match map "
                f"input dimension {self.in_dim}"
            )
        return self.matrix @ features + self.bias[:, None]


def default_ridge_eps(gram: np.ndarray) -> float:
    """Default ridge term for a d x d Gram matrix: 1e-6 * trace / d."""
    d = gram.shape[0]
    return RIDGE_SCALE * float(np.trace(gram)) / d


def solve_map_from_moments(
    gram: np.ndarray, cross: np.ndarray, ridge_eps: Optional[float]
) -> LinearMap:
    """Solve ``A (gram + eps I) = cross`` for A.

    ``gram`` is d x d symmetric PSD, ``cross`` is a x d.  ``ridge_eps=None``
    selects the trace-scaled default.  With ``ridge_eps=0`` a singular gram
    raises :class:`SingularMatrixError` naming the deficient rank.
    """
    gram = np.asarray(gram, dtype=np.float64)
    cross = np.asarray(cross, dtype=np.float64)
    d = gram.shape[0]
    if gram.shape != (d, d):
        raise ValueError(f"gram matrix must be square, got {gram.shape}")
    if cross.ndim != 2 or cross.shape[1] != d:
        raise ValueError(
            f"cross matrix shape {cross.shape} does not match gram size {d}"
        )
    if ridge_eps is None:
        ridge_eps = default_ridge_eps(gram)
    if ridge_eps < 0:
        raise ValueError("ridge_eps must be non-negative")

    system = gram + ridge_eps * np.eye(d)
    try:
        factor = scipy.linalg.cho_factor(system)
    except np.linalg.LinAlgError:
        rank = int(np.linalg.matrix_rank(system))
        raise SingularMatrixError(
            f"gram matrix is singular (rank {rank} < {d}); "
            f"pass ridge_eps > 0 to regularize",
            rank=rank,
            size=d,
        ) from None
    solution = scipy.linalg.cho_solve(factor, cross.T).T
    return LinearMap(solution, np.zeros(cross.shape[0]), float(ridge_eps))


def fit_linear_map(
    features: FeatureMatrix | np.ndarray,
    semantics: np.ndarray,
    ridge_eps: Optional[float] = None,
) -> LinearMap:
    """Fit the map sending feature columns to their semantic columns.

    Solves the normal equations ``A (X X^T + eps I) = K X^T`` where X is
    d x N (instances as columns) and K is a x N.  With ``eps = 0`` this is
    the closed-form least-squares map ``A = K X^T (X X^T)^{-1}``.

    Parameters
    ----------
    features : FeatureMatrix or ndarray, d x N
    semantics : ndarray, a x N, one semantic column per instance
    ridge_eps : float, optional
        Non-negative diagonal loading.  ``None`` selects
        ``1e-6 * trace(X X^T) / d``; pass ``0.0`` for the unregularized
        solve (requires a nonsingular Gram matrix).
    """
    x = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=np.float64)
    k = np.asarray(semantics, dtype=np.float64)
    if x.ndim != 2 or k.ndim != 2:
        raise ValueError("features and semantics must be 2-d matrices")
    if k.shape[1] != x.shape[1]:
        raise ValueError(
            f"features have {x.shape[1]} instances but semantics have {k.shape[1]}"
        )
    return solve_map_from_moments(x @ x.T, k @ x.T, ridge_eps)


def solve_weights_l2(matrix: np.ndarray, target: np.ndarray, weight: float) -> np.ndarray:
    """Ridge reconstruction weights: ``(M^T M + weight I)^{-1} M^T t``.

    The unique minimizer of ``||t - M w||^2 + weight ||w||^2`` for
    ``weight > 0``.
    """
    m = np.asarray(matrix, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if m.ndim != 2 or t.shape != (m.shape[0],):
        raise ValueError(
            f"target shape {t.shape} does not match matrix shape {m.shape}"
        )
    if weight <= 0:
        raise ValueError("l2 weight must be positive")
    k = m.shape[1]
    system = m.T @ m + weight * np.eye(k)
    factor = scipy.linalg.cho_factor(system)
    return scipy.linalg.cho_solve(factor, m.T @ t)


def lasso_kkt_violation(
    matrix: np.ndarray, target: np.ndarray, weight: float, w: np.ndarray
) -> float:
    """Worst violation of the lasso stationarity conditions at ``w``.

    For the objective ``||t - M w||^2 + weight ||w||_1`` the conditions are
    ``|2 g_j| <= weight`` where ``w_j = 0`` and ``2 g_j + weight*sign(w_j) = 0``
    otherwise, with ``g = M^T (M w - t)``.
    """
    g2 = 2.0 * (matrix.T @ (matrix @ w - target))
    at_zero = w == 0.0
    violation = np.abs(g2 + weight * np.sign(w))
    violation[at_zero] = np.maximum(np.abs(g2[at_zero]) - weight, 0.0)
    return float(violation.max()) if violation.size else 0.0


def solve_weights_l1(
    matrix: np.ndarray,
    target: np.ndarray,
    weight: float,
    max_iter: int = LASSO_MAX_ITER,
    tol: float = LASSO_TOL,
    callback: Optional[Callable[[np.ndarray], None]] = None,
) -> np.ndarray:
    """Lasso reconstruction weights by cyclic coordinate descent.

    Minimizes ``||t - M w||^2 + weight ||w||_1`` starting from ``w = 0``,
    visiting coordinates in index order.  Iteration stops once the KKT
    violation (see :func:`lasso_kkt_violation`) drops to ``tol``.  Columns
    of M that are identically zero keep their coefficient pinned at 0.

    ``callback``, when given, is invoked with a copy of ``w`` after every
    full sweep.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` sweeps did not reach the tolerance; carries the
        final violation magnitude.
    """
    m = np.asarray(matrix, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if m.ndim != 2 or t.shape != (m.shape[0],):
        raise ValueError(
            f"target shape {t.shape} does not match matrix shape {m.shape}"
        )
    if weight < 0:
        raise ValueError("l1 weight must be non-negative")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")

    k = m.shape[1]
    col_norm2 = np.einsum("ij,ij->j", m, m)
    w = np.zeros(k)
    residual = t.copy()  # residual = t - M w, maintained incrementally
    threshold = weight / 2.0

    for _ in range(max_iter):
        for j in range(k):
            if col_norm2[j] == 0.0:
                continue
            col = m[:, j]
            rho = col @ residual + col_norm2[j] * w[j]
            w_new = np.sign(rho) * max(abs(rho) - threshold, 0.0) / col_norm2[j]
            if w_new != w[j]:
                residual += col * (w[j] - w_new)
                w[j] = w_new
        if callback is not None:
            callback(w.copy())
        violation = lasso_kkt_violation(m, t, weight, w)
        if violation <= tol:
            return w

    raise ConvergenceError(
        f"coordinate descent did not converge in {max_iter} sweeps "
        f"(KKT violation {violation:.3e} > tol {tol:.3e})",
        kkt_violation=violation,
    )
