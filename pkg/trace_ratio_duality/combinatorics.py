"""Partial assignments and Birkhoff-von Neumann decompositions.

An injection sigma: {0..p-1} -> {0..n-1} is stored as a tuple of column
indices (0-based); its value is sum_j w[j] * c[sigma[j]].
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import DS_TOL, ENUM_MAX_N, STRIP_TOL
from .errors import InstanceValidationError, NumericalError
from .linalg import frozen_array
from .utils.logging import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class AssignmentResult:
    injection: tuple[int, ...]
    value: float

    def matrix(self, n: int) -> np.ndarray:
        """0/1 partial permutation matrix Y (n x p) with Y[sigma(j), j] = 1."""
        y = np.zeros((n, len(self.injection)))
        y[list(self.injection), range(len(self.injection))] = 1.0
        return y


@dataclass(frozen=True)
class DoublyStochasticMatrix:
    entries: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.entries, dtype=float)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise InstanceValidationError(f"Doubly stochastic matrix must be square, got {z.shape}")
        if np.any(z < -DS_TOL):
            raise InstanceValidationError("Doubly stochastic matrix has negative entries")
        rows = np.abs(z.sum(axis=1) - 1.0).max()
        cols = np.abs(z.sum(axis=0) - 1.0).max()
        if max(rows, cols) > DS_TOL:
            raise InstanceValidationError(
                f"Row/column sums deviate from 1 by {max(rows, cols):.3e} (ds_tol={DS_TOL})"
            )
        object.__setattr__(self, "entries", frozen_array(np.clip(z, 0.0, None)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class BvnDecomposition:
    weights: tuple[float, ...]
    permutations: tuple[tuple[int, ...], ...]  # row i -> column perm[i]

    def matrices(self) -> list[np.ndarray]:
        n = len(self.permutations[0]) if self.permutations else 0
        mats = []
        for perm in self.permutations:
            m = np.zeros((n, n))
            m[range(n), list(perm)] = 1.0
            mats.append(m)
        return mats

    def reconstruct(self) -> np.ndarray:
        return sum(a * m for a, m in zip(self.weights, self.matrices()))


def _validate(w, c) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    if w.size > c.size:
        raise InstanceValidationError(
            f"Partial assignment needs p <= n, got p={w.size}, n={c.size}"
        )
    return w, c


def _result(w: np.ndarray, c: np.ndarray, injection) -> AssignmentResult:
    injection = tuple(int(i) for i in injection)
    return AssignmentResult(injection=injection, value=float(np.dot(w, c[list(injection)])))


def min_partial_assignment(w, c) -> AssignmentResult:
    """Minimize sum_j w_j c_sigma(j) over injections, for positive weights.

    With w > 0 the optimum uses the p smallest costs, the largest weight
    taking the smallest cost.
    """
    w, c = _validate(w, c)
    if np.any(w <= 0):
        raise InstanceValidationError("Weights must be strictly positive")
    w_order = np.argsort(-w, kind="stable")
    c_order = np.argsort(c, kind="stable")
    injection = np.empty(w.size, dtype=int)
    injection[w_order] = c_order[: w.size]
    return _result(w, c, injection)


def max_partial_assignment(w, c) -> AssignmentResult:
    """Maximize sum_j w_j c_sigma(j); equals -min_partial_assignment(w, -c)."""
    c = np.asarray(c, dtype=float).ravel()
    best = min_partial_assignment(w, -c)
    return AssignmentResult(injection=best.injection, value=-best.value)


def hungarian_partial_assignment(w, c, maximize: bool = False) -> AssignmentResult:
    """Rectangular assignment on the cost matrix C[j, i] = w_j c_i (any signs)."""
    w, c = _validate(w, c)
    rows, cols = linear_sum_assignment(np.outer(w, c), maximize=maximize)
    injection = np.empty(w.size, dtype=int)
    injection[rows] = cols
    return _result(w, c, injection)


def enumerate_partial_assignment(w, c, maximize: bool = False) -> AssignmentResult:
    """Exhaustive search over all n!/(n-p)! injections (any signs)."""
    w, c = _validate(w, c)
    perms = np.array(list(itertools.permutations(range(c.size), w.size)), dtype=int)
    values = (c[perms] * w).sum(axis=1)
    k = int(np.argmax(values) if maximize else np.argmin(values))
    return _result(w, c, perms[k])


def optimal_partial_assignment(
    w, c, maximize: bool = False, enum_max_n: int = ENUM_MAX_N
) -> AssignmentResult:
    """Sign-agnostic optimum: enumeration for small n, Hungarian beyond."""
    c = np.asarray(c, dtype=float).ravel()
    if c.size <= enum_max_n:
        return enumerate_partial_assignment(w, c, maximize=maximize)
    return hungarian_partial_assignment(w, c, maximize=maximize)


def vertex_witness_select(w, c, threshold: float = 0.0) -> AssignmentResult | None:
    """Best vertex when its value is below -threshold, otherwise None."""
    best = min_partial_assignment(w, c)
    if best.value < -threshold:
        return best
    return None


def pad_to_doubly_stochastic(z) -> DoublyStochasticMatrix:
    """Complete an n x p matrix with unit column sums and row sums <= 1 to an
    n x n doubly stochastic matrix by spreading the row deficits evenly over
    n - p extra columns."""
    z = np.clip(np.asarray(z, dtype=float), 0.0, None)
    n, p = z.shape
    if p == n:
        return DoublyStochasticMatrix(z)
    deficit = np.clip(1.0 - z.sum(axis=1), 0.0, None)
    extra = np.repeat((deficit / (n - p))[:, None], n - p, axis=1)
    return DoublyStochasticMatrix(np.hstack([z, extra]))


def _perfect_matching(support: np.ndarray) -> list[int] | None:
    """Augmenting-path bipartite matching; returns row -> column or None."""
    n = support.shape[0]
    match_col = [-1] * n  # column -> row
    adjacency = [np.flatnonzero(support[i]).tolist() for i in range(n)]

    def augment(row: int, seen: list[bool]) -> bool:
        for col in adjacency[row]:
            if seen[col]:
                continue
            seen[col] = True
            if match_col[col] == -1 or augment(match_col[col], seen):
                match_col[col] = row
                return True
        return False

    for row in range(n):
        if not augment(row, [False] * n):
            return None
    perm = [0] * n
    for col, row in enumerate(match_col):
        perm[row] = col
    return perm


def bvn_decompose(z: DoublyStochasticMatrix, strip_tol: float = STRIP_TOL) -> BvnDecomposition:
    """Greedy Birkhoff peeling into a convex combination of permutations.

    Args:
        z: Doubly stochastic matrix
        strip_tol: Entries below this are treated as zero

    Returns:
        BvnDecomposition with weights summing to 1
    """
    residual = np.array(z.entries, dtype=float)
    n = z.dim
    residual[residual < strip_tol] = 0.0
    weights: list[float] = []
    perms: list[tuple[int, ...]] = []

    while residual.sum() > n * DS_TOL:
        perm = _perfect_matching(residual > 0.0)
        if perm is None:
            raise NumericalError(
                "No perfect matching on the positive support before the mass was exhausted",
                details={"remaining_mass": float(residual.sum()), "components": len(weights)},
            )
        rows = np.arange(n)
        entries = residual[rows, perm]
        k = int(np.argmin(entries))
        weight = float(entries[k])
        residual[rows, perm] -= weight
        residual[k, perm[k]] = 0.0
        residual[residual < strip_tol] = 0.0
        weights.append(weight)
        perms.append(tuple(perm))
        logger.debug(f"BvN component {len(weights)}: weight {weight:.6g}")

    total = sum(weights)
    return BvnDecomposition(
        weights=tuple(a / total for a in weights), permutations=tuple(perms)
    )
