"""Dense symmetric linear algebra used by every solver in the package.

Matrices are plain ``numpy`` arrays wrapped in small frozen containers that
carry their validation: ``SymMatrix`` is symmetric by construction and
``SpdMatrix`` holds the Cholesky factor that proved it positive definite.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .config import (
    JACOBI_TOL,
    MAX_SWEEPS,
    MULT_TOL,
    ORTHO_TOL,
    RECON_TOL,
    SPD_TOL,
)
from .errors import InstanceValidationError, NumericalError
from .utils.logging import setup_logger

logger = setup_logger(__name__)


def frozen_array(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SymMatrix:
    """A dense real symmetric matrix.

    The input is averaged with its transpose, so ``entries`` is exactly
    symmetric afterwards.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InstanceValidationError(
                f"Symmetric matrix must be square and non-empty, got shape {a.shape}"
            )
        if not np.all(np.isfinite(a)):
            raise InstanceValidationError("Matrix contains non-finite entries")
        object.__setattr__(self, "entries", frozen_array(0.5 * (a + a.T)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))


@dataclass(frozen=True)
class SpdMatrix:
    """A symmetric positive definite matrix with its lower Cholesky factor."""

    base: SymMatrix
    chol: np.ndarray = field(repr=False)

    @classmethod
    def from_array(cls, a, name: str = "matrix", spd_tol: float = SPD_TOL) -> "SpdMatrix":
        """Validate positive definiteness via Cholesky.

        Args:
            a: Square array (symmetrized on the way in)
            name: Name used in error messages
            spd_tol: Relative pivot threshold

        Returns:
            SpdMatrix holding the factor L with base = L L^T
        """
        base = a if isinstance(a, SymMatrix) else SymMatrix(a)
        try:
            chol = np.linalg.cholesky(base.entries)
        except np.linalg.LinAlgError:
            raise InstanceValidationError(
                f"{name} must be positive definite (Cholesky factorization failed)"
            )
        threshold = spd_tol * max(1.0, base.trace / base.dim)
        pivots = np.diag(chol) ** 2
        if np.any(pivots <= threshold):
            raise InstanceValidationError(
                f"{name} must be positive definite: smallest Cholesky pivot "
                f"{pivots.min():.3e} is not above {threshold:.3e}"
            )
        return cls(base=base, chol=frozen_array(chol))

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def entries(self) -> np.ndarray:
        return self.base.entries


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending, eigenvectors as matching columns."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class PencilTop:
    """Top eigenvalue of a symmetric-definite pencil with its eigenspace."""

    value: float
    multiplicity: int
    basis: np.ndarray
    next_value: float | None = None


def _as_array(m) -> np.ndarray:
    if isinstance(m, (SymMatrix, SpdMatrix)):
        return m.entries
    return np.asarray(m, dtype=float)


def _sorted_decomposition(values: np.ndarray, vectors: np.ndarray) -> EigenDecomposition:
    # stable sort keeps the original column order among exact ties
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values=frozen_array(values[order]), vectors=frozen_array(vectors[:, order]))


def _jacobi(a: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v

    for sweep in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            logger.debug(f"Jacobi converged after {sweep} sweeps (off-diagonal {off:.3e})")
            return np.diag(a).copy(), v
        for k in range(n - 1):
            for l in range(k + 1, n):
                akl = a[k, l]
                if akl == 0.0:
                    continue
                diff = a[l, l] - a[k, k]
                if abs(akl) < abs(diff) * 1.0e-36:
                    t = akl / diff
                else:
                    theta = diff / (2.0 * akl)
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                idx = [k, l]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.T @ a[idx, :]
                a[k, l] = a[l, k] = 0.0
                v[:, idx] = v[:, idx] @ rot

    off = np.linalg.norm(a - np.diag(np.diag(a)))
    if off <= tol * scale:
        return np.diag(a).copy(), v
    raise NumericalError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
        f"(off-diagonal norm {off:.3e})",
        details={"off_diagonal_norm": float(off), "sweeps": max_sweeps},
    )


def sym_eigen(
    m,
    method: str = "jacobi",
    tol: float = JACOBI_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, values sorted descending.

    Args:
        m: SymMatrix (or array, symmetrized)
        method: "jacobi" for cyclic Jacobi sweeps, "lapack" for numpy.linalg.eigh
            (used inside projection loops where thousands of solves are needed)
        tol: Relative off-diagonal Frobenius stopping threshold for Jacobi
        max_sweeps: Sweep cap for Jacobi

    Returns:
        EigenDecomposition with orthonormal eigenvector columns
    """
    sym = m if isinstance(m, SymMatrix) else SymMatrix(_as_array(m))
    a = sym.entries
    if method == "jacobi":
        values, vectors = _jacobi(a, tol, max_sweeps)
    elif method == "lapack":
        values, vectors = np.linalg.eigh(a)
    else:
        raise ValueError(f"Unknown eigensolver method: {method}")
    return _sorted_decomposition(values, vectors)


def check_decomposition(
    m, eig: EigenDecomposition, recon_tol: float = RECON_TOL, ortho_tol: float = ORTHO_TOL
) -> tuple[float, float]:
    """Return (orthogonality residual, relative reconstruction residual) and
    raise if either exceeds its tolerance."""
    a = _as_array(m)
    v = eig.vectors
    ortho = float(np.max(np.abs(v.T @ v - np.eye(v.shape[1]))))
    norm = np.linalg.norm(a)
    recon = float(np.linalg.norm(eig.reconstruct() - a) / (norm if norm > 0 else 1.0))
    if ortho > ortho_tol or recon > recon_tol:
        raise NumericalError(
            f"Eigendecomposition check failed: orthogonality {ortho:.3e}, "
            f"reconstruction {recon:.3e}"
        )
    return ortho, recon


def kron(a, b) -> np.ndarray:
    """Kronecker product; dimensions multiply."""
    return np.kron(_as_array(a), _as_array(b))


def vec(x) -> np.ndarray:
    """Stack the columns of x into one vector."""
    return np.asarray(x, dtype=float).reshape(-1, order="F")


def unvec(v, n: int, p: int) -> np.ndarray:
    """Inverse of vec for an n x p matrix."""
    return np.asarray(v, dtype=float).reshape((n, p), order="F")


def min_eigenvalue(m, method: str = "jacobi") -> float:
    return float(sym_eigen(m, method=method).values[-1])


def max_eigenvalue(m, method: str = "jacobi") -> float:
    return float(sym_eigen(m, method=method).values[0])


def orthonormal_columns(v: np.ndarray) -> np.ndarray:
    """Euclidean orthonormal basis of the column span of v (full column rank)."""
    q, r = np.linalg.qr(v)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def pencil_lambda_max(a: SpdMatrix, b, mult_tol: float = MULT_TOL) -> PencilTop:
    """Largest eigenvalue of A^{-1}B for a symmetric-definite pencil.

    Computed as the top eigenvalue of L^{-1} B L^{-T} with A = L L^T.

    Args:
        a: Positive definite matrix with its Cholesky factor
        b: Symmetric matrix of the same size
        mult_tol: Eigenvalues within mult_tol * (1 + |value|) of the top one
            count toward the multiplicity

    Returns:
        PencilTop with value, multiplicity and an orthonormal basis of
        {v : B v = value * A v}
    """
    b_arr = _as_array(b)
    if b_arr.shape != (a.dim, a.dim):
        raise InstanceValidationError(
            f"Pencil dimension mismatch: A is {a.dim}x{a.dim}, B is {b_arr.shape}"
        )
    l = a.chol
    c = solve_triangular(l, b_arr, lower=True)
    c = solve_triangular(l, c.T, lower=True)
    eig = sym_eigen(SymMatrix(c))
    value = float(eig.values[0])
    band = mult_tol * (1.0 + abs(value))
    multiplicity = int(np.sum(eig.values >= value - band))
    # y = L^T v, so v = L^{-T} y
    top = solve_triangular(l.T, eig.vectors[:, :multiplicity], lower=False)
    basis = orthonormal_columns(top)
    next_value = float(eig.values[multiplicity]) if multiplicity < a.dim else None
    return PencilTop(
        value=value, multiplicity=multiplicity, basis=frozen_array(basis), next_value=next_value
    )
