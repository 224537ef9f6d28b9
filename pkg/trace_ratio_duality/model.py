"""Problem instances for the generalized trace ratio problem.

    max  tr(G X^T B X) / tr(G X^T A X)   subject to  X^T X = I_p

with A (n x n) and G (p x p) positive definite and B symmetric.
"""

from dataclasses import dataclass

import numpy as np

from .config import FEAS_TOL, SPD_TOL
from .errors import InstanceValidationError
from .linalg import SpdMatrix, SymMatrix, frozen_array, kron, max_eigenvalue, vec
from .utils.logging import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class ProblemInstance:
    """A validated (A, B, G) triple. Build it with ``ProblemInstance.create``."""

    a: SpdMatrix
    b: SymMatrix
    g: SpdMatrix

    def __post_init__(self):
        if self.b.dim != self.a.dim:
            raise InstanceValidationError(
                f"B must be {self.a.dim}x{self.a.dim} to match A, got {self.b.dim}x{self.b.dim}"
            )
        if self.g.dim > self.a.dim:
            raise InstanceValidationError(
                f"Need p <= n, got p={self.g.dim} and n={self.a.dim}"
            )

    @classmethod
    def create(cls, a, b, g) -> "ProblemInstance":
        """Validate raw arrays and build an instance.

        Args:
            a: n x n positive definite denominator matrix
            b: n x n symmetric numerator matrix
            g: p x p positive definite weight matrix

        Returns:
            ProblemInstance
        """
        return cls(
            a=SpdMatrix.from_array(a, name="A"),
            b=SymMatrix(b),
            g=SpdMatrix.from_array(g, name="G"),
        )

    @property
    def n(self) -> int:
        return self.a.dim

    @property
    def p(self) -> int:
        return self.g.dim

    @property
    def A(self) -> np.ndarray:
        return self.a.entries

    @property
    def B(self) -> np.ndarray:
        return self.b.entries

    @property
    def G(self) -> np.ndarray:
        return self.g.entries


@dataclass(frozen=True)
class NgtrpInstance:
    """Non-homogeneous variant: (tr(G X^T B X) + beta) / (tr(G X^T A X) + alpha)."""

    base: ProblemInstance
    alpha: float = 0.0
    beta: float = 0.0


@dataclass(frozen=True)
class StiefelPoint:
    """An n x p matrix with orthonormal columns."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise InstanceValidationError(f"Stiefel point must be a matrix, got shape {x.shape}")
        object.__setattr__(self, "x", frozen_array(x))
        residual = self.feasibility_residual()
        if residual > FEAS_TOL:
            raise InstanceValidationError(
                f"Columns are not orthonormal: X^T X deviates from I_p by {residual:.3e}"
            )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def feasibility_residual(self) -> float:
        """Max-norm of X^T X - I_p."""
        return float(np.max(np.abs(self.x.T @ self.x - np.eye(self.p))))

    def is_feasible(self, feas_tol: float = FEAS_TOL) -> bool:
        return (
            self.feasibility_residual() <= feas_tol
            and lemma3_check(self.x) <= feas_tol
        )


def _check_nonzero(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x.x if isinstance(x, StiefelPoint) else x, dtype=float)
    if np.linalg.norm(x) == 0.0:
        raise InstanceValidationError("Objective is undefined at the zero matrix")
    return x


def trace_form(g: np.ndarray, m: np.ndarray, x: np.ndarray) -> float:
    """tr(G X^T M X)."""
    return float(np.trace(g @ x.T @ m @ x))


def phi(inst: ProblemInstance, x) -> float:
    """Trace ratio objective tr(G X^T B X) / tr(G X^T A X) at a nonzero X."""
    x = _check_nonzero(x)
    if x.shape != (inst.n, inst.p):
        raise InstanceValidationError(
            f"X must be {inst.n}x{inst.p}, got {x.shape[0]}x{x.shape[1]}"
        )
    return trace_form(inst.G, inst.B, x) / trace_form(inst.G, inst.A, x)


def rayleigh_ratio(inst: ProblemInstance, x) -> float:
    """The same ratio written as vec(X)^T (G (x) B) vec(X) / vec(X)^T (G (x) A) vec(X)."""
    v = vec(_check_nonzero(x))
    return float(v @ kron(inst.G, inst.B) @ v) / float(v @ kron(inst.G, inst.A) @ v)


def lemma3_check(x) -> float:
    """lambda_max(X X^T) - 1; nonpositive (up to rounding) for X^T X = I_p."""
    x = np.asarray(x.x if isinstance(x, StiefelPoint) else x, dtype=float)
    # nonzero eigenvalues of X X^T are those of X^T X
    return max_eigenvalue(x.T @ x) - 1.0


def ngtrp_to_gtrp(ng: NgtrpInstance, spd_tol: float = SPD_TOL) -> ProblemInstance:
    """Homogenize a non-homogeneous trace ratio problem.

    On the Stiefel manifold tr(G X^T X) = tr(G), so the constants alpha and
    beta are absorbed as multiples of the identity:
    A + alpha/tr(G) I_n and B + beta/tr(G) I_n.
    """
    base = ng.base
    scale = float(np.trace(base.G))
    eye = np.eye(base.n)
    a_tilde = base.A + (ng.alpha / scale) * eye
    b_tilde = base.B + (ng.beta / scale) * eye
    try:
        a_spd = SpdMatrix.from_array(a_tilde, name="A + alpha/tr(G) I", spd_tol=spd_tol)
    except InstanceValidationError as e:
        raise InstanceValidationError(
            f"Homogenized denominator is not positive definite for alpha={ng.alpha}: {e}"
        )
    logger.debug(f"Homogenized with shifts A+{ng.alpha / scale:.6g}I, B+{ng.beta / scale:.6g}I")
    return ProblemInstance(a=a_spd, b=SymMatrix(b_tilde), g=base.g)


def ngtrp_objective(ng: NgtrpInstance, x) -> float:
    """(tr(G X^T B X) + beta) / (tr(G X^T A X) + alpha)."""
    x = _check_nonzero(x)
    inst = ng.base
    return (trace_form(inst.G, inst.B, x) + ng.beta) / (trace_form(inst.G, inst.A, x) + ng.alpha)


def project_stiefel(x, rank_tol: float = 1e-12) -> StiefelPoint:
    """Orthonormal polar factor X (X^T X)^{-1/2}, computed from the thin SVD."""
    x = np.asarray(x, dtype=float)
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[-1] <= rank_tol * max(1.0, s[0]):
        raise InstanceValidationError(
            f"Cannot project a rank-deficient matrix onto the Stiefel manifold "
            f"(smallest singular value {s[-1] if s.size else 0.0:.3e})"
        )
    return StiefelPoint(u @ vt)


def random_stiefel(n: int, p: int, seed: int | np.random.Generator) -> StiefelPoint:
    """Orthonormalized Gaussian n x p matrix, deterministic per seed."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, p)))
    # sign fix makes the draw Haar distributed
    return StiefelPoint(q * np.sign(np.diag(r)))


def random_instance(n: int, p: int, seed: int | np.random.Generator) -> ProblemInstance:
    """Random instance with A = R R^T + 0.1 I, G likewise and Gaussian symmetric B."""
    if p > n or p < 1:
        raise InstanceValidationError(f"Need 1 <= p <= n, got p={p}, n={n}")
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((n, n))
    a = r @ r.T + 0.1 * np.eye(n)
    s = rng.standard_normal((p, p))
    g = s @ s.T + 0.1 * np.eye(p)
    m = rng.standard_normal((n, n))
    b = 0.5 * (m + m.T)
    return ProblemInstance.create(a, b, g)


def example_gs1() -> ProblemInstance:
    """A = I_2, G = diag(1, 2), B = diag(1, 3): primal 7/3, dual 3."""
    return ProblemInstance.create(np.eye(2), np.diag([1.0, 3.0]), np.diag([1.0, 2.0]))
