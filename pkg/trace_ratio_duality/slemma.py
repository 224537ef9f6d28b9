"""Constructive matrix S-lemma.

For H (p x p) and Q (n x n) symmetric with p <= n exactly one holds:

  (i)  some X with X^T X = I_p has tr(H X^T Q X) < 0              -> SLemmaWitness
  (ii) M symmetric and W >= 0 exist with tr M + tr W <= 0 and
       H (x) Q + M (x) I_n + I_p (x) W >= 0                           -> SLemmaCertificate

Both objects come with an independent verifier.
"""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .combinatorics import (
    AssignmentResult,
    bvn_decompose,
    optimal_partial_assignment,
    pad_to_doubly_stochastic,
)
from .config import CERT_TOL, DECIDE_TOL, FEAS_TOL, WIT_MARGIN
from .errors import BoundaryDegeneracyError, InstanceValidationError, NumericalError
from .linalg import SymMatrix, frozen_array, kron, min_eigenvalue, sym_eigen
from .lp import LinearProgram, farkas_certificate_lp, simplex_solve
from .utils.logging import setup_logger

logger = setup_logger(__name__)

VertexMethod = Literal["auto", "enumerate", "hungarian", "lp"]


@dataclass(frozen=True)
class SLemmaWitness:
    x: np.ndarray
    value: float

    kind = "witness"


@dataclass(frozen=True)
class SLemmaCertificate:
    m: np.ndarray
    w: np.ndarray
    min_eig: float
    trace_slack: float

    kind = "certificate"


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    residuals: dict = field(default_factory=dict)
    violations: tuple[str, ...] = ()


def _sym(m, name: str) -> np.ndarray:
    try:
        return (m if isinstance(m, SymMatrix) else SymMatrix(m)).entries
    except InstanceValidationError as e:
        raise InstanceValidationError(f"{name}: {e}")


def _check_dims(h: np.ndarray, q: np.ndarray) -> tuple[int, int]:
    p, n = h.shape[0], q.shape[0]
    if p > n:
        raise InstanceValidationError(f"S-lemma needs p <= n, got p={p}, n={n}")
    return p, n


def kronecker_sum(h, q, m, w) -> np.ndarray:
    """H (x) Q + M (x) I_n + I_p (x) W."""
    h, q, m, w = (np.asarray(a, dtype=float) for a in (h, q, m, w))
    p, n = h.shape[0], q.shape[0]
    return kron(h, q) + kron(m, np.eye(n)) + kron(np.eye(p), w)


def relaxation_vertex_lp(lam, mu) -> AssignmentResult:
    """Minimize sum_ij lam_j mu_i Z_ij over n x p matrices Z >= 0 with unit
    column sums and row sums <= 1, then recover a 0/1 vertex by decomposing
    the padded doubly stochastic matrix into permutations."""
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    p, n = lam.size, mu.size
    # Z flattened column-major: index i + j * n
    cost = np.outer(mu, lam).ravel(order="F")
    a_eq = np.zeros((p, n * p))
    a_ub = np.zeros((n, n * p))
    for j in range(p):
        a_eq[j, j * n : (j + 1) * n] = 1.0
    for i in range(n):
        a_ub[i, i::n] = 1.0
    result = simplex_solve(
        LinearProgram(c=cost, a_ub=a_ub, b_ub=np.ones(n), a_eq=a_eq, b_eq=np.ones(p))
    )
    if result.status != "optimal":
        raise NumericalError(f"Relaxation LP returned status {result.status}")
    z = result.x.reshape((n, p), order="F")
    decomposition = bvn_decompose(pad_to_doubly_stochastic(z))
    best = None
    for perm in decomposition.permutations:
        # column j of the padded matrix is matched by the row with perm[row] == j
        injection = [perm.index(j) for j in range(p)]
        value = float(np.dot(lam, mu[injection]))
        if best is None or value < best.value:
            best = AssignmentResult(injection=tuple(injection), value=value)
    logger.debug(f"Relaxation optimum {result.value:.12g}, best recovered vertex {best.value:.12g}")
    return best


def _vertex(lam: np.ndarray, mu: np.ndarray, method: VertexMethod) -> AssignmentResult:
    if method == "lp":
        return relaxation_vertex_lp(lam, mu)
    if method == "enumerate":
        return optimal_partial_assignment(lam, mu, enum_max_n=mu.size)
    if method == "hungarian":
        return optimal_partial_assignment(lam, mu, enum_max_n=0)
    return optimal_partial_assignment(lam, mu)


def slemma_lhs_min(h, q, method: VertexMethod = "auto") -> float:
    """Global minimum of tr(H X^T Q X) over X^T X = I_p.

    Equal to the best partial-permutation pairing of the eigenvalues.
    """
    h_arr, q_arr = _sym(h, "H"), _sym(q, "Q")
    _check_dims(h_arr, q_arr)
    lam = sym_eigen(h_arr).values
    mu = sym_eigen(q_arr).values
    return _vertex(lam, mu, method).value


def slemma_lhs_minimizer(h, q, method: VertexMethod = "auto") -> tuple[float, np.ndarray]:
    """Minimum value of tr(H X^T Q X) on the Stiefel manifold and an X attaining it."""
    h_arr, q_arr = _sym(h, "H"), _sym(q, "Q")
    _, n = _check_dims(h_arr, q_arr)
    eig_h, eig_q = sym_eigen(h_arr), sym_eigen(q_arr)
    vertex = _vertex(eig_h.values, eig_q.values, method)
    x = eig_q.vectors @ vertex.matrix(n) @ eig_h.vectors.T
    return vertex.value, x


def decide(
    h,
    q,
    decide_tol: float = DECIDE_TOL,
    wit_margin: float = WIT_MARGIN,
    method: VertexMethod = "auto",
) -> SLemmaWitness | SLemmaCertificate:
    """Decide which alternative of the matrix S-lemma holds and build its object.

    Args:
        h: p x p symmetric matrix
        q: n x n symmetric matrix
        decide_tol: Vertex values below -decide_tol produce a witness
        wit_margin: Strict negativity margin required of a witness
        method: How the minimizing partial permutation is found

    Returns:
        SLemmaWitness or SLemmaCertificate
    """
    h_arr, q_arr = _sym(h, "H"), _sym(q, "Q")
    p, n = _check_dims(h_arr, q_arr)
    eig_h, eig_q = sym_eigen(h_arr), sym_eigen(q_arr)
    lam, mu = eig_h.values, eig_q.values
    vertex = _vertex(lam, mu, method)
    m_star = vertex.value

    if m_star < -decide_tol:
        x = eig_q.vectors @ vertex.matrix(n) @ eig_h.vectors.T
        value = float(np.trace(h_arr @ x.T @ q_arr @ x))
        feas = float(np.max(np.abs(x.T @ x - np.eye(p))))
        if value < -wit_margin and feas <= FEAS_TOL:
            logger.debug(f"Witness with tr(H X^T Q X) = {value:.6g}")
            return SLemmaWitness(x=frozen_array(x), value=value)
        logger.warning(
            f"Vertex value {m_star:.3e} did not yield a valid witness "
            f"(trace {value:.3e}, feasibility {feas:.3e}); trying a certificate"
        )

    solution = farkas_certificate_lp(lam, mu)
    if solution is None:
        raise BoundaryDegeneracyError(
            f"S-lemma boundary degeneracy: neither a witness nor a certificate at m*={m_star:.3e}",
            details={"m_star": m_star},
        )
    m = eig_h.vectors @ np.diag(solution.xhat) @ eig_h.vectors.T
    w = eig_q.vectors @ np.diag(solution.d) @ eig_q.vectors.T
    m, w = 0.5 * (m + m.T), 0.5 * (w + w.T)
    min_eig = min_eigenvalue(kronecker_sum(h_arr, q_arr, m, w))
    trace_slack = -float(np.trace(m) + np.trace(w))
    logger.debug(f"Certificate with min eigenvalue {min_eig:.3e}, trace slack {trace_slack:.3e}")
    return SLemmaCertificate(
        m=frozen_array(m), w=frozen_array(w), min_eig=min_eig, trace_slack=trace_slack
    )


def verify_witness(h, q, witness: SLemmaWitness, feas_tol: float = FEAS_TOL,
                   wit_margin: float = WIT_MARGIN) -> VerificationReport:
    """Recompute feasibility and the trace value of a witness from scratch."""
    h_arr, q_arr = np.asarray(_sym(h, "H")), np.asarray(_sym(q, "Q"))
    x = np.asarray(witness.x, dtype=float)
    p, n = h_arr.shape[0], q_arr.shape[0]
    violations = []
    if x.shape != (n, p):
        return VerificationReport(passed=False, violations=(f"X has shape {x.shape}, expected {(n, p)}",))
    feasibility = float(np.max(np.abs(x.T @ x - np.eye(p))))
    value = float(np.trace(h_arr @ x.T @ q_arr @ x))
    if feasibility > feas_tol:
        violations.append(f"X^T X deviates from I_p by {feasibility:.3e}")
    if not value < -wit_margin:
        violations.append(f"tr(H X^T Q X) = {value:.3e} is not negative")
    return VerificationReport(
        passed=not violations,
        residuals={"feasibility": feasibility, "value": value},
        violations=tuple(violations),
    )


def verify_certificate(h, q, certificate: SLemmaCertificate,
                       tol: float = CERT_TOL) -> VerificationReport:
    """Recompute W's and the Kronecker sum's smallest eigenvalues and the trace slack."""
    h_arr, q_arr = np.asarray(_sym(h, "H")), np.asarray(_sym(q, "Q"))
    p, n = h_arr.shape[0], q_arr.shape[0]
    m = np.asarray(certificate.m, dtype=float)
    w = np.asarray(certificate.w, dtype=float)
    if m.shape != (p, p) or w.shape != (n, n):
        return VerificationReport(
            passed=False,
            violations=(f"Multiplier shapes {m.shape}, {w.shape} do not match p={p}, n={n}",),
        )
    violations = []
    asym = float(max(np.abs(m - m.T).max(), np.abs(w - w.T).max()))
    if asym > tol:
        violations.append(f"Multipliers are not symmetric (asymmetry {asym:.3e})")
    w_min = min_eigenvalue(w)
    k_min = min_eigenvalue(kronecker_sum(h_arr, q_arr, m, w))
    trace_slack = -float(np.trace(m) + np.trace(w))
    if w_min < -tol:
        violations.append(f"W is not positive semidefinite (min eigenvalue {w_min:.3e})")
    if k_min < -tol:
        violations.append(
            f"H (x) Q + M (x) I + I (x) W is not positive semidefinite (min eigenvalue {k_min:.3e})"
        )
    if trace_slack < -tol:
        violations.append(f"tr M + tr W = {-trace_slack:.3e} is positive")
    return VerificationReport(
        passed=not violations,
        residuals={"w_min_eig": w_min, "min_eig": k_min, "trace_slack": trace_slack},
        violations=tuple(violations),
    )


def verify(h, q, obj: SLemmaWitness | SLemmaCertificate) -> VerificationReport:
    if isinstance(obj, SLemmaWitness):
        return verify_witness(h, q, obj)
    return verify_certificate(h, q, obj)
