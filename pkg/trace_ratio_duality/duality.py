"""Lagrangian dual values of the four formulations and gap analysis.

  GTRP  the trace ratio problem itself
  GR    GTRP plus the redundant constraint X X^T <= I_n
  GS    GTRP with its constraint scaled by the denominator
  GRS   both devices together; this dual has no gap

GTRP and GR share the dual value lambda_max(A^{-1} B). GRS is evaluated by
bisection on mu with S-lemma certificates, GS by bisection on rho with a
Dykstra projection search for the multiplier S.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import (
    BIS_TOL,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DINK_MAX_ITER,
    DINK_TOL,
    DYKSTRA_MAX_ITER,
    DYKSTRA_TOL,
    FEAS_TOL,
    GAP_TOL,
    MULT_TOL,
)
from .errors import BoundaryDegeneracyError, NumericalError
from .linalg import frozen_array, kron, max_eigenvalue, min_eigenvalue, pencil_lambda_max
from .model import ProblemInstance, StiefelPoint, phi
from .slemma import (
    SLemmaCertificate,
    VerificationReport,
    decide,
    verify_certificate,
)
from .solver import SolveReport, dinkelbach_solve, oracle_search
from .utils.logging import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class GrsDual:
    value: float
    mu: float
    certificate: SLemmaCertificate
    bisection_steps: int = 0


@dataclass(frozen=True)
class GsDualCertificate:
    rho: float
    s: np.ndarray
    min_eig: float  # of rho G(x)A - G(x)B - S(x)I_n
    trace_s: float
    interval: tuple[float, float] = (0.0, 0.0)
    undecided_steps: int = 0


@dataclass(frozen=True)
class DgsInfeasibility:
    """Rank-one directions u_k (x) v proving no admissible S exists at rho."""

    rho: float
    direction: np.ndarray
    bound: float  # sum of the quadratic forms, positive for every S with tr S >= 0


@dataclass(frozen=True)
class GapCondition:
    multiplicity: int
    holds: bool
    witness: StiefelPoint | None
    top_value: float
    boundary: bool = False
    next_value: float | None = None  # largest pencil eigenvalue below the top cluster


@dataclass(frozen=True)
class DualityReport:
    primal: float
    dual_gtrp: float
    dual_gr: float
    dual_gs: float
    dual_grs: float
    gap_gtrp: float
    gap_gs: float
    top_multiplicity: int
    gap_condition_holds: bool
    certificate: SLemmaCertificate
    solve: SolveReport
    grs: GrsDual
    gs: GsDualCertificate
    gap: GapCondition
    consistent: bool = True
    warnings: list[str] = field(default_factory=list)


def _rayleigh_supremum(inst: ProblemInstance) -> float:
    # sup over X != 0 of vec(X)^T(G(x)B)vec(X) / vec(X)^T(G(x)A)vec(X)
    return pencil_lambda_max(inst.a, inst.b).value


def gtrp_dual_value(inst: ProblemInstance) -> float:
    """Optimal value of the Lagrangian dual of GTRP: lambda_max(A^{-1} B)."""
    return _rayleigh_supremum(inst)


def gr_dual_value(inst: ProblemInstance) -> float:
    """Optimal value of the Lagrangian dual of GR.

    The redundant constraint does not move the dual: the value is again
    lambda_max(A^{-1} B), attained at M = W = 0.
    """
    return _rayleigh_supremum(inst)


def gtrp_dual_function(inst: ProblemInstance, m, feas_tol: float = FEAS_TOL) -> float:
    """GTRP dual function at M: lambda_max(A^{-1}B) - tr M for M <= 0, else +inf."""
    m = np.asarray(m, dtype=float)
    if max_eigenvalue(m) > feas_tol:
        return np.inf
    return _rayleigh_supremum(inst) - float(np.trace(m))


def gr_dual_function(inst: ProblemInstance, m, w, feas_tol: float = FEAS_TOL) -> float:
    """GR dual function at (M, W).

    Finite only when W >= 0 and M (x) I_n - I_p (x) W <= 0; then it equals
    lambda_max(A^{-1}B) - tr M + tr W.
    """
    m = np.asarray(m, dtype=float)
    w = np.asarray(w, dtype=float)
    if min_eigenvalue(w) < -feas_tol:
        return np.inf
    if max_eigenvalue(kron(m, np.eye(inst.n)) - kron(np.eye(inst.p), w)) > feas_tol:
        return np.inf
    return _rayleigh_supremum(inst) - float(np.trace(m)) + float(np.trace(w))


def grs_dual_feasible(inst: ProblemInstance, mu: float, m, w) -> VerificationReport:
    """Check mu G(x)A - G(x)B + M(x)I_n + I_p(x)W >= 0, tr M + tr W <= 0, W >= 0."""
    candidate = SLemmaCertificate(
        m=np.asarray(m, dtype=float), w=np.asarray(w, dtype=float),
        min_eig=float("nan"), trace_slack=float("nan"),
    )
    return verify_certificate(inst.G, mu * inst.A - inst.B, candidate)


def _certify(inst: ProblemInstance, mu: float) -> SLemmaCertificate | None:
    try:
        result = decide(inst.G, mu * inst.A - inst.B)
    except BoundaryDegeneracyError as e:
        logger.debug(f"No decision at mu={mu:.15g}: {e}")
        return None
    return result if isinstance(result, SLemmaCertificate) else None


def grs_dual_value(
    inst: ProblemInstance,
    lower: float | None = None,
    bis_tol: float = BIS_TOL,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> GrsDual:
    """Optimal value of the GRS dual by bisection on mu.

    mu is dual feasible exactly when the S-lemma for H = G, Q = mu A - B
    yields a certificate.

    Args:
        inst: Problem instance
        lower: A known lower bound on the primal value (oracle search if None)
        bis_tol: Final bracket width
        samples: Oracle samples when lower is None
        seed: Oracle seed

    Returns:
        GrsDual with the upper endpoint and its certificate
    """
    if lower is None:
        lower = oracle_search(inst, samples=samples, seed=seed)
    lo = lower - 1.0
    hi = gtrp_dual_value(inst) + 1.0

    cert = _certify(inst, lo)
    if cert is not None:
        logger.warning(f"Lower bracket end {lo:.12g} is already dual feasible")
        return GrsDual(value=lo, mu=lo, certificate=cert)
    cert = _certify(inst, hi)
    if cert is None:
        raise NumericalError(
            f"No S-lemma certificate at the upper bracket end mu={hi:.12g}",
            details={"bracket": (lo, hi)},
        )

    steps = 0
    while hi - lo > bis_tol:
        mid = 0.5 * (lo + hi)
        found = _certify(inst, mid)
        if found is not None:
            hi, cert = mid, found
        else:
            lo = mid
        steps += 1
    logger.info(f"GRS dual value {hi:.12g} after {steps} bisection steps")
    return GrsDual(value=hi, mu=hi, certificate=cert, bisection_steps=steps)


def _project_affine(z: np.ndarray, c: np.ndarray, p: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nearest point to z in {C + S (x) I_n : S symmetric, tr S >= 0}."""
    blocks = (z - c).reshape(p, n, p, n)
    s = np.einsum("aibi->ab", blocks) / n
    s = 0.5 * (s + s.T)
    tr = np.trace(s)
    if tr < 0.0:
        s -= (tr / p) * np.eye(p)
    return c + np.kron(s, np.eye(n)), s


def _project_nsd(z: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(z)
    return (vectors * np.minimum(values, 0.0)) @ vectors.T


def dykstra_dgs_search(
    inst: ProblemInstance,
    rho: float,
    tol: float = DYKSTRA_TOL,
    max_iter: int = DYKSTRA_MAX_ITER,
    stall_window: int = 100,
) -> tuple[bool, np.ndarray, float]:
    """Search for S with tr S >= 0 and G(x)B + S(x)I_n - rho G(x)A <= 0.

    Alternates Dykstra projections between the negative semidefinite cone
    and the affine family of constraint matrices.

    Returns:
        (feasible, S, residual) where residual is the largest eigenvalue of
        the constraint matrix at the returned S
    """
    p, n = inst.p, inst.n
    c = kron(inst.G, inst.B) - rho * kron(inst.G, inst.A)
    s = np.zeros((p, p))
    residual = max_eigenvalue(c, method="lapack")
    if residual <= tol:
        return True, s, residual

    y = c.copy()
    p_corr = np.zeros_like(c)
    q_corr = np.zeros_like(c)
    history = []
    for k in range(max_iter):
        x, s = _project_affine(y + p_corr, c, p, n)
        p_corr = y + p_corr - x
        y = _project_nsd(x + q_corr)
        q_corr = x + q_corr - y
        residual = max_eigenvalue(x, method="lapack")
        if residual <= tol:
            logger.debug(f"Dykstra found S at rho={rho:.12g} after {k + 1} iterations")
            return True, s, residual
        history.append(residual)
        if k >= 2 * stall_window and residual > (1.0 - 1e-3) * history[-stall_window]:
            logger.debug(f"Dykstra stalled at rho={rho:.12g} with residual {residual:.3e}")
            break
    return False, s, residual


def dgs_lower_bound_certificate(inst: ProblemInstance, rho: float) -> DgsInfeasibility | None:
    """Prove the GS dual constraint infeasible at rho < lambda_max(A^{-1}B).

    For the top pencil eigenvector v and an orthonormal basis u_k of R^p, the
    quadratic forms of G(x)B + S(x)I_n - rho G(x)A at u_k (x) v sum to
    (lambda_max - rho) tr(G) v^T A v + tr(S) |v|^2 > 0 whenever tr S >= 0.
    """
    top = pencil_lambda_max(inst.a, inst.b)
    if rho >= top.value:
        return None
    v = top.basis[:, 0]
    bound = (top.value - rho) * float(np.trace(inst.G)) * float(v @ inst.A @ v)
    return DgsInfeasibility(rho=rho, direction=frozen_array(v), bound=bound)


def dgs_constraint_matrices(inst: ProblemInstance, s, rho: float) -> dict[str, np.ndarray]:
    """The Kronecker blocks of the GS dual constraint at (S, rho)."""
    s = np.asarray(s, dtype=float)
    g_b = kron(inst.G, inst.B)
    s_i = kron(s, np.eye(inst.n))
    g_a = kron(inst.G, inst.A)
    return {"G(x)B": g_b, "S(x)I": s_i, "G(x)A": g_a, "constraint": g_b + s_i - rho * g_a}


def gs_dual_value(
    inst: ProblemInstance,
    lower: float | None = None,
    bis_tol: float = BIS_TOL,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> GsDualCertificate:
    """Optimal value of the GS dual by bisection on rho.

    Args:
        inst: Problem instance
        lower: A known lower bound on the primal value (oracle search if None)
        bis_tol: Final bracket width
        samples: Oracle samples when lower is None
        seed: Oracle seed

    Returns:
        GsDualCertificate with rho, the multiplier S and recomputed residuals
    """
    if lower is None:
        lower = oracle_search(inst, samples=samples, seed=seed)
    lo = lower - 1.0
    hi = gtrp_dual_value(inst) + 1.0

    feasible, s_best, _ = dykstra_dgs_search(inst, hi)
    if not feasible:
        raise NumericalError(
            f"GS dual constraint infeasible at the upper bracket end rho={hi:.12g}",
            details={"bracket": (lo, hi)},
        )
    undecided = 0
    while hi - lo > bis_tol:
        mid = 0.5 * (lo + hi)
        feasible, s, residual = dykstra_dgs_search(inst, mid)
        if feasible:
            hi, s_best = mid, s
        else:
            if residual < 1e3 * DYKSTRA_TOL:
                undecided += 1
            lo = mid
    if undecided:
        logger.warning(
            f"{undecided} GS bisection steps ended in the undecided band; "
            f"value lies in [{lo:.12g}, {hi:.12g}]"
        )

    # residuals recomputed from scratch
    constraint = dgs_constraint_matrices(inst, s_best, hi)["constraint"]
    min_eig = min_eigenvalue(-constraint)
    trace_s = float(np.trace(s_best))
    logger.info(f"GS dual value {hi:.12g}")
    return GsDualCertificate(
        rho=hi,
        s=frozen_array(s_best),
        min_eig=min_eig,
        trace_s=trace_s,
        interval=(lo, hi),
        undecided_steps=undecided,
    )


def gap_condition(inst: ProblemInstance, mult_tol: float = MULT_TOL) -> GapCondition:
    """No gap for GTRP/GR exactly when the top pencil eigenspace has
    dimension at least p; then p orthonormal vectors from it form a
    feasible point attaining lambda_max(A^{-1}B).
    """
    top = pencil_lambda_max(inst.a, inst.b, mult_tol=mult_tol)
    band = 10.0 * mult_tol * (1.0 + abs(top.value))
    boundary = top.next_value is not None and top.value - top.next_value <= band
    if boundary:
        logger.warning(
            f"Eigenvalue {top.next_value:.12g} is close to the top value {top.value:.12g}; "
            f"multiplicity {top.multiplicity} is ambiguous"
        )
    holds = top.multiplicity >= inst.p
    witness = None
    if holds:
        witness = StiefelPoint(top.basis[:, : inst.p])
        attained = phi(inst, witness)
        if abs(attained - top.value) > 1e-8 * (1.0 + abs(top.value)):
            logger.warning(
                f"Gap witness attains {attained:.12g} instead of {top.value:.12g}"
            )
    return GapCondition(
        multiplicity=top.multiplicity,
        holds=holds,
        witness=witness,
        top_value=top.value,
        boundary=boundary,
        next_value=top.next_value,
    )


def full_report(
    inst: ProblemInstance,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    tol: float = DINK_TOL,
    max_iter: int = DINK_MAX_ITER,
) -> DualityReport:
    """Primal value, all four dual values, both gaps and the gap criterion.

    Args:
        inst: Problem instance
        samples: Oracle samples for the bisection brackets
        seed: Seed for the Dinkelbach start and the oracle
        tol: Dinkelbach tolerance
        max_iter: Dinkelbach iteration cap

    Returns:
        DualityReport
    """
    solve = dinkelbach_solve(inst, tol=tol, max_iter=max_iter, seed=seed)
    lower = oracle_search(inst, samples=samples, seed=seed)
    dual_gtrp = gtrp_dual_value(inst)
    dual_gr = gr_dual_value(inst)
    grs = grs_dual_value(inst, lower=lower)
    gs = gs_dual_value(inst, lower=lower)
    gap = gap_condition(inst)

    primal = solve.value
    gap_gtrp = abs(primal - dual_gtrp)
    gap_gs = abs(primal - gs.rho)

    warnings = []
    for name, dual in (("gtrp", dual_gtrp), ("gr", dual_gr), ("gs", gs.rho), ("grs", grs.value)):
        if primal > dual + 1e-8:
            warnings.append(f"weak duality violated for {name}: primal {primal:.12g} > dual {dual:.12g}")
    consistent = gap.boundary or ((gap_gtrp <= GAP_TOL) == gap.holds)
    if not consistent:
        warnings.append(
            f"gap {gap_gtrp:.3e} disagrees with the eigenspace criterion "
            f"(multiplicity {gap.multiplicity}, p={inst.p})"
        )
    for message in warnings:
        logger.warning(message)

    return DualityReport(
        primal=primal,
        dual_gtrp=dual_gtrp,
        dual_gr=dual_gr,
        dual_gs=gs.rho,
        dual_grs=grs.value,
        gap_gtrp=gap_gtrp,
        gap_gs=gap_gs,
        top_multiplicity=gap.multiplicity,
        gap_condition_holds=gap.holds,
        certificate=grs.certificate,
        solve=solve,
        grs=grs,
        gs=gs,
        gap=gap,
        consistent=consistent,
        warnings=warnings,
    )
