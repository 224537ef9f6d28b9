"""Dense two-phase simplex and the Farkas system behind the S-lemma certificate."""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .config import LP_MAX_ITER, LP_TOL
from .errors import InstanceValidationError, NumericalError
from .utils.logging import setup_logger

logger = setup_logger(__name__)

LpStatus = Literal["optimal", "infeasible", "unbounded"]


@dataclass(frozen=True)
class LinearProgram:
    """minimize c.x  s.t.  a_ub x <= b_ub,  a_eq x == b_eq,  x >= 0 except where free."""

    c: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    free: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        nvar = c.size
        object.__setattr__(self, "c", c)
        for a_name, b_name in (("a_ub", "b_ub"), ("a_eq", "b_eq")):
            a, b = getattr(self, a_name), getattr(self, b_name)
            if a is None:
                a, b = np.zeros((0, nvar)), np.zeros(0)
            a = np.atleast_2d(np.asarray(a, dtype=float))
            b = np.asarray(b, dtype=float).ravel()
            if a.size == 0:
                a = a.reshape(0, nvar)
            if a.shape[1] != nvar or a.shape[0] != b.size:
                raise InstanceValidationError(
                    f"Inconsistent LP dimensions for {a_name}: {a.shape} vs {nvar} variables "
                    f"and {b.size} right-hand sides"
                )
            object.__setattr__(self, a_name, a)
            object.__setattr__(self, b_name, b)
        free = np.zeros(nvar, dtype=bool) if self.free is None else np.asarray(self.free, dtype=bool)
        if free.size != nvar:
            raise InstanceValidationError("Free-variable mask length must match the objective")
        object.__setattr__(self, "free", free)

    @property
    def num_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    x: np.ndarray | None = None
    value: float | None = None
    iterations: int = 0


@dataclass(frozen=True)
class FarkasSolution:
    """x_hat (free, length p) and d (nonnegative, length n) with
    x_hat_i + d_j + lambda_i mu_j >= 0 and sum(x_hat) + sum(d) <= 0."""

    xhat: np.ndarray
    d: np.ndarray
    residuals: dict = field(default_factory=dict)


def _pivot(t: np.ndarray, row: int, col: int) -> None:
    t[row] /= t[row, col]
    factors = t[:, col].copy()
    factors[row] = 0.0
    t -= np.outer(factors, t[row])


def _run_simplex(
    t: np.ndarray, basis: list[int], allowed: int, tol: float, max_iter: int, start: int = 0
) -> tuple[str, int]:
    """Bland's rule iterations on a tableau whose last row holds reduced costs.

    Only the first `allowed` columns may enter the basis.
    """
    m = t.shape[0] - 1
    it = start
    while True:
        reduced = t[-1, :allowed]
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            return "optimal", it
        if it >= max_iter:
            raise NumericalError(
                f"Simplex iteration cap of {max_iter} exceeded",
                details={"basis": list(basis), "iterations": it},
            )
        col = int(candidates[0])
        column = t[:m, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            return "unbounded", it
        ratios = t[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        # Bland: leave with the smallest basic variable index among ties
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(t, row, col)
        basis[row] = col
        it += 1


def simplex_solve(lp: LinearProgram, tol: float = LP_TOL, max_iter: int = LP_MAX_ITER) -> LpResult:
    """Solve a small dense LP with the two-phase tableau method.

    Free variables are split as the difference of two nonnegative ones.

    Args:
        lp: LinearProgram in minimization form
        tol: Pivot and feasibility tolerance
        max_iter: Total pivot cap across both phases

    Returns:
        LpResult with status "optimal", "infeasible" or "unbounded"
    """
    nvar = lp.num_vars
    free_idx = np.flatnonzero(lp.free)
    # columns: original vars, negative parts of free vars
    split = np.hstack([np.eye(nvar), -np.eye(nvar)[:, free_idx]])  # x = split @ y

    a_rows = np.vstack([lp.a_ub, lp.a_eq]) @ split
    b = np.concatenate([lp.b_ub, lp.b_eq])
    n_ub, m = lp.b_ub.size, b.size
    ny = a_rows.shape[1]

    slack = np.zeros((m, n_ub))
    slack[np.arange(n_ub), np.arange(n_ub)] = 1.0
    sign = np.where(b < 0, -1.0, 1.0)
    a_full = np.hstack([a_rows, slack]) * sign[:, None]
    b = b * sign

    # rows whose slack still has a +1 can start with it in the basis
    needs_art = [i for i in range(m) if not (i < n_ub and sign[i] > 0)]
    n_art = len(needs_art)
    n_struct = ny + n_ub
    t = np.zeros((m + 1, n_struct + n_art + 1))
    t[:m, :n_struct] = a_full
    t[:m, -1] = b
    basis = [ny + i if i < n_ub else -1 for i in range(m)]
    for k, i in enumerate(needs_art):
        t[i, n_struct + k] = 1.0
        basis[i] = n_struct + k

    # Phase 1: minimize the sum of artificials
    iterations = 0
    if n_art:
        t[-1, n_struct : n_struct + n_art] = 1.0
        for i in needs_art:
            t[-1] -= t[i]
        _, iterations = _run_simplex(t, basis, n_struct + n_art, tol, max_iter)
        infeasibility = -t[-1, -1]
        if infeasibility > tol * max(1.0, np.abs(b).max(initial=0.0)):
            logger.debug(f"Phase 1 ended with infeasibility {infeasibility:.3e}")
            return LpResult(status="infeasible", iterations=iterations)
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(m):
            if basis[r] >= n_struct:
                nonzero = np.flatnonzero(np.abs(t[r, :n_struct]) > tol)
                if nonzero.size == 0:
                    continue
                _pivot(t, r, int(nonzero[0]))
                basis[r] = int(nonzero[0])
            keep.append(r)
        t = np.vstack([t[keep], t[-1:]])
        basis = [basis[r] for r in keep]
        t = np.hstack([t[:, :n_struct], t[:, -1:]])
        m = len(keep)

    # Phase 2
    cost = np.concatenate([lp.c @ split, np.zeros(n_ub)])
    t[-1] = 0.0
    t[-1, :n_struct] = cost
    for r, j in enumerate(basis):
        t[-1] -= cost[j] * t[r]
    status, iterations = _run_simplex(t, basis, n_struct, tol, max_iter, start=iterations)
    if status == "unbounded":
        return LpResult(status="unbounded", iterations=iterations)

    y = np.zeros(n_struct)
    for r, j in enumerate(basis):
        y[j] = t[r, -1]
    x = split @ y[:ny]
    value = float(lp.c @ x)
    logger.debug(f"Simplex optimal value {value:.12g} after {iterations} pivots")
    return LpResult(status="optimal", x=x, value=value, iterations=iterations)


def farkas_certificate_lp(lam, mu, tol: float = LP_TOL) -> FarkasSolution | None:
    """Find x_hat (free) and d >= 0 with x_hat_i + d_j + lam_i mu_j >= 0 for all
    (i, j) and sum(x_hat) + sum(d) <= 0, or return None when no such pair exists.

    Minimizes sum(x_hat) + sum(d) over the cover constraints and accepts the
    optimum when it is at most tol. No sign structure of lam is assumed.
    """
    lam = np.asarray(lam, dtype=float).ravel()
    mu = np.asarray(mu, dtype=float).ravel()
    p, n = lam.size, mu.size
    # variables [x_hat (p), d (n)], cover rows: -x_hat_i - d_j <= lam_i mu_j
    a_ub = np.zeros((p * n, p + n))
    b_ub = np.empty(p * n)
    for i in range(p):
        for j in range(n):
            row = i * n + j
            a_ub[row, i] = -1.0
            a_ub[row, p + j] = -1.0
            b_ub[row] = lam[i] * mu[j]
    free = np.concatenate([np.ones(p, dtype=bool), np.zeros(n, dtype=bool)])
    lp = LinearProgram(c=np.ones(p + n), a_ub=a_ub, b_ub=b_ub, free=free)
    result = simplex_solve(lp, tol=tol)
    if result.status != "optimal":
        logger.debug(f"Farkas LP status: {result.status}")
        return None
    if result.value > tol:
        logger.debug(f"Farkas LP optimum {result.value:.3e} is positive: system infeasible")
        return None

    xhat = result.x[:p].copy()
    d = np.clip(result.x[p:], 0.0, None)
    cover = xhat[:, None] + d[None, :] + np.outer(lam, mu)
    residuals = {
        "min_cover": float(cover.min()),
        "total": float(xhat.sum() + d.sum()),
    }
    return FarkasSolution(xhat=xhat, d=d, residuals=residuals)
