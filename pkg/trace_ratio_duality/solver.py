"""Global solver for the trace ratio problem.

F(mu) = max_{X^T X = I_p} tr(G X^T (B - mu A) X) has a closed form (a sorted
pairing of eigenvalues), and the optimal ratio is the unique root of F.
Dinkelbach's iteration finds it; ``oracle_search`` gives an independent
lower bound from feasible samples.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .combinatorics import max_partial_assignment, min_partial_assignment
from .config import DEFAULT_SAMPLES, DEFAULT_SEED, DINK_MAX_ITER, DINK_TOL, GRID_STEP_DIVISOR
from .errors import NumericalError
from .linalg import SymMatrix, sym_eigen
from .model import (
    NgtrpInstance,
    ProblemInstance,
    StiefelPoint,
    ngtrp_to_gtrp,
    phi,
    random_stiefel,
    trace_form,
)
from .utils.logging import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class SolveReport:
    value: float
    maximizer: StiefelPoint
    iterations: int
    residual: float
    history: list[tuple[float, float]] = field(default_factory=list)


def trace_max_inner(g, c) -> tuple[float, StiefelPoint]:
    """max of tr(G X^T C X) over X^T X = I_p, with a maximizer.

    The eigenvectors of C selected by the pairing are rotated into G's
    eigenbasis: X = V_sel U_g^T.
    """
    g_arr = g.entries if hasattr(g, "entries") else np.asarray(g, dtype=float)
    c_arr = c.entries if isinstance(c, SymMatrix) else np.asarray(c, dtype=float)
    eig_g, eig_c = sym_eigen(g_arr), sym_eigen(c_arr)
    pairing = max_partial_assignment(eig_g.values, eig_c.values)
    x = eig_c.vectors[:, list(pairing.injection)] @ eig_g.vectors.T
    recomputed = trace_form(g_arr, 0.5 * (c_arr + c_arr.T), x)
    scale = 1.0 + abs(pairing.value)
    if abs(recomputed - pairing.value) > 1e-9 * scale:
        logger.warning(
            f"Inner maximizer trace {recomputed:.12g} differs from pairing value {pairing.value:.12g}"
        )
    return pairing.value, StiefelPoint(x)


def dinkelbach_solve(
    inst: ProblemInstance,
    tol: float = DINK_TOL,
    max_iter: int = DINK_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> SolveReport:
    """Solve the trace ratio problem globally by Dinkelbach's root finding.

    Args:
        inst: Validated problem instance
        tol: Stop when |F(mu)| <= tol * (1 + |mu|)
        max_iter: Iteration cap
        seed: Seed for the feasible starting point

    Returns:
        SolveReport with the optimal value and a maximizer
    """
    mu = phi(inst, random_stiefel(inst.n, inst.p, seed))
    history: list[tuple[float, float]] = []

    for k in range(max_iter):
        f_value, x = trace_max_inner(inst.G, inst.B - mu * inst.A)
        history.append((mu, f_value))
        logger.debug(f"Dinkelbach iteration {k}: mu={mu:.15g}, F(mu)={f_value:.3e}")

        if logger.isEnabledFor(logging.DEBUG):
            eigs_g = sym_eigen(inst.G).values
            eigs_c = sym_eigen(mu * inst.A - inst.B).values
            check = -min_partial_assignment(eigs_g, eigs_c).value
            assert abs(check - f_value) <= 1e-8 * (1.0 + abs(f_value)), (check, f_value)

        if abs(f_value) <= tol * (1.0 + abs(mu)):
            value = phi(inst, x)
            logger.info(f"Dinkelbach converged in {k + 1} iterations: value {value:.15g}")
            return SolveReport(
                value=value,
                maximizer=x,
                iterations=k + 1,
                residual=abs(f_value),
                history=history,
            )
        mu = phi(inst, x)

    raise NumericalError(
        f"Dinkelbach did not converge in {max_iter} iterations",
        details={"history": history},
    )


def solve_ngtrp(ng: NgtrpInstance, **kwargs) -> SolveReport:
    """Homogenize a non-homogeneous instance and solve it."""
    return dinkelbach_solve(ngtrp_to_gtrp(ng), **kwargs)


def _batch_phi(inst: ProblemInstance, xs: np.ndarray) -> np.ndarray:
    num = np.einsum("ab,kab->k", inst.G, np.swapaxes(xs, 1, 2) @ inst.B @ xs)
    den = np.einsum("ab,kab->k", inst.G, np.swapaxes(xs, 1, 2) @ inst.A @ xs)
    return num / den


def _grid_points(n: int, p: int, step: float):
    """Yield batches of feasible points on a deterministic angle grid."""
    if (n, p) == (2, 1):
        theta = np.arange(0.0, np.pi, step)
        yield np.stack([np.cos(theta), np.sin(theta)], axis=1)[:, :, None]
    elif (n, p) == (2, 2):
        theta = np.arange(0.0, 2.0 * np.pi, step)
        c, s = np.cos(theta), np.sin(theta)
        rotations = np.stack([np.stack([c, -s], 1), np.stack([s, c], 1)], 1)
        reflections = np.stack([np.stack([c, s], 1), np.stack([s, -c], 1)], 1)
        yield rotations
        yield reflections
    elif (n, p) == (3, 1):
        azimuth = np.arange(0.0, 2.0 * np.pi, step)
        # x and -x give the same ratio, so the upper hemisphere suffices
        for polar in np.arange(0.0, 0.5 * np.pi + step, step):
            pts = np.stack(
                [
                    np.sin(polar) * np.cos(azimuth),
                    np.sin(polar) * np.sin(azimuth),
                    np.full_like(azimuth, np.cos(polar)),
                ],
                axis=1,
            )
            yield pts[:, :, None]


def oracle_search(
    inst: ProblemInstance,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    chunk: int = 4096,
) -> float:
    """Lower bound on the optimal ratio from random and gridded feasible points.

    Args:
        inst: Problem instance
        samples: Number of random Stiefel points
        seed: Generator seed
        chunk: Batch size for the vectorized evaluation

    Returns:
        The best objective value found
    """
    rng = np.random.default_rng(seed)
    best = -np.inf
    remaining = samples
    while remaining > 0:
        k = min(chunk, remaining)
        q, _ = np.linalg.qr(rng.standard_normal((k, inst.n, inst.p)))
        best = max(best, float(_batch_phi(inst, q).max()))
        remaining -= k
    for batch in _grid_points(inst.n, inst.p, np.pi / GRID_STEP_DIVISOR):
        best = max(best, float(_batch_phi(inst, batch).max()))
    if not np.isfinite(best):
        # no samples and no grid for this shape: fall back to one random point
        best = phi(inst, random_stiefel(inst.n, inst.p, rng))
    logger.debug(f"Oracle search over {samples} samples: best {best:.12g}")
    return best
