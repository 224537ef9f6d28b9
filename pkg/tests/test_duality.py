import numpy as np
import pytest

from trace_ratio_duality import duality
from trace_ratio_duality.duality import (
    dgs_constraint_matrices,
    dgs_lower_bound_certificate,
    dykstra_dgs_search,
    full_report,
    gap_condition,
    gr_dual_function,
    gr_dual_value,
    grs_dual_feasible,
    grs_dual_value,
    gs_dual_value,
    gtrp_dual_function,
    gtrp_dual_value,
)
from trace_ratio_duality.errors import BoundaryDegeneracyError, NumericalError
from trace_ratio_duality.model import ProblemInstance, phi, random_instance
from trace_ratio_duality.slemma import verify_certificate
from trace_ratio_duality.solver import dinkelbach_solve


def _instance_with_top_multiplicity(p: int) -> ProblemInstance:
    b = np.diag([2.0] * p + [1.0, -1.0])
    n = b.shape[0]
    return ProblemInstance.create(np.eye(n), b, np.diag(np.arange(1.0, p + 1.0)))


class TestPlainDuals:
    def test_gs1(self, gs1):
        assert gtrp_dual_value(gs1) == pytest.approx(3.0)
        assert gr_dual_value(gs1) == gtrp_dual_value(gs1)

    def test_dual_function_is_infinite_off_domain(self, gs1):
        assert gtrp_dual_function(gs1, np.eye(2)) == np.inf
        assert gtrp_dual_function(gs1, -np.eye(2)) == pytest.approx(3.0 + 2.0)
        assert gtrp_dual_function(gs1, np.zeros((2, 2))) == pytest.approx(3.0)

    def test_gr_dual_function(self, gs1):
        assert gr_dual_function(gs1, np.zeros((2, 2)), np.zeros((2, 2))) == pytest.approx(3.0)
        assert gr_dual_function(gs1, np.zeros((2, 2)), -np.eye(2)) == np.inf
        # M (x) I - I (x) W <= 0 needs W to dominate every eigenvalue of M
        assert gr_dual_function(gs1, np.eye(2), 0.5 * np.eye(2)) == np.inf
        assert gr_dual_function(gs1, np.eye(2), np.eye(2)) == pytest.approx(3.0)

    def test_weak_duality(self):
        for seed in range(10):
            inst = random_instance(4, 2, seed)
            assert gtrp_dual_value(inst) >= dinkelbach_solve(inst).value - 1e-9


class TestGrsDual:
    def test_no_gap_on_gs1(self, gs1):
        dual = grs_dual_value(gs1, lower=7.0 / 3.0 - 0.5)
        assert dual.value == pytest.approx(7.0 / 3.0, abs=1e-6)
        q = dual.mu * gs1.A - gs1.B
        assert verify_certificate(gs1.G, q, dual.certificate).passed

    def test_no_gap_on_random_instances(self):
        for seed in range(5):
            inst = random_instance(3, 2, seed)
            primal = dinkelbach_solve(inst).value
            assert grs_dual_value(inst, samples=300, seed=seed).value == pytest.approx(primal, abs=1e-6)

    def test_component_failure_propagates(self, gs1, monkeypatch):
        calls = {"n": 0}
        real_decide = duality.decide

        def failing_decide(h, q):
            calls["n"] += 1
            if calls["n"] == 3:
                raise NumericalError("Jacobi eigensolver did not converge in 64 sweeps")
            return real_decide(h, q)

        monkeypatch.setattr(duality, "decide", failing_decide)
        with pytest.raises(NumericalError, match="Jacobi"):
            grs_dual_value(gs1, lower=2.0)

    def test_boundary_degeneracy_counts_as_infeasible(self, gs1, monkeypatch):
        calls = {"n": 0}
        real_decide = duality.decide

        def degenerate_once(h, q):
            calls["n"] += 1
            if calls["n"] == 3:
                raise BoundaryDegeneracyError("neither alternative")
            return real_decide(h, q)

        monkeypatch.setattr(duality, "decide", degenerate_once)
        dual = grs_dual_value(gs1, lower=2.0)
        assert verify_certificate(gs1.G, dual.mu * gs1.A - gs1.B, dual.certificate).passed

    def test_feasibility_check(self, gs1):
        dual = grs_dual_value(gs1, lower=2.0)
        assert grs_dual_feasible(gs1, dual.mu, dual.certificate.m, dual.certificate.w).passed
        assert not grs_dual_feasible(gs1, 2.0, dual.certificate.m, dual.certificate.w).passed


class TestGsDual:
    def test_gs1_keeps_the_gap(self, gs1):
        cert = gs_dual_value(gs1, lower=7.0 / 3.0)
        assert cert.rho == pytest.approx(3.0, abs=1e-5)
        assert cert.trace_s >= -1e-9
        assert cert.min_eig >= -1e-6

    def test_s_zero_is_feasible_at_the_pencil_top(self, gs1):
        feasible, s, residual = dykstra_dgs_search(gs1, 3.0)
        assert feasible
        np.testing.assert_array_equal(s, np.zeros((2, 2)))
        assert residual <= 1e-12

    def test_search_fails_below_the_pencil_top(self, gs1):
        feasible, _, residual = dykstra_dgs_search(gs1, 2.5, max_iter=1000)
        assert not feasible
        assert residual > 0.0

    def test_lower_bound_certificate(self, gs1):
        proof = dgs_lower_bound_certificate(gs1, 2.5)
        assert proof.bound == pytest.approx(0.5 * 3.0)
        assert dgs_lower_bound_certificate(gs1, 3.0) is None

    def test_lower_bound_certificate_defeats_any_multiplier(self, rng):
        inst = random_instance(3, 2, seed=5)
        rho = gtrp_dual_value(inst) - 0.3
        proof = dgs_lower_bound_certificate(inst, rho)
        v = proof.direction
        for _ in range(50):
            s = rng.standard_normal((2, 2))
            s = 0.5 * (s + s.T)
            s -= min(0.0, np.trace(s)) / 2.0 * np.eye(2)
            constraint = dgs_constraint_matrices(inst, s, rho)["constraint"]
            total = sum(np.kron(u, v) @ constraint @ np.kron(u, v) for u in np.eye(2))
            assert total >= proof.bound - 1e-9
            assert total > 0.0

    def test_constraint_blocks(self, gs1):
        blocks = dgs_constraint_matrices(gs1, np.zeros((2, 2)), 3.0)
        np.testing.assert_allclose(np.diag(blocks["G(x)B"]), [1.0, 3.0, 2.0, 6.0])
        np.testing.assert_allclose(np.diag(blocks["constraint"]), [-2.0, 0.0, -4.0, 0.0])


class TestGapCondition:
    def test_gs1_has_a_gap(self, gs1):
        gap = gap_condition(gs1)
        assert gap.multiplicity == 1
        assert not gap.holds
        assert gap.witness is None

    def test_rayleigh_case_always_holds(self):
        gap = gap_condition(random_instance(4, 1, seed=0))
        assert gap.holds

    @pytest.mark.parametrize("p", [2, 3])
    def test_witness_attains_the_dual(self, p):
        inst = _instance_with_top_multiplicity(p)
        gap = gap_condition(inst)
        assert gap.multiplicity == p
        assert gap.holds
        assert gap.witness.is_feasible()
        assert phi(inst, gap.witness) == pytest.approx(2.0, abs=1e-8)

    def test_next_value_below_the_top_cluster(self):
        gap = gap_condition(_instance_with_top_multiplicity(2))
        assert gap.top_value == pytest.approx(2.0)
        assert gap.next_value == pytest.approx(1.0)

    def test_boundary_flag(self):
        inst = ProblemInstance.create(np.eye(2), np.diag([1.0, 1.0 - 1e-8]), np.eye(2))
        assert gap_condition(inst, mult_tol=1e-9).boundary


class TestFullReport:
    def test_gs1(self, gs1):
        report = full_report(gs1, samples=200)
        assert report.primal == pytest.approx(7.0 / 3.0, abs=1e-8)
        assert report.dual_gtrp == pytest.approx(3.0)
        assert report.dual_gr == report.dual_gtrp
        assert report.dual_gs == pytest.approx(3.0, abs=1e-5)
        assert report.dual_grs == pytest.approx(7.0 / 3.0, abs=1e-6)
        assert report.gap_gtrp == pytest.approx(2.0 / 3.0, abs=1e-8)
        assert report.gap_gs == pytest.approx(2.0 / 3.0, abs=1e-5)
        assert not report.gap_condition_holds
        assert report.consistent
        assert report.warnings == []


class TestEqualPencil:
    """B = A makes every ratio equal to one."""

    def _instance(self):
        a = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 1.5]])
        return ProblemInstance.create(a, a, np.diag([1.0, 2.0]))

    def test_duals(self):
        inst = self._instance()
        assert gtrp_dual_value(inst) == pytest.approx(1.0)
        assert grs_dual_value(inst, lower=1.0).value == pytest.approx(1.0, abs=1e-6)
        assert gs_dual_value(inst, lower=1.0).rho == pytest.approx(1.0, abs=1e-5)

    def test_full_eigenspace(self):
        gap = gap_condition(self._instance())
        assert gap.multiplicity == 3
        assert gap.holds
        assert gap.next_value is None
