import math

import numpy as np
import pytest

from hypiss import lmi, sdp
from hypiss.control import (
    AnalysisCertificate,
    Controller,
    FeasibilityMap,
    InfeasibleError,
    Plant,
    SolverFailureError,
    analysis_values,
    build_analysis_lmis,
    build_synthesis_lmis,
    closed_loop_boundary,
    deadzone,
    grid_search,
    iss_coefficients,
    saturate,
    sector_value,
    synthesize,
    verify_analysis,
    wellposedness_certificate,
)
from hypiss.linalg import DiagMatrix, Matrix, SymMatrix, invert_diag, min_eig

# design values quoted for the demo plant at mu=1, alpha=0.5, used as a
# fixed admissibility point throughout
LYAP_INV = np.array([12.5, 82.0])
COUPLING_HAT = np.array([[4.07, 0.195], [0.195, 36.3]])


def _reflectionless_plant() -> Plant:
    return Plant(
        speeds=DiagMatrix(np.array([1.0, math.sqrt(2.0)])),
        reflection=Matrix(np.zeros((2, 2))),
        input_map=Matrix(np.eye(2)),
        disturbance_map=Matrix(np.eye(2)),
        u_max=np.array([0.3, 0.3]),
    )


class TestPlant:
    def test_dimensions(self, demo_plant):
        assert (demo_plant.n, demo_plant.m, demo_plant.q) == (2, 2, 2)

    def test_rejects_nonpositive_speed(self):
        with pytest.raises(ValueError):
            Plant(DiagMatrix(np.array([1.0, 0.0])), Matrix(np.eye(2)),
                  Matrix(np.eye(2)), Matrix(np.eye(2)), np.array([1.0, 1.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            Plant(DiagMatrix(np.array([1.0])), Matrix(np.eye(2)),
                  Matrix(np.eye(2)), Matrix(np.eye(2)), np.array([1.0, 1.0]))

    def test_rejects_bad_saturation_levels(self):
        with pytest.raises(ValueError):
            Plant(DiagMatrix(np.array([1.0, 2.0])), Matrix(np.eye(2)),
                  Matrix(np.eye(2)), Matrix(np.eye(2)), np.array([0.3, -0.3]))

    def test_zero_controller_shape(self, demo_plant):
        k = Controller.zero(demo_plant)
        assert k.gain.array.shape == (2, 2)
        assert np.all(k.gain.array == 0.0)


class TestSaturation:
    def test_clamps_componentwise(self):
        out = saturate([0.1, -2.0, 5.0], [0.3, 0.3, 0.3])
        assert np.allclose(out, [0.1, -0.3, 0.3])

    def test_deadzone_vanishes_in_linear_range(self):
        rng = np.random.default_rng(3)
        u = rng.uniform(-0.3, 0.3, size=(200, 2))
        assert np.all(deadzone(u, [0.3, 0.3]) == 0.0)

    def test_saturation_splits_exactly_near_the_limits(self):
        # u + deadzone(u) reproduces saturate(u) bit for bit as long as
        # |u| stays within twice the level (the subtraction is then exact)
        rng = np.random.default_rng(17)
        lim = np.array([0.3, 0.3])
        u = rng.uniform(-2 * 0.3, 2 * 0.3, size=(10000, 2))
        assert np.all(u + deadzone(u, lim) == saturate(u, lim))

    def test_saturation_split_far_from_the_limits(self):
        rng = np.random.default_rng(18)
        lim = np.array([0.3, 0.3])
        u = rng.uniform(-3.0, 3.0, size=(10000, 2))
        assert np.allclose(u + deadzone(u, lim), saturate(u, lim),
                           rtol=0.0, atol=1e-15)

    def test_sector_value_never_positive(self):
        rng = np.random.default_rng(11)
        lim = np.array([0.3, 0.3])
        worst = -math.inf
        for _ in range(10000):
            t = DiagMatrix(rng.uniform(0.01, 10.0, size=2))
            nu = rng.uniform(-5.0, 5.0, size=2)
            worst = max(worst, sector_value(nu, lim, t))
        assert worst <= 0.0

    def test_sector_value_zero_in_linear_range(self):
        t = DiagMatrix(np.array([1.0, 2.0]))
        assert sector_value([0.2, -0.1], [0.3, 0.3], t) == 0.0


class TestClosedLoopBoundary:
    def test_matches_direct_form(self, demo_plant, demo_gain):
        # (H + BK) x + B dz(Kx) and H x + B sat(Kx) agree up to rounding
        rng = np.random.default_rng(7)
        h = demo_plant.reflection.array
        k = demo_gain.array
        for _ in range(300):
            x = rng.uniform(-4.0, 4.0, size=2)
            got = closed_loop_boundary(demo_plant, demo_gain, x)
            want = h @ x + saturate(k @ x, demo_plant.u_max)
            assert np.max(np.abs(got - want)) < 1e-13

    def test_zero_gain_is_pure_reflection(self, demo_plant):
        x = np.array([0.7, -1.3])
        out = closed_loop_boundary(demo_plant, Controller.zero(demo_plant).gain, x)
        assert np.array_equal(out, demo_plant.reflection.array @ x)


class TestSynthesisLmis:
    def test_rejects_nonpositive_weights(self, demo_plant):
        with pytest.raises(ValueError):
            build_synthesis_lmis(demo_plant, 0.0, 0.5)
        with pytest.raises(ValueError):
            build_synthesis_lmis(demo_plant, 1.0, -0.5)

    def test_reported_point_satisfies_decay_block(self, demo_plant, demo_gain):
        # hand expansion of the decay inequality at the quoted design values:
        # eigenvalues of [[12.5(0.5-1)+4.07, 0.195], [0.195, 82(0.5-sqrt2)+36.3]]
        prob = build_synthesis_lmis(demo_plant, 1.0, 0.5)
        point = lmi.Point.build(prob.variables, {
            "lyap_inv": LYAP_INV,
            "sector_inv": np.array([1.0, 1.0]),
            "gain_scaled": demo_gain.array @ np.diag(LYAP_INV),
            "coupling": COUPLING_HAT,
            "peak": np.array([82.0]),
        })
        decay = next(c for c in prob.constraints if c.label == "decay_block")
        m = lmi.margin(decay.expr, decay.sense, point)
        assert abs(m - 2.1789) < 1e-3

    def test_reported_point_satisfies_all_blocks(self, demo_plant, demo_gain):
        prob = build_synthesis_lmis(demo_plant, 1.0, 0.5)
        point = lmi.Point.build(prob.variables, {
            "lyap_inv": LYAP_INV,
            # inverse of the certified sector multiplier diag(0.085, 0.0543)
            "sector_inv": np.array([11.77, 18.42]),
            "gain_scaled": demo_gain.array @ np.diag(LYAP_INV),
            "coupling": COUPLING_HAT,
            "peak": np.array([82.0]),
        })
        margins = dict(zip((c.label for c in prob.constraints),
                           lmi.problem_margins(prob, point)))
        # the quoted values are rounded to three figures, so allow a small dip
        assert all(v >= -0.05 for v in margins.values()), margins

    def test_zero_gain_point_admissible_without_reflection(self):
        # with no reflection the plant is already decaying, so Q = 3I,
        # S = I, W = 0, coupling 2I is an explicit feasible point
        prob = build_synthesis_lmis(_reflectionless_plant(), 1.0, 0.1)
        point = lmi.Point.build(prob.variables, {
            "lyap_inv": np.array([3.0, 3.0]),
            "sector_inv": np.array([1.0, 1.0]),
            "gain_scaled": np.zeros((2, 2)),
            "coupling": 2.0 * np.eye(2),
            "peak": np.array([3.5]),
        })
        assert min(lmi.problem_margins(prob, point)) >= 0.0


class TestSynthesize:
    def test_demo_design(self, demo_certificate):
        # optimal peak frozen from an independent convex solver run
        assert abs(demo_certificate.peak - 11.1577) < 5e-3
        assert min(demo_certificate.margins.values()) >= -1e-9
        assert demo_certificate.gain.array.shape == (2, 2)
        assert np.all(demo_certificate.lyap_inv.diagonal > 0.0)
        assert np.all(demo_certificate.sector_inv.diagonal > 0.0)

    def test_derived_quantities_consistent(self, demo_certificate):
        c = demo_certificate
        qmax = float(np.max(c.lyap_inv.diagonal))
        assert c.omega == c.alpha / 2.0
        assert abs(c.gamma - math.sqrt(qmax) * math.exp(c.mu / 2.0)) < 1e-12
        ref = iss_coefficients(invert_diag(c.lyap_inv), c.mu, c.alpha, 1.0)
        assert abs(c.kappa - ref.kappa) < 1e-12

    def test_gain_reconstruction(self, demo_certificate):
        c = demo_certificate
        assert np.allclose(c.gain.array @ np.diag(c.lyap_inv.diagonal),
                           c.gain_scaled.array, atol=1e-9)

    def test_infeasible_weights_raise(self, demo_plant):
        with pytest.raises(InfeasibleError) as exc:
            synthesize(demo_plant, 1.0, 1.2)
        assert exc.value.solution.status is sdp.Status.INFEASIBLE


class TestIssCoefficients:
    def test_reported_design_values(self):
        # hand-computed from the quoted design: sqrt(82/12.5) e^{1/2} and
        # sqrt(82) e^{1/2}
        co = iss_coefficients(invert_diag(DiagMatrix(LYAP_INV)), 1.0, 0.5, 1.0)
        assert co.omega == 0.25
        assert abs(co.kappa - 4.2229) < 1e-3
        assert abs(co.gamma - 14.930) < 1e-3
        assert abs(co.kappa - math.sqrt(82.0 / 12.5) * math.exp(0.5)) < 1e-12
        assert abs(co.gamma - math.sqrt(82.0) * math.exp(0.5)) < 1e-12

    def test_scaling_invariance(self):
        p = DiagMatrix(np.array([0.4, 1.9, 0.02]))
        a = iss_coefficients(p, 0.7, 0.3, 2.0)
        b = iss_coefficients(DiagMatrix(4.0 * p.diagonal), 0.7, 0.3, 2.0)
        assert abs(a.kappa - b.kappa) < 1e-12  # overshoot ignores scale
        assert abs(b.gamma - a.gamma / 2.0) < 1e-12

    def test_supply_scales_gain_linearly(self):
        p = DiagMatrix(np.array([1.0, 2.0]))
        a = iss_coefficients(p, 1.0, 0.5, 1.0)
        b = iss_coefficients(p, 1.0, 0.5, 3.0)
        assert abs(b.gamma - 3.0 * a.gamma) < 1e-12
        assert b.kappa == a.kappa and b.omega == a.omega

    def test_validation(self):
        with pytest.raises(ValueError):
            iss_coefficients(DiagMatrix(np.array([1.0])), 0.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            iss_coefficients(DiagMatrix(np.array([-1.0])), 1.0, 0.5, 1.0)


class TestGridSearch:
    def test_demo_grid(self, demo_plant):
        fm = grid_search(demo_plant, [0.5, 1.0], [0.5, 1.2])
        statuses = {(c.mu, c.alpha): c.status for c in fm.cells}
        assert statuses == {
            (0.5, 0.5): "infeasible",
            (0.5, 1.2): "infeasible",
            (1.0, 0.5): "feasible",
            (1.0, 1.2): "infeasible",
        }
        assert fm.best is not None
        assert (fm.best.mu, fm.best.alpha) == (1.0, 0.5)

    def test_cells_row_major_mu_slowest(self, demo_plant):
        fm = grid_search(demo_plant, [0.5, 1.0], [0.5, 1.2])
        assert [(c.mu, c.alpha) for c in fm.cells] == [
            (0.5, 0.5), (0.5, 1.2), (1.0, 0.5), (1.0, 1.2)]

    def test_all_infeasible_best_is_none(self, demo_plant):
        fm = grid_search(demo_plant, [0.25], [1.4])
        assert all(c.status == "infeasible" for c in fm.cells)
        assert fm.best is None

    def test_feasible_cells_carry_gamma(self, demo_plant):
        fm = grid_search(demo_plant, [1.0], [0.5])
        cell = fm.cells[0]
        assert cell.status == "feasible"
        assert abs(cell.gamma - math.sqrt(cell.peak) * math.exp(0.5)) < 1e-12

    def test_grid_validation(self, demo_plant):
        with pytest.raises(ValueError):
            grid_search(demo_plant, [], [0.5])
        with pytest.raises(ValueError):
            grid_search(demo_plant, [1.0, 0.5], [0.5])
        with pytest.raises(ValueError):
            grid_search(demo_plant, [1.0], [-0.5])


class TestVerifyAnalysis:
    def _reported_analysis_inputs(self):
        p = invert_diag(DiagMatrix(LYAP_INV))
        gamma = SymMatrix.symmetrized(p.array @ COUPLING_HAT @ p.array)
        return p, gamma

    def test_reported_design_certifies(self, demo_plant, demo_gain):
        p, gamma = self._reported_analysis_inputs()
        cert = verify_analysis(demo_plant, demo_gain, p, gamma, 1.0, 1.0, 0.5)
        assert cert.is_valid(-0.05)
        # margins frozen from an independent convex solver run
        assert abs(cert.margins["boundary_block"] - 0.00165) < 5e-5
        assert abs(cert.margins["disturbance_block"] - 0.005247) < 5e-5
        assert abs(cert.margins["decay_block"] - 0.005746) < 5e-5
        assert np.all(cert.sector.diagonal > 0.0)

    def test_sector_multiplier_matches_reference(self, demo_plant, demo_gain):
        p, gamma = self._reported_analysis_inputs()
        cert = verify_analysis(demo_plant, demo_gain, p, gamma, 1.0, 1.0, 0.5)
        assert np.allclose(cert.sector.diagonal, [0.08498, 0.05428], atol=5e-4)

    def test_destabilizing_gain_fails(self, demo_plant):
        p, gamma = self._reported_analysis_inputs()
        bad = Matrix(np.array([[3.0, 0.0], [0.0, 3.0]]))
        cert = verify_analysis(demo_plant, bad, p, gamma, 1.0, 1.0, 0.5)
        assert not cert.is_valid(-0.05)
        assert cert.margins["boundary_block"] < -0.05

    def test_synthesized_design_certifies(self, demo_plant, demo_certificate):
        p, gamma = analysis_values(demo_certificate)
        cert = verify_analysis(demo_plant, demo_certificate.gain, p,
                               gamma, demo_certificate.mu, 1.0,
                               demo_certificate.alpha)
        assert cert.is_valid(-1e-6)

    def test_validation(self, demo_plant, demo_gain):
        with pytest.raises(ValueError):
            verify_analysis(demo_plant, demo_gain,
                            DiagMatrix(np.array([-1.0, 1.0])),
                            SymMatrix(np.eye(2)), 1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            verify_analysis(demo_plant, demo_gain,
                            DiagMatrix(np.array([1.0, 1.0])),
                            SymMatrix(np.eye(2)), 1.0, 0.0, 0.5)


class TestAnalysisLmis:
    def test_feasible_for_certified_gain(self, demo_plant, demo_gain):
        prob = build_analysis_lmis(demo_plant, demo_gain, 1.0, 0.5)
        sol = sdp.solve_feasibility(prob)
        assert sol.status is sdp.Status.FEASIBLE
        assert min(sol.margins) >= -1e-9

    def test_reported_point_admissible(self, demo_plant, demo_gain):
        p = invert_diag(DiagMatrix(LYAP_INV))
        gamma = SymMatrix.symmetrized(p.array @ COUPLING_HAT @ p.array)
        prob = build_analysis_lmis(demo_plant, demo_gain, 1.0, 0.5)
        point = lmi.Point.build(prob.variables, {
            "lyap": p.diagonal,
            "sector": np.array([0.08498, 0.05428]),
            "coupling": gamma.array,
            "supply_sq": np.array([1.0]),
        })
        margins = lmi.problem_margins(prob, point)
        assert min(margins) >= -0.05


class TestAnalysisValues:
    def test_inverse_and_congruence(self, demo_certificate):
        p, gamma = analysis_values(demo_certificate)
        assert np.allclose(p.array @ demo_certificate.lyap_inv.array, np.eye(2),
                           atol=1e-12)
        expect = p.array @ demo_certificate.coupling.array @ p.array
        assert np.allclose(gamma.array, expect, atol=1e-12)


class TestWellPosedness:
    def test_scalar_free_transport(self):
        # lambda = 1, no reflection, unit input map, zero gain: every
        # constant can be written down by hand
        plant = Plant(DiagMatrix(np.array([1.0])), Matrix(np.zeros((1, 1))),
                      Matrix(np.eye(1)), Matrix(np.eye(1)), np.array([1.0]))
        wp = wellposedness_certificate(plant, Matrix(np.zeros((1, 1))))
        assert abs(wp.tau - 2.01) < 1e-12
        assert abs(wp.mu_wp - 0.01) < 1e-12
        assert abs(wp.rho - (-0.015)) < 1e-12
        assert all(v > 0.0 for v in wp.slacks.values())

    def test_demo_design(self, demo_plant, demo_certificate):
        wp = wellposedness_certificate(demo_plant, demo_certificate.gain)
        assert wp.rho < 0.0
        assert wp.mu_wp > 0.0
        assert all(v > 0.0 for v in wp.slacks.values())

    def test_zero_input_map(self):
        plant = Plant(DiagMatrix(np.array([1.0, 2.0])),
                      Matrix(0.5 * np.eye(2)), Matrix(np.zeros((2, 2))),
                      Matrix(np.eye(2)), np.array([1.0, 1.0]))
        wp = wellposedness_certificate(plant, Matrix(np.zeros((2, 2))))
        assert abs(wp.tau - 1.01) < 1e-12
        assert all(v > 0.0 for v in wp.slacks.values())

    def test_delta_validation(self, demo_plant, demo_gain):
        with pytest.raises(ValueError):
            wellposedness_certificate(demo_plant, demo_gain, delta=0.0)
