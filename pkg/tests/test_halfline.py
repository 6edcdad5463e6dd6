import math

import numpy as np
import pytest
from scipy.integrate import quad

from pencil_lab import fixtures
from pencil_lab.errors import DegenerateProblemError, InputError
from pencil_lab.halfline import (
    SolverConfig,
    apply_poly_dt,
    boundary_values,
    check_homogeneity,
    deriv_l2_norm,
    estimate_table,
    fundamental_solution,
    ode_residual,
    phi_ratio_table,
    solve_bvp,
)
from pencil_lab.newton import WeightSpec

SQRT3 = math.sqrt(3.0)


def w1_closed(t):
    return 2.0 * np.exp(-t) - np.exp(-2.0 * t)


def w2_closed(t):
    return 1j * (np.exp(-t) - np.exp(-2.0 * t))


def quad_norm_sq(fn, decay: float) -> float:
    """Adaptive-quadrature oracle for the squared half-line norm."""
    val, _ = quad(lambda t: abs(fn(t)) ** 2, 0.0, 50.0 / decay, limit=400)
    return val


class TestFundamentalSolutions:
    def test_w1_closed_form(self, ex1, ex1_boundary):
        w = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 1)
        t = np.linspace(0.0, 10.0, 301)
        assert np.max(np.abs(w(t) - w1_closed(t))) <= 1e-10

    def test_w2_closed_form(self, ex1, ex1_boundary):
        w = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 2)
        t = np.linspace(0.0, 10.0, 301)
        assert np.max(np.abs(w(t) - w2_closed(t))) <= 1e-10

    def test_cross_boundary_values(self, ex1, ex1_boundary):
        w1 = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 1)
        w2 = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 2)
        b1 = boundary_values(ex1_boundary, w1)
        b2 = boundary_values(ex1_boundary, w2)
        assert np.allclose(b1, [1.0, 0.0], atol=1e-12)
        assert np.allclose(b2, [0.0, 1.0], atol=1e-12)

    def test_repeated_root_case(self, ex1, ex1_boundary):
        # lam = 0 gives a double decaying root; w1 = (1 + t) e^{-t}
        w = fundamental_solution(ex1, ex1_boundary, [1.0], 0.0, 1)
        t = np.linspace(0.0, 10.0, 101)
        assert np.max(np.abs(w(t) - (1.0 + t) * np.exp(-t))) <= 1e-8

    def test_index_out_of_range(self, ex1, ex1_boundary):
        with pytest.raises(InputError):
            fundamental_solution(ex1, ex1_boundary, [1.0], 1.0, 3)

    def test_degenerate_boundary_rejected(self, ex1):
        with pytest.raises(DegenerateProblemError):
            fundamental_solution(
                ex1, fixtures.ex1_tangential_boundary(), [1.0], 1.0, 1
            )


class TestSolveBvp:
    def test_unit_data_reproduces_fundamental(self, ex1, ex1_boundary):
        w1 = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 1)
        via = solve_bvp(ex1, ex1_boundary, [1.0], SQRT3, [1.0, 0.0])
        t = np.linspace(0.0, 5.0, 101)
        assert np.max(np.abs(w1(t) - via(t))) <= 1e-12

    def test_zero_data(self, ex1, ex1_boundary):
        w = solve_bvp(ex1, ex1_boundary, [1.0], SQRT3, [0.0, 0.0])
        assert w(1.234) == pytest.approx(0.0, abs=1e-14)

    def test_superposition_closed_form(self, ex1, ex1_boundary):
        # data (1, 1): w = (2+i) e^{-t} - (1+i) e^{-2t}
        w = solve_bvp(ex1, ex1_boundary, [1.0], SQRT3, [1.0, 1.0])
        t = np.linspace(0.0, 8.0, 161)
        expected = (2.0 + 1j) * np.exp(-t) - (1.0 + 1j) * np.exp(-2.0 * t)
        assert np.max(np.abs(w(t) - expected)) <= 1e-10

    def test_two_solve_paths_agree(self, ex1, ex1_boundary, rng):
        # direct basis solve vs superposition of unit-data solutions
        for _ in range(5):
            h = rng.normal(size=2) + 1j * rng.normal(size=2)
            direct = solve_bvp(ex1, ex1_boundary, [1.0], SQRT3, h)
            parts = [
                fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, j).scaled(h[j - 1])
                for j in (1, 2)
            ]
            superposed = parts[0].add(parts[1])
            t = np.linspace(0.0, 6.0, 61)
            assert np.max(np.abs(direct(t) - superposed(t))) <= 1e-10


class TestDerivL2Norm:
    def test_w1_squared_norm(self, ex1, ex1_boundary):
        w = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 1)
        assert deriv_l2_norm(w, 0) ** 2 == pytest.approx(11.0 / 12.0, abs=1e-12)
        assert deriv_l2_norm(w, 0) == pytest.approx(0.9574271077563381, abs=1e-10)

    def test_single_exponential(self, ex1, ex1_boundary):
        from pencil_lab.halfline import ExpPolySolution

        w = ExpPolySolution(((1j, (1.0,)),), (1.0,), 1.0)
        assert w.l2_norm_sq() == pytest.approx(0.5, abs=1e-14)
        assert deriv_l2_norm(w, 1) ** 2 == pytest.approx(0.5, abs=1e-14)

    def test_against_adaptive_quadrature(self, ex1, ex1_boundary):
        w1 = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 1)
        oracle = quad_norm_sq(w1_closed, 1.0)
        assert deriv_l2_norm(w1, 0) ** 2 == pytest.approx(oracle, rel=1e-8)
        w2 = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 2)
        oracle2 = quad_norm_sq(w2_closed, 1.0)
        assert deriv_l2_norm(w2, 0) ** 2 == pytest.approx(oracle2, rel=1e-8)

    def test_derivative_against_quadrature(self, ex1, ex1_boundary):
        w1 = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 1)

        def dw1(t):
            return -2.0 * np.exp(-t) + 2.0 * np.exp(-2.0 * t)

        oracle = quad_norm_sq(dw1, 1.0)
        assert deriv_l2_norm(w1, 1) ** 2 == pytest.approx(oracle, rel=1e-8)

    def test_repeated_root_norm_against_quadrature(self, ex1, ex1_boundary):
        w = fundamental_solution(ex1, ex1_boundary, [1.0], 0.0, 1)
        oracle = quad_norm_sq(lambda t: (1.0 + t) * np.exp(-t), 1.0)
        assert deriv_l2_norm(w, 0) ** 2 == pytest.approx(oracle, rel=1e-8)


class TestResiduals:
    def test_ode_residual_zero(self, ex1, ex1_boundary):
        for lam in (0.0, SQRT3, 7.0):
            w = fundamental_solution(ex1, ex1_boundary, [1.0], lam, 1)
            assert ode_residual(ex1, w) <= 1e-10

    def test_apply_poly_cancels_per_root(self, ex1, ex1_boundary):
        w = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 2)
        poly = ex1.normal_poly(np.array([1.0]), SQRT3)
        out = apply_poly_dt(w, poly)
        assert out.coefficient_scale() <= 1e-10 * w.coefficient_scale() * max(
            abs(c) for c in poly.coeffs
        )

    def test_boundary_residual_reported(self, ex1, ex1_boundary):
        w = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 1)
        assert w.boundary_residual <= 1e-12


class TestHomogeneity:
    def test_identity_exact_at_one(self, ex1, ex1_boundary):
        assert check_homogeneity(ex1, ex1_boundary, [1.0], SQRT3, [1.0]) <= 1e-13

    def test_identity_across_scales(self, ex1, ex1_boundary):
        dev = check_homogeneity(ex1, ex1_boundary, [1.0], SQRT3, [0.5, 2.0, 10.0])
        assert dev <= 1e-10

    def test_wrong_exponent_breaks_identity(self, ex1, ex1_boundary):
        # using the order of the first operator for the second one must fail
        r = 2.0
        w2 = fundamental_solution(ex1, ex1_boundary, [1.0], SQRT3, 2)
        scaled = fundamental_solution(ex1, ex1_boundary, [1.0 / r], SQRT3 / r, 2)
        t = np.linspace(0.0, 6.0, 61)
        wrong = r ** (-0) * scaled(r * t)  # order of operator 1
        assert np.max(np.abs(wrong - w2(t))) > 0.1


class TestLargeParameterPath:
    def test_normalized_solve_matches_closed_form(self, ex1, ex1_boundary):
        lam = 1.0e4
        b = math.sqrt(1.0 + lam**2)
        w = fundamental_solution(ex1, ex1_boundary, [1.0], lam, 1)
        # closed form: (b e^{-t} - e^{-bt}) / (b - 1)
        t = np.linspace(0.0, 3.0, 61)
        expected = (b * np.exp(-t) - np.exp(-b * t)) / (b - 1.0)
        assert np.max(np.abs(w(t) - expected)) <= 1e-9
        assert w.cond < 1e6  # solved at the normalized point

    def test_conditioning_guard_raises(self, ex1):
        cfg = SolverConfig(cond_max=1.0)
        with pytest.raises(DegenerateProblemError):
            fundamental_solution(ex1, fixtures.ex1_boundary(), [1.0], SQRT3, 1, cfg)


class TestEstimateTable:
    def test_spot_ratio(self, ex1, ex1_boundary):
        table = estimate_table(
            ex1, ex1_boundary, angular_grid=2, lambda_ladder=[SQRT3], l_max=0
        )
        rows = [r for r in table.rows if r.j == 1 and r.l == 0 and r.xi_prime[0] == 1.0]
        assert len(rows) == 1
        assert rows[0].bound == pytest.approx(1.0)
        assert rows[0].ratio == pytest.approx(math.sqrt(11.0 / 12.0), abs=1e-10)
        assert rows[0].regime == "interior, low derivative"

    def test_parameter_free_column_finite(self, ex1, ex1_boundary):
        table = estimate_table(
            ex1, ex1_boundary, angular_grid=2, lambda_ladder=[0.0], l_max=4
        )
        assert all(np.isfinite(r.ratio) for r in table.rows)
        assert table.max_ratio > 0

    def test_max_ratio_stabilizes(self, ex1, ex1_boundary):
        table = estimate_table(
            ex1,
            ex1_boundary,
            angular_grid=2,
            lambda_ladder=[100.0, 1.0e4],
            l_max=5,
        )
        by_lam = table.max_ratio_by_lambda()
        assert abs(by_lam[1.0e4] - by_lam[100.0]) <= 0.1 * by_lam[100.0]

    def test_csv_round_trip(self, ex1, ex1_boundary, tmp_path):
        table = estimate_table(
            ex1, ex1_boundary, angular_grid=2, lambda_ladder=[1.0], l_max=1
        )
        path = tmp_path / "table.csv"
        table.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "j,l,xi_norm,lambda,norm,bound,ratio"
        assert len(lines) == 1 + len(table.rows)


class TestPhiRatioTable:
    def test_spot_ratio_matches_sharp_bound(self, ex1, ex1_boundary):
        w = fixtures.ex1_weight()
        table = phi_ratio_table(
            ex1, ex1_boundary, w, angular_grid=2, lambda_ladder=[SQRT3], l_max=0
        )
        rows = [r for r in table.rows if r.j == 1 and r.l == 0 and r.xi_prime[0] == 1.0]
        # shifted slanted weights cancel to |xi'|^(-1/2) = 1 here
        assert rows[0].bound == pytest.approx(1.0, rel=1e-12)
        assert rows[0].ratio == pytest.approx(math.sqrt(11.0 / 12.0), abs=1e-10)

    def test_bound_domination(self, ex1, ex1_boundary):
        # the slanted-weight bound dominates the four-regime bound on the
        # admissible index window, so ratios stay below the sharp-table ones
        w = fixtures.ex1_weight()
        lam_ladder = [1.0, 10.0, 1000.0]
        sharp = estimate_table(
            ex1, ex1_boundary, angular_grid=2, lambda_ladder=lam_ladder, l_max=4
        )
        slant = phi_ratio_table(
            ex1, ex1_boundary, w, angular_grid=2, lambda_ladder=lam_ladder, l_max=4
        )
        assert slant.max_ratio <= sharp.max_ratio * (1.0 + 1e-9)
        assert np.isfinite(slant.max_ratio)

    def test_domination_factor_at_large_parameter(self, ex1, ex1_boundary):
        # ratio of the interior high-derivative bounds equals
        # (|xi'| / (lam + |xi'|))^(m_{mu+1} - s + 1/2) <= 1
        lam = 1000.0
        factor = (1.0 / (lam + 1.0)) ** (1.0 - 1.0 + 0.5)
        assert factor <= 1.0
