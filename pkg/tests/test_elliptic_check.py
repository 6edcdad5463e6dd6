import math

import numpy as np
import pytest

from pencil_lab import fixtures
from pencil_lab.elliptic_check import (
    CheckConfig,
    check_epsilon,
    check_regular_degeneration,
    condition_b_scan,
    condition_c,
    condition_d,
    full_check,
    interior_margin,
    lopatinskii_det,
    lopatinskii_matrix,
)
from pencil_lab.errors import InputError
from pencil_lab.symbols import BoundarySet, MultiPoly, OperatorPencil


def synthetic_division_oracle(num_coeffs, den_coeffs):
    """Independent remainder oracle via numpy's polynomial division."""
    from numpy.polynomial import polynomial as npoly

    _, rem = npoly.polydiv(np.array(num_coeffs, complex), np.array(den_coeffs, complex))
    return rem


class TestInteriorMargin:
    def test_ex1_margin_half(self, ex1):
        rep = interior_margin(ex1)
        assert rep.passed
        assert rep.margin == pytest.approx(0.5, abs=2e-3)
        # minimiser sits where |xi| = lam = 1/sqrt(2)
        assert np.linalg.norm(rep.argmin_xi) == pytest.approx(rep.argmin_lambda, abs=1e-2)

    def test_sign_flip_fails(self):
        rep = interior_margin(fixtures.ex1_neg_interior())
        assert not rep.passed
        assert rep.margin < 1e-6

    def test_parameter_free_boundary_is_classical(self, ex1):
        # at lam = 0 the objective reduces to the top part over |xi|^(2m): 1
        P0 = ex1.principal()
        for theta in np.linspace(0, 2 * np.pi, 7):
            xi = np.array([np.cos(theta), np.sin(theta)])
            ratio = abs(P0.eval(xi, 0.0)) / 1.0
            assert ratio == pytest.approx(1.0, rel=1e-12)

    def test_refinement_monotone(self, ex1):
        coarse = interior_margin(ex1, grid_n=200)
        fine = interior_margin(ex1, grid_n=400)
        assert fine.margin <= coarse.margin + 1e-9
        assert abs(fine.margin - coarse.margin) <= 0.1 * coarse.margin


class TestRegularDegeneration:
    def test_ex1_passes(self, ex1):
        res = check_regular_degeneration(ex1)
        assert res.passed
        assert res.value == pytest.approx(1.0)

    def test_indefinite_low_part_fails(self):
        # low part xi_1^2 - xi_2^2 gives the reduced polynomial tau^2 - 1
        lap = fixtures.radial_sq(2)
        low = MultiPoly(2, {(2, 0): 1.0, (0, 2): -1.0})
        P = OperatorPencil(2, 2, 1, {4: lap * lap, 2: low})
        res = check_regular_degeneration(P)
        assert not res.passed

    def test_three_quarters_case(self):
        # m = 3, mu = 2: reduced polynomial has degree 2 with one upper root
        lap = fixtures.radial_sq(2)
        P = OperatorPencil(2, 3, 2, {6: lap**3, 4: lap**2})
        res = check_regular_degeneration(P)
        assert res.passed
        assert res.value == pytest.approx(1.0)


class TestLopatinskiiMatrix:
    def test_ex1_identity_rows(self, ex1, ex1_boundary):
        mat = lopatinskii_matrix(ex1, ex1_boundary, [1.0], math.sqrt(3.0))
        assert np.allclose(mat.entries, np.eye(2), atol=1e-12)

    def test_low_order_rows_are_raw_coefficients(self, ex1, ex1_boundary):
        # operators of order below m are their own remainders, exactly
        mat = lopatinskii_matrix(ex1, ex1_boundary, [0.7], 2.0)
        assert mat.entries[0, 0] == 1.0 and mat.entries[0, 1] == 0.0
        assert mat.entries[1, 0] == 0.0 and mat.entries[1, 1] == 1.0

    def test_high_order_operator_against_oracle(self, ex1):
        # order-3 normal operator at (xi', lam) = (1, sqrt(3)):
        # remainder of tau^3 modulo tau^2 - 3i tau - 2
        one = MultiPoly.constant(2, 1.0)
        b2 = MultiPoly.monomial(2, (0, 3))
        B = BoundarySet(((one, 0), (b2, 3)))
        mat = lopatinskii_matrix(ex1, B, [1.0], math.sqrt(3.0))
        oracle = synthetic_division_oracle([0, 0, 0, 1.0], [-2.0, -3.0j, 1.0])
        assert np.allclose(mat.entries[1], oracle, atol=1e-9)
        # verified by evaluation at the factor roots i and 2i
        assert mat.entries[1] @ np.array([1.0, 1j]) == pytest.approx(1j**3, abs=1e-9)
        assert mat.entries[1] @ np.array([1.0, 2j]) == pytest.approx((2j) ** 3, abs=1e-9)

    def test_scaling_covariance(self, ex1, ex1_boundary):
        # order sum 0+1 minus m(m-1)/2 = 0: determinant is scale invariant
        d1 = lopatinskii_det(ex1, ex1_boundary, [1.0], 1.0)
        d2 = lopatinskii_det(ex1, ex1_boundary, [2.0], 2.0)
        assert abs(d2) == pytest.approx(abs(d1), rel=1e-10)


class TestLopatinskiiDet:
    def test_ex1_det_is_one(self, ex1, ex1_boundary, rng):
        for _ in range(100):
            xi = float(rng.uniform(0.1, 10.0)) * float(rng.choice([-1.0, 1.0]))
            lam = float(rng.uniform(0.0, 10.0))
            det = lopatinskii_det(ex1, ex1_boundary, [xi], lam)
            assert det == pytest.approx(1.0, abs=1e-12)

    def test_duplicate_operator_degenerates(self, ex1):
        one = MultiPoly.constant(2, 1.0)
        B = BoundarySet(((one, 0), (one, 1)))
        det = lopatinskii_det(ex1, B, [1.0], 2.0)
        assert det == pytest.approx(0.0, abs=1e-14)


class TestConditionB:
    def test_ex1_min_one_and_flat_decay(self, ex1, ex1_boundary):
        res = condition_b_scan(ex1, ex1_boundary)
        assert res.passed
        assert res.value == pytest.approx(1.0, rel=1e-9)
        assert res.details["decay_exponents"]["1.0"] == pytest.approx(0.0, abs=1e-9)

    def test_tangential_operator_fails_identically(self, ex1):
        # the reduced matrix has a zero column, so the determinant vanishes
        # at every frequency and no decay exponent is defined
        res = condition_b_scan(ex1, fixtures.ex1_tangential_boundary())
        assert not res.passed
        assert res.value <= 1e-14
        assert res.details["decay_exponents"]["1.0"] is None
        assert "xi_prime" in res.witness

    def test_mixed_derivative_passes_pointwise(self, ex1):
        # the layer-control failure is invisible to the pointwise scan:
        # det = xi' stays nonzero on the truncated compact set
        res = condition_b_scan(ex1, fixtures.ex1_neg_layer_boundary())
        assert res.passed
        assert res.details["decay_exponents"]["1.0"] == pytest.approx(1.0, abs=1e-6)

    def test_pole_cutoff_validated(self, ex1, ex1_boundary):
        with pytest.raises(InputError):
            condition_b_scan(ex1, ex1_boundary, pole_cutoff=2.0)


class TestConditionC:
    def test_ex1_passes(self, ex1, ex1_boundary):
        res = condition_c(ex1, ex1_boundary)
        assert res.passed
        assert res.value == pytest.approx(1.0, rel=1e-9)

    def test_complex_oblique_operator_fails(self, ex1):
        # first operator xi_2 - i xi_1 annihilates the decaying factor of the
        # low part at xi' = 1, so the covering determinant vanishes there
        b1 = MultiPoly(2, {(0, 1): 1.0, (1, 0): -1.0j})
        b2 = MultiPoly.monomial(2, (0, 2))
        B = BoundarySet(((b1, 1), (b2, 2)))
        res = condition_c(ex1, B)
        assert not res.passed

    def test_conjugate_oblique_operator_passes(self, ex1):
        # the conjugate combination stays away from the decaying root on
        # both unit directions
        b1 = MultiPoly(2, {(0, 1): 1.0, (1, 0): 1.0j})
        b2 = MultiPoly.monomial(2, (0, 2))
        B = BoundarySet(((b1, 1), (b2, 2)))
        res = condition_c(ex1, B)
        assert not res.passed  # fails at xi' = -1 by symmetry

    def test_dirichlet_always_covers(self, ex1):
        one = MultiPoly.constant(2, 1.0)
        B = BoundarySet(((one, 0), (MultiPoly.variable(2, 1), 1)))
        assert condition_c(ex1, B).passed


class TestConditionD:
    def test_ex1_passes(self, ex1, ex1_boundary):
        res = condition_d(ex1, ex1_boundary)
        assert res.passed
        assert res.value == pytest.approx(1.0, rel=1e-9)

    def test_tangential_operator_zero_row(self, ex1):
        res = condition_d(ex1, fixtures.ex1_tangential_boundary())
        assert not res.passed
        assert res.value == pytest.approx(0.0, abs=1e-14)

    def test_two_layer_case_against_oracle(self):
        # m = 3, mu = 1: reduced polynomial tau^4 + 1, layer factor quadratic;
        # operators tau^2 and tau^3 reduced modulo it
        lap = fixtures.radial_sq(2)
        P = OperatorPencil(2, 3, 1, {6: lap**3, 2: lap})
        one = MultiPoly.constant(2, 1.0)
        B = BoundarySet(
            ((one, 0), (MultiPoly.monomial(2, (0, 2)), 2), (MultiPoly.monomial(2, (0, 3)), 3))
        )
        res = condition_d(P, B)
        # oracle: layer factor (tau - e^{i pi/4})(tau - e^{3 i pi/4})
        ra, rb = np.exp(1j * np.pi / 4), np.exp(3j * np.pi / 4)
        qp = [ra * rb, -(ra + rb), 1.0]
        row2 = synthetic_division_oracle([0, 0, 1.0], qp)
        row3 = synthetic_division_oracle([0, 0, 0, 1.0], qp)
        det = row2[0] * row3[1] - row2[1] * row3[0]
        assert res.value == pytest.approx(abs(det), rel=1e-9)
        assert res.passed


class TestFullCheck:
    def test_ex1_all_pass(self, ex1, ex1_boundary):
        rep = full_check(ex1, ex1_boundary)
        assert rep.overall
        assert all(c.passed for c in rep.conditions)
        assert rep.condition("interior_lower_bound").value == pytest.approx(0.5, abs=2e-3)

    def test_sign_flip_fails_interior_only(self, ex1_boundary):
        rep = full_check(fixtures.ex1_neg_interior(), ex1_boundary)
        assert not rep.overall
        assert not rep.condition("interior_lower_bound").passed
        # other conditions are still reported
        assert rep.condition("regular_degeneration").passed is not None
        assert len(rep.conditions) == 5

    def test_tangential_variant_flags_b_and_d(self, ex1):
        rep = full_check(ex1, fixtures.ex1_tangential_boundary())
        assert rep.condition("interior_lower_bound").passed
        assert rep.condition("covering_low_order").passed
        assert not rep.condition("boundary_independence").passed
        assert not rep.condition("layer_independence").passed

    def test_verdicts_invariant_under_search_rescaling(self, ex1, ex1_boundary):
        reports = {}
        for scale in (0.5, 1.0, 2.0):
            cfg = CheckConfig(search_scale=scale, grid_n=120, psi_grid=48)
            reports[scale] = full_check(ex1, ex1_boundary, cfg)
        verdicts = {
            scale: tuple(c.passed for c in rep.conditions)
            for scale, rep in reports.items()
        }
        assert verdicts[0.5] == verdicts[1.0] == verdicts[2.0]
        neg = {}
        for scale in (0.5, 2.0):
            cfg = CheckConfig(search_scale=scale, grid_n=120, psi_grid=48)
            neg[scale] = tuple(
                c.passed
                for c in full_check(ex1, fixtures.ex1_tangential_boundary(), cfg).conditions
            )
        assert neg[0.5] == neg[2.0]

    def test_report_serialization(self, ex1, ex1_boundary):
        import json

        rep = full_check(ex1, ex1_boundary, CheckConfig(grid_n=80, psi_grid=32))
        doc = json.loads(json.dumps(rep.to_jsonable()))
        assert doc["overall"] is True
        text = rep.format_text()
        assert "PASS" in text


class TestCheckEpsilon:
    def test_ex1_epsilon_all_pass(self, ex1_boundary):
        rep = check_epsilon(fixtures.ex1_epsilon(), ex1_boundary)
        assert rep.overall
        assert rep.condition("endpoint_top_order").passed
        assert rep.condition("endpoint_top_order").value == pytest.approx(1.0, rel=1e-9)

    def test_mu_zero_unrepresentable(self):
        lap = fixtures.radial_sq(2)
        with pytest.raises(InputError):
            # top part alone: the order window m > mu > 0 cannot hold
            OperatorPencil(2, 2, 0, {4: lap * lap})

    def test_endpoint_failure_detected(self):
        # tangential second operator: the boundary matrix is singular at the
        # parameter-free endpoint as well
        rep = check_epsilon(fixtures.ex1_epsilon(), fixtures.ex1_tangential_boundary())
        assert not rep.condition("endpoint_top_order").passed
