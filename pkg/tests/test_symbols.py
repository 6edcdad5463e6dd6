import numpy as np
import pytest

from pencil_lab import fixtures
from pencil_lab.errors import InputError
from pencil_lab.symbols import (
    BoundarySet,
    EpsilonPencil,
    MultiPoly,
    OperatorPencil,
    UniPoly,
    eval_pencil,
    eval_poly,
    from_epsilon,
    homogeneous_part,
    principal_pencil,
    restrict_to_normal,
    scale_symbol,
    to_epsilon,
    validate_problem,
)


def lap2():
    return fixtures.radial_sq(2)


class TestEvalPoly:
    def test_unit_vector(self):
        assert eval_poly(lap2(), [0.0, 1.0]) == pytest.approx(1.0)

    def test_imaginary_argument(self):
        assert eval_poly(lap2(), [1j, 0.0]) == pytest.approx(-1.0)

    def test_ex1_top_part(self, ex1):
        # direct expansion (1 + 1)^2
        assert ex1.part(4).eval([1.0, 1.0]) == pytest.approx(4.0)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            eval_poly(lap2(), [1.0, 2.0, 3.0])

    def test_eval_many_matches_scalar(self, rng):
        p = lap2() * lap2() + MultiPoly.monomial(2, (1, 0), 2.0 - 1.0j)
        pts = rng.normal(size=(17, 2))
        many = p.eval_many(pts)
        for i in range(17):
            assert many[i] == pytest.approx(p.eval(pts[i]), rel=1e-14)


class TestHomogeneousPart:
    def test_degree_filter(self):
        p = MultiPoly(2, {(2, 0): 1.0, (1, 0): 1.0})
        assert homogeneous_part(p, 2).terms == {(2, 0): 1.0}

    def test_no_constant_term(self):
        p = MultiPoly(2, {(2, 0): 1.0, (1, 0): 1.0})
        assert homogeneous_part(p, 0).is_zero()

    def test_already_homogeneous(self, ex1):
        assert homogeneous_part(ex1.part(2), 2).terms == ex1.part(2).terms


class TestPrincipalPencil:
    def test_ex1_unchanged(self, ex1):
        assert principal_pencil(ex1).parts == ex1.parts

    def test_filters_low_order_junk(self):
        p4 = MultiPoly(2, {(4, 0): 1.0, (1, 0): 1.0})
        P = OperatorPencil(2, 2, 1, {4: p4, 2: lap2()})
        assert principal_pencil(P).part(4).terms == {(4, 0): 1.0}

    def test_joint_homogeneity_value(self, ex1):
        # t = 2 at (xi, lam) = ((1,0), 1): 2^4 * A(xi, lam) = 32
        P0 = principal_pencil(ex1)
        assert P0.eval([2.0, 0.0], 2.0) == pytest.approx(2.0**4 * P0.eval([1.0, 0.0], 1.0))
        assert P0.eval([2.0, 0.0], 2.0) == pytest.approx(32.0)

    def test_joint_homogeneity_random(self, rng):
        for _ in range(20):
            P, _ = fixtures.random_problem(rng)
            P0 = principal_pencil(P)
            xi = rng.normal(size=P.n)
            lam = float(rng.uniform(0.1, 3.0))
            t = float(rng.uniform(0.3, 4.0))
            a = P0.eval(t * xi, t * lam)
            b = t ** (2 * P.m) * P0.eval(xi, lam)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


class TestEvalPencil:
    def test_lambda_zero(self, ex1):
        assert eval_pencil(ex1, [1.0, 0.0], 0.0) == pytest.approx(1.0)

    def test_lambda_one(self, ex1):
        assert eval_pencil(ex1, [1.0, 0.0], 1.0) == pytest.approx(2.0)

    def test_zero_frequency(self, ex1):
        assert eval_pencil(ex1, [0.0, 0.0], 5.0) == pytest.approx(0.0)

    def test_negative_parameter_rejected(self, ex1):
        with pytest.raises(InputError):
            eval_pencil(ex1, [1.0, 0.0], -1.0)


class TestRestrictToNormal:
    def test_low_part(self, ex1):
        q = restrict_to_normal(ex1.part(2), [1.0])
        assert np.allclose(q.coeffs, [1.0, 0.0, 1.0])  # tau^2 + 1

    def test_top_part_at_zero(self, ex1):
        q = restrict_to_normal(ex1.part(4), [0.0])
        assert np.allclose(q.coeffs, [0, 0, 0, 0, 1.0])  # tau^4

    def test_normal_operator_ignores_tangential(self, ex1_boundary):
        b2 = ex1_boundary.operators[1][0]
        q = restrict_to_normal(b2, [3.0])
        assert np.allclose(q.coeffs, [0.0, 1.0])  # tau

    def test_dimension_one_rejected(self):
        with pytest.raises(InputError):
            restrict_to_normal(MultiPoly.constant(1, 1.0), [])

    def test_commutes_with_evaluation(self, rng):
        p = lap2() * lap2() + MultiPoly.monomial(2, (0, 3), 1.5j)
        for _ in range(25):
            xi1 = float(rng.normal())
            tau = complex(rng.normal(), rng.normal())
            direct = p.eval([xi1, tau])
            via = restrict_to_normal(p, [xi1])(tau)
            assert via == pytest.approx(direct, rel=1e-14, abs=1e-14)


class TestValidateProblem:
    def test_ex1_all_pass(self, ex1, ex1_boundary):
        rep = validate_problem(ex1, ex1_boundary, 4, 1)
        assert rep.all_ok

    def test_s_too_small(self, ex1, ex1_boundary):
        rep = validate_problem(ex1, ex1_boundary, 4, 0)
        assert not rep.mandatory_ok
        failed = {r.rule for r in rep.failures()}
        assert "index-window-sufficiency" in failed

    def test_rule_sets_distinguished(self, ex1, ex1_boundary):
        # r = 2 satisfies both windows for the canonical fixture; the report
        # still carries the two categories separately
        rep = validate_problem(ex1, ex1_boundary, 2, 1)
        cat = {r.rule: r.category for r in rep.rules}
        assert cat["index-window-sufficiency"] == "index-sufficiency"
        assert cat["index-window-necessity"] == "index-necessity"
        assert rep.all_ok

    def test_violations_reported_not_thrown(self, ex1, ex1_boundary):
        rep = validate_problem(ex1, ex1_boundary, 1, 0)
        assert not rep.mandatory_ok  # no exception


class TestScaleSymbol:
    def test_linear(self):
        p = MultiPoly.variable(2, 1)
        assert scale_symbol(p, 3.0).terms == {(0, 1): 3.0}

    def test_quadratic(self):
        assert scale_symbol(lap2(), 2.0).terms == {(2, 0): 4.0, (0, 2): 4.0}

    def test_identity(self, ex1):
        assert scale_symbol(ex1.part(4), 1.0).terms == ex1.part(4).terms

    def test_rejects_nonpositive(self):
        with pytest.raises(InputError):
            scale_symbol(lap2(), 0.0)

    def test_matches_argument_scaling(self, rng):
        p = lap2() * lap2() + 2.5 * MultiPoly.monomial(2, (1, 2))
        for _ in range(10):
            rho = float(rng.uniform(0.2, 5.0))
            xi = rng.normal(size=2)
            assert scale_symbol(p, rho).eval(xi) == pytest.approx(
                p.eval(rho * xi), rel=1e-12
            )


class TestEpsilonTranslation:
    def test_parts_shared(self):
        pe = fixtures.ex1_epsilon()
        P = from_epsilon(pe)
        assert P.parts == fixtures.ex1_pencil().parts

    def test_eval_agreement(self):
        # eps = 0.5 <-> lam = 2: 4 * (0.25 + 1) = 5 on both sides
        pe = fixtures.ex1_epsilon()
        P = from_epsilon(pe)
        lam = 2.0
        lhs = lam ** (2 * P.m - 2 * P.mu) * pe.eval([1.0, 0.0], 1.0 / lam)
        assert lhs == pytest.approx(5.0)
        assert P.eval([1.0, 0.0], lam) == pytest.approx(5.0)

    def test_round_trip_exact(self, ex1):
        assert from_epsilon(to_epsilon(ex1)).parts == ex1.parts

    def test_random_round_trips(self, rng):
        for _ in range(5):
            P, _ = fixtures.random_problem(rng)
            assert from_epsilon(to_epsilon(P)).parts == P.parts

    def test_eval_identity_random(self, rng):
        for _ in range(5):
            P, _ = fixtures.random_problem(rng)
            pe = to_epsilon(P)
            xi = rng.normal(size=P.n)
            lam = float(rng.uniform(0.5, 4.0))
            lhs = lam ** (2 * P.m - 2 * P.mu) * pe.eval(xi, 1.0 / lam)
            assert lhs == pytest.approx(P.eval(xi, lam), rel=1e-12)


class TestConstructors:
    def test_pencil_requires_order_window(self):
        with pytest.raises(InputError):
            OperatorPencil(2, 1, 1, {2: lap2()})

    def test_pencil_rejects_overweight_part(self):
        with pytest.raises(InputError):
            OperatorPencil(2, 2, 1, {2: lap2() * lap2()})

    def test_boundary_rejects_unsorted_orders(self):
        one = MultiPoly.constant(2, 1.0)
        d2 = MultiPoly.variable(2, 1)
        with pytest.raises(InputError):
            BoundarySet(((d2, 1), (one, 0)))

    def test_zero_coefficients_pruned(self):
        p = MultiPoly(2, {(1, 0): 0.0, (0, 1): 2.0})
        assert p.terms == {(0, 1): 2.0}

    def test_unipoly_trims_trailing_zeros(self):
        q = UniPoly((1.0, 2.0, 0.0, 0.0))
        assert q.degree() == 1
