"""Canonical problems used by the test suite, the docs and the CLI examples.

The workhorse is the planar fourth-order problem with symbol
|xi|^4 + lam^2 |xi|^2 (the two-scale form of a biharmonic operator with a
small-parameter Laplacian), Dirichlet-Neumann boundary operators, and index
window (r, s) = (4, 1).
"""

from __future__ import annotations

import numpy as np

from .newton import WeightSpec
from .symbols import BoundarySet, EpsilonPencil, MultiPoly, OperatorPencil


def radial_sq(n: int) -> MultiPoly:
    """The symbol xi_1^2 + ... + xi_n^2."""
    out = MultiPoly.zero(n)
    for i in range(n):
        out = out + MultiPoly.variable(n, i) ** 2
    return out


def ex1_pencil() -> OperatorPencil:
    lap = radial_sq(2)
    return OperatorPencil(2, 2, 1, {4: lap * lap, 2: lap})


def ex1_boundary() -> BoundarySet:
    one = MultiPoly.constant(2, 1.0)
    normal = MultiPoly.variable(2, 1)
    return BoundarySet(((one, 0), (normal, 1)))


def ex1_indices() -> tuple[int, int]:
    return 4, 1


def ex1_weight() -> WeightSpec:
    return WeightSpec(4.0, 1.0, 1.0)


def ex1_epsilon() -> EpsilonPencil:
    lap = radial_sq(2)
    return EpsilonPencil(2, 2, 1, {4: lap * lap, 2: lap})


def ex1_neg_interior() -> OperatorPencil:
    """Interior negative control: the lower-order part enters with the wrong
    sign, so the symbol vanishes on |xi| = lam."""
    lap = radial_sq(2)
    return OperatorPencil(2, 2, 1, {4: lap * lap, 2: -1.0 * lap})


def ex1_tangential_boundary() -> BoundarySet:
    """Second operator replaced by the tangential derivative.  The reduced
    boundary matrix is singular at every frequency (its determinant vanishes
    identically), so the model problem is unsolvable, and the layer-side
    independence fails as well."""
    one = MultiPoly.constant(2, 1.0)
    tangential = MultiPoly.variable(2, 0)
    return BoundarySet(((one, 0), (tangential, 1)))


def ex1_neg_layer_boundary() -> BoundarySet:
    """Layer-side negative control: second operator is the mixed derivative
    D_1 D_2 of order 2.  The model problem stays uniquely solvable at every
    nonzero tangential frequency, but the layer-side independence fails, so
    no parameter-uniform estimate can hold."""
    one = MultiPoly.constant(2, 1.0)
    mixed = MultiPoly.monomial(2, (1, 1))
    return BoundarySet(((one, 0), (mixed, 2)))


def ex1_problem_dict() -> dict:
    """JSON-ready problem description of the canonical fixture."""
    return {
        "n": 2,
        "m": 2,
        "mu": 1,
        "form": "lambda",
        "parts": {
            "4": [
                {"alpha": [4, 0], "re": 1.0, "im": 0.0},
                {"alpha": [2, 2], "re": 2.0, "im": 0.0},
                {"alpha": [0, 4], "re": 1.0, "im": 0.0},
            ],
            "2": [
                {"alpha": [2, 0], "re": 1.0, "im": 0.0},
                {"alpha": [0, 2], "re": 1.0, "im": 0.0},
            ],
        },
        "boundary": [
            {"terms": [{"alpha": [0, 0], "re": 1.0, "im": 0.0}], "order": 0},
            {"terms": [{"alpha": [0, 1], "re": 1.0, "im": 0.0}], "order": 1},
        ],
        "indices": {"r": 4, "s": 1},
    }


def _random_homogeneous(rng: np.random.Generator, n: int, degree: int) -> MultiPoly:
    terms = {}
    for alpha in _multi_indices(n, degree):
        c = rng.normal() + 1j * rng.normal()
        terms[alpha] = c
    return MultiPoly(n, terms)


def _multi_indices(n: int, degree: int):
    if n == 1:
        yield (degree,)
        return
    for k in range(degree + 1):
        for rest in _multi_indices(n - 1, degree - k):
            yield (k,) + rest


def random_problem(
    rng: np.random.Generator,
    n: int = 2,
    m_max: int = 3,
    base_point: tuple = ((1.0,), 1.3),
    max_tries: int = 500,
) -> tuple[OperatorPencil, BoundarySet]:
    """Sample-and-filter generator of solvable model problems.

    Random homogeneous parts and boundary operators are accepted once the
    normal symbol at the base point has the full count of decaying roots and
    the boundary system there is comfortably nonsingular; by homogeneity the
    same holds along every ray through the base point.
    """
    from .halfline import SolverConfig, solve_bvp
    from .rootsplit import find_roots, split_half_planes

    xi0 = np.asarray(base_point[0], dtype=float)
    lam0 = float(base_point[1])
    for _ in range(max_tries):
        m = int(rng.integers(2, m_max + 1))
        mu = int(rng.integers(1, m))
        parts = {j: _random_homogeneous(rng, n, j) for j in range(2 * mu, 2 * m + 1)}
        try:
            P = OperatorPencil(n, m, mu, parts)
        except Exception:
            continue
        poly = P.normal_poly(xi0, lam0)
        try:
            split = split_half_planes(find_roots(poly))
        except Exception:
            continue
        if split.upper_count() != m or split.near_real_count() > 0:
            continue

        orders = sorted(rng.choice(2 * m, size=m, replace=True).tolist())
        orders[mu] = max(orders[mu], orders[mu - 1] + 1)  # enforce the order gap
        for k in range(mu + 1, m):
            orders[k] = max(orders[k], orders[k - 1])
        ops = tuple((_random_homogeneous(rng, n, o), o) for o in orders)
        try:
            B = BoundarySet(ops)
            solve_bvp(P, B, xi0, lam0, np.eye(m)[0], SolverConfig(cond_max=1e8))
        except Exception:
            continue
        return P, B
    raise RuntimeError("failed to sample a solvable random problem")
