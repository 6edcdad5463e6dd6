"""Complex root finding and half-plane splitting for normal symbols.

Roots come from companion-matrix eigenvalues polished by Newton iteration on
the original polynomial; multiplicities are assigned by clustering and the
centers of nontrivial clusters are re-polished on the matching derivative.
Every root set carries a reconstruction backward error so callers can tell a
certified factorization from a diagnostic one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateProblemError, InputError, RootFindingError, StructuralError
from .symbols import BoundarySet, OperatorPencil, UniPoly

DEFAULT_CLUSTER_RADIUS = 1e-6
DEFAULT_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class RootSet:
    """Roots with multiplicities plus the certification data."""

    roots: tuple  # ((value, multiplicity), ...)
    backward_error: float
    scale: float

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.roots)

    def expanded(self) -> list[complex]:
        out: list[complex] = []
        for z, m in self.roots:
            out.extend([z] * m)
        return out

    def monic_poly(self) -> UniPoly:
        return UniPoly.from_roots(self.expanded())


@dataclass(frozen=True)
class HalfPlaneSplit:
    """Exhaustive partition of a root set by the sign of the imaginary part."""

    upper: tuple
    lower: tuple
    near_real: tuple
    imag_tol: float

    def upper_count(self) -> int:
        return sum(m for _, m in self.upper)

    def lower_count(self) -> int:
        return sum(m for _, m in self.lower)

    def near_real_count(self) -> int:
        return sum(m for _, m in self.near_real)

    def upper_roots(self) -> list[complex]:
        out: list[complex] = []
        for z, m in self.upper:
            out.extend([z] * m)
        return out


def _companion_eigvals(monic: np.ndarray) -> np.ndarray:
    d = len(monic) - 1
    C = np.zeros((d, d), dtype=complex)
    if d > 1:
        C[1:, :-1] = np.eye(d - 1)
    C[:, -1] = -monic[:d]
    return np.linalg.eigvals(C)


def _newton_polish(p: UniPoly, dp: UniPoly, z: complex, steps: int = 12) -> complex:
    best, best_val = z, abs(p(z))
    for _ in range(steps):
        f = p(z)
        df = dp(z)
        if df == 0:
            break
        step = f / df
        z = z - step
        val = abs(p(z))
        if val < best_val:
            best, best_val = z, val
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    return best


def find_roots(
    p: UniPoly,
    tol: float = 1e-8,
    cluster_radius: float = DEFAULT_CLUSTER_RADIUS,
) -> RootSet:
    """All roots of p with multiplicities and a reconstruction backward error.

    Multiplicity is assigned by single-linkage clustering at radius
    cluster_radius times the root-magnitude scale.  A backward error above
    tol raises a diagnostic error that still carries the partial root set.
    """
    if p.is_zero():
        raise InputError("zero polynomial has no roots")
    if p.degree() < 1:
        raise InputError("root finding needs degree >= 1")
    monic = np.array(p.monic().coeffs, dtype=complex)
    raw = _companion_eigvals(monic)
    pm = p.monic()
    dpm = pm.deriv()
    polished = np.array([_newton_polish(pm, dpm, z) for z in raw])

    scale = max(1.0, float(np.max(np.abs(polished))) if len(polished) else 1.0)

    # single-linkage clustering at a radius relative to the local root
    # magnitude, so nearly-degenerate small roots (e.g. a +/- i eps pair) are
    # not swallowed by large roots elsewhere in the set
    def _close(a: complex, b: complex) -> bool:
        return abs(a - b) <= cluster_radius * max(abs(a), abs(b))

    remaining = list(range(len(polished)))
    clusters: list[list[int]] = []
    while remaining:
        seed = remaining.pop(0)
        group = [seed]
        changed = True
        while changed:
            changed = False
            for idx in list(remaining):
                if any(_close(polished[idx], polished[g]) for g in group):
                    group.append(idx)
                    remaining.remove(idx)
                    changed = True
        clusters.append(group)

    roots: list[tuple[complex, int]] = []
    for group in clusters:
        center = complex(np.mean(polished[group]))
        mult = len(group)
        if mult > 1:
            # the (mult-1)-th derivative has a simple root at the cluster center
            dk = pm.deriv(mult - 1)
            center = _newton_polish(dk, dk.deriv(), center)
        roots.append((center, mult))
    roots.sort(key=lambda zm: (zm[0].real, zm[0].imag))

    recon = UniPoly.from_roots([z for z, m in roots for _ in range(m)])
    a = np.array(recon.coeffs, dtype=complex)
    b = monic
    width = max(len(a), len(b))
    a = np.pad(a, (0, width - len(a)))
    b = np.pad(b, (0, width - len(b)))
    backward = float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))

    result = RootSet(tuple(roots), backward, scale)
    if backward > tol:
        raise RootFindingError(
            f"root finding not certified: backward error {backward:.3e} > {tol:.1e}",
            partial=result,
        )
    return result


def split_half_planes(rs: RootSet, imag_tol: float | None = None) -> HalfPlaneSplit:
    """Partition roots into upper, lower and near-real groups.

    The default threshold is 1e-9 times the root-magnitude scale; near-real
    roots are reported, not raised, so callers decide how to treat them.
    """
    if imag_tol is None:
        imag_tol = DEFAULT_IMAG_TOL * rs.scale
    upper, lower, near = [], [], []
    for z, m in rs.roots:
        if z.imag > imag_tol:
            upper.append((z, m))
        elif z.imag < -imag_tol:
            lower.append((z, m))
        else:
            near.append((z, m))
    return HalfPlaneSplit(tuple(upper), tuple(lower), tuple(near), imag_tol)


def a_plus_factor(
    P: OperatorPencil,
    xi_prime,
    lam: float,
    imag_tol: float | None = None,
    tol: float = 1e-8,
) -> UniPoly:
    """Monic degree-m factor collecting the decaying (upper) roots of the
    normal symbol at (xi', lam).  Requires xi' != 0."""
    xi_prime = np.asarray(xi_prime, dtype=float)
    if not np.any(xi_prime):
        raise InputError("tangential frequency must be nonzero")
    poly = P.normal_poly(xi_prime, lam)
    rs = find_roots(poly, tol=tol)
    split = split_half_planes(rs, imag_tol)
    if split.upper_count() != P.m:
        raise StructuralError(
            f"wrong root count: {split.upper_count()} decaying roots, expected {P.m} "
            f"({split.near_real_count()} near-real)"
        )
    return UniPoly.from_roots(split.upper_roots())


def q_polynomial(P: OperatorPencil, rel_tol: float = 1e-12) -> UniPoly:
    """Reduced boundary-layer polynomial: the normal symbol at xi' = 0 and
    unit parameter, divided by tau^(2mu).

    Structural errors: residual low-order coefficients (the quotient would
    not be a polynomial) and a vanishing constant term (the reduced
    polynomial would degenerate at the origin).
    """
    Pp = P.principal()
    poly = Pp.normal_poly(np.zeros(P.n - 1), 1.0)
    coeffs = list(poly.coeffs)
    if len(coeffs) < 2 * P.m + 1:
        raise StructuralError(
            "reduced polynomial degree deficit: top-order normal coefficient vanishes"
        )
    scale = max(abs(c) for c in coeffs)
    low = coeffs[: 2 * P.mu]
    if any(abs(c) > rel_tol * scale for c in low):
        raise StructuralError(
            "normal symbol at zero tangential frequency is not divisible by the "
            "required normal power"
        )
    q = coeffs[2 * P.mu :]
    if abs(q[0]) <= rel_tol * scale:
        raise StructuralError(
            "reduced polynomial degenerates: constant term vanishes (normal "
            "coefficient of the lowest-order part is zero)"
        )
    return UniPoly(tuple(q))


@dataclass(frozen=True)
class QPlusReport:
    q_plus: UniPoly
    upper_count: int
    expected: int
    regular: bool  # strict count verdict: near-real roots are never upper
    k1: int
    near_real: tuple

    @property
    def indeterminate(self) -> bool:
        """Roots within tolerance of the real axis make the strict count
        uncertifiable; the verdict then needs the caller's judgement."""
        return len(self.near_real) > 0

    @property
    def certified_regular(self) -> bool:
        return self.regular and not self.indeterminate


def q_plus(Q: UniPoly, P: OperatorPencil, imag_tol: float | None = None) -> QPlusReport:
    """Monic factor of Q over its upper roots, the regular-degeneration
    verdict (upper count == m - mu) and the maximal root multiplicity k1."""
    rs = find_roots(Q)
    split = split_half_planes(rs, imag_tol)
    k1 = max(m for _, m in rs.roots)
    qp = UniPoly.from_roots(split.upper_roots())
    expected = P.m - P.mu
    regular = split.upper_count() == expected
    return QPlusReport(qp, split.upper_count(), expected, regular, k1, split.near_real)


@dataclass(frozen=True)
class RootGroups:
    """Per-parameter split of the decaying roots into the bounded group and
    the group growing linearly with the parameter."""

    lam: float
    bounded_group: tuple
    large_group: tuple  # ((root, matched target index), ...)
    bounded_distance: float
    corrections: tuple  # |root - lam * tau1_j| per large root


@dataclass(frozen=True)
class RootGroupsReport:
    xi_prime: tuple
    limit_set: tuple  # upper roots of the lowest-order part's normal symbol
    layer_roots: tuple  # upper roots of the reduced polynomial
    k1: int
    groups: tuple  # RootGroups per ladder value
    fitted_constants: tuple  # per layer root: max |correction| / lam^(1 - 1/k1)
    fitted_exponents: tuple  # per layer root: log-log slope of the correction
    bounded_converges: bool

    @property
    def passed(self) -> bool:
        return self.bounded_converges


def verify_root_groups(
    P: OperatorPencil,
    xi_prime,
    lambda_ladder,
    imag_tol: float | None = None,
    ambiguity_tol: float = 1e-9,
) -> RootGroupsReport:
    """Match the decaying roots against their two predicted groups along a
    parameter ladder and fit the correction constants.

    The bounded group is matched against the upper roots of the lowest-order
    part's normal symbol; the other group against lam times the upper roots
    of the reduced polynomial.  Matching is a min-cost assignment; a root
    equidistant from both groups within tolerance raises a diagnostic error.
    """
    xi_prime = np.asarray(xi_prime, dtype=float)
    if abs(np.linalg.norm(xi_prime) - 1.0) > 1e-9:
        raise InputError("group verification expects a unit tangential frequency")
    ladder = [float(x) for x in lambda_ladder]
    if not ladder or any(b <= a for a, b in zip(ladder, ladder[1:])) or ladder[0] < 1:
        raise InputError("parameter ladder must be increasing with minimum >= 1")

    Pp = P.principal()
    m, mu = P.m, P.mu

    low = Pp.part(2 * mu)
    from .symbols import restrict_to_normal

    low_poly = restrict_to_normal(low, xi_prime)
    s_split = split_half_planes(find_roots(low_poly), imag_tol)
    if s_split.upper_count() != mu:
        raise StructuralError(
            f"lowest-order part has {s_split.upper_count()} decaying roots, expected {mu}"
        )
    limit_set = s_split.upper_roots()

    qrep = q_plus(q_polynomial(Pp), P, imag_tol)
    if not qrep.certified_regular:
        raise StructuralError("group verification requires regular degeneration")
    layer = []
    for z, mult in split_half_planes(find_roots(q_polynomial(Pp)), imag_tol).upper:
        layer.extend([z] * mult)
    k1 = qrep.k1

    groups = []
    corrections_by_root: list[list[float]] = [[] for _ in layer]
    for lam in ladder:
        rs = find_roots(Pp.normal_poly(xi_prime, lam))
        split = split_half_planes(rs, imag_tol)
        roots = split.upper_roots()
        if len(roots) != m:
            raise StructuralError(
                f"wrong root count at lam={lam}: {len(roots)} decaying roots, expected {m}"
            )
        targets = list(limit_set) + [lam * t for t in layer]
        cost = np.array([[abs(z - t) for t in targets] for z in roots])
        rows, cols = linear_sum_assignment(cost)
        assign = dict(zip(rows, cols))

        bounded, large, corr = [], [], []
        for i, z in enumerate(roots):
            c = assign[i]
            own = cost[i, c]
            if c < mu:
                other = cost[i, mu:].min() if m > mu else np.inf
            else:
                other = cost[i, :mu].min() if mu > 0 else np.inf
            if abs(own - other) <= ambiguity_tol * max(1.0, abs(z)):
                raise DegenerateProblemError(
                    f"ambiguous group matching at lam={lam}: root {z} is equidistant "
                    "from both groups"
                )
            if c < mu:
                bounded.append(z)
            else:
                j = c - mu
                large.append((z, j))
                corr.append(abs(z - lam * layer[j]))
                corrections_by_root[j].append(abs(z - lam * layer[j]))
        if len(bounded) != mu or len(large) != m - mu:
            raise DegenerateProblemError(
                f"group sizes {len(bounded)}/{len(large)} at lam={lam} do not match "
                f"{mu}/{m - mu}"
            )
        bdist = max(
            (min(abs(z - t) for t in limit_set) for z in bounded),
            default=0.0,
        )
        groups.append(
            RootGroups(lam, tuple(bounded), tuple(large), float(bdist), tuple(corr))
        )

    fitted_K = []
    fitted_exp = []
    logs = np.log(np.array(ladder))
    for series in corrections_by_root:
        arr = np.array(series)
        bound_scale = np.array(ladder) ** (1.0 - 1.0 / k1)
        fitted_K.append(float(np.max(arr / bound_scale)) if len(arr) else 0.0)
        if len(arr) >= 2 and np.all(arr > 1e-13 * np.array(ladder)):
            slope = float(np.polyfit(logs, np.log(arr), 1)[0])
            fitted_exp.append(slope)
        else:
            fitted_exp.append(None)

    dists = [g.bounded_distance for g in groups]
    converges = dists[-1] <= max(1e-8, dists[0] + 1e-12)

    return RootGroupsReport(
        tuple(xi_prime),
        tuple(limit_set),
        tuple(layer),
        k1,
        tuple(groups),
        tuple(fitted_K),
        tuple(fitted_exp),
        converges,
    )
