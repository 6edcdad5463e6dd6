"""Quantitative ellipticity checks with margin certificates.

All four conditions of the parameter-ellipticity definition are decided on
compact search sets (hemispheres and spheres in frequency-parameter space),
with grid search plus golden-section local refinement, and each verdict
carries the best constant found together with its witness location.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateProblemError, InputError, StructuralError
from .rootsplit import a_plus_factor, find_roots, q_plus, q_polynomial, split_half_planes
from .symbols import (
    BoundarySet,
    EpsilonPencil,
    OperatorPencil,
    UniPoly,
    from_epsilon,
    restrict_to_normal,
)


@dataclass(frozen=True)
class CheckConfig:
    grid_n: int = 200
    angular_grid: int = 48
    psi_grid: int = 96
    pole_cutoff: float = 1e-3
    margin_floor: float = 1e-6
    det_floor: float = 1e-8
    imag_tol: float | None = None
    refine: bool = True
    search_scale: float = 1.0
    decay_lambdas: tuple = (1.0,)

    def to_jsonable(self) -> dict:
        return {
            "grid_n": self.grid_n,
            "angular_grid": self.angular_grid,
            "psi_grid": self.psi_grid,
            "pole_cutoff": self.pole_cutoff,
            "margin_floor": self.margin_floor,
            "det_floor": self.det_floor,
            "imag_tol": self.imag_tol,
            "refine": self.refine,
            "search_scale": self.search_scale,
            "decay_lambdas": list(self.decay_lambdas),
        }


@dataclass(frozen=True)
class MarginReport:
    margin: float
    argmin_xi: tuple
    argmin_lambda: float
    grid_spec: dict
    passed: bool


@dataclass(frozen=True)
class LopMatrix:
    """Coefficient matrix of the boundary symbols reduced modulo the
    decaying factor; row j holds the coefficients of the remainder of
    boundary symbol j in ascending powers of the normal covariable."""

    entries: np.ndarray
    xi_prime: tuple
    lam: float


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    value: float | None = None
    witness: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    indeterminate: bool = False

    def to_jsonable(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "witness": _jsonable(self.witness),
            "details": _jsonable(self.details),
            "indeterminate": self.indeterminate,
        }


@dataclass(frozen=True)
class EllipticityReport:
    conditions: tuple
    config: CheckConfig

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def indeterminate(self) -> bool:
        return any(c.indeterminate for c in self.conditions)

    def condition(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_jsonable(self) -> dict:
        return {
            "overall": self.overall,
            "indeterminate": self.indeterminate,
            "conditions": [c.to_jsonable() for c in self.conditions],
            "config": self.config.to_jsonable(),
        }

    def format_text(self) -> str:
        lines = []
        for c in self.conditions:
            status = "PASS" if c.passed else ("INDET" if c.indeterminate else "FAIL")
            val = "" if c.value is None else f"  value={c.value:.6g}"
            lines.append(f"  [{status}] {c.name}{val}")
        verdict = "PASS" if self.overall else "FAIL"
        lines.append(f"overall: {verdict}")
        return "\n".join(lines)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# -- search-set geometry -----------------------------------------------------


def unit_sphere_grid(dim: int, count: int) -> np.ndarray:
    """Directions on the unit sphere of the given dimension.

    dim = 1 gives {+1, -1}; dim = 2 a uniform circle; dim >= 3 a product of
    spherical angles with the count spread across the angular factors.
    """
    if dim < 1:
        raise InputError("sphere dimension must be >= 1")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        theta = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    per_axis = max(8, int(round(count ** (1.0 / (dim - 1)))))
    polar = [np.linspace(0.0, np.pi, per_axis) for _ in range(dim - 2)]
    azimuth = np.linspace(0.0, 2 * np.pi, per_axis, endpoint=False)
    out = []
    for angles in itertools.product(*polar, azimuth):
        v = []
        sin_acc = 1.0
        for a in angles:
            v.append(sin_acc * math.cos(a))
            sin_acc *= math.sin(a)
        v.append(sin_acc)
        out.append(v)
    return np.unique(np.round(np.array(out), 12), axis=0)


def _psi_samples(grid_n: int) -> np.ndarray:
    """Polar angles in (0, pi/2]; a geometric tail resolves the small-frequency
    limit where the ratio approaches the lowest-order part."""
    base = (np.pi / 2) * np.arange(1, grid_n + 1) / grid_n
    tail = (np.pi / 2) * 10.0 ** (-np.arange(1, 9, dtype=float))
    return np.unique(np.concatenate([base, tail]))


def _golden_min(f, lo: float, hi: float, iters: int = 60) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def interior_margin(
    P: OperatorPencil,
    grid_n: int = 200,
    margin_floor: float = 1e-6,
    refine: bool = True,
    search_scale: float = 1.0,
) -> MarginReport:
    """Best lower-bound constant of the principal symbol against the
    two-scale weight, minimized over the compact hemisphere
    |xi|^2 + lam^2 = 1, lam >= 0, xi != 0.

    The objective is scale-invariant (numerator and denominator are both
    jointly homogeneous of the pencil order), so the hemisphere search is
    exhaustive up to grid resolution; a golden-section sweep refines the
    best cell.
    """
    Pp = P.principal()
    n, m, mu = Pp.n, Pp.m, Pp.mu
    psis = _psi_samples(grid_n)
    dirs = unit_sphere_grid(n, grid_n)

    def objective(psi: float, omega: np.ndarray) -> float:
        t = math.sin(psi)
        lam = max(math.cos(psi), 0.0)
        xi = search_scale * t * omega
        num = abs(Pp.eval(xi, search_scale * lam))
        den = (search_scale * t) ** (2 * mu) * (search_scale * (lam + t)) ** (2 * m - 2 * mu)
        return num / den

    best = (math.inf, 0.0, dirs[0])
    # vectorised sweep over the product grid
    for omega in dirs:
        t = np.sin(psis)
        lam = np.clip(np.cos(psis), 0.0, None)
        pts = search_scale * t[:, None] * omega[None, :]
        num = np.abs(Pp.eval_many(pts, search_scale * lam))
        den = (search_scale * t) ** (2 * mu) * (search_scale * (lam + t)) ** (2 * m - 2 * mu)
        vals = num / den
        k = int(np.argmin(vals))
        if vals[k] < best[0]:
            best = (float(vals[k]), float(psis[k]), omega)

    margin, psi_star, omega_star = best
    if refine:
        dpsi = (np.pi / 2) / grid_n
        lo = max(psi_star - dpsi, 1e-12)
        hi = min(psi_star + dpsi, np.pi / 2)
        psi_ref, val = _golden_min(lambda p: objective(p, omega_star), lo, hi)
        if val < margin:
            margin, psi_star = val, psi_ref
        if n == 2:
            theta0 = math.atan2(omega_star[1], omega_star[0])
            dth = 2 * np.pi / grid_n

            def obj_theta(th):
                return objective(psi_star, np.array([math.cos(th), math.sin(th)]))

            th_ref, val = _golden_min(obj_theta, theta0 - dth, theta0 + dth)
            if val < margin:
                margin = val
                omega_star = np.array([math.cos(th_ref), math.sin(th_ref)])
            psi_ref, val = _golden_min(
                lambda p: objective(p, omega_star),
                max(psi_star - dpsi, 1e-12),
                min(psi_star + dpsi, np.pi / 2),
            )
            if val < margin:
                margin, psi_star = val, psi_ref

    xi_star = math.sin(psi_star) * omega_star
    lam_star = max(math.cos(psi_star), 0.0)
    return MarginReport(
        margin=float(margin),
        argmin_xi=tuple(float(x) for x in xi_star),
        argmin_lambda=float(lam_star),
        grid_spec={"grid_n": grid_n, "refined": refine, "search_scale": search_scale},
        passed=bool(margin > margin_floor),
    )


# -- boundary machinery -------------------------------------------------------


def _remainder_rows(bpolys: list[UniPoly], divisor: UniPoly) -> np.ndarray:
    size = divisor.degree()
    rows = np.zeros((len(bpolys), size), dtype=complex)
    for i, b in enumerate(bpolys):
        _, rem = b.divmod_by(divisor)
        for k, c in enumerate(rem.coeffs):
            rows[i, k] = c
    return rows


def lopatinskii_matrix(
    P: OperatorPencil,
    B: BoundarySet,
    xi_prime,
    lam: float,
    imag_tol: float | None = None,
) -> LopMatrix:
    """m x m coefficient matrix of the boundary symbols reduced modulo the
    decaying factor of the normal symbol at (xi', lam)."""
    xi_prime = np.asarray(xi_prime, dtype=float)
    aplus = a_plus_factor(P, xi_prime, lam, imag_tol=imag_tol)
    rows = _remainder_rows(B.normal_polys(xi_prime), aplus)
    return LopMatrix(rows, tuple(xi_prime), float(lam))


def lopatinskii_det(
    P: OperatorPencil,
    B: BoundarySet,
    xi_prime,
    lam: float,
    imag_tol: float | None = None,
) -> complex:
    return complex(np.linalg.det(lopatinskii_matrix(P, B, xi_prime, lam, imag_tol).entries))


def check_regular_degeneration(
    P: OperatorPencil, imag_tol: float | None = None
) -> ConditionResult:
    """Verdict on the boundary-layer root count of the reduced polynomial."""
    try:
        Q = q_polynomial(P)
        rep = q_plus(Q, P, imag_tol)
    except (StructuralError, DegenerateProblemError) as exc:
        return ConditionResult(
            "regular_degeneration",
            passed=False,
            details={"error": str(exc)},
        )
    return ConditionResult(
        "regular_degeneration",
        passed=bool(rep.certified_regular),
        indeterminate=rep.indeterminate,
        value=float(rep.upper_count),
        details={
            "expected": rep.expected,
            "k1": rep.k1,
            "near_real": [[z, m] for z, m in rep.near_real],
        },
    )


def condition_b_scan(
    P: OperatorPencil,
    B: BoundarySet,
    angular_grid: int = 48,
    psi_grid: int = 96,
    pole_cutoff: float = 1e-3,
    det_floor: float = 1e-8,
    decay_lambdas=(1.0,),
    imag_tol: float | None = None,
    search_scale: float = 1.0,
) -> ConditionResult:
    """Minimum of |det| of the reduced boundary matrix over the compact set
    |xi'|^2 + lam^2 = 1, lam >= 0, |xi'| >= pole_cutoff, plus the fitted
    decay exponent of the determinant along rays xi' -> 0 at fixed lam.

    The determinant needs xi' != 0, so the pole cap is excluded from the
    scan and the behaviour near it is reported as an exponent instead.
    """
    if not (0.0 < pole_cutoff < 1.0):
        raise InputError("pole cutoff must lie in (0, 1)")
    dirs = unit_sphere_grid(P.n - 1, angular_grid)
    psi_lo = math.asin(pole_cutoff)
    psis = np.linspace(psi_lo, np.pi / 2, psi_grid)

    best = (math.inf, None)
    indeterminate = False
    notes = []
    for omega in dirs:
        for psi in psis:
            xi = search_scale * math.sin(psi) * omega
            lam = search_scale * max(math.cos(psi), 0.0)
            try:
                val = abs(lopatinskii_det(P, B, xi, lam, imag_tol))
            except DegenerateProblemError as exc:
                indeterminate = True
                notes.append(str(exc))
                continue
            if val < best[0]:
                best = (val, {"xi_prime": list(xi), "lambda": lam})

    # decay-rate fit toward the excluded pole
    exponents = {}
    radii = 10.0 ** (-np.arange(0, 6, dtype=float))
    e1 = dirs[0]
    for lam_c in decay_lambdas:
        vals = []
        for rad in radii:
            try:
                vals.append(abs(lopatinskii_det(P, B, rad * e1, lam_c, imag_tol)))
            except DegenerateProblemError:
                vals.append(np.nan)
        vals = np.array(vals)
        if np.any(~np.isfinite(vals)) or np.any(vals < 1e-250):
            exponents[lam_c] = None
        else:
            exponents[lam_c] = float(np.polyfit(np.log(radii), np.log(vals), 1)[0])

    min_val = best[0] if best[0] < math.inf else 0.0
    return ConditionResult(
        "boundary_independence",
        passed=bool(min_val > det_floor and not indeterminate),
        value=float(min_val),
        witness=best[1] or {},
        details={
            "decay_exponents": {str(k): v for k, v in exponents.items()},
            "pole_cutoff": pole_cutoff,
            "notes": notes[:3],
        },
        indeterminate=indeterminate,
    )


def condition_c(
    P: OperatorPencil,
    B: BoundarySet,
    angular_grid: int = 48,
    det_floor: float = 1e-8,
    imag_tol: float | None = None,
) -> ConditionResult:
    """Covering condition of the first mu boundary operators against the
    lowest-order part, scanned over unit tangential frequencies."""
    mu = P.mu
    if mu == 0:
        return ConditionResult("covering_low_order", passed=True, value=math.inf)
    low = P.principal().part(2 * mu)
    dirs = unit_sphere_grid(P.n - 1, angular_grid)
    best = (math.inf, None)
    indeterminate = False
    for omega in dirs:
        poly = restrict_to_normal(low, omega)
        try:
            split = split_half_planes(find_roots(poly), imag_tol)
        except DegenerateProblemError:
            indeterminate = True
            continue
        if split.upper_count() != mu:
            return ConditionResult(
                "covering_low_order",
                passed=False,
                details={
                    "error": f"lowest-order part has {split.upper_count()} decaying "
                    f"roots at {list(omega)}, expected {mu}"
                },
            )
        factor = UniPoly.from_roots(split.upper_roots())
        rows = _remainder_rows(B.normal_polys(omega)[:mu], factor)
        val = abs(np.linalg.det(rows))
        if val < best[0]:
            best = (val, {"xi_prime": list(omega)})
    return ConditionResult(
        "covering_low_order",
        passed=bool(best[0] > det_floor and not indeterminate),
        value=float(best[0] if best[0] < math.inf else 0.0),
        witness=best[1] or {},
        indeterminate=indeterminate,
    )


def condition_d(
    P: OperatorPencil,
    B: BoundarySet,
    det_floor: float = 1e-8,
    imag_tol: float | None = None,
) -> ConditionResult:
    """Independence of the layer-side boundary symbols at zero tangential
    frequency modulo the decaying factor of the reduced polynomial."""
    try:
        Q = q_polynomial(P)
        rep = q_plus(Q, P, imag_tol)
    except (StructuralError, DegenerateProblemError) as exc:
        return ConditionResult(
            "layer_independence", passed=False, details={"error": str(exc)}
        )
    if not rep.certified_regular:
        return ConditionResult(
            "layer_independence",
            passed=False,
            indeterminate=rep.indeterminate,
            details={"error": "requires regular degeneration"},
        )
    zero = np.zeros(P.n - 1)
    polys = B.normal_polys(zero)[P.mu :]
    rows = _remainder_rows(polys, rep.q_plus)
    val = abs(np.linalg.det(rows))
    return ConditionResult(
        "layer_independence",
        passed=bool(val > det_floor),
        value=float(val),
    )


def full_check(
    P: OperatorPencil, B: BoundarySet, config: CheckConfig | None = None
) -> EllipticityReport:
    """All conditions of parameter ellipticity for the boundary problem,
    aggregated into one report; failures are verdicts, not exceptions."""
    cfg = config or CheckConfig()
    margin = interior_margin(
        P,
        grid_n=cfg.grid_n,
        margin_floor=cfg.margin_floor,
        refine=cfg.refine,
        search_scale=cfg.search_scale,
    )
    cond_a = ConditionResult(
        "interior_lower_bound",
        passed=margin.passed,
        value=margin.margin,
        witness={"xi": list(margin.argmin_xi), "lambda": margin.argmin_lambda},
        details={"grid": margin.grid_spec, "margin_floor": cfg.margin_floor},
    )
    cond_reg = check_regular_degeneration(P, cfg.imag_tol)
    try:
        cond_b = condition_b_scan(
            P,
            B,
            angular_grid=cfg.angular_grid,
            psi_grid=cfg.psi_grid,
            pole_cutoff=cfg.pole_cutoff,
            det_floor=cfg.det_floor,
            decay_lambdas=cfg.decay_lambdas,
            imag_tol=cfg.imag_tol,
            search_scale=cfg.search_scale,
        )
    except StructuralError as exc:
        cond_b = ConditionResult(
            "boundary_independence", passed=False, details={"error": str(exc)}
        )
    cond_c = condition_c(
        P, B, angular_grid=cfg.angular_grid, det_floor=cfg.det_floor, imag_tol=cfg.imag_tol
    )
    cond_d = condition_d(P, B, det_floor=cfg.det_floor, imag_tol=cfg.imag_tol)
    return EllipticityReport(
        conditions=(cond_a, cond_reg, cond_b, cond_c, cond_d),
        config=cfg,
    )


def check_epsilon(
    Pe: EpsilonPencil, B: BoundarySet, config: CheckConfig | None = None
) -> EllipticityReport:
    """Checks for the small-parameter form: translate to the large-parameter
    pencil, run the full check, and additionally decide the classical
    covering condition of the top-order part (the infinite-parameter
    endpoint, equivalently the boundary independence at lam = 0)."""
    cfg = config or CheckConfig()
    P = from_epsilon(Pe)
    base = full_check(P, B, cfg)

    dirs = unit_sphere_grid(P.n - 1, cfg.angular_grid)
    best = (math.inf, None)
    indeterminate = False
    err = None
    for omega in dirs:
        try:
            val = abs(lopatinskii_det(P, B, omega, 0.0, cfg.imag_tol))
        except DegenerateProblemError as exc:
            indeterminate = True
            err = str(exc)
            continue
        except StructuralError as exc:
            return EllipticityReport(
                conditions=base.conditions
                + (
                    ConditionResult(
                        "endpoint_top_order", passed=False, details={"error": str(exc)}
                    ),
                ),
                config=cfg,
            )
        if val < best[0]:
            best = (val, {"xi_prime": list(omega)})
    endpoint = ConditionResult(
        "endpoint_top_order",
        passed=bool(best[0] > cfg.det_floor and not indeterminate),
        value=float(best[0] if best[0] < math.inf else 0.0),
        witness=best[1] or {},
        details={} if err is None else {"error": err},
        indeterminate=indeterminate,
    )
    return EllipticityReport(conditions=base.conditions + (endpoint,), config=cfg)
