"""Desk-scale numerical verification of the a priori estimates.

Whole-space estimates are evaluated as quadrature sums of multiplier weights
on a log-radial frequency grid; half-space estimates combine the same
tangential quadrature with exact normal-direction integrals from the
half-line solver, so only the tangential direction is discretized.
Fourier-transform conventions are unitary throughout, so Parseval holds with
constant one on both sides of every estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateProblemError, InputError, StructuralError
from .halfline import ExpPolySolution, SolverConfig, solve_bvp
from .newton import (
    WeightSpec,
    epsilon_shifted_phi,
    epsilon_shifted_weight,
    phi_weight,
    shifted_phi,
    shifted_weight,
    theta_weight,
    weight_equiv,
)
from .symbols import BoundarySet, EpsilonPencil, MultiPoly, OperatorPencil, from_epsilon


# -- spectral grids -----------------------------------------------------------


@dataclass(frozen=True)
class SpectralGrid:
    """Frequency-space quadrature grid, symmetric under xi -> -xi.

    Nodes live on log-spaced radii times a uniform direction set; weights
    realize the polar volume element, so sum(weights * f(nodes)) approximates
    the integral of f over the whole frequency space.
    """

    dim: int
    nodes: np.ndarray  # (N, dim)
    weights: np.ndarray  # (N,)
    radii: np.ndarray  # (N,)
    spec: dict = field(default_factory=dict)

    @classmethod
    def log_radial(
        cls,
        dim: int,
        n_radial: int = 256,
        n_angular: int = 64,
        rmax: float = 32.0,
        rmin: float = 1e-7,
    ) -> "SpectralGrid":
        if dim not in (1, 2, 3):
            raise InputError("spectral grids support dimensions 1, 2 and 3")
        if not (0 < rmin < rmax):
            raise InputError("need 0 < rmin < rmax")
        u = np.linspace(math.log(rmin), math.log(rmax), n_radial)
        h = u[1] - u[0]
        r = np.exp(u)
        trap = np.full(n_radial, h)
        trap[0] *= 0.5
        trap[-1] *= 0.5

        if dim == 1:
            dirs = np.array([[1.0], [-1.0]])
            ang_w = np.ones(2)
            radial_w = trap * r  # dr = r du
        elif dim == 2:
            if n_angular % 2:
                n_angular += 1  # keep the direction set symmetric
            theta = 2 * np.pi * np.arange(n_angular) / n_angular
            dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
            ang_w = np.full(n_angular, 2 * np.pi / n_angular)
            radial_w = trap * r**2  # r dr = r^2 du
        else:
            if n_angular % 2:
                n_angular += 1
            n_polar = max(8, n_angular // 2)
            phi = np.pi * (np.arange(n_polar) + 0.5) / n_polar
            theta = 2 * np.pi * np.arange(n_angular) / n_angular
            dirs_list, ang_list = [], []
            for p in phi:
                for th in theta:
                    dirs_list.append(
                        [math.sin(p) * math.cos(th), math.sin(p) * math.sin(th), math.cos(p)]
                    )
                    ang_list.append(math.sin(p) * (np.pi / n_polar) * (2 * np.pi / n_angular))
            dirs = np.array(dirs_list)
            ang_w = np.array(ang_list)
            radial_w = trap * r**3

        nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
        weights = (radial_w[:, None] * ang_w[None, :]).reshape(-1)
        radii = np.repeat(r, len(dirs))
        return cls(
            dim,
            nodes,
            weights,
            radii,
            {
                "n_radial": n_radial,
                "n_angular": len(dirs),
                "rmin": rmin,
                "rmax": rmax,
            },
        )

    def quad(self, values: np.ndarray) -> float:
        return float(np.sum(self.weights * values))

    def doubled(self) -> "SpectralGrid":
        """Refinement used by stability checks: twice the radial and angular
        resolution and twice the outer truncation radius."""
        return SpectralGrid.log_radial(
            self.dim,
            2 * self.spec["n_radial"],
            2 * self.spec["n_angular"],
            2 * self.spec["rmax"],
            self.spec["rmin"],
        )


# -- frequency-side profiles --------------------------------------------------


def gaussian_profile(sigma: float = 1.0, center=None):
    """Gaussian frequency profile exp(-|xi - c|^2 / (2 sigma^2))."""

    def profile(nodes: np.ndarray) -> np.ndarray:
        nodes = np.atleast_2d(nodes)
        if center is None:
            d2 = np.sum(nodes**2, axis=1)
        else:
            c = np.asarray(center, dtype=float)
            d2 = np.sum((nodes - c) ** 2, axis=1)
        return np.exp(-d2 / (2.0 * sigma**2)).astype(complex)

    profile.label = f"gaussian(sigma={sigma})"
    return profile


def ring_profile(radius: float, sigma: float = 0.25):
    """Radial Gaussian bump concentrated near |xi| = radius."""

    def profile(nodes: np.ndarray) -> np.ndarray:
        nodes = np.atleast_2d(nodes)
        r = np.sqrt(np.sum(nodes**2, axis=1))
        return np.exp(-((r - radius) ** 2) / (2.0 * sigma**2)).astype(complex)

    profile.label = f"ring(radius={radius}, sigma={sigma})"
    return profile


def band_profile(lo: float, hi: float):
    """Indicator of the annulus lo <= |xi| <= hi (sharp band)."""

    def profile(nodes: np.ndarray) -> np.ndarray:
        nodes = np.atleast_2d(nodes)
        r = np.sqrt(np.sum(nodes**2, axis=1))
        return ((r >= lo) & (r <= hi)).astype(complex)

    profile.label = f"band({lo}, {hi})"
    return profile


@dataclass(frozen=True)
class BoundaryDataSpec:
    """Frequency-side boundary data, one profile per boundary operator.

    Profiles must have finite trace-space norms on the truncated grid; the
    optional reference dict records closed-form norms where known.
    """

    profiles: tuple
    label: str = "data"
    l2_refs: dict = field(default_factory=dict)

    def values(self, grid: SpectralGrid) -> np.ndarray:
        return np.stack([np.asarray(p(grid.nodes), dtype=complex) for p in self.profiles])


# -- ratio tables -------------------------------------------------------------


@dataclass(frozen=True)
class RatioRow:
    param: float
    lhs: float
    rhs: float
    ratio: float
    components: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RatioTable:
    rows: tuple
    label: str
    param_name: str = "lambda"
    passed: bool = True
    pass_rule: str = ""

    @property
    def max_ratio(self) -> float:
        return max((r.ratio for r in self.rows), default=0.0)

    @property
    def ratio_spread(self) -> float:
        ratios = [r.ratio for r in self.rows]
        if not ratios or min(ratios) <= 0:
            return math.inf
        return max(ratios) / min(ratios)

    def to_csv(self, path) -> None:
        comp_keys = sorted({k for r in self.rows for k in r.components})
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([self.param_name, "lhs", "rhs", "ratio", *comp_keys])
            for r in self.rows:
                writer.writerow(
                    [repr(r.param), repr(r.lhs), repr(r.rhs), repr(r.ratio)]
                    + [repr(r.components.get(k, "")) for k in comp_keys]
                )

    def to_jsonable(self) -> dict:
        return {
            "label": self.label,
            "param_name": self.param_name,
            "passed": self.passed,
            "pass_rule": self.pass_rule,
            "max_ratio": self.max_ratio,
            "rows": [
                {
                    self.param_name: r.param,
                    "lhs": r.lhs,
                    "rhs": r.rhs,
                    "ratio": r.ratio,
                    "components": {k: v for k, v in sorted(r.components.items())},
                }
                for r in self.rows
            ],
        }


# -- whole-space estimate -----------------------------------------------------


def default_grid(dim: int, lam: float, n_radial: int = 256, n_angular: int = 64,
                 rmin: float = 1e-7) -> SpectralGrid:
    return SpectralGrid.log_radial(
        dim, n_radial, n_angular, rmax=32.0 * max(1.0, lam), rmin=rmin
    )


def wholespace_ratio(
    P: OperatorPencil,
    w: WeightSpec,
    test_functions,
    lambda_ladder,
    n_radial: int = 192,
    n_angular: int = 48,
    margin: float | None = None,
    margin_floor: float = 1e-6,
) -> RatioTable:
    """Two-sided multiplier quadrature of the whole-space estimate.

    lhs weights the spectrum by |xi|^s (lam+|xi|)^(r-s); rhs weights
    A(xi, lam) times the spectrum by the index-shifted weight.  The ratio is
    bounded pointwise by the reciprocal interior margin, which is the PASS
    rule (plus quadrature slack).
    """
    from .elliptic_check import interior_margin

    Pp = P.principal()
    if margin is None:
        rep = interior_margin(Pp, margin_floor=margin_floor)
        if not rep.passed:
            raise StructuralError(
                f"interior lower bound fails (margin {rep.margin:.3e}); "
                "whole-space estimate undefined"
            )
        margin = rep.margin
    w_shift = WeightSpec(w.r - 2 * Pp.m, w.s - 2 * Pp.mu, w.lam0)
    rows = []
    for lam in lambda_ladder:
        grid = default_grid(Pp.n, lam, n_radial, n_angular)
        avals = np.abs(Pp.eval_many(grid.nodes, float(lam)))
        lhs_w = phi_weight(w, grid.radii, float(lam))
        rhs_w = phi_weight(w_shift, grid.radii, float(lam))
        for profile in test_functions:
            spec2 = np.abs(np.asarray(profile(grid.nodes), dtype=complex)) ** 2
            lhs = math.sqrt(grid.quad(lhs_w**2 * spec2))
            rhs = math.sqrt(grid.quad(rhs_w**2 * avals**2 * spec2))
            rows.append(
                RatioRow(
                    float(lam),
                    lhs,
                    rhs,
                    lhs / rhs,
                    {"profile": getattr(profile, "label", "profile")},
                )
            )
    bound = 1.0 / margin
    passed = all(r.ratio <= bound + 0.05 for r in rows)
    return RatioTable(
        tuple(rows),
        "whole-space-estimate",
        "lambda",
        passed,
        f"ratio <= 1/margin + slack = {bound:.6g} + 0.05",
    )


# -- half-space machinery -----------------------------------------------------


@dataclass(frozen=True)
class HalfSpaceSolution:
    """Per-node half-line solutions driven by frequency-side boundary data."""

    grid: SpectralGrid
    lam: float
    solutions: tuple
    data_values: np.ndarray  # (m, N)


def halfspace_solution(
    P: OperatorPencil,
    B: BoundarySet,
    data: BoundaryDataSpec,
    lam: float,
    grid: SpectralGrid,
    config: SolverConfig | None = None,
) -> HalfSpaceSolution:
    """Solve the homogeneous interior equation with the given boundary data
    at every tangential node; solver failures carry the node location."""
    cfg = config or SolverConfig()
    values = data.values(grid)
    if values.shape[0] != P.m:
        raise InputError(f"need {P.m} data profiles, got {values.shape[0]}")
    sols = []
    for i in range(grid.nodes.shape[0]):
        try:
            sols.append(solve_bvp(P, B, grid.nodes[i], lam, values[:, i], cfg))
        except (DegenerateProblemError, StructuralError) as exc:
            raise type(exc)(f"node {i} at xi'={grid.nodes[i].tolist()}: {exc}") from exc
    return HalfSpaceSolution(grid, float(lam), tuple(sols), values)


@dataclass(frozen=True)
class SeminormBreakdown:
    total: float
    slant_seminorm: float
    l2_norm: float
    l2_term: float
    per_l: tuple


def _derivative_norm_table(v: HalfSpaceSolution, l_top: int) -> np.ndarray:
    """norms[l, i] = squared half-line norm of the l-th derivative at node i."""
    n_nodes = len(v.solutions)
    out = np.zeros((l_top + 1, n_nodes))
    for i, sol in enumerate(v.solutions):
        cur = sol
        for l in range(l_top + 1):
            if l > 0:
                cur = cur.differentiate()
            out[l, i] = cur.l2_norm_sq()
    return out


def lhs_seminorm(v: HalfSpaceSolution, w: WeightSpec) -> SeminormBreakdown:
    """Full solution norm: slanted-weight seminorm over derivatives 0..r plus
    the parameter-weighted plain norm.  Normal-direction integrals are exact;
    the tangential direction is quadrature."""
    r_int = int(round(w.r))
    norms = _derivative_norm_table(v, r_int)
    per_l = []
    semi_sq = 0.0
    for l in range(r_int + 1):
        wgt = shifted_phi(w, float(l), v.grid.radii, v.lam)
        term = v.grid.quad(wgt**2 * norms[l])
        per_l.append(term)
        semi_sq += term
    l2 = math.sqrt(v.grid.quad(norms[0]))
    l2_term = v.lam ** (w.r - w.s) * l2
    semi = math.sqrt(semi_sq)
    return SeminormBreakdown(semi + l2_term, semi, l2, l2_term, tuple(per_l))


def boundary_data_norms(
    v: HalfSpaceSolution, B: BoundarySet, w: WeightSpec
) -> list[float]:
    """Trace-space norms of the data components with the order-shifted
    weights."""
    out = []
    for j, mj in enumerate(B.orders):
        wgt = shifted_weight(w, mj + 0.5, v.grid.radii, v.lam)
        out.append(math.sqrt(v.grid.quad(wgt**2 * np.abs(v.data_values[j]) ** 2)))
    return out


def apriori_ratio(
    P: OperatorPencil,
    B: BoundarySet,
    w: WeightSpec,
    data: BoundaryDataSpec,
    lambda_ladder,
    n_radial: int = 256,
    n_angular: int = 64,
    rmin: float = 1e-5,
    stability_factor: float = 2.0,
    config: SolverConfig | None = None,
    grids: dict | None = None,
) -> RatioTable:
    """Half-space a priori estimate on homogeneous interior solutions.

    lhs is the full solution norm; rhs is the sum of the trace norms of the
    boundary data plus the parameter-weighted plain norm.  PASS requires all
    ratios finite and a max/min spread within the stability factor across
    the ladder.
    """
    rows = []
    for lam in lambda_ladder:
        lam = float(lam)
        if lam < w.lam0:
            raise InputError(f"ladder value {lam} below the parameter floor {w.lam0}")
        if grids is not None and lam in grids:
            grid = grids[lam]
        else:
            grid = SpectralGrid.log_radial(
                P.n - 1, n_radial, n_angular, rmax=32.0 * max(1.0, lam), rmin=rmin
            )
        v = halfspace_solution(P, B, data, lam, grid, config)
        lhs = lhs_seminorm(v, w)
        gnorms = boundary_data_norms(v, B, w)
        rhs = sum(gnorms) + lhs.l2_term
        components = {
            "slant_seminorm": lhs.slant_seminorm,
            "l2_term": lhs.l2_term,
        }
        for j, g in enumerate(gnorms, start=1):
            components[f"g{j}_norm"] = g
        rows.append(RatioRow(lam, lhs.total, rhs, lhs.total / rhs, components))
    ratios = [r.ratio for r in rows]
    finite = all(math.isfinite(x) and x > 0 for x in ratios)
    spread = (max(ratios) / min(ratios)) if finite and ratios else math.inf
    passed = finite and spread <= stability_factor
    return RatioTable(
        tuple(rows),
        "half-space-estimate",
        "lambda",
        passed,
        f"ratios finite and spread <= {stability_factor} (got {spread:.3g})",
    )


# -- constant-coefficient whole-space parametrix ------------------------------


def _smooth_cutoff(r: np.ndarray) -> np.ndarray:
    """C-infinity taper: 1 for r <= 1, 0 for r >= 2."""

    def bump(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    up = bump(2.0 - r)
    down = bump(r - 1.0)
    return up / (up + down + 1e-300)


@dataclass(frozen=True)
class ParametrixReport:
    bound_ratio: float
    residual_ratio: float
    solution_norm: float
    source_norm: float
    residual_norm: float
    theta_norm: float


def parametrix_p0(
    P: OperatorPencil,
    w: WeightSpec,
    f_profile,
    lam: float,
    grid: SpectralGrid | None = None,
    margin: float | None = None,
) -> ParametrixReport:
    """High-frequency inverse-symbol parametrix for the whole-space problem.

    The candidate solution spectrum is (1 - psi) * f / A with a smooth cutoff
    psi supported in |xi| <= 2; the remainder spectrum is exactly -psi * f for
    constant coefficients.  Reports the boundedness ratio of the solution in
    the (r, s) scale against the source in the shifted scale, and of the
    remainder against the source in the gain-one scale.
    """
    from .elliptic_check import interior_margin

    Pp = P.principal()
    if lam < w.lam0:
        raise InputError(f"parameter {lam} below the floor {w.lam0}")
    if margin is None:
        rep = interior_margin(Pp)
        if not rep.passed:
            raise StructuralError(
                f"interior lower bound fails (margin {rep.margin:.3e})"
            )
        margin = rep.margin
    if grid is None:
        grid = default_grid(Pp.n, lam)
    fvals = np.asarray(f_profile(grid.nodes), dtype=complex)
    psi = _smooth_cutoff(grid.radii)
    avals = Pp.eval_many(grid.nodes, float(lam))
    guard = np.abs(avals) > 0
    u1 = np.zeros_like(fvals)
    mask = (1.0 - psi) > 0
    u1[mask & guard] = (1.0 - psi[mask & guard]) * fvals[mask & guard] / avals[mask & guard]
    resid = -psi * fvals  # A u1 - f, exact for constant coefficients

    w_shift = WeightSpec(w.r - 2 * Pp.m, w.s - 2 * Pp.mu, w.lam0)
    sol_norm = math.sqrt(grid.quad(weight_equiv(w, grid.radii, lam) ** 2 * np.abs(u1) ** 2))
    src_norm = math.sqrt(
        grid.quad(weight_equiv(w_shift, grid.radii, lam) ** 2 * np.abs(fvals) ** 2)
    )
    res_norm = math.sqrt(
        grid.quad(weight_equiv(w_shift, grid.radii, lam) ** 2 * np.abs(resid) ** 2)
    )
    theta_norm = math.sqrt(
        grid.quad(theta_weight(w, Pp.m, Pp.mu, grid.radii, lam) ** 2 * np.abs(fvals) ** 2)
    )
    return ParametrixReport(
        bound_ratio=sol_norm / src_norm if src_norm > 0 else 0.0,
        residual_ratio=res_norm / theta_norm if theta_norm > 0 else 0.0,
        solution_norm=sol_norm,
        source_norm=src_norm,
        residual_norm=res_norm,
        theta_norm=theta_norm,
    )


# -- dilation identity --------------------------------------------------------


def scaling_identity_test(
    p: MultiPoly,
    profile,
    rho_values,
    grid: SpectralGrid | None = None,
) -> float:
    """Frequency-side dilation identity of multiplier operators.

    Applying the multiplier p to a rho-dilated spectrum must equal dilating
    the spectrum produced by the rho-scaled symbol; the identity is exact, so
    the returned max deviation is pure rounding.
    """
    if grid is None:
        grid = SpectralGrid.log_radial(p.n, 128, 32, rmax=16.0)
    worst = 0.0
    pvals = p.eval_many(grid.nodes)
    for rho in rho_values:
        if rho <= 0:
            raise InputError("dilation factor must be positive")
        shifted = np.asarray(profile(grid.nodes / rho), dtype=complex) * rho ** (-p.n)
        lhs = pvals * shifted
        rhs = p.scale(rho).eval_many(grid.nodes / rho) * shifted
        scale = max(1.0, float(np.max(np.abs(lhs))))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / scale)
    return worst


# -- small-parameter estimate -------------------------------------------------


def eps_apriori(
    Pe: EpsilonPencil,
    B: BoundarySet,
    w: WeightSpec,
    data: BoundaryDataSpec,
    eps_ladder,
    n_radial: int = 256,
    n_angular: int = 64,
    rmin: float = 1e-5,
    stability_factor: float = 2.0,
    config: SolverConfig | None = None,
) -> RatioTable:
    """Small-parameter form of the half-space estimate.

    Both sides are computed directly from the small-parameter weights
    (including the layer-side prefactors eps^(m_j + 1/2 - s)); the row
    components also carry the large-parameter quantities rescaled by
    eps^(r-s) so the translation identity can be checked to rounding.
    """
    P = from_epsilon(Pe)
    r_int = int(round(w.r))
    rows = []
    for eps in eps_ladder:
        eps = float(eps)
        if eps <= 0:
            raise InputError("small parameter must be positive")
        lam = 1.0 / eps
        grid = SpectralGrid.log_radial(
            P.n - 1, n_radial, n_angular, rmax=32.0 * max(1.0, lam), rmin=rmin
        )
        v = halfspace_solution(P, B, data, lam, grid, config)
        norms = _derivative_norm_table(v, r_int)

        semi_sq = 0.0
        for l in range(r_int + 1):
            wgt = epsilon_shifted_phi(w, eps, float(l), grid.radii)
            semi_sq += grid.quad(wgt**2 * norms[l])
        l2 = math.sqrt(grid.quad(norms[0]))
        lhs = math.sqrt(semi_sq) + l2

        gterms = []
        for j, mj in enumerate(B.orders):
            wgt = epsilon_shifted_weight(w, eps, mj + 0.5, grid.radii)
            gnorm = math.sqrt(grid.quad(wgt**2 * np.abs(v.data_values[j]) ** 2))
            pref = 1.0 if (j + 1) <= P.mu else eps ** (mj + 0.5 - w.s)
            gterms.append(pref * gnorm)
        rhs = sum(gterms) + l2

        # large-parameter route, rescaled by the translation factor
        lam_side = lhs_seminorm(v, w)
        gnorms_lam = boundary_data_norms(v, B, w)
        factor = eps ** (w.r - w.s)
        components = {
            "l2_norm": l2,
            "lhs_lambda_rescaled": factor * lam_side.total,
            "rhs_lambda_rescaled": factor * (sum(gnorms_lam) + lam_side.l2_term),
        }
        for j, g in enumerate(gterms, start=1):
            components[f"g{j}_term"] = g
        rows.append(RatioRow(eps, lhs, rhs, lhs / rhs, components))

    ratios = [r.ratio for r in rows]
    finite = all(math.isfinite(x) and x > 0 for x in ratios)
    spread = (max(ratios) / min(ratios)) if finite and ratios else math.inf
    consistency = 0.0
    for r in rows:
        consistency = max(
            consistency,
            abs(r.lhs - r.components["lhs_lambda_rescaled"]) / r.lhs,
            abs(r.rhs - r.components["rhs_lambda_rescaled"]) / r.rhs,
        )
    passed = finite and spread <= stability_factor and consistency <= 1e-8
    return RatioTable(
        tuple(rows),
        "small-parameter-estimate",
        "epsilon",
        passed,
        f"ratios finite, spread <= {stability_factor} (got {spread:.3g}), "
        f"translation consistency {consistency:.2e} <= 1e-08",
    )
