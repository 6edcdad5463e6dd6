"""Newton polygon construction and the weight functions built on it.

The polygon N(r, s) is the convex hull of (0,0), (0,r-s), (s,r-s), (r,0).
Weights are evaluated through the equivalent product form everywhere norms
are computed; the lattice sum exists for polygon-level tests only.  Product
weights accept arbitrary real indices, including negative ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class NewtonPolygon:
    r: int
    s: int
    vertices: tuple
    integer_points: tuple


@dataclass(frozen=True)
class WeightSpec:
    """Generalized polygon indices (real allowed) and the parameter floor
    used by estimate contexts."""

    r: float
    s: float
    lam0: float = 1.0


def build_polygon(r: int, s: int) -> NewtonPolygon:
    """Vertices and all lattice points of the polygon N(r, s), r > s >= 0.

    Hull inequalities: i >= 0, k >= 0, k <= r - s, i + k <= r (the slanted
    edge joins (s, r-s) to (r, 0) with slope -1).
    """
    r, s = int(r), int(s)
    if not (r > s >= 0):
        raise InputError(f"polygon indices need r > s >= 0, got r={r}, s={s}")
    verts = [(0, 0), (0, r - s), (s, r - s), (r, 0)]
    seen: list[tuple[int, int]] = []
    for v in verts:
        if v not in seen:
            seen.append(v)
    points = [
        (i, k)
        for k in range(r - s + 1)
        for i in range(r - k + 1)
    ]
    return NewtonPolygon(r, s, tuple(seen), tuple(points))


def weight_sum(N: NewtonPolygon, xi_norm: float, lam: float) -> float:
    """Lattice sum of |xi|^i lam^k over the polygon's integer points (>= 1)."""
    xi_norm = np.asarray(xi_norm, dtype=float)
    lam = np.asarray(lam, dtype=float)
    total = np.zeros(np.broadcast(xi_norm, lam).shape)
    for i, k in N.integer_points:
        total = total + xi_norm**i * lam**k
    if total.ndim == 0:
        return float(total)
    return total


def weight_equiv(w: WeightSpec, xi_norm, lam):
    """Product form (1+|xi|)^s (lam+|xi|)^(r-s), defined for all real r, s."""
    xi_norm = np.asarray(xi_norm, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = (1.0 + xi_norm) ** w.s * (lam + xi_norm) ** (w.r - w.s)
    if out.ndim == 0:
        return float(out)
    return out


def shifted_weight(w: WeightSpec, l: float, xi_norm, lam):
    """Weight of the polygon shifted left by l:
    (1+|xi|)^(s-l) (lam+|xi|)^(r-s) for l <= s, else (lam+|xi|)^(r-l)."""
    xi_norm = np.asarray(xi_norm, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if l <= w.s:
        out = (1.0 + xi_norm) ** (w.s - l) * (lam + xi_norm) ** (w.r - w.s)
    else:
        out = (lam + xi_norm) ** (w.r - l)
    if out.ndim == 0:
        return float(out)
    return out


def phi_weight(w: WeightSpec, xi_norm, lam):
    """Slanted-side weight |xi|^s (lam+|xi|)^(r-s); vanishes at xi = 0 for s > 0."""
    xi_norm = np.asarray(xi_norm, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = xi_norm**w.s * (lam + xi_norm) ** (w.r - w.s)
    if out.ndim == 0:
        return float(out)
    return out


def shifted_phi(w: WeightSpec, l: float, xi_norm, lam):
    """Shifted slanted-side weight:
    |xi|^(s-l) (lam+|xi|)^(r-s) for l <= s, else (lam+|xi|)^(r-l)."""
    xi_norm = np.asarray(xi_norm, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if l <= w.s:
        out = xi_norm ** (w.s - l) * (lam + xi_norm) ** (w.r - w.s)
    else:
        out = (lam + xi_norm) ** (w.r - l)
    if out.ndim == 0:
        return float(out)
    return out


def theta_weight(w: WeightSpec, m: int, mu: int, xi_norm, lam):
    """Remainder weight (1+|xi|) * product weight at indices (r-2m, s-2mu)."""
    shifted = WeightSpec(w.r - 2 * m, w.s - 2 * mu, w.lam0)
    xi_arr = np.asarray(xi_norm, dtype=float)
    out = (1.0 + xi_arr) * weight_equiv(shifted, xi_arr, lam)
    if np.ndim(out) == 0:
        return float(out)
    return out


def epsilon_weight(w: WeightSpec, eps: float, xi_norm):
    """Small-parameter weight (1+|xi|)^s (1+eps|xi|)^(r-s).

    Satisfies the translation identity
    epsilon_weight(w, eps, xi) = eps^(r-s) * weight_equiv(w, xi, 1/eps).
    """
    if eps <= 0:
        raise InputError("small parameter must be positive")
    xi_norm = np.asarray(xi_norm, dtype=float)
    out = (1.0 + xi_norm) ** w.s * (1.0 + eps * xi_norm) ** (w.r - w.s)
    if out.ndim == 0:
        return float(out)
    return out


def epsilon_shifted_weight(w: WeightSpec, eps: float, l: float, xi_norm):
    """Small-parameter form of the shifted weight:
    (1+|xi|)^(s-l) (1+eps|xi|)^(r-s) for l <= s, else (1+eps|xi|)^(r-l).

    Matches eps^(r-s) (resp. eps^(r-l)) times the large-parameter shifted
    weight at lam = 1/eps.
    """
    if eps <= 0:
        raise InputError("small parameter must be positive")
    xi_norm = np.asarray(xi_norm, dtype=float)
    if l <= w.s:
        out = (1.0 + xi_norm) ** (w.s - l) * (1.0 + eps * xi_norm) ** (w.r - w.s)
    else:
        out = (1.0 + eps * xi_norm) ** (w.r - l)
    if out.ndim == 0:
        return float(out)
    return out


def epsilon_shifted_phi(w: WeightSpec, eps: float, l: float, xi_norm):
    """Small-parameter slanted-side shifted weight:
    |xi|^(s-l) (1+eps|xi|)^(r-s) for l <= s, else eps^(l-s) (1+eps|xi|)^(r-l).

    Equals eps^(r-s) times the large-parameter shifted slanted weight at
    lam = 1/eps for every l.
    """
    if eps <= 0:
        raise InputError("small parameter must be positive")
    xi_norm = np.asarray(xi_norm, dtype=float)
    if l <= w.s:
        out = xi_norm ** (w.s - l) * (1.0 + eps * xi_norm) ** (w.r - w.s)
    else:
        out = eps ** (l - w.s) * (1.0 + eps * xi_norm) ** (w.r - l)
    if out.ndim == 0:
        return float(out)
    return out


def polygon_to_json(N: NewtonPolygon) -> str:
    return json.dumps(
        {
            "r": N.r,
            "s": N.s,
            "vertices": [list(v) for v in N.vertices],
            "points": [list(p) for p in N.integer_points],
        },
        sort_keys=True,
    )
