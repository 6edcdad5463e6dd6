"""Polynomial and pencil algebra.

Constant-coefficient multivariate symbols, univariate polynomials in the
normal covariable, parameter pencils, boundary operator sets, and the
translation between the small-parameter and large-parameter forms of a
pencil.  All types are immutable after construction and all operations are
pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError

MultiIndex = tuple[int, ...]


def _as_multi_index(alpha: Iterable[int], n: int) -> MultiIndex:
    out = tuple(int(a) for a in alpha)
    if len(out) != n:
        raise InputError(f"multi-index {out} has length {len(out)}, expected {n}")
    if any(a < 0 for a in out):
        raise InputError(f"multi-index {out} has negative entries")
    return out


@dataclass(frozen=True)
class MultiPoly:
    """Multivariate polynomial in n real covariables with complex coefficients.

    Terms are stored as a map multi-index -> coefficient; exact zero
    coefficients are pruned (no epsilon pruning, so degrees never change
    silently).
    """

    n: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise InputError("dimension must be >= 1")
        cleaned: dict[MultiIndex, complex] = {}
        for alpha, c in self.terms.items():
            key = _as_multi_index(alpha, self.n)
            c = complex(c)
            if c != 0:
                cleaned[key] = cleaned.get(key, 0.0) + c
        cleaned = {a: c for a, c in cleaned.items() if c != 0}
        object.__setattr__(self, "terms", cleaned)

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "MultiPoly":
        return cls(n, {})

    @classmethod
    def constant(cls, n: int, c: complex) -> "MultiPoly":
        return cls(n, {(0,) * n: c})

    @classmethod
    def monomial(cls, n: int, alpha: Iterable[int], c: complex = 1.0) -> "MultiPoly":
        return cls(n, {tuple(alpha): c})

    @classmethod
    def variable(cls, n: int, i: int) -> "MultiPoly":
        alpha = [0] * n
        alpha[i] = 1
        return cls(n, {tuple(alpha): 1.0})

    # -- algebra -----------------------------------------------------------
    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        if self.n != other.n:
            raise InputError("dimension mismatch")
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0.0) + c
        return MultiPoly(self.n, out)

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.n, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if self.n != other.n:
                raise InputError("dimension mismatch")
            out: dict[MultiIndex, complex] = {}
            for a, ca in self.terms.items():
                for b, cb in other.terms.items():
                    key = tuple(x + y for x, y in zip(a, b))
                    out[key] = out.get(key, 0.0) + ca * cb
            return MultiPoly(self.n, out)
        return MultiPoly(self.n, {a: c * other for a, c in self.terms.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise InputError("negative power")
        out = MultiPoly.constant(self.n, 1.0)
        for _ in range(k):
            out = out * self
        return out

    # -- queries -----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(a) for a in self.terms)

    def homogeneous_part(self, d: int) -> "MultiPoly":
        if d < 0:
            raise InputError("degree filter must be >= 0")
        return MultiPoly(self.n, {a: c for a, c in self.terms.items() if sum(a) == d})

    def is_homogeneous(self, d: int) -> bool:
        return all(sum(a) == d for a in self.terms)

    def eval(self, z: Sequence[complex]) -> complex:
        z = np.asarray(z)
        if z.shape != (self.n,):
            raise InputError(f"evaluation point has shape {z.shape}, expected ({self.n},)")
        total = 0.0 + 0.0j
        for alpha, c in self.terms.items():
            term = c
            for zi, ai in zip(z, alpha):
                if ai:
                    term = term * zi**ai
            total += term
        return complex(total)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorised evaluation on an (N, n) array of points."""
        points = np.asarray(points)
        if points.ndim != 2 or points.shape[1] != self.n:
            raise InputError(f"points must have shape (N, {self.n})")
        total = np.zeros(points.shape[0], dtype=complex)
        for alpha, c in self.terms.items():
            term = np.full(points.shape[0], c, dtype=complex)
            for i, ai in enumerate(alpha):
                if ai:
                    term = term * points[:, i] ** ai
            total += term
        return total

    def scale(self, rho: float) -> "MultiPoly":
        """Symbol of the rho-dilated operator: coefficients times rho^|alpha|."""
        if rho <= 0:
            raise InputError("scaling factor must be positive")
        return MultiPoly(self.n, {a: c * rho ** sum(a) for a, c in self.terms.items()})


@dataclass(frozen=True)
class UniPoly:
    """Univariate polynomial, complex coefficients in ascending degree order.

    Trailing zero coefficients are trimmed; the zero polynomial has an empty
    coefficient tuple and degree -1.
    """

    coeffs: tuple = ()

    def __post_init__(self):
        c = [complex(x) for x in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_roots(cls, roots: Iterable[complex], leading: complex = 1.0) -> "UniPoly":
        c = np.array([leading], dtype=complex)
        for r in roots:
            c = np.convolve(c, np.array([-r, 1.0], dtype=complex))
        return cls(tuple(c))

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=complex)
        out = np.zeros_like(tau)
        for c in reversed(self.coeffs):
            out = out * tau + c
        if out.ndim == 0:
            return complex(out)
        return out

    def deriv(self, q: int = 1) -> "UniPoly":
        c = list(self.coeffs)
        for _ in range(q):
            c = [k * c[k] for k in range(1, len(c))]
        return UniPoly(tuple(c))

    def monic(self) -> "UniPoly":
        if self.is_zero():
            raise InputError("zero polynomial has no monic form")
        lead = self.coeffs[-1]
        return UniPoly(tuple(c / lead for c in self.coeffs))

    def __add__(self, other: "UniPoly") -> "UniPoly":
        a, b = list(self.coeffs), list(other.coeffs)
        if len(a) < len(b):
            a, b = b, a
        for i, c in enumerate(b):
            a[i] += c
        return UniPoly(tuple(a))

    def __neg__(self) -> "UniPoly":
        return UniPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + (-other)

    def __mul__(self, other) -> "UniPoly":
        if isinstance(other, UniPoly):
            if self.is_zero() or other.is_zero():
                return UniPoly(())
            c = np.convolve(np.array(self.coeffs), np.array(other.coeffs))
            return UniPoly(tuple(c))
        return UniPoly(tuple(c * other for c in self.coeffs))

    __rmul__ = __mul__

    def divmod_by(self, divisor: "UniPoly") -> tuple["UniPoly", "UniPoly"]:
        """Long division: self = q * divisor + r with deg r < deg divisor."""
        if divisor.is_zero():
            raise InputError("division by the zero polynomial")
        rem = list(self.coeffs)
        d = divisor.degree()
        lead = divisor.coeffs[-1]
        if len(rem) <= d:
            return UniPoly(()), UniPoly(tuple(rem))
        quot = [0.0 + 0.0j] * (len(rem) - d)
        for k in range(len(rem) - d - 1, -1, -1):
            q = rem[k + d] / lead
            quot[k] = q
            if q != 0:
                for i, c in enumerate(divisor.coeffs):
                    rem[k + i] -= q * c
        return UniPoly(tuple(quot)), UniPoly(tuple(rem[:d]))


@dataclass(frozen=True)
class OperatorPencil:
    """Polynomial pencil of order 2m built from operators of orders 2mu..2m.

    The part of order j carries the parameter power 2m - j, so the total
    symbol is  sum_j lambda^(2m-j) * A_j(xi).
    """

    n: int
    m: int
    mu: int
    parts: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.m > self.mu > 0):
            raise InputError(f"require m > mu > 0, got m={self.m}, mu={self.mu}")
        cleaned: dict[int, MultiPoly] = {}
        for j, p in self.parts.items():
            j = int(j)
            if not (2 * self.mu <= j <= 2 * self.m):
                raise InputError(f"part order {j} outside [{2*self.mu}, {2*self.m}]")
            if not isinstance(p, MultiPoly):
                raise InputError("pencil parts must be MultiPoly instances")
            if p.n != self.n:
                raise InputError("pencil part dimension mismatch")
            if p.degree() > j:
                raise InputError(f"part of order {j} has degree {p.degree()} > {j}")
            if not p.is_zero():
                cleaned[j] = p
        object.__setattr__(self, "parts", cleaned)

    @property
    def order(self) -> int:
        return 2 * self.m

    def part(self, j: int) -> MultiPoly:
        return self.parts.get(j, MultiPoly.zero(self.n))

    def eval(self, xi: Sequence[float], lam: float) -> complex:
        if lam < 0:
            raise InputError("parameter must be nonnegative")
        total = 0.0 + 0.0j
        for j, p in self.parts.items():
            total += lam ** (2 * self.m - j) * p.eval(xi)
        return complex(total)

    def eval_many(self, points: np.ndarray, lam) -> np.ndarray:
        """Evaluate on (N, n) points; lam is a scalar or an (N,) array >= 0."""
        lam = np.asarray(lam, dtype=float)
        if np.any(lam < 0):
            raise InputError("parameter must be nonnegative")
        total = np.zeros(np.asarray(points).shape[0], dtype=complex)
        for j, p in self.parts.items():
            total += lam ** (2 * self.m - j) * p.eval_many(points)
        return total

    def principal(self) -> "OperatorPencil":
        """Pencil of leading parts: each A_j replaced by its degree-j part.

        The result is jointly homogeneous of degree 2m in (xi, lambda).
        """
        parts = {j: p.homogeneous_part(j) for j, p in self.parts.items()}
        return OperatorPencil(self.n, self.m, self.mu, parts)

    def is_principal(self) -> bool:
        return all(p.is_homogeneous(j) for j, p in self.parts.items())

    def normal_poly(self, xi_prime: Sequence[float], lam: float, principal: bool = True) -> UniPoly:
        """Restrict to the normal direction: the polynomial tau -> A(xi', tau, lam)."""
        if lam < 0:
            raise InputError("parameter must be nonnegative")
        src = self.principal() if principal else self
        out = UniPoly(())
        for j, p in src.parts.items():
            out = out + lam ** (2 * self.m - j) * restrict_to_normal(p, xi_prime)
        return out


@dataclass(frozen=True)
class BoundarySet:
    """Ordered boundary operators with nondecreasing orders m_1 <= ... <= m_m."""

    operators: tuple = ()

    def __post_init__(self):
        ops = []
        prev = -1
        for entry in self.operators:
            poly, order = entry
            order = int(order)
            if not isinstance(poly, MultiPoly):
                raise InputError("boundary operators must be MultiPoly instances")
            if order < 0:
                raise InputError("boundary operator order must be >= 0")
            if poly.degree() > order:
                raise InputError(
                    f"boundary operator degree {poly.degree()} exceeds declared order {order}"
                )
            if order < prev:
                raise InputError("boundary operator orders must be nondecreasing")
            prev = order
            ops.append((poly, order))
        object.__setattr__(self, "operators", tuple(ops))

    def __len__(self) -> int:
        return len(self.operators)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(order for _, order in self.operators)

    def principal(self) -> "BoundarySet":
        return BoundarySet(tuple((p.homogeneous_part(o), o) for p, o in self.operators))

    def normal_polys(self, xi_prime: Sequence[float], principal: bool = True) -> list[UniPoly]:
        """Restrictions B_j(xi', tau) of the (principal) boundary symbols."""
        out = []
        for poly, order in self.operators:
            q = poly.homogeneous_part(order) if principal else poly
            out.append(restrict_to_normal(q, xi_prime))
        return out


@dataclass(frozen=True)
class EpsilonPencil:
    """Small-parameter form: sum_j eps^(j-2mu) * A_j(xi) for j = 2mu..2m."""

    n: int
    m: int
    mu: int
    parts: dict = field(default_factory=dict)

    def __post_init__(self):
        # reuse the pencil validation by constructing the large-parameter twin
        twin = OperatorPencil(self.n, self.m, self.mu, self.parts)
        object.__setattr__(self, "parts", twin.parts)

    def eval(self, xi: Sequence[float], eps: float) -> complex:
        if eps <= 0:
            raise InputError("small parameter must be positive")
        total = 0.0 + 0.0j
        for j, p in self.parts.items():
            total += eps ** (j - 2 * self.mu) * p.eval(xi)
        return complex(total)


def from_epsilon(pe: EpsilonPencil) -> OperatorPencil:
    """Large-parameter pencil equivalent to the small-parameter form.

    The two forms share the same parts; the identity
    eval(P, xi, lam) = lam^(2m-2mu) * eval(Pe, xi, 1/lam) holds for lam > 0.
    """
    return OperatorPencil(pe.n, pe.m, pe.mu, dict(pe.parts))


def to_epsilon(P: OperatorPencil) -> EpsilonPencil:
    """Inverse translation; round-trips are coefficient-exact."""
    return EpsilonPencil(P.n, P.m, P.mu, dict(P.parts))


# -- module-level operation wrappers ---------------------------------------


def eval_poly(p: MultiPoly, z: Sequence[complex]) -> complex:
    return p.eval(z)


def homogeneous_part(p: MultiPoly, d: int) -> MultiPoly:
    return p.homogeneous_part(d)


def principal_pencil(P: OperatorPencil) -> OperatorPencil:
    return P.principal()


def eval_pencil(P: OperatorPencil, xi: Sequence[float], lam: float) -> complex:
    return P.eval(xi, lam)


def restrict_to_normal(p: MultiPoly, xi_prime: Sequence[float]) -> UniPoly:
    """Substitute xi = (xi', tau): univariate polynomial in the normal covariable."""
    if p.n < 2:
        raise InputError("normal restriction needs dimension >= 2")
    xi_prime = np.asarray(xi_prime)
    if xi_prime.shape != (p.n - 1,):
        raise InputError(f"tangential frequency must have shape ({p.n - 1},)")
    coeffs: dict[int, complex] = {}
    for alpha, c in p.terms.items():
        k = alpha[-1]
        term = c
        for zi, ai in zip(xi_prime, alpha[:-1]):
            if ai:
                term = term * zi**ai
        coeffs[k] = coeffs.get(k, 0.0) + term
    if not coeffs:
        return UniPoly(())
    out = [0.0 + 0.0j] * (max(coeffs) + 1)
    for k, c in coeffs.items():
        out[k] = c
    return UniPoly(tuple(out))


def scale_symbol(p: MultiPoly, rho: float) -> MultiPoly:
    return p.scale(rho)


# -- problem validation ------------------------------------------------------

CATEGORY_STRUCTURAL = "structural"
CATEGORY_SUFFICIENCY = "index-sufficiency"
CATEGORY_NECESSITY = "index-necessity"


@dataclass(frozen=True)
class ValidationRule:
    rule: str
    description: str
    passed: bool
    category: str


@dataclass(frozen=True)
class ValidationReport:
    rules: tuple

    @property
    def structural_ok(self) -> bool:
        return all(r.passed for r in self.rules if r.category == CATEGORY_STRUCTURAL)

    @property
    def mandatory_ok(self) -> bool:
        """Structural rules plus the sufficiency-side index window."""
        return all(
            r.passed
            for r in self.rules
            if r.category in (CATEGORY_STRUCTURAL, CATEGORY_SUFFICIENCY)
        )

    @property
    def all_ok(self) -> bool:
        return all(r.passed for r in self.rules)

    def failures(self) -> list[ValidationRule]:
        return [r for r in self.rules if not r.passed]

    def to_jsonable(self) -> dict:
        return {
            "rules": [
                {
                    "rule": r.rule,
                    "description": r.description,
                    "passed": r.passed,
                    "category": r.category,
                }
                for r in self.rules
            ],
            "structural_ok": self.structural_ok,
            "mandatory_ok": self.mandatory_ok,
            "all_ok": self.all_ok,
        }


def validate_problem(P: OperatorPencil, B: BoundarySet, r: int, s: int) -> ValidationReport:
    """Check the structural rules and both index windows; report, never raise.

    The sufficiency-side window (r >= max order + 1, order_mu + 1 <= s <=
    order_{mu+1}) gates the estimate machinery; the necessity-side window
    (r >= m, mu <= s <= r - m + mu) is reported separately.
    """
    rules = []
    m, mu = P.m, P.mu
    orders = B.orders

    rules.append(
        ValidationRule(
            "pencil-order-positivity",
            "pencil orders satisfy m > mu > 0",
            m > mu > 0,
            CATEGORY_STRUCTURAL,
        )
    )
    rules.append(
        ValidationRule(
            "boundary-count",
            f"number of boundary operators ({len(B)}) equals m ({m})",
            len(B) == m,
            CATEGORY_STRUCTURAL,
        )
    )
    sorted_ok = all(orders[i] <= orders[i + 1] for i in range(len(orders) - 1))
    rules.append(
        ValidationRule(
            "boundary-order-sorted",
            "boundary operator orders are nondecreasing",
            sorted_ok,
            CATEGORY_STRUCTURAL,
        )
    )
    gap_ok = len(orders) >= mu + 1 and orders[mu - 1] < orders[mu]
    rules.append(
        ValidationRule(
            "boundary-order-gap",
            f"order_{mu} < order_{mu + 1} across the layer split",
            gap_ok,
            CATEGORY_STRUCTURAL,
        )
    )

    if len(orders) == m and m >= mu + 1:
        m_top = orders[-1]
        m_mu = orders[mu - 1]
        m_mu1 = orders[mu]
        suff = (r >= m_top + 1) and (m_mu + 1 <= s <= m_mu1)
        desc = (
            f"sufficiency window: r >= {m_top + 1} and {m_mu + 1} <= s <= {m_mu1} "
            f"(got r={r}, s={s})"
        )
    else:
        suff = False
        desc = "sufficiency window unavailable: boundary set malformed"
    rules.append(ValidationRule("index-window-sufficiency", desc, suff, CATEGORY_SUFFICIENCY))

    nec = (r >= m) and (mu <= s <= r - m + mu)
    rules.append(
        ValidationRule(
            "index-window-necessity",
            f"necessity-side window: r >= {m} and {mu} <= s <= {r - m + mu} "
            f"(got r={r}, s={s})",
            nec,
            CATEGORY_NECESSITY,
        )
    )
    return ValidationReport(tuple(rules))
