"""Feasible sets with exact Euclidean projection and normal-cone machinery.

Supported sets: axis-aligned boxes, Euclidean balls, products of sets,
and unconstrained space. All sets expose projection, the tangent residual
(distance from a gradient to the negative normal cone), the linearized gap
(support-function form), and the diameter. All norms are Euclidean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# A coordinate counts as "at a bound" when within REL_BOUND_TOL * max(1, |bound|);
# projected iterates land on bounds exactly in real arithmetic but drift by ulps.
REL_BOUND_TOL = 1e-9

# Points within this distance of the set (after projection) are snapped onto it
# before residual/gap evaluation; anything farther is rejected.
MEMBERSHIP_TOL = 1e-9


class GeometryError(ValueError):
    """Invalid geometric input (dimension mismatch, infeasible point, ...)."""


def _as_vector(x, dim=None):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        v = v.reshape(-1)
    if not np.all(np.isfinite(v)):
        raise GeometryError("vector has non-finite entries")
    if dim is not None and v.size != dim:
        raise GeometryError(f"expected dimension {dim}, got {v.size}")
    return v


class FeasibleSet:
    """Closed convex set supporting projection and normal-cone queries."""

    dim: int

    def project(self, point):
        raise NotImplementedError

    def contains(self, point, tol=MEMBERSHIP_TOL):
        p = _as_vector(point, self.dim)
        return float(np.linalg.norm(p - self.project(p))) <= tol

    def diameter(self):
        """Euclidean diameter, or ``math.inf`` for unbounded sets."""
        raise NotImplementedError

    @property
    def is_bounded(self):
        return math.isfinite(self.diameter())

    def _clean(self, point):
        """Snap a near-feasible point onto the set, rejecting distant ones."""
        p = _as_vector(point, self.dim)
        q = self.project(p)
        if float(np.linalg.norm(p - q)) > MEMBERSHIP_TOL:
            raise GeometryError("point lies outside the feasible set")
        return q

    def tangent_residual(self, point, grad):
        """min over c in the normal cone at ``point`` of ||grad + c||."""
        raise NotImplementedError

    def support_min(self, grad):
        """Return (argmin, min) of <grad, x> over the set.

        Ties are broken toward the componentwise-lowest feasible point so
        downstream regret traces are deterministic.
        """
        raise NotImplementedError

    def linearized_gap(self, point, grad):
        """<grad, point> - min over the set of <grad, x'>; requires boundedness."""
        if not self.is_bounded:
            raise GeometryError("linearized gap is undefined on unbounded sets")
        p = self._clean(point)
        g = _as_vector(grad, self.dim)
        _, low = self.support_min(g)
        return max(float(p @ g) - low, 0.0)

    def sample(self, rng):
        """Uniform-ish random feasible point (testing helper)."""
        raise NotImplementedError


@dataclass(frozen=True)
class Box(FeasibleSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lower)
        hi = _as_vector(self.upper, lo.size)
        if np.any(lo > hi):
            raise GeometryError("box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    def project(self, point):
        p = _as_vector(point, self.dim)
        return np.clip(p, self.lower, self.upper)

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def _at_bound(self, p, bound):
        return np.abs(p - bound) <= REL_BOUND_TOL * np.maximum(1.0, np.abs(bound))

    def tangent_residual(self, point, grad):
        p = self._clean(point)
        g = _as_vector(grad, self.dim)
        at_lo = self._at_bound(p, self.lower)
        at_hi = self._at_bound(p, self.upper)
        # Interior coordinate: the normal cone is {0}, contributes |g_j|.
        # At the lower bound the cone is (-inf, 0], so only g_j < 0 survives;
        # symmetric at the upper bound. A pinned coordinate contributes 0.
        contrib = np.abs(g)
        contrib = np.where(at_lo, np.maximum(-g, 0.0), contrib)
        contrib = np.where(at_hi, np.maximum(g, 0.0), contrib)
        contrib = np.where(at_lo & at_hi, 0.0, contrib)
        return float(np.linalg.norm(contrib))

    def support_min(self, grad):
        g = _as_vector(grad, self.dim)
        x = np.where(g > 0, self.lower, np.where(g < 0, self.upper, self.lower))
        return x, float(x @ g)

    def sample(self, rng):
        return rng.uniform(self.lower, self.upper)


@dataclass(frozen=True)
class Ball(FeasibleSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _as_vector(self.center)
        if not (self.radius > 0):
            raise GeometryError("ball radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.size

    def project(self, point):
        p = _as_vector(point, self.dim)
        d = p - self.center
        r = float(np.linalg.norm(d))
        if r <= self.radius:
            return p
        return self.center + d * (self.radius / r)

    def diameter(self):
        return 2.0 * self.radius

    def tangent_residual(self, point, grad):
        p = self._clean(point)
        g = _as_vector(grad, self.dim)
        d = p - self.center
        r = float(np.linalg.norm(d))
        # The normal cone is nontrivial only on the boundary; at radius within
        # tolerance of the boundary the cone is discontinuous and the boundary
        # formula lower-bounds both branches, so it is used there.
        if r < self.radius * (1.0 - REL_BOUND_TOL):
            return float(np.linalg.norm(g))
        n_hat = d / r
        # min over lam >= 0 of ||g + lam * n_hat||: an inward normal component
        # (g . n_hat < 0) is cancelled, an outward one cannot be.
        lam = max(-float(g @ n_hat), 0.0)
        return float(np.linalg.norm(g + lam * n_hat))

    def support_min(self, grad):
        g = _as_vector(grad, self.dim)
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            return self.center.copy(), float(self.center @ g)
        x = self.center - self.radius * g / norm
        return x, float(x @ g)

    def sample(self, rng):
        d = rng.standard_normal(self.dim)
        d /= np.linalg.norm(d)
        r = self.radius * rng.uniform() ** (1.0 / self.dim)
        return self.center + r * d


@dataclass(frozen=True)
class Unconstrained(FeasibleSet):
    dimension: int

    def __post_init__(self):
        if self.dimension < 1:
            raise GeometryError("dimension must be positive")

    @property
    def dim(self):
        return self.dimension

    def project(self, point):
        return _as_vector(point, self.dim)

    def diameter(self):
        return math.inf

    def tangent_residual(self, point, grad):
        _as_vector(point, self.dim)
        return float(np.linalg.norm(_as_vector(grad, self.dim)))

    def support_min(self, grad):
        raise GeometryError("support minimization is unbounded")

    def sample(self, rng):
        return rng.standard_normal(self.dim)


@dataclass(frozen=True)
class ProductSet(FeasibleSet):
    factors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise GeometryError("product of zero sets")

    @property
    def dim(self):
        return sum(f.dim for f in self.factors)

    def _slices(self):
        start = 0
        for f in self.factors:
            yield f, slice(start, start + f.dim)
            start += f.dim

    def project(self, point):
        p = _as_vector(point, self.dim)
        return np.concatenate([f.project(p[s]) for f, s in self._slices()])

    def diameter(self):
        sq = 0.0
        for f in self.factors:
            d = f.diameter()
            if not math.isfinite(d):
                return math.inf
            sq += d * d
        return math.sqrt(sq)

    def tangent_residual(self, point, grad):
        p = _as_vector(point, self.dim)
        g = _as_vector(grad, self.dim)
        sq = sum(f.tangent_residual(p[s], g[s]) ** 2 for f, s in self._slices())
        return math.sqrt(sq)

    def support_min(self, grad):
        g = _as_vector(grad, self.dim)
        parts, total = [], 0.0
        for f, s in self._slices():
            x, v = f.support_min(g[s])
            parts.append(x)
            total += v
        return np.concatenate(parts), total

    def sample(self, rng):
        return np.concatenate([f.sample(rng) for f in self.factors])


def project(feasible_set, point):
    """Euclidean projection of ``point`` onto ``feasible_set``."""
    return feasible_set.project(point)


def tangent_residual(feasible_set, point, grad):
    return feasible_set.tangent_residual(point, grad)


def linearized_gap(feasible_set, point, grad):
    return feasible_set.linearized_gap(point, grad)


def diameter(feasible_set):
    return feasible_set.diameter()


def symmetric_box(half_width, dim):
    """[-w, w]^dim, the box shape used by the built-in game instances."""
    w = float(half_width)
    return Box(np.full(dim, -w), np.full(dim, w))
