"""Complex path quadrature for multivalued integrands.

The integrand is

    prod_k (c_k (u - b_k))**alpha_k * w(u)

where each power is defined through a logarithm that is continued along the
path.  At the path start every factor uses the principal argument of
``u - b_k`` plus the principal ``Log c_k``; from there the argument is
threaded node by node, and a quadrature interval is bisected whenever a single
step turns some factor by ``theta_max`` or more.

Quadrature is globally adaptive Gauss-Kronrod (7/15).  Several weights w can
be integrated in one pass over the same nodes, which is how derivatives and
parameter shifts of one function share a path.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContourError, QuadratureError

__all__ = [
    "LineSegment",
    "ArcSegment",
    "ContourPath",
    "PochhammerCycle",
    "RationalWeight",
    "MultivaluedIntegrand",
    "QuadSettings",
    "build_pochhammer",
    "integrate_multivalued",
    "integrate_batch",
    "segment_regularization_factor",
    "argument_change",
]

# Kronrod nodes on [0, 1] in decreasing order; the odd entries are Gauss nodes
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
for _pos in range(15):
    _idx = _pos if _pos < 7 else 14 - _pos
    if _idx % 2 == 1:
        GAUSS_WEIGHTS[_pos] = _WG[(_idx - 1) // 2]
# interval end, the 15 nodes, interval end; index 8 is the midpoint
_STENCIL = np.concatenate([[-1.0], NODES, [1.0]])
_MID = 8

_EPS = np.finfo(float).eps
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadSettings:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    theta_max: float = math.pi / 3

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.theta_max <= math.pi / 2:
            raise ValueError("theta_max must lie in (0, pi/2]")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class LineSegment:
    start: complex
    end: complex

    def point(self, t):
        return self.start + (self.end - self.start) * t

    def tangent(self, t):
        return np.full(np.shape(t), self.end - self.start, dtype=complex)

    def reversed(self) -> "LineSegment":
        return LineSegment(self.end, self.start)

    def distance_to(self, z: complex) -> float:
        d = self.end - self.start
        if d == 0:
            return abs(z - self.start)
        t = ((z - self.start) * d.conjugate()).real / abs(d) ** 2
        t = min(1.0, max(0.0, t))
        return abs(z - self.point(t))


@dataclass(frozen=True)
class ArcSegment:
    """Arc of the circle |u - center| = radius from angle theta0 to theta1."""

    center: complex
    radius: float
    theta0: float
    theta1: float

    @property
    def start(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta0)

    @property
    def end(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta1)

    def point(self, t):
        return self.center + self.radius * np.exp(1j * (self.theta0 + (self.theta1 - self.theta0) * t))

    def tangent(self, t):
        sweep = self.theta1 - self.theta0
        return 1j * sweep * self.radius * np.exp(1j * (self.theta0 + sweep * t))

    def reversed(self) -> "ArcSegment":
        return ArcSegment(self.center, self.radius, self.theta1, self.theta0)

    def distance_to(self, z: complex) -> float:
        sweep = self.theta1 - self.theta0
        radial = abs(abs(z - self.center) - self.radius)
        if abs(sweep) >= _TWO_PI or z == self.center:
            return radial
        phi = cmath.phase(z - self.center)
        offset = (phi - self.theta0) % _TWO_PI if sweep > 0 else (self.theta0 - phi) % _TWO_PI
        if offset <= abs(sweep):
            return radial
        return min(abs(z - self.start), abs(z - self.end))


Segment = LineSegment | ArcSegment


@dataclass(frozen=True)
class ContourPath:
    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ContourError("a path needs at least one segment")
        object.__setattr__(self, "segments", segs)
        scale = max(1.0, max(abs(s.start) + abs(s.end) for s in segs))
        for a, b in zip(segs, segs[1:]):
            if abs(a.end - b.start) > 1e-12 * scale:
                raise ContourError("consecutive segments do not share an endpoint")

    @property
    def start(self) -> complex:
        return self.segments[0].start

    @property
    def end(self) -> complex:
        return self.segments[-1].end

    @property
    def closed(self) -> bool:
        scale = max(1.0, abs(self.start))
        return abs(self.end - self.start) <= 1e-12 * scale

    def reversed(self) -> "ContourPath":
        return ContourPath(tuple(s.reversed() for s in reversed(self.segments)))

    def distance_to(self, z: complex) -> float:
        return min(s.distance_to(z) for s in self.segments)

    def __add__(self, other: "ContourPath") -> "ContourPath":
        return ContourPath(self.segments + other.segments)


@dataclass(frozen=True)
class PochhammerCycle:
    b_i: complex
    b_j: complex
    rho: float
    radius: float
    base_point: complex
    path: ContourPath


def build_pochhammer(b_i: complex, b_j: complex, others: Sequence[complex] = (), rho: float = 0.2) -> PochhammerCycle:
    """Commutator loop around b_i (positive), b_j (positive), b_i and b_j (negative).

    Loops have radius rho times the smallest distance from b_i or b_j to any
    other branch point (including each other).  Straight connectors run from
    the base point, which sits half a radius off the midpoint of [b_i, b_j]
    on its left side.
    """
    if not 0 < rho < 0.5:
        raise ContourError("rho must lie in (0, 1/2)")
    b_i, b_j = complex(b_i), complex(b_j)
    others = [complex(o) for o in others]
    gap = abs(b_j - b_i)
    if gap == 0:
        raise ContourError("the two branch points coincide")
    dmin = gap
    for o in others:
        dmin = min(dmin, abs(o - b_i), abs(o - b_j))
    if dmin == 0:
        raise ContourError("branch points are not pairwise distinct")
    r = rho * dmin
    axis = (b_j - b_i) / gap
    normal = 1j * axis
    base = 0.5 * (b_i + b_j) + 0.5 * r * normal
    phi = cmath.phase(axis)
    # the connectors are parallel to the axis at height r/2, meeting each circle
    # where sin(angle) = 1/2
    th_i = phi + math.pi / 6
    th_j = phi + math.pi - math.pi / 6
    a_i = b_i + r * cmath.exp(1j * th_i)
    a_j = b_j + r * cmath.exp(1j * th_j)

    def loop(center, attach, theta, sign):
        return [
            LineSegment(base, attach),
            ArcSegment(center, r, theta, theta + sign * _TWO_PI),
            LineSegment(attach, base),
        ]

    segs = loop(b_i, a_i, th_i, 1) + loop(b_j, a_j, th_j, 1) + loop(b_i, a_i, th_i, -1) + loop(b_j, a_j, th_j, -1)
    path = ContourPath(tuple(segs))
    for o in others:
        if path.distance_to(o) < r:
            raise ContourError(f"crowded: branch point {o} lies within the loop corridor")
    return PochhammerCycle(b_i, b_j, rho, r, base, path)


def segment_regularization_factor(alpha_i: complex, alpha_j: complex) -> complex:
    """(1 - exp(2 pi i alpha_i)) (1 - exp(2 pi i alpha_j))."""
    for a in (alpha_i, alpha_j):
        a = complex(a)
        if abs(a.imag) < 1e-8 and abs(a.real - round(a.real)) < 1e-8:
            warnings.warn(f"exponent {a} is within 1e-8 of an integer; the cycle pairing degenerates", RuntimeWarning, stacklevel=2)
    return (1 - cmath.exp(2j * math.pi * alpha_i)) * (1 - cmath.exp(2j * math.pi * alpha_j))


# ---------------------------------------------------------------------------
# integrands


@dataclass(frozen=True)
class RationalWeight:
    """prod_k (u - b_k)**pole_orders[k] times a polynomial (coefficients low to high).

    Negative orders are poles; they sit on branch points only.
    """

    pole_orders: tuple
    poly: tuple = (1.0,)

    @classmethod
    def unit(cls, n: int) -> "RationalWeight":
        return cls((0,) * n)


@dataclass(frozen=True)
class MultivaluedIntegrand:
    branch_points: tuple
    exponents: tuple
    scales: tuple | None = None
    weight: RationalWeight | None = None

    def __post_init__(self):
        b = [complex(v) for v in self.branch_points]
        if len(b) != len(self.exponents):
            raise ContourError("one exponent per branch point is required")
        for i in range(len(b)):
            for j in range(i):
                if b[i] == b[j]:
                    raise ContourError("branch points must be pairwise distinct")
        if self.weight is not None and len(self.weight.pole_orders) != len(b):
            raise ContourError("weight pole orders must match the branch points")


def _poly_matrix(weights: Sequence[RationalWeight]) -> np.ndarray:
    deg = max(len(w.poly) for w in weights)
    out = np.zeros((len(weights), deg), dtype=complex)
    for k, w in enumerate(weights):
        out[k, : len(w.poly)] = w.poly
    return out


class _Integrator:
    """Shared state for one batched integration over a path."""

    def __init__(self, branch_points, exponents, weights, scales, settings):
        self.b = np.asarray(branch_points, dtype=complex)
        n = self.b.size
        alpha = np.asarray(exponents, dtype=complex)
        shifts = np.array([w.pole_orders for w in weights], dtype=float).reshape(len(weights), n)
        self.E = alpha[None, :] + shifts
        logc = np.zeros(n, dtype=complex) if scales is None else np.log(np.asarray(scales, dtype=complex))
        self.const = self.E @ logc
        self.poly = _poly_matrix(weights)
        self.trivial_poly = self.poly.shape[1] == 1
        self.settings = settings

    def evaluate(self, seg, t0, t1, theta0):
        """GK15 on [t0, t1]; returns None when a step turns some factor too far."""
        t = t0 + (t1 - t0) * (_STENCIL + 1.0) * 0.5
        u = seg.point(t)
        diff = u[:, None] - self.b[None, :]
        ang = np.angle(diff)
        dang = np.diff(ang, axis=0)
        dang = (dang + math.pi) % _TWO_PI - math.pi
        if np.abs(dang).max(initial=0.0) >= self.settings.theta_max:
            return None
        theta = np.empty_like(ang)
        theta[0] = theta0
        theta[1:] = theta0 + np.cumsum(dang, axis=0)
        logs = np.log(np.abs(diff[1:16])) + 1j * theta[1:16]
        vals = np.exp(logs @ self.E.T + self.const)
        if not self.trivial_poly:
            vals = vals * np.polynomial.polynomial.polyval(u[1:16], self.poly.T).T
        else:
            vals = vals * self.poly[:, 0]
        vals = vals * seg.tangent(t[1:16])[:, None]
        half = 0.5 * (t1 - t0)
        resk = KRONROD_WEIGHTS @ vals
        resg = GAUSS_WEIGHTS @ vals
        reskh = 0.5 * resk
        resasc = abs(half) * (KRONROD_WEIGHTS @ np.abs(vals - reskh))
        resabs = abs(half) * (KRONROD_WEIGHTS @ np.abs(vals))
        err = np.abs((resk - resg) * half)
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
        err = np.where((resasc != 0) & (err != 0), scaled, err)
        err = np.maximum(err, 50 * _EPS * resabs)
        if not np.all(np.isfinite(resk)):
            raise QuadratureError("integrand is not finite on the path")
        return resk * half, err, theta[_MID], theta[-1]

    def cover(self, seg_index, seg, t0, t1, theta0, depth=0):
        """Evaluate [t0, t1], splitting until every step passes the turn test."""
        res = self.evaluate(seg, t0, t1, theta0)
        if res is not None:
            value, err, _, theta_end = res
            return [(seg_index, t0, t1, theta0, value, err)], theta_end
        if depth > 60 or abs(t1 - t0) < 1e-15:
            raise ContourError("argument continuation failed; path passes too close to a branch point")
        tm = 0.5 * (t0 + t1)
        left, theta_mid = self.cover(seg_index, seg, t0, tm, theta0, depth + 1)
        right, theta_end = self.cover(seg_index, seg, tm, t1, theta_mid, depth + 1)
        return left + right, theta_end


def _check_clearance(path: ContourPath, branch_points: np.ndarray) -> None:
    scale = max(1.0, float(np.abs(branch_points).max(initial=0.0)))
    eps = 1e-9 * scale
    for b in branch_points:
        if path.distance_to(complex(b)) < eps:
            raise ContourError(f"path passes within {eps:g} of branch point {complex(b)}")


def integrate_batch(
    branch_points: Sequence[complex],
    exponents: Sequence[complex],
    weights: Sequence[RationalWeight],
    path: ContourPath,
    settings: QuadSettings | None = None,
    scales: Sequence[complex] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate several weights against the same multivalued factor.

    Returns arrays of values and error estimates, one entry per weight.  The
    run stops when every component meets max(abs_tol, rel_tol*|value|).
    """
    settings = settings or QuadSettings()
    weights = list(weights)
    if not weights:
        return np.zeros(0, dtype=complex), np.zeros(0)
    integ = _Integrator(branch_points, exponents, weights, scales, settings)
    _check_clearance(path, integ.b)

    intervals = []
    theta = np.angle(path.start - integ.b)
    for k, seg in enumerate(path.segments):
        pieces, theta = integ.cover(k, seg, 0.0, 1.0, theta)
        intervals.extend(pieces)

    values = np.array([iv[4] for iv in intervals])
    errors = np.array([iv[5] for iv in intervals])
    splits = 0
    while True:
        total = values.sum(axis=0)
        errsum = errors.sum(axis=0)
        tol = np.maximum(settings.abs_tol, settings.rel_tol * np.abs(total))
        if np.all(errsum <= tol):
            return total, errsum
        if splits >= settings.max_subdivisions:
            raise QuadratureError(
                f"no convergence after {splits} subdivisions (error {errsum.max():.3e}, tolerance {tol.min():.3e})"
            )
        worst = int(np.argmax((errors / tol).max(axis=1)))
        seg_index, t0, t1, theta0, _, _ = intervals[worst]
        if abs(t1 - t0) < 1e-14:
            raise QuadratureError("interval width underflow during bisection")
        seg = path.segments[seg_index]
        tm = 0.5 * (t0 + t1)
        left, theta_mid = integ.cover(seg_index, seg, t0, tm, theta0)
        right, _ = integ.cover(seg_index, seg, tm, t1, theta_mid)
        children = left + right
        intervals[worst] = children[0]
        intervals.extend(children[1:])
        values[worst] = children[0][4]
        errors[worst] = children[0][5]
        if len(children) > 1:
            values = np.vstack([values, [c[4] for c in children[1:]]])
            errors = np.vstack([errors, [c[5] for c in children[1:]]])
        splits += 1


def integrate_multivalued(
    f: MultivaluedIntegrand, path: ContourPath, settings: QuadSettings | None = None
) -> tuple[complex, float]:
    weight = f.weight or RationalWeight.unit(len(f.branch_points))
    vals, errs = integrate_batch(f.branch_points, f.exponents, [weight], path, settings, f.scales)
    return complex(vals[0]), float(errs[0])


def argument_change(path: ContourPath, points: Sequence[complex], theta_max: float = math.pi / 3) -> np.ndarray:
    """Continued change of arg(u - p) along the path for each point p."""
    b = np.asarray(points, dtype=complex)
    settings = QuadSettings(theta_max=theta_max)
    integ = _Integrator(b, np.zeros(b.size), [RationalWeight.unit(b.size)], None, settings)
    theta0 = np.angle(path.start - b)
    theta = theta0
    for k, seg in enumerate(path.segments):
        _, theta = integ.cover(k, seg, 0.0, 1.0, theta)
    return theta - theta0
