"""EPD operators and contiguity operators acting on exact test functions.

M_{p,q}(alpha) = d_p d_q + alpha_q/(x_p - x_q) d_p + alpha_p/(x_q - x_p) d_q
L_{p,q}(alpha) = (x_p - x_q) d_q + alpha_q

Operators act on truncated Taylor expansions at a rational point, so every
identity between them is checked in exact Fraction arithmetic: apply both
sides to a polynomial and compare the values at the point.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParameterError

__all__ = [
    "MultiJet",
    "TestFunction",
    "Operator",
    "Partial",
    "Coefficient",
    "Multiply",
    "Compose",
    "Sum",
    "EpdOperator",
    "ContiguityOperator",
    "apply",
    "monomial_basis",
    "MODULO_COFACTOR",
    "spair_identity_residual",
    "spair_generator_residual",
    "intertwine_identity_residual",
    "commutator_residual",
    "modulo_ideal_identity_residual",
    "epd_residual_from_partials",
    "epd_residual_phi",
    "epd_sweep",
]


def _exact(v):
    if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
        return Fraction(v)
    return v


class MultiJet:
    """Truncated Taylor expansion in t = x - base, sparse: {exponents: coeff}."""

    __slots__ = ("terms", "order", "base")

    def __init__(self, terms: Mapping[tuple, object], order: int, base: tuple):
        self.order = order
        self.base = base
        self.terms = {e: c for e, c in terms.items() if sum(e) <= order and c != 0}

    @property
    def n(self) -> int:
        return len(self.base)

    @classmethod
    def constant(cls, value, order: int, base: tuple) -> "MultiJet":
        return cls({(0,) * len(base): _exact(value)}, order, base)

    def value(self):
        return self.terms.get((0,) * self.n, Fraction(0))

    def _check(self, other: "MultiJet") -> int:
        if self.base != other.base:
            raise ParameterError("jets are expanded at different points")
        return min(self.order, other.order)

    def __add__(self, other):
        if not isinstance(other, MultiJet):
            other = MultiJet.constant(other, self.order, self.base)
        order = self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiJet(out, order, self.base)

    __radd__ = __add__

    def __neg__(self):
        return MultiJet({e: -c for e, c in self.terms.items()}, self.order, self.base)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MultiJet):
            other = _exact(other)
            return MultiJet({e: c * other for e, c in self.terms.items()}, self.order, self.base)
        order = self._check(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            for e2, c2 in other.terms.items():
                if d1 + sum(e2) > order:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiJet(out, order, self.base)

    __rmul__ = __mul__

    def partial(self, p: int) -> "MultiJet":
        out = {}
        for e, c in self.terms.items():
            if e[p]:
                f = list(e)
                f[p] -= 1
                out[tuple(f)] = c * e[p]
        return MultiJet(out, self.order - 1, self.base)


def _difference_power(p: int, q: int, power: int, order: int, base: tuple) -> MultiJet:
    """(x_p - x_q)^power expanded at base; negative powers use the binomial series."""
    n = len(base)
    d = base[p] - base[q]
    if d == 0:
        raise ParameterError(f"coordinates {p} and {q} coincide at the evaluation point")
    out: dict = {}
    # (d + s)^power with s = t_p - t_q
    for m in range(order + 1):
        if power >= 0 and m > power:
            break
        gen = 1
        for k in range(m):
            gen *= power - k
        coef = Fraction(gen) / Fraction(1) / _factorial(m) * _exact(d) ** (power - m)
        for a in range(m + 1):
            e = [0] * n
            e[p] += a
            e[q] += m - a
            key = tuple(e)
            out[key] = out.get(key, 0) + coef * comb(m, a) * (-1) ** (m - a)
    return MultiJet(out, order, base)


def _factorial(m: int) -> int:
    out = 1
    for k in range(2, m + 1):
        out *= k
    return out


@dataclass(frozen=True)
class TestFunction:
    """Polynomial in x_1..x_N with exact coefficients: {exponents: coeff}."""

    __test__ = False  # keep pytest from collecting this class

    n: int
    coeffs: tuple  # sorted (exponents, coeff) pairs

    def __init__(self, n: int, coeffs: Mapping[tuple, object] | Iterable = ()):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: dict = {}
        for e, c in items:
            e = tuple(int(v) for v in e)
            if len(e) != n or min(e, default=0) < 0:
                raise ParameterError("exponent vectors must have length N and be non-negative")
            merged[e] = merged.get(e, 0) + _exact(c)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coeffs", tuple(sorted((e, c) for e, c in merged.items() if c != 0)))

    @classmethod
    def one(cls, n: int) -> "TestFunction":
        return cls(n, {(0,) * n: 1})

    @classmethod
    def monomial(cls, exponents: Sequence[int], coeff=1) -> "TestFunction":
        return cls(len(exponents), {tuple(exponents): coeff})

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.coeffs), default=0)

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return TestFunction(self.n, list(self.coeffs) + list(other.coeffs))

    def __call__(self, point: Sequence) -> object:
        total = 0
        for e, c in self.coeffs:
            term = c
            for x, k in zip(point, e):
                term *= _exact(x) ** k
            total += term
        return total

    def to_jet(self, base: tuple, order: int) -> MultiJet:
        out: dict = {}
        for e, c in self.coeffs:
            # prod_i (b_i + t_i)^e_i
            factors = []
            for i, k in enumerate(e):
                factors.append([(a, comb(k, a) * base[i] ** (k - a)) for a in range(k + 1)])
            for combo in itertools.product(*factors):
                exps = tuple(a for a, _ in combo)
                if sum(exps) > order:
                    continue
                v = c
                for _, w in combo:
                    v *= w
                out[exps] = out.get(exps, 0) + v
        return MultiJet(out, order, base)


# ---------------------------------------------------------------------------
# operators


class Operator:
    order: int = 0

    def act(self, jet: MultiJet) -> MultiJet:
        raise NotImplementedError

    def __matmul__(self, other: "Operator") -> "Operator":
        return Compose(self, other)

    def __add__(self, other: "Operator") -> "Operator":
        return Sum((self, other))

    def __sub__(self, other: "Operator") -> "Operator":
        return Sum((self, Multiply(Coefficient(-1)) @ other))

    def __rmul__(self, scalar) -> "Operator":
        return Multiply(Coefficient(scalar)) @ self


@dataclass(frozen=True)
class Partial(Operator):
    index: int

    @property
    def order(self) -> int:
        return 1

    def act(self, jet):
        return jet.partial(self.index)


@dataclass(frozen=True)
class Coefficient:
    """constant * prod (x_p - x_q)^k over the listed (p, q, k)."""

    scale: object = 1
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "scale", _exact(self.scale))

    def __mul__(self, other: "Coefficient") -> "Coefficient":
        return Coefficient(self.scale * other.scale, self.factors + other.factors)

    def jet(self, base: tuple, order: int) -> MultiJet:
        out = MultiJet.constant(self.scale, order, base)
        for p, q, k in self.factors:
            out = out * _difference_power(p, q, k, order, base)
        return out


def difference(p: int, q: int, power: int = 1, scale=1) -> Coefficient:
    return Coefficient(scale, ((p, q, power),))


@dataclass(frozen=True)
class Multiply(Operator):
    coefficient: Coefficient

    @property
    def order(self) -> int:
        return 0

    def act(self, jet):
        return self.coefficient.jet(jet.base, jet.order) * jet


@dataclass(frozen=True)
class Compose(Operator):
    """outer after inner."""

    outer: Operator
    inner: Operator

    @property
    def order(self) -> int:
        return self.outer.order + self.inner.order

    def act(self, jet):
        return self.outer.act(self.inner.act(jet))


@dataclass(frozen=True)
class Sum(Operator):
    terms: tuple

    @property
    def order(self) -> int:
        return max(t.order for t in self.terms)

    def act(self, jet):
        out = None
        for t in self.terms:
            v = t.act(jet)
            out = v if out is None else out + v
        return out


def _alpha_tuple(alpha) -> tuple:
    return tuple(_exact(a) for a in alpha)


def _shifted(alpha: tuple, plus: int | None = None, minus: int | None = None) -> tuple:
    vals = list(alpha)
    if plus is not None:
        vals[plus] += 1
    if minus is not None:
        vals[minus] -= 1
    return tuple(vals)


class EpdOperator(Operator):
    """M_{p,q}(alpha); symmetric in (p, q)."""

    def __init__(self, p: int, q: int, alpha):
        if p == q:
            raise ParameterError("EPD operator needs p != q")
        self.p, self.q = p, q
        self.alpha = _alpha_tuple(alpha)
        a = self.alpha
        self._expr = Sum((
            Partial(p) @ Partial(q),
            Multiply(difference(p, q, -1, a[q])) @ Partial(p),
            Multiply(difference(q, p, -1, a[p])) @ Partial(q),
        ))

    order = 2

    def act(self, jet):
        return self._expr.act(jet)

    def __repr__(self):
        return f"EpdOperator({self.p}, {self.q}, {self.alpha})"


class ContiguityOperator(Operator):
    """L_{p,q}(alpha) = (x_p - x_q) d_q + alpha_q."""

    def __init__(self, p: int, q: int, alpha):
        if p == q:
            raise ParameterError("contiguity operator needs p != q")
        self.p, self.q = p, q
        self.alpha = _alpha_tuple(alpha)
        self._expr = Sum((
            Multiply(difference(p, q, 1)) @ Partial(q),
            Multiply(Coefficient(self.alpha[q])),
        ))

    order = 1

    def act(self, jet):
        return self._expr.act(jet)

    def __repr__(self):
        return f"ContiguityOperator({self.p}, {self.q}, {self.alpha})"


def apply(op: Operator, f: TestFunction, point: Sequence, as_jet: bool = False):
    """Exact value of (op f) at the point, or its Taylor jet when ``as_jet``."""
    base = tuple(_exact(v) for v in point)
    if len(base) != f.n:
        raise ParameterError("point dimension does not match the test function")
    jet = f.to_jet(base, op.order + (f.degree if as_jet else 0))
    out = op.act(jet)
    return out if as_jet else out.value()


def monomial_basis(n: int, degree: int = 4, active: Sequence[int] | None = None) -> list[TestFunction]:
    """All monomials of total degree <= degree in the active variables."""
    active = list(range(n)) if active is None else list(active)
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(active, d):
            e = [0] * n
            for i in combo:
                e[i] += 1
            out.append(TestFunction.monomial(e))
    return out


# ---------------------------------------------------------------------------
# operator identities, each returned as an exact residual


def spair_identity_residual(i: int, j: int, k: int, alpha, f: TestFunction, point) -> Fraction:
    """d_k M_ij - d_i M_jk minus its expansion in M_ik, M_ij, M_jk."""
    if len({i, j, k}) != 3:
        raise ParameterError("i, j, k must be distinct")
    a = _alpha_tuple(alpha)
    lhs = Partial(k) @ EpdOperator(i, j, a) - Partial(i) @ EpdOperator(j, k, a)
    # -alpha_j (x_k - x_i)/((x_i - x_j)(x_j - x_k)) = alpha_j (x_i - x_k)(x_i - x_j)^-1 (x_j - x_k)^-1
    c_ik = Coefficient(a[j], ((i, k, 1), (i, j, -1), (j, k, -1)))
    rhs = Sum((
        Multiply(c_ik) @ EpdOperator(i, k, a),
        Multiply(difference(j, k, -1, -a[k])) @ EpdOperator(i, j, a),
        Multiply(difference(i, j, -1, -a[i])) @ EpdOperator(j, k, a),
    ))
    return apply(lhs, f, point) - apply(rhs, f, point)


def spair_generator_residual(i: int, j: int, k: int, alpha, f: TestFunction, point) -> Fraction:
    """alpha_j M_ik rebuilt from M_ij and M_jk through the S-pair, minus alpha_j M_ik."""
    a = _alpha_tuple(alpha)
    spair = Partial(k) @ EpdOperator(i, j, a) - Partial(i) @ EpdOperator(j, k, a)
    inner = Sum((
        spair,
        Multiply(difference(j, k, -1, a[k])) @ EpdOperator(i, j, a),
        Multiply(difference(i, j, -1, a[i])) @ EpdOperator(j, k, a),
    ))
    prefactor = Coefficient(1, ((i, j, 1), (j, k, 1), (i, k, -1)))
    rebuilt = Multiply(prefactor) @ inner
    return apply(rebuilt, f, point) - a[j] * apply(EpdOperator(i, k, a), f, point)


def intertwine_identity_residual(p: int, q: int, alpha, f: TestFunction, point) -> tuple:
    """Exact residuals (a, b) of the two intertwining relations for L_{p,q}."""
    if p == q:
        raise ParameterError("p and q must differ")
    a = _alpha_tuple(alpha)
    up = _shifted(a, p, q)
    L = ContiguityOperator(p, q, a)
    sq = Multiply(difference(p, q, 2))
    # (a) L_qp(alpha + e_p - e_q) L_pq(alpha) + (x_p - x_q)^2 M_pq(alpha) - (alpha_p + 1) alpha_q
    res_a = (
        apply(ContiguityOperator(q, p, up) @ L, f, point)
        + apply(sq @ EpdOperator(p, q, a), f, point)
        - (a[p] + 1) * a[q] * apply(Multiply(Coefficient(1)), f, point)
    )
    # (b) (x_p - x_q)^2 M_pq(alpha + e_p - e_q) L_pq(alpha) - L_pq(alpha) (x_p - x_q)^2 M_pq(alpha)
    res_b = apply(sq @ EpdOperator(p, q, up) @ L, f, point) - apply(L @ sq @ EpdOperator(p, q, a), f, point)
    return res_a, res_b


def commutator_residual(p: int, q: int, i: int, j: int, alpha, f: TestFunction, point) -> Fraction:
    """[M_pq(alpha), L_ij(alpha)] f for disjoint index pairs."""
    if {i, j} & {p, q}:
        raise ParameterError("index pairs must be disjoint")
    M = EpdOperator(p, q, alpha)
    L = ContiguityOperator(i, j, alpha)
    return apply(M @ L, f, point) - apply(L @ M, f, point)


# Zeroth-order cofactor W with  LHS - RHS = W * M_qr(alpha)  for both variants.
# Derived by expanding both sides on monomials of degree <= 3 and solving for W
# at random rational points; the test suite repeats that derivation.
MODULO_COFACTOR = {
    "up": lambda p, q, r: Coefficient(1, ((p, q, 1), (q, r, 1))),
    "down": lambda p, q, r: Coefficient(1, ((p, q, 1), (q, r, 1))),
}


def modulo_ideal_sides(p: int, q: int, r: int, alpha, variant: str) -> tuple[Operator, Operator]:
    """(LHS - RHS operator, M_qr) for the ``up`` or ``down`` congruence."""
    if len({p, q, r}) != 3:
        raise ParameterError("p, q, r must be distinct")
    a = _alpha_tuple(alpha)
    if variant == "up":
        # L_pq(alpha + e_q) L_qr(alpha) - (alpha_q + 1) L_pr(alpha)
        diff = ContiguityOperator(p, q, _shifted(a, q)) @ ContiguityOperator(q, r, a) - (
            (a[q] + 1) * ContiguityOperator(p, r, a)
        )
    elif variant == "down":
        # L_qr(alpha) L_pq(alpha) - alpha_q L_pr(alpha)
        diff = ContiguityOperator(q, r, a) @ ContiguityOperator(p, q, a) - a[q] * ContiguityOperator(p, r, a)
    else:
        raise ParameterError("variant must be 'up' or 'down'")
    return diff, EpdOperator(q, r, a)


def modulo_ideal_identity_residual(p: int, q: int, r: int, alpha, f: TestFunction, point, variant: str = "up") -> Fraction:
    diff, M = modulo_ideal_sides(p, q, r, alpha, variant)
    W = Multiply(MODULO_COFACTOR[variant](p, q, r))
    return apply(diff, f, point) - apply(W @ M, f, point)


# ---------------------------------------------------------------------------
# EPD residual of Phi


def epd_residual_from_partials(x, alpha, p: int, q: int, d_p, d_q, d_pq) -> float:
    """|(x_p - x_q) u_pq + alpha_q u_p - alpha_p u_q| over the largest of its three terms."""
    t1 = (x[p] - x[q]) * d_pq
    t2 = alpha[q] * d_p
    t3 = alpha[p] * d_q
    return abs(t1 + t2 - t3) / max(abs(t1), abs(t2), abs(t3), 1e-300)


def epd_sweep(x, alpha, pairs=None, cycle_pair=(0, 1), settings=None, *, path=None, rho=0.2, bump: float = 0.0) -> dict:
    """EPD residuals of Phi for several unordered pairs from one quadrature pass.

    ``bump`` is added to alpha_p inside the operator only (a negative control).
    """
    from .hgf import phi_family

    n = len(x)
    pairs = [(p, q) for p in range(n) for q in range(p + 1, n)] if pairs is None else list(pairs)
    fam, _ = phi_family(x, alpha, cycle_pair, settings, path, rho)
    first = {p: fam.request([p]) for p in range(n)}
    second = {pq: fam.request(list(pq)) for pq in pairs}
    xs = x.array
    out = {}
    for p, q in pairs:
        if p == q:
            raise ParameterError("EPD residual needs p != q")
        a = alpha.array.copy()
        a[p] += bump
        out[(p, q)] = epd_residual_from_partials(xs, a, p, q, fam[first[p]], fam[first[q]], fam[second[(p, q)]])
    return out


def epd_residual_phi(x, alpha, p: int, q: int, cycle_pair=(0, 1), settings=None, *, path=None, rho=0.2, bump: float = 0.0) -> float:
    return epd_sweep(x, alpha, [(p, q)], cycle_pair, settings, path=path, rho=rho, bump=bump)[(p, q)]
