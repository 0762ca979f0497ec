"""Coefficient fields for hyperbolic operators.

Two interchangeable representations of a coefficient function f(x, y):

* :class:`RationalS` is an exact rational function of the single variable
  s = x - y.  It is the natural home for the Euler-Poisson-Darboux family,
  where every coefficient is c * s**k.
* :class:`Jet2` is a truncated two-variable Taylor jet at a base point
  (x0, y0), storing c[p, q] = d^p_x d^q_y f(x0, y0) / (p! q!) for p + q <= K.

Both classes expose the same method names (``partial``, ``log_partial``,
``mixed_log_partial``, ``is_zero`` and the arithmetic operators) so that the
operator algebra in :mod:`gelfand_toda.laplace` is written once.

Scalars are exact (:class:`fractions.Fraction`) whenever every input is an
integer or a Fraction, and complex floats otherwise.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from numbers import Number
from typing import Sequence

import numpy as np
from scipy.signal import convolve2d

from .errors import FieldError

__all__ = [
    "RationalS",
    "Jet2",
    "Gauge",
    "is_exact_scalar",
    "jet_combine",
    "jet_log",
    "field_partial",
    "mixed_log_partial",
]

# relative threshold below which float-mode polynomial coefficients are dropped
FLOAT_TRIM = 1e-14


def is_exact_scalar(value) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def _to_scalar(value, exact: bool):
    if exact:
        return Fraction(value)
    return complex(value)


# ---------------------------------------------------------------------------
# dense univariate polynomials, coefficient lists from low to high degree


def _maxabs(p) -> float:
    return max((abs(c) for c in p), default=0.0)


def _strip(p, exact: bool, scale: float | None = None) -> list:
    p = list(p)
    if not exact:
        ref = _maxabs(p) if scale is None else scale
        cut = FLOAT_TRIM * ref
        p = [0j if abs(c) <= cut else c for c in p]
    while p and p[-1] == 0:
        p.pop()
    return p


def _padd(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def _pneg(p):
    return [-c for c in p]


def _pmul(p, q):
    if not p or not q:
        return []
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _pderiv(p):
    return [k * p[k] for k in range(1, len(p))]


def _peval(p, s):
    acc = 0
    for c in reversed(p):
        acc = acc * s + c
    return acc


def _pdivmod(p, q):
    """Exact long division (used only in exact mode)."""
    p = list(p)
    if len(p) < len(q):
        return [], p
    quot = [Fraction(0)] * (len(p) - len(q) + 1)
    lead = q[-1]
    for k in range(len(p) - len(q), -1, -1):
        coef = p[k + len(q) - 1] / lead
        quot[k] = coef
        if coef:
            for i, b in enumerate(q):
                p[k + i] -= coef * b
    rem = p[: len(q) - 1]
    while rem and rem[-1] == 0:
        rem.pop()
    return quot, rem


def _pgcd(p, q):
    while q:
        _, r = _pdivmod(p, q)
        p, q = q, r
    lead = p[-1]
    return [c / lead for c in p]


def _ptaylor_shift(p, s0):
    """Coefficients of p(s0 + d) as a polynomial in d."""
    out = list(p)
    n = len(out)
    for i in range(n):
        for k in range(n - 2, i - 1, -1):
            out[k] += s0 * out[k + 1]
    return out


# ---------------------------------------------------------------------------


class RationalS:
    """Rational function P(s)/Q(s) of s = x - y, kept in reduced form.

    In exact mode the fraction is reduced by a polynomial gcd.  In float mode
    common powers of ``s`` are cancelled and negligible coefficients trimmed.
    The denominator is always monic.
    """

    __slots__ = ("num", "den", "exact")

    def __init__(self, num: Sequence, den: Sequence = (1,)):
        exact = all(is_exact_scalar(c) for c in (*num, *den))
        num = _strip([_to_scalar(c, exact) for c in num], exact)
        den = _strip([_to_scalar(c, exact) for c in den], exact)
        if not den:
            raise FieldError("denominator is identically zero")
        if not num:
            num, den = [], [_to_scalar(1, exact)]
        else:
            # cancel common powers of s
            k = 0
            while k < len(num) - 1 and k < len(den) - 1 and num[k] == 0 and den[k] == 0:
                k += 1
            num, den = num[k:], den[k:]
            if exact and len(den) > 1:
                g = _pgcd(num, den)
                if len(g) > 1:
                    num, _ = _pdivmod(num, g)
                    den, _ = _pdivmod(den, g)
            lead = den[-1]
            num = [c / lead for c in num]
            den = [c / lead for c in den]
        self.num = tuple(num)
        self.den = tuple(den)
        self.exact = exact

    @classmethod
    def constant(cls, value) -> "RationalS":
        return cls([value])

    @classmethod
    def monomial(cls, coeff, power: int) -> "RationalS":
        """coeff * s**power for any integer power."""
        if power >= 0:
            return cls([0] * power + [coeff])
        return cls([coeff], [0] * (-power) + [1])

    def is_zero(self) -> bool:
        return not self.num

    def __call__(self, s):
        return _peval(self.num, s) / _peval(self.den, s)

    def at(self, x, y):
        return self(x - y)

    def __eq__(self, other) -> bool:
        if isinstance(other, Number):
            other = RationalS.constant(other)
        if not isinstance(other, RationalS):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def isclose(self, other: "RationalS", rtol: float = 1e-12, samples=(0.7, 1.3, 2.9, -1.1)) -> bool:
        """Numerical comparison at a few sample values of s."""
        for s in samples:
            a, b = complex(self(s)), complex(other(s))
            if abs(a - b) > rtol * max(abs(a), abs(b), 1e-300):
                return False
        return True

    def __repr__(self) -> str:
        return f"RationalS({list(self.num)!r}, {list(self.den)!r})"

    def __str__(self) -> str:
        def poly(p):
            terms = []
            for k, c in enumerate(p):
                if c == 0:
                    continue
                mono = "" if k == 0 else ("s" if k == 1 else f"s^{k}")
                cs = _fmt_scalar(c)
                if not mono:
                    terms.append(cs)
                else:
                    terms.append(mono if c == 1 else f"({cs})*{mono}")
            return " + ".join(terms) if terms else "0"

        if len(self.den) == 1:
            return poly(self.num)
        return f"({poly(self.num)})/({poly(self.den)})"

    def _coerce(self, other):
        if isinstance(other, RationalS):
            return other
        if isinstance(other, Number):
            return RationalS.constant(other)
        return NotImplemented

    def _combine_add(self, other: "RationalS", sign: int) -> "RationalS":
        left = _pmul(self.num, other.den)
        right = _pmul(other.num, self.den)
        if sign < 0:
            right = _pneg(right)
        num = _padd(left, right)
        if not (self.exact and other.exact):
            # cancellation noise is judged against the operands, not the result
            scale = max(_maxabs(left), _maxabs(right))
            num = _strip([complex(c) for c in num], False, scale)
        return RationalS(num, _pmul(self.den, other.den))

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._combine_add(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._combine_add(other, -1)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other._combine_add(self, -1)

    def __neg__(self):
        return RationalS(_pneg(self.num), self.den)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RationalS(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            raise FieldError("division by the zero rational function")
        return RationalS(_pmul(self.num, other.den), _pmul(self.den, other.num))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def deriv(self) -> "RationalS":
        """d/ds."""
        num = _padd(_pmul(_pderiv(self.num), self.den), _pneg(_pmul(self.num, _pderiv(self.den))))
        return RationalS(num, _pmul(self.den, self.den))

    def partial(self, axis: str) -> "RationalS":
        d = self.deriv()
        if axis == "x":
            return d
        if axis == "y":
            return -d
        raise FieldError(f"unknown axis {axis!r}")

    def log_partial(self, axis: str) -> "RationalS":
        if self.is_zero():
            raise FieldError("log of the zero rational function")
        return self.partial(axis) / self

    def mixed_log_partial(self) -> "RationalS":
        if self.is_zero():
            raise FieldError("log of the zero rational function")
        d1 = self.deriv()
        d2 = d1.deriv()
        # f_x f_y = -f'^2 and f_xy = -f''
        return (d1 * d1 - self * d2) / (self * self)

    def taylor(self, s0, order: int) -> list:
        """Taylor coefficients t_m = f^(m)(s0)/m! for m = 0..order."""
        num = _ptaylor_shift(self.num, s0)
        den = _ptaylor_shift(self.den, s0)
        if den[0] == 0:
            raise FieldError("Taylor expansion at a pole")
        out = []
        for m in range(order + 1):
            acc = num[m] if m < len(num) else 0
            for k in range(1, min(m, len(den) - 1) + 1):
                acc -= den[k] * out[m - k]
            out.append(acc / den[0])
        return out

    def to_jet(self, base, order: int) -> "Jet2":
        x0, y0 = base
        t = self.taylor(x0 - y0, order)
        exact = self.exact and all(is_exact_scalar(v) for v in base)
        table = _empty_table(order, exact)
        for p in range(order + 1):
            for q in range(order + 1 - p):
                table[p, q] = t[p + q] * math.comb(p + q, p) * (-1) ** q
        return Jet2(table, base)


def _fmt_scalar(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    return repr(c)


# ---------------------------------------------------------------------------


def _empty_table(order: int, exact: bool) -> np.ndarray:
    if exact:
        table = np.empty((order + 1, order + 1), dtype=object)
        table.fill(Fraction(0))
        return table
    return np.zeros((order + 1, order + 1), dtype=complex)


_MASKS: dict[int, np.ndarray] = {}


def _mask(order: int) -> np.ndarray:
    m = _MASKS.get(order)
    if m is None:
        idx = np.arange(order + 1)
        m = np.add.outer(idx, idx) <= order
        _MASKS[order] = m
    return m


class Jet2:
    """Truncated Taylor jet of f(x, y) at ``base`` with total order ``order``.

    ``coeffs[p, q]`` holds d^p_x d^q_y f / (p! q!) at the base point; entries
    with p + q > order are zero.  Exact jets use an object array of Fractions.
    """

    __slots__ = ("base", "order", "coeffs", "exact")

    def __init__(self, coeffs, base):
        table = np.asarray(coeffs)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise FieldError("jet coefficient table must be square")
        order = table.shape[0] - 1
        exact = table.dtype == object and all(is_exact_scalar(v) for v in table[_mask(order)])
        if exact:
            table = np.vectorize(Fraction, otypes=[object])(table)
        else:
            table = table.astype(complex)
            if not np.all(np.isfinite(table)):
                raise FieldError("jet coefficients must be finite")
        table[~_mask(order)] = 0
        self.coeffs = table
        self.order = order
        self.base = tuple(base)
        self.exact = exact

    @classmethod
    def constant(cls, value, base, order: int) -> "Jet2":
        exact = is_exact_scalar(value) and all(is_exact_scalar(v) for v in base)
        table = _empty_table(order, exact)
        table[0, 0] = _to_scalar(value, exact)
        return cls(table, base)

    @classmethod
    def variable(cls, axis: str, base, order: int) -> "Jet2":
        exact = all(is_exact_scalar(v) for v in base)
        table = _empty_table(order, exact)
        if axis == "x":
            table[0, 0] = _to_scalar(base[0], exact)
            if order >= 1:
                table[1, 0] = _to_scalar(1, exact)
        elif axis == "y":
            table[0, 0] = _to_scalar(base[1], exact)
            if order >= 1:
                table[0, 1] = _to_scalar(1, exact)
        else:
            raise FieldError(f"unknown axis {axis!r}")
        return cls(table, base)

    @property
    def value(self):
        return self.coeffs[0, 0]

    def derivative(self, p: int, q: int):
        """The partial derivative d^p_x d^q_y f at the base point."""
        if p + q > self.order:
            raise FieldError("derivative exceeds the jet order")
        return self.coeffs[p, q] * math.factorial(p) * math.factorial(q)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs != 0)

    def truncate(self, order: int) -> "Jet2":
        if order > self.order:
            raise FieldError("cannot raise the order of a jet")
        if order == self.order:
            return self
        return Jet2(self.coeffs[: order + 1, : order + 1].copy(), self.base)

    def allclose(self, other: "Jet2", rtol: float = 1e-12) -> bool:
        """Coefficient agreement at the common order, relative to the largest coefficient."""
        k = min(self.order, other.order)
        a = np.array(self.truncate(k).coeffs, dtype=complex)
        b = np.array(other.truncate(k).coeffs, dtype=complex)
        scale = max(np.abs(a).max(), np.abs(b).max(), 1e-300)
        return bool(np.abs(a - b).max() <= rtol * scale)

    def __repr__(self) -> str:
        return f"Jet2(base={self.base!r}, order={self.order}, value={self.value!r})"

    def _unit(self, value):
        return Fraction(value) if self.exact else complex(value)

    def _align(self, other):
        if isinstance(other, Jet2):
            if self.base != other.base:
                raise FieldError(f"base-point mismatch: {self.base} vs {other.base}")
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        if isinstance(other, Number):
            return self, Jet2.constant(other, self.base, self.order)
        return None, None

    def __add__(self, other):
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        return Jet2(a.coeffs + b.coeffs, a.base)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        return Jet2(a.coeffs - b.coeffs, a.base)

    def __rsub__(self, other):
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        return Jet2(b.coeffs - a.coeffs, a.base)

    def __neg__(self):
        return Jet2(-self.coeffs, self.base)

    def __mul__(self, other):
        if isinstance(other, Number):
            return Jet2(self.coeffs * _to_scalar(other, self.exact and is_exact_scalar(other)), self.base)
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        return Jet2(_table_mul(a.coeffs, b.coeffs, a.order), a.base)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        return Jet2.constant(self._unit(1), self.base, self.order) / self

    def __truediv__(self, other):
        if isinstance(other, Number):
            if other == 0:
                raise FieldError("division by zero")
            return self * (1 / _to_scalar(other, self.exact and is_exact_scalar(other)))
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        if b.value == 0:
            raise FieldError("division by a jet with zero constant term")
        return Jet2(_table_div(a.coeffs, b.coeffs, a.order), a.base)

    def __rtruediv__(self, other):
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        return b / a

    def partial(self, axis: str) -> "Jet2":
        if self.order == 0:
            raise FieldError("cannot differentiate an order-0 jet")
        k = self.order - 1
        if axis == "x":
            table = self.coeffs[1:, : k + 1] * np.arange(1, k + 2).reshape(-1, 1)
        elif axis == "y":
            table = self.coeffs[: k + 1, 1:] * np.arange(1, k + 2).reshape(1, -1)
        else:
            raise FieldError(f"unknown axis {axis!r}")
        return Jet2(table, self.base)

    def integrate_x(self) -> "Jet2":
        """Antiderivative in x vanishing on the line x = x0 (order grows by one)."""
        k = self.order + 1
        table = _empty_table(k, self.exact)
        for p in range(1, k + 1):
            table[p, : k + 1 - p] = self.coeffs[p - 1, : k + 1 - p] / p
        return Jet2(table, self.base)

    def log(self) -> "Jet2":
        """Truncated log, principal branch in the constant term.

        Built by integrating f_x/f in x and f_y/f along x = x0, which avoids the
        cancellation of the power series of log(1 + t) at high order.
        """
        a0 = self.value
        if a0 == 0:
            raise FieldError("log of a jet with zero constant term")
        if self.order == 0:
            out = Jet2.constant(0, self.base, 0)
        else:
            inv = self.truncate(self.order - 1).reciprocal()
            out = (self.partial("x") * inv).integrate_x()
            dy = self.partial("y") * inv
            for q in range(1, self.order + 1):
                out.coeffs[0, q] = dy.coeffs[0, q - 1] / q
        # the constant term is transcendental, so an exact jet carries a float here
        out.coeffs[0, 0] = _principal_log(a0)
        return out

    def exp(self) -> "Jet2":
        a0 = self.value
        t = self - a0
        acc = self * 0
        for m in range(self.order, 0, -1):
            acc = t * (acc + self._unit(Fraction(1, math.factorial(m))))
        acc = acc + 1
        if a0 == 0:
            return acc
        return acc * cmath.exp(complex(a0))

    def log_partial(self, axis: str) -> "Jet2":
        if self.value == 0:
            raise FieldError("log of a jet with zero constant term")
        return self.partial(axis) / self.truncate(self.order - 1)

    def mixed_log_partial(self) -> "Jet2":
        if self.order < 2:
            raise FieldError("mixed log partial needs order >= 2")
        return self.log_partial("x").partial("y")


def _principal_log(a0):
    if is_exact_scalar(a0) and a0 > 0:
        return math.log(a0)
    return cmath.log(complex(a0))


def _table_mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    if a.dtype != object and b.dtype != object:
        out = convolve2d(a, b)[: order + 1, : order + 1]
        out[~_mask(order)] = 0
        return out
    out = _empty_table(order, True)
    for p1 in range(order + 1):
        for p2 in range(order + 1 - p1):
            width = order + 1 - p1 - p2
            out[p1 + p2, :width] += np.convolve(a[p1, :width], b[p2, :width])[:width]
    return out


def _table_div(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    # solve b * q = a order by order; unlike iterative inversion this never
    # forms large intermediate coefficients that later cancel
    exact = a.dtype == object and b.dtype == object
    q = _empty_table(order, exact) if exact else np.zeros((order + 1, order + 1), dtype=complex)
    b0 = b[0, 0]
    for m in range(order + 1):
        for p in range(m + 1):
            r = m - p
            acc = np.sum(b[: p + 1, : r + 1] * q[p::-1, r::-1])
            q[p, r] = (a[p, r] - acc) / b0
    return q


# ---------------------------------------------------------------------------


class Gauge:
    """Partial derivatives (F_x, F_y, F_xy) of a gauge potential F = log f."""

    __slots__ = ("fx", "fy", "fxy", "potential")

    def __init__(self, fx, fy, fxy, potential=None):
        self.fx, self.fy, self.fxy, self.potential = fx, fy, fxy, potential

    @classmethod
    def from_potential(cls, F) -> "Gauge":
        fx = F.partial("x")
        return cls(fx, F.partial("y"), fx.partial("y"), F)

    @classmethod
    def log_of(cls, f) -> "Gauge":
        """Gauge with potential log f, built from log-derivatives of f."""
        potential = f.log() if isinstance(f, Jet2) else None
        return cls(f.log_partial("x"), f.log_partial("y"), f.mixed_log_partial(), potential)

    def is_zero(self) -> bool:
        return self.fx.is_zero() and self.fy.is_zero() and self.fxy.is_zero()

    def __repr__(self) -> str:
        return f"Gauge(fx={self.fx}, fy={self.fy}, fxy={self.fxy})"


# ---------------------------------------------------------------------------


def jet_combine(a: Jet2, b: Jet2, kind: str) -> Jet2:
    if kind == "add":
        return a + b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    raise FieldError(f"unknown combination {kind!r}")


def jet_log(a: Jet2) -> Jet2:
    return a.log()


def field_partial(f, axis: str):
    return f.partial(axis)


def mixed_log_partial(f):
    return f.mixed_log_partial()
