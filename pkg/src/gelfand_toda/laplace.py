"""Hyperbolic operators M = d_x d_y + a d_x + b d_y + c and their Laplace sequences.

Coefficients are either all :class:`~gelfand_toda.fields.RationalS` (exact
functions of s = x - y) or all :class:`~gelfand_toda.fields.Jet2` at a shared
base point.  Operators are immutable; every transformation returns a new one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import FieldError, VanishingInvariantError
from .fields import Gauge, Jet2, RationalS

__all__ = [
    "HyperbolicOperator",
    "InvariantPair",
    "OperatorSequence",
    "TodaPair",
    "invariants",
    "gauge_conjugate",
    "laplace_up",
    "laplace_down",
    "to_normal_form",
    "normal_sequence",
    "toda_pair",
    "toda_residuals",
    "epd_seed_operator",
    "epd_normal_gauge",
    "solution_jet",
    "composition_residual",
    "operators_agree",
]

# Jet2 vanishing test: |h(base)| < VANISH_RTOL * coefficient scale
VANISH_RTOL = 1e-13
# Jet2 round-trip agreement for down-steps
ROUND_TRIP_RTOL = 1e-10


def _backend(f) -> str:
    if isinstance(f, RationalS):
        return "rational"
    if isinstance(f, Jet2):
        return "jet"
    raise FieldError(f"unsupported coefficient type {type(f).__name__}")


def _zero_like(f):
    return f * 0


@dataclass(frozen=True)
class HyperbolicOperator:
    """The operator d_x d_y + a d_x + b d_y + c."""

    a: RationalS | Jet2
    b: RationalS | Jet2
    c: RationalS | Jet2

    def __post_init__(self):
        kinds = {_backend(self.a), _backend(self.b), _backend(self.c)}
        if len(kinds) != 1:
            raise FieldError("operator coefficients must share one representation")
        if kinds == {"jet"} and not (self.a.base == self.b.base == self.c.base):
            raise FieldError("operator coefficients must share one base point")

    @property
    def backend(self) -> str:
        return _backend(self.a)

    @property
    def is_normal(self) -> bool:
        return self.b.is_zero()

    def to_jet(self, base, order: int) -> "HyperbolicOperator":
        if self.backend == "jet":
            return self
        return HyperbolicOperator(*(f.to_jet(base, order) for f in (self.a, self.b, self.c)))

    def apply(self, u: Jet2) -> Jet2:
        """Apply the operator to a jet u (jet backend only)."""
        ux, uy = u.partial("x"), u.partial("y")
        return ux.partial("y") + self.a * ux + self.b * uy + self.c * u

    def __str__(self) -> str:
        return f"dxdy + ({self.a})dx + ({self.b})dy + ({self.c})"


@dataclass(frozen=True)
class InvariantPair:
    h: RationalS | Jet2
    k: RationalS | Jet2


def invariants(M: HyperbolicOperator) -> InvariantPair:
    """h = a_x + ab - c and k = b_y + ab - c."""
    a, b, c = M.a, M.b, M.c
    if b.is_zero():
        # skip the b terms so that jet orders are not spent on an exact zero
        return InvariantPair(a.partial("x") - c, -c)
    ab = a * b
    return InvariantPair(a.partial("x") + ab - c, b.partial("y") + ab - c)


def gauge_conjugate(M: HyperbolicOperator, F) -> HyperbolicOperator:
    """Coefficients of f^{-1} M f where F = log f (a field or a :class:`Gauge`)."""
    g = F if isinstance(F, Gauge) else Gauge.from_potential(F)
    if _backend(g.fx) != M.backend:
        raise FieldError("gauge and operator use different representations")
    a, b, c = M.a, M.b, M.c
    c_new = c + a * g.fx + g.fxy + g.fx * g.fy
    if not b.is_zero():
        c_new = c_new + b * g.fy
    return HyperbolicOperator(a + g.fy, b + g.fx, c_new)


def _coefficient_scale(M: HyperbolicOperator) -> float:
    vals = [abs(complex(f.value)) for f in (M.a, M.b, M.c)]
    vals.append(abs(complex(M.a.value)) * abs(complex(M.b.value)))
    if M.a.order >= 1:
        vals.append(abs(complex(M.a.derivative(1, 0))))
    if M.b.order >= 1:
        vals.append(abs(complex(M.b.derivative(0, 1))))
    return max(vals)


def _vanishes(f, M: HyperbolicOperator) -> bool:
    if isinstance(f, RationalS):
        return f.is_zero()
    return abs(complex(f.value)) < VANISH_RTOL * max(_coefficient_scale(M), 1e-300)


def laplace_up(M: HyperbolicOperator, *, step: int = 0) -> HyperbolicOperator:
    """Laplace transformation along d_y; requires h != 0."""
    h = invariants(M).h
    if _vanishes(h, M):
        raise VanishingInvariantError(f"invariant h vanishes at step {step}", step)
    a, b, c = M.a, M.b, M.c
    dlog_h = h.log_partial("y")
    a_new = a - dlog_h
    c_new = c - a.partial("x")
    if not b.is_zero():
        c_new = c_new + b.partial("y") - b * dlog_h
    return HyperbolicOperator(a_new, b, c_new)


def laplace_down(M: HyperbolicOperator, *, step: int = 0) -> HyperbolicOperator:
    """Laplace transformation along d_x; requires k != 0."""
    k = invariants(M).k
    if _vanishes(k, M):
        raise VanishingInvariantError(f"invariant k vanishes at step {step}", step)
    a, b, c = M.a, M.b, M.c
    dlog_k = k.log_partial("x")
    b_new = b - dlog_k
    c_new = c + a.partial("x") - a * dlog_k
    if not b.is_zero():
        c_new = c_new - b.partial("y")
    return HyperbolicOperator(a, b_new, c_new)


def _zero_gauge(M: HyperbolicOperator) -> Gauge:
    z = _zero_like(M.a)
    return Gauge(z, z, z, z)


def to_normal_form(M: HyperbolicOperator, gauge: Gauge | None = None) -> tuple[HyperbolicOperator, Gauge]:
    """Gauge M so that the d_y coefficient vanishes.

    Without an explicit gauge the potential F solves F_x = -b: in the rational
    backend b depends on s only, so F_y = b; in the jet backend F is the
    term-by-term x-antiderivative.
    """
    if gauge is None:
        if M.is_normal:
            return M, _zero_gauge(M)
        b = M.b
        if isinstance(b, RationalS):
            gauge = Gauge(-b, b, b.partial("y") * -1)
        else:
            F = -b.integrate_x()
            gauge = Gauge.from_potential(F)
    N = gauge_conjugate(M, gauge)
    b_new = N.b
    if not b_new.is_zero():
        if isinstance(b_new, Jet2):
            # F_x = -b holds to rounding; drop the residue
            scale = max(np.abs(np.asarray(M.b.coeffs, dtype=complex)).max(), 1e-300)
            if np.abs(np.asarray(b_new.coeffs, dtype=complex)).max() > 1e-10 * scale:
                raise FieldError("gauge does not remove the d_y coefficient")
            N = HyperbolicOperator(N.a, _zero_like(b_new), N.c)
        else:
            raise FieldError("gauge does not remove the d_y coefficient")
    return N, gauge


def _up_normal(M: HyperbolicOperator, step: int) -> HyperbolicOperator:
    """Normal-form recurrence a' = a - d_y log h, c' = c - d_x a for normal operators."""
    a, c = M.a, M.c
    a_x = a.partial("x")
    h = a_x - c
    if _vanishes(h, M):
        raise VanishingInvariantError(f"invariant h vanishes at step {step}", step)
    a_new = a - h.log_partial("y")
    c_new = c - a_x
    return HyperbolicOperator(a_new, _zero_like(a_new), c_new)


def _table_max(f: Jet2) -> float:
    return float(np.abs(np.asarray(f.coeffs, dtype=complex)).max())


def operators_agree(M: HyperbolicOperator, N: HyperbolicOperator, rtol: float = ROUND_TRIP_RTOL) -> bool:
    """Compare the a and c coefficients of two normal-form operators.

    Exact rational operators must match exactly.  Jets are compared at their
    common order relative to the largest coefficient of either operator, since
    a small coefficient can be the difference of much larger terms.
    """
    if M.backend == "rational":
        if all(f.exact for f in (M.a, M.c, N.a, N.c)):
            return M.a == N.a and M.c == N.c
        return M.a.isclose(N.a, rtol) and M.c.isclose(N.c, rtol)
    scale = max(_table_max(f) for f in (M.a, M.c, N.a, N.c))
    for f, g in ((M.a, N.a), (M.c, N.c)):
        k = min(f.order, g.order)
        d = np.asarray(f.truncate(k).coeffs, dtype=complex) - np.asarray(g.truncate(k).coeffs, dtype=complex)
        if np.abs(d).max() > rtol * max(scale, 1e-300):
            return False
    return True


@dataclass(frozen=True)
class OperatorSequence:
    """Normal-form operators M_n for n_min <= n <= n_max with provenance tags."""

    operators: dict
    provenance: dict
    backend: str
    checked: bool = field(default=False, compare=False)

    @property
    def n_min(self) -> int:
        return min(self.operators)

    @property
    def n_max(self) -> int:
        return max(self.operators)

    def __getitem__(self, n: int) -> HyperbolicOperator:
        return self.operators[n]

    def __iter__(self):
        return iter(sorted(self.operators))

    def invariants(self, n: int) -> InvariantPair:
        return invariants(self.operators[n])

    def check_recurrences(self) -> None:
        """Re-derive every entry from its lower neighbour by the up recurrence."""
        for n in range(self.n_min, self.n_max):
            lifted = _up_normal(self.operators[n], n)
            nxt = self.operators[n + 1]
            if not operators_agree(lifted, nxt):
                raise FieldError(f"sequence entries {n} and {n + 1} violate the up recurrence")


def normal_sequence(M0: HyperbolicOperator, n_min: int, n_max: int) -> OperatorSequence:
    """Laplace sequence of a normal-form operator over [n_min, n_max].

    Up-steps use the normal-form recurrence.  Each down-step applies
    :func:`laplace_down` followed by the gauge F = log k, which returns the
    operator to normal form; the result is then lifted back by the up
    recurrence and compared with its source.
    """
    if not M0.is_normal:
        raise FieldError("normal_sequence needs an operator with b = 0")
    if not n_min <= 0 <= n_max:
        raise FieldError("the index range must contain 0")
    if M0.backend == "jet":
        need = 2 * (n_max - n_min) + 2
        have = min(M0.a.order, M0.c.order)
        if have < need:
            raise FieldError(f"jet order {have} is below the required {need}")
    ops = {0: M0}
    tags = {0: "seed"}
    for n in range(0, n_max):
        ops[n + 1] = _up_normal(ops[n], n)
        tags[n + 1] = "up"
    for n in range(0, n_min, -1):
        M = ops[n]
        k = invariants(M).k
        down = laplace_down(M, step=n)
        lowered, _ = to_normal_form(down, Gauge.log_of(k))
        lifted = _up_normal(lowered, n - 1)
        if not operators_agree(lifted, M):
            raise FieldError(f"round-trip check failed at down-step {n}")
        ops[n - 1] = lowered
        tags[n - 1] = "down+gauge"
    seq = OperatorSequence(dict(sorted(ops.items())), tags, M0.backend)
    seq.check_recurrences()
    return OperatorSequence(seq.operators, tags, M0.backend, checked=True)


@dataclass(frozen=True)
class TodaPair:
    n: int
    s_next: RationalS | Jet2  # s_{n+1}
    r: RationalS | Jet2  # r_n


def toda_pair(seq: OperatorSequence) -> list[TodaPair]:
    """(s_{n+1}, r_n) = (a_n, c_n) for each normal-form entry."""
    out = []
    for n in seq:
        M = seq[n]
        if not M.is_normal:
            raise FieldError(f"entry {n} is not in normal form")
        out.append(TodaPair(n, M.a, M.c))
    return out


def toda_residuals(pairs: Iterable[TodaPair]) -> dict:
    """Residual fields of the pair recurrences and of the 2D Toda equation.

    Keys are ("dx_s", n), ("dy_log_r", n) and ("2dte", n); values are fields
    that vanish identically when the chain is consistent.
    """
    by_n = {p.n: p for p in pairs}
    out = {}
    for n, p in by_n.items():
        if n + 1 in by_n:
            out[("dx_s", n)] = p.s_next.partial("x") - (p.r - by_n[n + 1].r)
        if n - 1 in by_n:
            out[("dy_log_r", n)] = p.r.log_partial("y") - (by_n[n - 1].s_next - p.s_next)
        if n - 1 in by_n and n + 1 in by_n:
            rhs = by_n[n + 1].r - 2 * p.r + by_n[n - 1].r
            out[("2dte", n)] = p.r.mixed_log_partial() - rhs
    return out


def epd_seed_operator(alpha, beta) -> HyperbolicOperator:
    """d_x d_y + beta/(x-y) d_x + alpha/(y-x) d_y in the rational backend."""
    return HyperbolicOperator(
        RationalS.monomial(beta, -1),
        RationalS.monomial(-alpha, -1),
        RationalS.constant(0),
    )


def epd_normal_gauge(alpha) -> Gauge:
    """Gauge F = alpha*log(x - y) taking the EPD seed operator to normal form."""
    return Gauge(
        RationalS.monomial(alpha, -1),
        RationalS.monomial(-alpha, -1),
        RationalS.monomial(alpha, -2),
    )


def solution_jet(M: HyperbolicOperator, boundary_x, boundary_y) -> Jet2:
    """Jet of the solution of M u = 0 with prescribed Goursat data.

    ``boundary_x[p]`` and ``boundary_y[q]`` are the Taylor coefficients of
    u(x, y0) and u(x0, y) (sharing the constant term).  The mixed
    coefficients follow from u_xy = -(a u_x + b u_y + c u) order by order.
    """
    if M.backend != "jet":
        raise FieldError("solution_jet needs jet coefficients")
    K = min(M.a.order, M.b.order, M.c.order) + 2
    exact = M.a.exact and M.b.exact and M.c.exact
    table = np.zeros((K + 1, K + 1), dtype=object if exact else complex)
    if exact:
        table.fill(Fraction(0))
    for p, v in enumerate(boundary_x[: K + 1]):
        table[p, 0] = v
    for q, v in enumerate(boundary_y[: K + 1]):
        table[0, q] = v
    A, B, C = (np.asarray(f.coeffs) for f in (M.a, M.b, M.c))

    def conv(coef, P, Q, get):
        acc = 0
        for i in range(P + 1):
            for j in range(Q + 1):
                if i + j <= coef.shape[0] - 1:
                    acc = acc + coef[i, j] * get(P - i, Q - j)
        return acc

    for m in range(2, K + 1):
        for P in range(1, m):
            Q = m - P
            p, q = P - 1, Q - 1
            ux = lambda i, j: (i + 1) * table[i + 1, j]
            uy = lambda i, j: (j + 1) * table[i, j + 1]
            u = lambda i, j: table[i, j]
            rhs = conv(A, p, q, ux) + conv(B, p, q, uy) + conv(C, p, q, u)
            table[P, Q] = -rhs / (P * Q)
    return Jet2(table, M.a.base)


def composition_residual(M: HyperbolicOperator, u: Jet2) -> Jet2:
    """(L_- L_+ - h) u with L_+ = d_y + a and L_- = d_x + b; zero on solutions."""
    plus = u.partial("y") + M.a * u
    minus = plus.partial("x") + M.b * plus
    return minus - invariants(M).h * u
