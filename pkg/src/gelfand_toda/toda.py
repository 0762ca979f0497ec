"""Tau functions of the two-dimensional Toda-Hirota equation.

    d_i d_j log tau_n = tau_{n+1} tau_{n-1} / tau_n^2

Three constructions live here: the seed t_n = B(n) s^p(n) with s = x_i - x_j,
the Baecklund composition tau_n = t_n u_n with ladder solutions u_n, and the
closed form built from Phi at shifted weights.  A TauSequence hands out
partial derivatives of every tau_n at a point, keyed (a, b) for d_i^a d_j^b.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Sequence

import numpy as np

from .contour import QuadSettings
from .errors import DegenerateCycleError, LadderError, ParameterError
from .hgf import AlphaWeights, PointConfig, choose_cycle_pair, falling, phi_family

__all__ = [
    "SeedParams",
    "p_exponent",
    "B_constant",
    "B_constant_expanded",
    "SeedResidual",
    "seed_residual",
    "seed_tau",
    "gamma_ratio",
    "ladder_step",
    "LadderCheck",
    "ladder_check",
    "TauSequence",
    "seed_sequence",
    "build_tau_main",
    "gauged_phi_solutions",
    "backlund_compose",
    "backlund_identity_residual",
    "TodaReport",
    "verify_2dthe",
    "corrupt",
]

DERIVATIVE_ORDERS = ((0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2))


def _num(v):
    if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
        return Fraction(v)
    return complex(v)


@dataclass(frozen=True)
class SeedParams:
    alpha: object
    beta: object
    A: object = 1

    def __post_init__(self):
        for name in ("alpha", "beta", "A"):
            object.__setattr__(self, name, _num(getattr(self, name)))
        if self.A == 0:
            raise ParameterError("A must be nonzero")

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in (self.alpha, self.beta, self.A))


def p_exponent(params: SeedParams, n: int):
    """(alpha + n)(beta - n + 1)."""
    return (params.alpha + n) * (params.beta - n + 1)


def _p_checked(params: SeedParams, n: int):
    v = p_exponent(params, n)
    if v == 0:
        raise ParameterError(f"p(alpha, beta; {n}) vanishes")
    return v


def B_constant(params: SeedParams, n: int):
    """Normalisation with B(0) = 1, B(1) = A and B(n+1) B(n-1) / B(n)^2 = p(n)."""
    A = params.A
    if n == 0:
        return A ** 0
    if n == 1:
        return A
    out = A ** n
    if n >= 2:
        for k in range(n):
            for l in range(1, k + 1):
                out *= _p_checked(params, l)
    else:
        for k in range(1, -n + 1):
            for l in range(-k + 1, 1):
                out *= _p_checked(params, l)
    return out


def _rising(a, k: int):
    out = 1
    for m in range(k):
        out *= a + m
    return out


def B_constant_expanded(params: SeedParams, n: int):
    """(-1)^(n(n-1)/2) A^n prod_{k=1}^{n-1} (alpha+1)_k (-beta)_k, for n >= 0."""
    if n < 0:
        raise ParameterError("the expanded form covers n >= 0 only")
    out = (-1) ** (n * (n - 1) // 2) * params.A ** n
    for k in range(1, n):
        out *= _rising(params.alpha + 1, k) * _rising(-params.beta, k)
    return out


@dataclass(frozen=True)
class SeedResidual:
    """Both parts vanish exactly when t_n solves the equation at n."""

    coefficient: object  # p(n) - B(n+1) B(n-1) / B(n)^2
    exponent: object  # p(n+1) + p(n-1) - 2 p(n) + 2

    def is_zero(self) -> bool:
        return self.coefficient == 0 and self.exponent == 0


def seed_residual(params: SeedParams, n: int) -> SeedResidual:
    """Residual of the seed solution by exponent and constant arithmetic.

    d_i d_j log (B s^p) = p / s^2 while t_{n+1} t_{n-1} / t_n^2 is
    B(n+1) B(n-1) / B(n)^2 times s to the second difference of p.
    """
    ratio = B_constant(params, n + 1) * B_constant(params, n - 1) / B_constant(params, n) ** 2
    second_diff = p_exponent(params, n + 1) + p_exponent(params, n - 1) - 2 * p_exponent(params, n)
    return SeedResidual(p_exponent(params, n) - ratio, second_diff + 2)


def seed_tau(params: SeedParams, n: int, x_i, x_j) -> complex:
    s = complex(x_i) - complex(x_j)
    if s == 0:
        raise ParameterError("x_i and x_j coincide")
    return complex(B_constant(params, n)) * cmath.exp(complex(p_exponent(params, n)) * cmath.log(s))


def gamma_ratio(alpha_j, n: int):
    """Gamma(alpha_j + 1) / Gamma(alpha_j - n + 1) as a finite product."""
    a = _num(alpha_j)
    if n >= 0:
        return falling(a, n)
    out = 1
    for m in range(1, -n + 1):
        out *= a + m
    return 1 / out


# ---------------------------------------------------------------------------
# power of s = x_i - x_j and Leibniz products


def _power_derivatives(log_s: complex, s: complex, e: complex, orders) -> dict:
    """d_i^a d_j^b s^e = (-1)^b falling(e, a+b) s^(e-a-b)."""
    out = {}
    for a, b in orders:
        m = a + b
        out[(a, b)] = (-1) ** b * falling(e, m) * cmath.exp(e * log_s) / s ** m
    return out


def _leibniz(f: dict, g: dict, orders) -> dict:
    out = {}
    for a, b in orders:
        total = 0j
        for a1 in range(a + 1):
            for b1 in range(b + 1):
                total += comb(a, a1) * comb(b, b1) * f[(a1, b1)] * g[(a - a1, b - b1)]
        out[(a, b)] = total
    return out


def _closure(orders) -> tuple:
    """All (a', b') below the requested orders, so Leibniz sums have their inputs."""
    out = set()
    for a, b in orders:
        for a1 in range(a + 1):
            for b1 in range(b + 1):
                out.add((a1, b1))
    return tuple(sorted(out))


# ---------------------------------------------------------------------------
# ladders


def _shift_vector(n_total: int, i: int, j: int, n: int) -> np.ndarray:
    v = np.zeros(n_total, dtype=int)
    v[i] += n
    v[j] -= n
    return v


def _check_range(alpha: AlphaWeights, i: int, j: int, ns) -> None:
    if i == j:
        raise ParameterError("pair indices must differ")
    for n in ns:
        if n:
            alpha.shift(i, j, n)


def ladder_step(
    x: PointConfig,
    alpha: AlphaWeights,
    pair: tuple[int, int],
    n: int,
    direction: str = "up",
    cycle_pair: tuple[int, int] | None = None,
    settings: QuadSettings | None = None,
    rho: float = 0.2,
) -> complex:
    """H_n u_n or B_n u_n for u_n = gamma_ratio(alpha_j, n) Phi(alpha + n(e_i - e_j)).

    ``cycle_pair=None`` picks a cycle away from x_i and x_j.
    """
    i, j = pair
    _check_range(alpha, i, j, [n, n + 1, n - 1])
    a_i, a_j = alpha.array[i], alpha.array[j]
    fam, _ = phi_family(x, alpha, cycle_pair or choose_cycle_pair(x, pair, rho), settings, None, rho)
    shift = _shift_vector(len(x), i, j, n)
    g = complex(gamma_ratio(alpha[j], n))
    u, ui, uj = (fam.request(d, shift) for d in ([], [i], [j]))
    s = x.array[i] - x.array[j]
    if direction == "up":
        return g * (s * fam[uj] + (a_j - n) * fam[u])
    if direction == "down":
        den = (a_i + n) * (a_j - n + 1)
        if den == 0:
            raise LadderError(f"down-step denominator vanishes at n = {n}")
        return g * (-s * fam[ui] + (a_i + n) * fam[u]) / den
    raise ParameterError("direction must be 'up' or 'down'")


@dataclass(frozen=True)
class LadderCheck:
    up: float  # |H_n u_n - u_{n+1}| / |u_{n+1}|
    down: float  # |B_n u_n - u_{n-1}| / |u_{n-1}|
    up_then_down: float  # |B_{n+1} H_n u_n - u_n| / |u_n|
    down_then_up: float  # |H_{n-1} B_n u_n - u_n| / |u_n|


def ladder_check(
    x: PointConfig,
    alpha: AlphaWeights,
    pair: tuple[int, int],
    n: int,
    cycle_pair: tuple[int, int] | None = None,
    settings: QuadSettings | None = None,
    rho: float = 0.2,
) -> LadderCheck:
    """Ladder relations at one n, all from a single quadrature pass.

    u_n is known in closed form, so the composite steps use second
    derivatives of u_n: d_i (H_n u) = d_j u + s d_i d_j u + (alpha_j - n) d_i u.
    """
    i, j = pair
    _check_range(alpha, i, j, [n - 1, n, n + 1])
    a_i, a_j = alpha.array[i], alpha.array[j]
    fam, _ = phi_family(x, alpha, cycle_pair or choose_cycle_pair(x, pair, rho), settings, None, rho)
    N = len(x)

    def u_terms(m, derivs):
        return complex(gamma_ratio(alpha[j], m)), fam.request(derivs, _shift_vector(N, i, j, m))

    req = {key: u_terms(n, d) for key, d in {"u": [], "i": [i], "j": [j], "ij": [i, j]}.items()}
    nxt = u_terms(n + 1, [])
    prv = u_terms(n - 1, [])

    def val(t):
        return t[0] * fam[t[1]]

    s = x.array[i] - x.array[j]
    u, ui, uj, uij = (val(req[k]) for k in ("u", "i", "j", "ij"))
    up = s * uj + (a_j - n) * u
    den_n = (a_i + n) * (a_j - n + 1)
    down = (-s * ui + (a_i + n) * u) / den_n
    # B_{n+1} applied to v = H_n u
    v, vi = up, uj + s * uij + (a_j - n) * ui
    den_up = (a_i + n + 1) * (a_j - n)
    back = (-s * vi + (a_i + n + 1) * v) / den_up
    # H_{n-1} applied to w = B_n u
    w, wj = down, (ui - s * uij + (a_i + n) * uj) / den_n
    fwd = s * wj + (a_j - n + 1) * w

    def rel(a, b):
        return abs(a - b) / max(abs(b), 1e-300)

    return LadderCheck(rel(up, val(nxt)), rel(down, val(prv)), rel(back, u), rel(fwd, u))


# ---------------------------------------------------------------------------
# tau sequences


Evaluator = Callable[[Sequence[complex], Sequence[tuple]], dict]


@dataclass(frozen=True)
class TauSequence:
    """tau_n for n in [n_min, n_max] with partial-derivative evaluators.

    ``evaluator(point, orders)`` returns {n: {(a, b): d_i^a d_j^b tau_n}}.
    ``seed`` is set for seed-only sequences, which verify symbolically.
    """

    n_min: int
    n_max: int
    pair: tuple
    provenance: str
    evaluator: Evaluator
    seed: SeedParams | None = None

    @property
    def n_values(self) -> range:
        return range(self.n_min, self.n_max + 1)

    def evaluate(self, point, orders=DERIVATIVE_ORDERS) -> dict:
        return self.evaluator(point, tuple(orders))


def _log_s(point, pair):
    i, j = pair
    s = complex(point[i]) - complex(point[j])
    if s == 0:
        raise ParameterError("x_i and x_j coincide at the evaluation point")
    return s, cmath.log(s)


def seed_sequence(params: SeedParams, pair: tuple[int, int], n_min: int, n_max: int) -> TauSequence:
    ns = range(n_min, n_max + 1)
    consts = {n: complex(B_constant(params, n)) for n in ns}
    exps = {n: complex(p_exponent(params, n)) for n in ns}

    def evaluator(point, orders):
        s, log_s = _log_s(point, pair)
        return {n: {k: consts[n] * v for k, v in _power_derivatives(log_s, s, exps[n], orders).items()} for n in ns}

    return TauSequence(n_min, n_max, tuple(pair), "seed-only", evaluator, params)


def _phi_evaluator(alpha, pair, ns, cycle_pair, settings, prefactor, rho=0.2):
    """Evaluator for prefactor(n) * s^e(n) * Phi(alpha + n(e_i - e_j))."""
    i, j = pair

    def evaluator(point, orders):
        x = PointConfig(tuple(point))
        s, log_s = _log_s(point, pair)
        need = _closure(orders)
        fam, _ = phi_family(x, alpha, cycle_pair or choose_cycle_pair(x, pair, rho), settings, None, rho)
        N = len(x)
        reqs = {
            (n, k): fam.request([i] * k[0] + [j] * k[1], _shift_vector(N, i, j, n))
            for n in ns
            for k in need
        }
        out = {}
        for n in ns:
            c, e = prefactor(n)
            phi = {k: fam[reqs[(n, k)]] for k in need}
            if abs(phi[(0, 0)]) < 10 * fam.error(reqs[(n, (0, 0))]):
                raise DegenerateCycleError(f"Phi is below its error estimate at n = {n}")
            gpow = _power_derivatives(log_s, s, e, need)
            prod = _leibniz(gpow, phi, orders)
            out[n] = {k: c * v for k, v in prod.items()}
        return out

    return evaluator


def build_tau_main(
    x_template: PointConfig | None,
    alpha: AlphaWeights,
    pair: tuple[int, int],
    n_range: tuple[int, int],
    A=1,
    cycle_pair: tuple[int, int] | None = None,
    settings: QuadSettings | None = None,
    rho: float = 0.2,
) -> TauSequence:
    """tau_n = gamma_ratio(alpha_j, n) B(alpha_i, alpha_j; n) s^((alpha_i+n)(alpha_j-n)) Phi(alpha + n(e_i - e_j)).

    ``x_template`` is only used to validate dimensions; points are supplied
    at evaluation time.  With ``cycle_pair=None`` each point gets a cycle
    around two points other than x_i, x_j.
    """
    i, j = pair
    n_min, n_max = n_range
    if n_min > n_max:
        raise ParameterError("empty n range")
    if x_template is not None and len(x_template) != len(alpha):
        raise ParameterError("configuration and weights differ in length")
    ns = range(n_min, n_max + 1)
    _check_range(alpha, i, j, ns)
    params = SeedParams(alpha[i], alpha[j], A)
    consts = {n: complex(gamma_ratio(alpha[j], n)) * complex(B_constant(params, n)) for n in ns}
    a_i, a_j = alpha.array[i], alpha.array[j]

    def prefactor(n):
        return consts[n], (a_i + n) * (a_j - n)

    ev = _phi_evaluator(alpha, pair, ns, cycle_pair, settings, prefactor, rho)
    return TauSequence(n_min, n_max, tuple(pair), "main-theorem", ev)


def gauged_phi_solutions(
    alpha: AlphaWeights,
    pair: tuple[int, int],
    n_range: tuple[int, int],
    cycle_pair: tuple[int, int] | None = None,
    settings: QuadSettings | None = None,
    rho: float = 0.2,
) -> Evaluator:
    """u'_n = s^-(alpha_i + n) gamma_ratio(alpha_j, n) Phi(alpha + n(e_i - e_j)).

    These solve the normal-form EPD sequence, whose ladders are
    H'_n = d_j + s_{n+1} and B'_n = -d_i / r_n.
    """
    i, j = pair
    ns = range(n_range[0], n_range[1] + 1)
    _check_range(alpha, i, j, ns)
    a_i = alpha.array[i]

    def prefactor(n):
        return complex(gamma_ratio(alpha[j], n)), -(a_i + n)

    return _phi_evaluator(alpha, pair, ns, cycle_pair, settings, prefactor, rho)


def _seed_pair(params: SeedParams, n: int, s: complex) -> tuple[complex, complex]:
    """(s_{n+1}, r_n) of the seed: ((p(n+1) - p(n))/s, p(n)/s^2)."""
    p0 = complex(p_exponent(params, n))
    p1 = complex(p_exponent(params, n + 1))
    return (p1 - p0) / s, p0 / s**2


def backlund_compose(
    seed: SeedParams,
    pair: tuple[int, int],
    n_range: tuple[int, int],
    solutions: Evaluator,
    check_points: Sequence[Sequence[complex]] = (),
    tol: float = 1e-6,
) -> TauSequence:
    """tau_n = t_n u_n for ladder solutions u_n of the seed's normal-form sequence.

    At each check point the ladder relations u_{n+1} = d_j u_n + s_{n+1} u_n
    and u_{n-1} = -d_i u_n / r_n are sampled; a relative failure above
    ``tol`` raises LadderError.
    """
    n_min, n_max = n_range
    ns = range(n_min, n_max + 1)
    tseq = seed_sequence(seed, pair, n_min, n_max)
    for point in check_points:
        s, _ = _log_s(point, pair)
        u = solutions(point, ((0, 0), (1, 0), (0, 1)))
        for n in ns:
            s_next, r = _seed_pair(seed, n, s)
            if n + 1 in u:
                got = u[n][(0, 1)] + s_next * u[n][(0, 0)]
                if abs(got - u[n + 1][(0, 0)]) > tol * abs(u[n + 1][(0, 0)]):
                    raise LadderError(f"up-ladder relation fails at n = {n}")
            if n - 1 in u:
                got = -u[n][(1, 0)] / r
                if abs(got - u[n - 1][(0, 0)]) > tol * abs(u[n - 1][(0, 0)]):
                    raise LadderError(f"down-ladder relation fails at n = {n}")

    def evaluator(point, orders):
        need = _closure(orders)
        t = tseq.evaluate(point, need)
        u = solutions(point, need)
        return {n: _leibniz(t[n], u[n], orders) for n in ns}

    return TauSequence(n_min, n_max, tuple(pair), "seed-x-ladder", evaluator)


def backlund_identity_residual(seed: SeedParams, pair, solutions: Evaluator, n: int, point) -> float:
    """|d_i d_j log u_n - (r_n u_{n+1} u_{n-1} / u_n^2 - r_n)| relative to the larger side."""
    s, _ = _log_s(point, pair)
    u = solutions(point, ((0, 0), (1, 0), (0, 1), (1, 1)))
    if n - 1 not in u or n + 1 not in u:
        raise ParameterError("n must be interior to the solution range")
    _, r = _seed_pair(seed, n, s)
    un = u[n]
    lhs = (un[(0, 0)] * un[(1, 1)] - un[(1, 0)] * un[(0, 1)]) / un[(0, 0)] ** 2
    rhs = r * u[n + 1][(0, 0)] * u[n - 1][(0, 0)] / un[(0, 0)] ** 2 - r
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def corrupt(seq: TauSequence, n: int, factor: complex) -> TauSequence:
    """Copy of the sequence with tau_n (and its derivatives) multiplied by ``factor``."""

    def evaluator(point, orders):
        out = seq.evaluate(point, orders)
        out[n] = {k: factor * v for k, v in out[n].items()}
        return out

    return TauSequence(seq.n_min, seq.n_max, seq.pair, seq.provenance + "+corrupted", evaluator)


# ---------------------------------------------------------------------------
# verification


@dataclass
class TodaReport:
    """Relative residuals keyed (n, point index).

    ``hirota``: d_i d_j log tau_n against tau_{n+1} tau_{n-1}/tau_n^2.
    ``dx_s`` and ``dy_log_r``: the two first-order relations of the
    (s_{n+1}, r_n) chain with s_{n+1} = d_j log(tau_n/tau_{n+1}) and
    r_n = d_i d_j log tau_n.
    """

    hirota: dict = field(default_factory=dict)
    dx_s: dict = field(default_factory=dict)
    dy_log_r: dict = field(default_factory=dict)
    exact: bool = False

    def max_residual(self) -> float:
        vals = list(self.hirota.values()) + list(self.dx_s.values()) + list(self.dy_log_r.values())
        return max(vals, default=0.0)

    def passed(self, tol: float = 1e-6) -> bool:
        return self.max_residual() < tol


def _rel(res, *terms) -> float:
    return abs(res) / max([abs(t) for t in terms] + [1e-300])


def verify_2dthe(seq: TauSequence, points: Sequence[Sequence[complex]]) -> TodaReport:
    """Residuals at every interior n and point; seed sequences verify exactly."""
    interior = [n for n in seq.n_values if seq.n_min < n < seq.n_max]
    if seq.seed is not None:
        report = TodaReport(exact=seq.seed.exact)
        for n in interior:
            r = seed_residual(seq.seed, n)
            for k in range(len(points)):
                report.hirota[(n, k)] = float(abs(r.coefficient)) + float(abs(r.exponent))
        return report
    report = TodaReport()
    if not interior:
        return report
    for k, point in enumerate(points):
        vals = seq.evaluate(point)
        logd = {}
        for n, d in vals.items():
            tau = d[(0, 0)]
            if tau == 0:
                raise DegenerateCycleError(f"tau_{n} vanishes at point {k}")
            r = (tau * d[(1, 1)] - d[(1, 0)] * d[(0, 1)]) / tau**2
            # d_j r = (tau tau_ijj - tau_i tau_jj)/tau^2 - 2 (tau_j/tau) r
            dj_r = (tau * d[(1, 2)] - d[(1, 0)] * d[(0, 2)]) / tau**2 - 2 * d[(0, 1)] / tau * r
            # d_i (tau_j / tau), the x-derivative of one term of s
            di_lj = d[(1, 1)] / tau - d[(1, 0)] / tau * (d[(0, 1)] / tau)
            logd[n] = (tau, r, dj_r, d[(0, 1)] / tau, di_lj)
        for n in interior:
            tau, r, dj_r, lj, di_lj = logd[n]
            rhs = logd[n + 1][0] * logd[n - 1][0] / tau**2
            report.hirota[(n, k)] = _rel(r - rhs, r)
            s_n = logd[n - 1][3] - lj
            s_next = lj - logd[n + 1][3]
            report.dy_log_r[(n, k)] = _rel(dj_r / r - (s_n - s_next), dj_r / r, s_n, s_next)
            r_next = logd[n + 1][1]
            di_s_next = di_lj - logd[n + 1][4]
            report.dx_s[(n, k)] = _rel(di_s_next - (r - r_next), r, r_next)
    return report
