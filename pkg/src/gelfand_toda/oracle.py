"""Independent reference computations used by the tests.

Nothing here feeds production values.  The routines are deliberately simple:
a power series for the Gauss function, double-exponential quadrature on a
straight segment, and central finite differences.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError, QuadratureError

__all__ = [
    "SeriesSettings",
    "gauss_2f1",
    "segment_tanh_sinh",
    "segment_logs_from_base",
    "fd_partial",
]


@dataclass(frozen=True)
class SeriesSettings:
    max_terms: int = 5000
    tail_tol: float = 1e-16

    def __post_init__(self):
        if self.max_terms < 1 or not self.tail_tol > 0:
            raise ParameterError("invalid series settings")


def gauss_2f1(a, b, c, x, settings: SeriesSettings | None = None) -> complex:
    """Partial sum of sum_k (a)_k (b)_k / ((c)_k k!) x^k inside the unit disc."""
    settings = settings or SeriesSettings()
    c = complex(c)
    if c.imag == 0 and c.real <= 0 and c.real == round(c.real):
        raise ParameterError("c is a non-positive integer")
    if abs(x) >= 1:
        raise QuadratureError("the series only converges for |x| < 1")
    a, b, x = complex(a), complex(b), complex(x)
    term = 1 + 0j
    total = 1 + 0j
    ratio_bound = abs(x)
    for k in range(settings.max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * x
        total += term
        if term == 0:
            return total
        # once the term ratio is close to |x| the tail is a geometric series
        tail = abs(term) * ratio_bound / (1 - ratio_bound)
        if k > abs(a) + abs(b) + abs(c) and tail <= settings.tail_tol * abs(total):
            return total
    raise QuadratureError("series did not converge within max_terms")


def segment_logs_from_base(branch_points: Sequence[complex], base: complex, target: complex) -> np.ndarray:
    """Logs of (target - b_k) continued along the straight line from base.

    The start values are principal logs at ``base``; the line must not cross a
    branch point.
    """
    out = []
    for bk in branch_points:
        start = cmath.log(base - bk)
        out.append(start + cmath.log((target - bk) / (base - bk)))
    return np.array(out)


def segment_tanh_sinh(
    branch_points: Sequence[complex],
    exponents: Sequence[complex],
    start: complex,
    end: complex,
    ref_point: complex | None = None,
    ref_logs: Sequence[complex] | None = None,
    weight: Callable | None = None,
    tol: float = 1e-14,
    max_level: int = 12,
) -> tuple[complex, float]:
    """Integrate prod (u - b_k)^alpha_k * weight(u) over the open segment start -> end.

    Logs are continued along the segment from ``ref_point`` (default the
    midpoint), where they equal ``ref_logs`` (default principal values).
    Factors whose branch point is an endpoint are evaluated from the exact
    distance to that endpoint, so endpoint singularities lose no precision.
    """
    b = np.asarray(branch_points, dtype=complex)
    alpha = np.asarray(exponents, dtype=complex)
    start, end = complex(start), complex(end)
    length = end - start
    ref = 0.5 * (start + end) if ref_point is None else complex(ref_point)
    if ref_logs is None:
        ref_logs = np.log(ref - b)
    ref_logs = np.asarray(ref_logs, dtype=complex)
    at_start = np.isclose(b, start, rtol=0, atol=1e-300)
    at_end = np.isclose(b, end, rtol=0, atol=1e-300)
    for k in np.nonzero(at_start | at_end)[0]:
        if alpha[k].real <= -1:
            raise ParameterError("endpoint exponent must have real part > -1")
    margin = min([alpha[k].real + 1 for k in np.nonzero(at_start | at_end)[0]] + [1.0])
    # past t_max the endpoint weights are below exp(-50)
    t_max = math.asinh(100.0 / (math.pi * margin))

    def integrand_sum(h):
        n = int(math.ceil(t_max / h))
        t = h * np.arange(-n, n + 1)
        v = 0.5 * math.pi * np.sinh(t)
        log_tau = -np.logaddexp(0.0, -2 * v)  # tau = (1 + tanh v)/2
        log_one_minus = -np.logaddexp(0.0, 2 * v)
        tau = np.exp(log_tau)
        u = start + length * tau
        logs = np.empty((t.size, b.size), dtype=complex)
        for k in range(b.size):
            if at_start[k]:
                # u - b = length * tau
                logs[:, k] = log_tau + ref_logs[k] + cmath.log(length / (ref - b[k]))
            elif at_end[k]:
                # u - b = -length * (1 - tau)
                logs[:, k] = log_one_minus + ref_logs[k] + cmath.log(-length / (ref - b[k]))
            else:
                logs[:, k] = ref_logs[k] + np.log((u - b[k]) / (ref - b[k]))
        # d tau / dt = pi tau (1 - tau) cosh t
        log_jac = math.log(math.pi) + log_tau + log_one_minus + np.log(np.cosh(t))
        vals = np.exp(logs @ alpha + log_jac)
        if weight is not None:
            vals = vals * weight(u)
        return h * length * vals.sum()

    h = 0.5
    prev = integrand_sum(h)
    for _ in range(max_level):
        h *= 0.5
        cur = integrand_sum(h)
        err = abs(cur - prev)
        if err <= tol * max(abs(cur), 1e-300):
            return cur, err
        prev = cur
    raise QuadratureError("tanh-sinh quadrature did not converge")


def fd_partial(
    evaluator: Callable[[np.ndarray], complex],
    point: Sequence[complex],
    coords: Sequence[int],
    step: float | None = None,
) -> complex:
    """Central differences for d_p (one coordinate) or d_p d_q (two coordinates).

    Default step is 1e-5 * scale for first derivatives and 1e-4 * scale for
    second ones; at 1e-5 a second difference loses about 1e-6 to rounding.
    Evaluators should keep the integration path fixed across the stencil.
    """
    x = np.asarray(point, dtype=complex)
    coords = list(coords)
    if len(coords) not in (1, 2):
        raise ParameterError("fd_partial handles first and second derivatives only")
    h = step if step is not None else (1e-5 if len(coords) == 1 else 1e-4) * max(1.0, max(abs(x[c]) for c in coords))

    def f(shift):
        y = x.copy()
        for c, s in shift:
            y[c] += s * h
        return complex(evaluator(y))

    if len(coords) == 1:
        p = coords[0]
        return (f([(p, 1)]) - f([(p, -1)])) / (2 * h)
    p, q = coords
    if p == q:
        return (f([(p, 1)]) - 2 * f([]) + f([(p, -1)])) / (h * h)
    return (f([(p, 1), (q, 1)]) - f([(p, 1), (q, -1)]) - f([(p, -1), (q, 1)]) + f([(p, -1), (q, -1)])) / (4 * h * h)
