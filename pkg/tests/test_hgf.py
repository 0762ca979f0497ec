import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gelfand_toda.contour import QuadSettings, RationalWeight, integrate_batch, segment_regularization_factor
from gelfand_toda.errors import ParameterError
from gelfand_toda.hgf import (
    AlphaWeights,
    PointConfig,
    ZMatrix,
    choose_cycle_pair,
    contiguity_residual,
    covariance_residual,
    eval_F,
    eval_phi,
    hgs_residual,
    open_path,
    phi_cycle,
    phi_partials,
    sl2_pullback_check,
    sl2_pullback_residual,
)
from gelfand_toda.oracle import fd_partial, gauss_2f1, segment_logs_from_base, segment_tanh_sinh

from _sampling import random_alpha, rng, sorted_points

ALPHA5 = AlphaWeights((-0.3, -0.45, -0.55, -0.2, -0.5))
X5 = PointConfig((0.4, 1.5, 2.7, 3.6, 5.0))
TIGHT = QuadSettings(rel_tol=1e-12)


def test_alpha_weights_validation():
    with pytest.raises(ParameterError):
        AlphaWeights((-0.5, -0.5, -0.9))
    with pytest.raises(ParameterError):
        AlphaWeights((-0.5, -0.5, -1.0))
    with pytest.raises(ParameterError):
        AlphaWeights((-1.5, 0.5))
    al = AlphaWeights((Fraction(-1, 2), Fraction(-1, 3), Fraction(-7, 6)))
    assert al.exact
    sh = al.shift(0, 2, 2)
    assert sh.values == (Fraction(3, 2), Fraction(-1, 3), Fraction(-19, 6))
    with pytest.raises(ParameterError):
        AlphaWeights((-1 + 1e-9, -0.5, -0.5 - 1e-9))


def test_point_and_z_validation():
    with pytest.raises(ParameterError):
        PointConfig((0, 1, 1))
    with pytest.raises(ParameterError):
        ZMatrix([[1, 2, 3], [1, 2, 1]])
    z = ZMatrix.from_points(PointConfig((0, 1, 2)))
    assert_allclose(z.branch_points, [0, -1, -2])


def test_three_point_segment_value():
    # an integer third exponent is outside AlphaWeights, so integrate directly
    x = np.array([0, 1, 5], dtype=complex)
    exps = [-0.5, -0.5, -1]
    cyc = phi_cycle(PointConfig(tuple(x)), (0, 1))
    (val,), _ = integrate_batch(-x, exps, [RationalWeight.unit(3)], cyc.path, TIGHT)
    mid = -0.5
    logs = segment_logs_from_base(-x, cyc.base_point, mid)
    seg, _ = segment_tanh_sinh(-x, exps, -1, 0, ref_point=mid, ref_logs=logs)
    assert abs(val - 4 * seg) < 1e-8 * abs(val)


def test_eval_phi_matches_segment():
    x = PointConfig((0, 1, 5))
    al = AlphaWeights((-0.5, -0.6, -0.9))
    v = eval_phi(x, al, (0, 1), TIGHT)
    assert v.cycle == (0, 1, 0.2)
    assert v.error < 1e-10 * abs(v.value)
    b = -x.array
    cyc = phi_cycle(x, (0, 1))
    mid = 0.5 * (b[0] + b[1])
    seg, _ = segment_tanh_sinh(b, al.array, b[1], b[0], ref_point=mid, ref_logs=segment_logs_from_base(b, cyc.base_point, mid))
    assert abs(v.value - segment_regularization_factor(-0.5, -0.6) * seg) < 1e-8 * abs(v.value)


def test_reversed_cycle_negates():
    cyc = phi_cycle(X5, (0, 1))
    fwd = eval_phi(X5, ALPHA5, path=cyc.path).value
    back = eval_phi(X5, ALPHA5, path=cyc.path.reversed()).value
    assert_allclose(back, -fwd, rtol=1e-10)


def test_four_point_gauss_reduction():
    # Phi on x = (0, -1, -1/y0, L) reduces to an Euler integral over [0, 1]
    y0, L = 0.2, 4.0
    x = PointConfig((0, -1, -1 / y0, L))
    gen = np.random.default_rng(5)
    for _ in range(5):
        a1, a2, a3 = gen.uniform(-0.9, -0.1, 3)
        a4 = -2 - a1 - a2 - a3
        al = AlphaWeights((a1, a2, a3, a4))
        v = eval_phi(x, al, (0, 1), TIGHT).value
        a, c, b = a1 + 1, a1 + a2 + 2, -a3
        y = (1 + L * y0) / (1 + L)
        euler = math.gamma(a) * math.gamma(c - a) / math.gamma(c) * gauss_2f1(a, b, c, y)
        pref = cmath.exp(1j * math.pi * (a2 + a3)) * L ** (a1 + a4 + 1) * (1 + L) ** (a2 + a3 + a4 + 1) * y0 ** (-a3)
        ratio = v / (segment_regularization_factor(a1, a2) * pref * euler)
        assert abs(ratio + 1) < 1e-8


def test_partials_without_derivatives_is_phi():
    v = eval_phi(X5, ALPHA5).value
    assert phi_partials(X5, ALPHA5, (0, 1), []) == v


def test_mixed_partials_symmetric():
    assert phi_partials(X5, ALPHA5, (0, 1), [1, 3]) == phi_partials(X5, ALPHA5, (0, 1), [3, 1])


def test_partials_match_finite_differences():
    path = phi_cycle(X5, (0, 1)).path

    def f(xs):
        return eval_phi(PointConfig(tuple(xs)), ALPHA5, None, TIGHT, path=path).value

    for derivs in ([0], [2], [4], [0, 1], [2, 3], [1, 1], [3, 4]):
        exact = phi_partials(X5, ALPHA5, None, derivs, TIGHT, path=path)
        approx = fd_partial(f, X5.array, derivs)
        assert abs(exact - approx) < 1e-6 * abs(exact)


def test_too_many_derivatives():
    with pytest.raises(ParameterError):
        phi_partials(X5, ALPHA5, (0, 1), [0, 1, 2])


def test_eval_F_on_points_is_phi():
    z = ZMatrix.from_points(X5)
    assert_allclose(eval_F(z, ALPHA5).value, eval_phi(X5, ALPHA5).value, rtol=1e-12)


def test_hgs_box_diagonal_absent_and_small():
    gen = rng(21)
    x = sorted_points(gen, 4)
    second = 1 + 0.3 * (gen.uniform(-1, 1, 4) + 1j * gen.uniform(-1, 1, 4))
    z = ZMatrix(np.vstack([x * second, second]))
    r = hgs_residual(z, AlphaWeights(tuple(random_alpha(gen, 4))))
    assert all(p != q for p, q in r.box)
    assert r.passed(1e-7)


def test_open_path_is_not_closed():
    p = open_path(X5, (0, 1))
    assert not p.closed
    assert p.distance_to(-0.4) > 0


def test_contiguity_integrand_identity():
    xp, xq = 1.3, -0.7
    for u in (0.2, 2.5 + 1j, -3.0):
        assert_allclose((xp - xq) / (u + xq) + 1, (u + xp) / (u + xq), rtol=1e-15)


def test_contiguity_pair():
    assert contiguity_residual(X5, ALPHA5, 1, 3) < 1e-8
    with pytest.raises(ParameterError):
        contiguity_residual(X5, ALPHA5, 2, 2)


def test_covariance_identity_and_torus():
    z = ZMatrix.from_points(X5)
    assert covariance_residual(z, ALPHA5, np.ones(5)) == 0
    assert covariance_residual(z, ALPHA5, np.eye(2)) == 0
    assert covariance_residual(z, ALPHA5, [2, 1, 1, 1, 1]) < 1e-8


def test_covariance_homogeneity():
    z = ZMatrix.from_points(X5)
    assert covariance_residual(z, ALPHA5, [[1.7, 0], [0, 1.7]]) < 1e-8


def test_pullback_identity_and_translation():
    # same integral on both sides, up to rounding in the prefactor
    assert sl2_pullback_residual(X5, ALPHA5, np.eye(2)) < 1e-14
    chk = sl2_pullback_check(X5, ALPHA5, [[1, 0.8], [0, 1]])
    assert chk.residual < 1e-8
    assert chk.epd_residual < 1e-7


def test_pullback_inversion_constant_phase():
    ratios = []
    for x in ((0.4, 1.5, 2.7, 3.6, 5.0), (0.5, 1.2, 2.9, 4.0, 5.5), (0.7, 1.9, 2.6, 3.8, 6.1)):
        chk = sl2_pullback_check(PointConfig(x), ALPHA5, [[0, 1], [1, 0]])
        assert abs(abs(chk.ratio) - 1) < 1e-7
        assert chk.epd_residual < 1e-7
        ratios.append(chk.ratio)
    assert max(abs(r - ratios[0]) for r in ratios) < 1e-7


def test_pullback_pole_on_point():
    with pytest.raises(ParameterError):
        sl2_pullback_check(PointConfig((0.0, 1.5, 2.7, 3.6, 5.0)), ALPHA5, [[0, 1], [1, 0]])


def test_choose_cycle_pair_avoids_indices():
    i, j = choose_cycle_pair(X5, avoid=(0, 1))
    assert {i, j}.isdisjoint({0, 1})
    # on a line only neighbours admit a cycle, so the fallback touches an avoided index
    assert choose_cycle_pair(X5, avoid=(1, 3)) == (2, 3)
    assert choose_cycle_pair(PointConfig((0, 1, 2)), avoid=(0, 1)) == (1, 2)
