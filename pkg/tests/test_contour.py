import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gelfand_toda.contour import (
    ArcSegment,
    ContourPath,
    LineSegment,
    MultivaluedIntegrand,
    QuadSettings,
    RationalWeight,
    argument_change,
    build_pochhammer,
    integrate_batch,
    integrate_multivalued,
    segment_regularization_factor,
)
from gelfand_toda.errors import ContourError, QuadratureError
from gelfand_toda.oracle import segment_logs_from_base, segment_tanh_sinh

from _sampling import rng

CIRCLE = ContourPath((ArcSegment(0j, 1.0, 0.0, 2 * math.pi),))


def test_residue_of_reciprocal():
    val, err = integrate_multivalued(MultivaluedIntegrand((0j,), (-1,)), CIRCLE)
    assert abs(val - 2j * math.pi) < 1e-12
    assert err < 1e-12


def test_entire_integrand_vanishes():
    f = MultivaluedIntegrand((0.3 + 0j, -2 + 1j), (2, 3))
    val, _ = integrate_multivalued(f, CIRCLE)
    assert abs(val) < 1e-12


def test_pochhammer_beta_half_half():
    cyc = build_pochhammer(0, 1)
    val, _ = integrate_multivalued(MultivaluedIntegrand((0j, 1 + 0j), (-0.5, -0.5)), cyc.path)
    # real logs at the midpoint give u^(-1/2) (1-u)^(-1/2), whose integral is pi
    seg, _ = segment_tanh_sinh([0, 1], [-0.5, -0.5], 0, 1, ref_logs=np.log([0.5, 0.5]))
    assert_allclose(seg, math.pi, rtol=1e-12)
    assert_allclose(segment_regularization_factor(-0.5, -0.5), 4)
    # the cycle value is the factor times the integral from b_j to b_i on the base-point branch
    logs = segment_logs_from_base([0, 1], cyc.base_point, 0.5)
    seg, _ = segment_tanh_sinh([0, 1], [-0.5, -0.5], 1, 0, ref_point=0.5, ref_logs=logs)
    assert_allclose(abs(seg), math.pi, rtol=1e-12)
    assert_allclose(val, 4 * seg, rtol=1e-10)


def test_pochhammer_geometry():
    cyc = build_pochhammer(0, 1, rho=0.2)
    assert cyc.radius == pytest.approx(0.2)
    assert cyc.path.closed
    assert_allclose(argument_change(cyc.path, [0, 1]), [0, 0], atol=1e-12)


def test_crowded_pair_fails():
    with pytest.raises(ContourError, match="crowded"):
        build_pochhammer(0, 1, [0.5])


def test_single_valued_integrand_vanishes_on_cycle():
    cyc = build_pochhammer(0, 1, [3.0])
    f = MultivaluedIntegrand((0j, 1 + 0j, 3 + 0j), (2, -1, -2))
    val, _ = integrate_multivalued(f, cyc.path)
    assert abs(val) < 1e-11


def test_integer_exponent_kills_factor():
    with pytest.warns(RuntimeWarning):
        assert abs(segment_regularization_factor(2, -0.4)) < 1e-14


def test_pochhammer_matches_segment_sweep():
    gen = rng(11)
    for _ in range(10):
        ai, aj = gen.uniform(-0.95, -0.05, 2) + 1j * gen.uniform(-0.3, 0.3, 2)
        b = np.array([0, 1, 2.5 + gen.uniform(0, 2)], dtype=complex)
        exps = [ai, aj, gen.uniform(-2, 2)]
        cyc = build_pochhammer(b[0], b[1], [b[2]])
        (val,), _ = integrate_batch(b, exps, [RationalWeight.unit(3)], cyc.path, QuadSettings(rel_tol=1e-12))
        mid = 0.5 * (b[0] + b[1])
        logs = segment_logs_from_base(b, cyc.base_point, mid)
        seg, _ = segment_tanh_sinh(b, exps, b[1], b[0], ref_point=mid, ref_logs=logs)
        assert abs(val - segment_regularization_factor(ai, aj) * seg) < 1e-8 * abs(val)


def test_batch_weights_share_one_pass():
    cyc = build_pochhammer(0, 1, [4.0])
    b = [0j, 1 + 0j, 4 + 0j]
    exps = [-0.3, -0.6, -1.1]
    # u * f and (u - 1) * f + f integrate to the same value
    w1 = RationalWeight((0, 0, 0), (0.0, 1.0))
    w2 = RationalWeight((0, 1, 0))
    w3 = RationalWeight.unit(3)
    (v1, v2, v3), errs = integrate_batch(b, exps, [w1, w2, w3], cyc.path)
    assert_allclose(v1, v2 + v3, rtol=1e-10)
    assert errs.shape == (3,)


def test_reversed_path_negates():
    cyc = build_pochhammer(0, 1, [3.0])
    f = MultivaluedIntegrand((0j, 1 + 0j, 3 + 0j), (-0.4, -0.3, -1.3))
    fwd, _ = integrate_multivalued(f, cyc.path)
    back, _ = integrate_multivalued(f, cyc.path.reversed())
    assert_allclose(back, -fwd, rtol=1e-10)


def test_path_through_branch_point_rejected():
    f = MultivaluedIntegrand((0.5 + 0j,), (-0.5,))
    with pytest.raises(ContourError):
        integrate_multivalued(f, ContourPath((LineSegment(0j, 1 + 0j),)))


def test_disconnected_path_rejected():
    with pytest.raises(ContourError):
        ContourPath((LineSegment(0j, 1 + 0j), LineSegment(2 + 0j, 3 + 0j)))


def test_subdivision_budget():
    cyc = build_pochhammer(0, 1, [3.0])
    f = MultivaluedIntegrand((0j, 1 + 0j, 3 + 0j), (-0.4, -0.3, -1.3))
    with pytest.raises(QuadratureError):
        integrate_multivalued(f, cyc.path, QuadSettings(abs_tol=1e-300, rel_tol=1e-300, max_subdivisions=3))
