import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import beta

from gelfand_toda.errors import ParameterError, QuadratureError
from gelfand_toda.oracle import fd_partial, gauss_2f1, segment_tanh_sinh


def test_2f1_trivial_cases():
    assert gauss_2f1(0.3, 0.7, 1.2, 0) == 1
    assert gauss_2f1(0, 0.7, 1.2, 0.5) == 1
    assert gauss_2f1(0.3, 0, 1.2, 0.5) == 1


def test_2f1_log_series():
    x = 0.3
    assert abs(gauss_2f1(1, 1, 2, x) + math.log(1 - x) / x) < 1e-12


def test_2f1_rejects_bad_input():
    with pytest.raises(ParameterError):
        gauss_2f1(1, 1, -2, 0.5)
    with pytest.raises(QuadratureError):
        gauss_2f1(1, 1, 2, 1.5)


def test_tanh_sinh_arcsine():
    val, _ = segment_tanh_sinh([0, 1], [-0.5, -0.5], 0, 1, ref_logs=np.log([0.5, 0.5]))
    assert_allclose(val, math.pi, rtol=1e-12)


def test_tanh_sinh_constant():
    val, _ = segment_tanh_sinh([], [], 0, 1)
    assert_allclose(val, 1.0, rtol=1e-14)


def test_euler_integral_matches_series():
    a, b, c, x = 0.4, 0.7, 1.9, 0.25
    # u^(a-1) (1-u)^(c-a-1) (1-xu)^(-b) with real logs on (0, 1)
    pts = [0, 1, 1 / x]
    exps = [a - 1, c - a - 1, -b]
    mid = 0.5
    logs = np.log([mid, 1 - mid, 1 / x - mid])
    val, _ = segment_tanh_sinh(pts, exps, 0, 1, ref_point=mid, ref_logs=logs)
    val *= x**-b  # (1 - xu)^(-b) = x^(-b) (1/x - u)^(-b)
    assert_allclose(val, beta(a, c - a) * gauss_2f1(a, b, c, x), rtol=1e-10)


def test_endpoint_exponent_must_be_integrable():
    with pytest.raises(ParameterError):
        segment_tanh_sinh([0, 1], [-1.2, -0.5], 0, 1)


def test_fd_exp():
    assert abs(fd_partial(lambda v: np.exp(v[0]), [0.0], [0]) - 1) < 1e-9


def test_fd_mixed_product():
    assert abs(fd_partial(lambda v: v[0] * v[1], [0.3, 1.7], [0, 1]) - 1) < 1e-9


def test_fd_pure_second():
    assert abs(fd_partial(lambda v: np.sin(v[0]), [0.4], [0, 0]) + math.sin(0.4)) < 1e-7


def test_fd_rejects_third_order():
    with pytest.raises(ParameterError):
        fd_partial(lambda v: v[0], [0.0], [0, 0, 0])
