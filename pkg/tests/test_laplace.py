from fractions import Fraction

import pytest

from gelfand_toda.errors import FieldError, VanishingInvariantError
from gelfand_toda.fields import RationalS
from gelfand_toda.laplace import (
    HyperbolicOperator,
    composition_residual,
    epd_normal_gauge,
    epd_seed_operator,
    gauge_conjugate,
    invariants,
    laplace_down,
    laplace_up,
    normal_sequence,
    operators_agree,
    solution_jet,
    to_normal_form,
    toda_pair,
    toda_residuals,
)

from _sampling import random_fraction, rng

ALPHA, BETA = Fraction(1, 2), Fraction(1, 3)


def mono(c, p):
    return RationalS.monomial(c, p)


def zero():
    return RationalS.constant(0)


def normal_epd(a=ALPHA, b=BETA):
    return gauge_conjugate(epd_seed_operator(a, b), epd_normal_gauge(a))


def random_operator(gen):
    def field():
        return RationalS([random_fraction(gen), random_fraction(gen)], [random_fraction(gen), 0, 1])

    return HyperbolicOperator(field(), field(), field())


def test_trivial_operator_has_zero_invariants():
    inv = invariants(HyperbolicOperator(zero(), zero(), zero()))
    assert inv.h.is_zero() and inv.k.is_zero()


def test_epd_invariants():
    inv = invariants(epd_seed_operator(ALPHA, BETA))
    assert inv.h == mono(-Fraction(1, 2), -2)
    assert inv.k == mono(-Fraction(2, 3), -2)
    assert inv.h(2) == Fraction(-1, 8)


def test_seed_invariants_general():
    gen = rng(3)
    for _ in range(3):
        a, b = random_fraction(gen), random_fraction(gen)
        inv = invariants(epd_seed_operator(a, b))
        assert inv.h == mono(-(a + 1) * b, -2)
        assert inv.k == mono(-a * (b + 1), -2)


def test_zero_parameters_give_plain_mixed_derivative():
    M = epd_seed_operator(0, 0)
    assert M.a.is_zero() and M.b.is_zero() and M.c.is_zero()


def test_gauge_preserves_invariants():
    gen = rng(4)
    for _ in range(3):
        M = random_operator(gen)
        F = RationalS([random_fraction(gen), random_fraction(gen), random_fraction(gen)], [random_fraction(gen), 1])
        N = gauge_conjugate(M, F)
        assert invariants(N).h == invariants(M).h
        assert invariants(N).k == invariants(M).k


def test_zero_gauge_is_identity():
    M = random_operator(rng(5))
    N = gauge_conjugate(M, RationalS.constant(0))
    assert (N.a, N.b, N.c) == (M.a, M.b, M.c)


def test_normal_form_of_seed():
    N, g = to_normal_form(epd_seed_operator(ALPHA, BETA))
    assert N.is_normal
    assert N.a == mono(BETA - ALPHA, -1)
    assert N.c == mono(ALPHA * (BETA + 1), -2)
    # the potential is alpha*log s: F_x = alpha/s
    assert g.fx == mono(ALPHA, -1)
    M0 = normal_epd()
    assert (M0.a, M0.c) == (N.a, N.c)


def test_normal_form_c_is_minus_k():
    gen = rng(6)
    M = HyperbolicOperator(mono(random_fraction(gen), -1), zero(), mono(random_fraction(gen), -2))
    N, g = to_normal_form(M)
    assert N is M and g.is_zero()
    assert N.c == -invariants(N).k


def test_up_step_on_normal_epd():
    M1 = laplace_up(normal_epd())
    assert M1.a == mono(Fraction(-13, 6), -1)
    assert M1.c == mono(Fraction(1, 2), -2)


def test_up_step_invariant_recurrence():
    gen = rng(7)
    for _ in range(3):
        a, b = random_fraction(gen), random_fraction(gen)
        M = normal_epd(a, b)
        inv, inv1 = invariants(M), invariants(laplace_up(M))
        assert inv1.h == 2 * inv.h - inv.k - inv.h.mixed_log_partial()
        assert inv1.k == inv.h


def test_down_step_coefficient():
    down = laplace_down(normal_epd())
    assert down.b == mono(2, -1)


def test_down_after_up_keeps_invariants():
    M = normal_epd()
    back = laplace_down(laplace_up(M))
    assert invariants(back).h == invariants(M).h
    assert invariants(back).k == invariants(M).k


def test_vanishing_invariants_raise():
    M = HyperbolicOperator(zero(), zero(), zero())
    with pytest.raises(VanishingInvariantError):
        laplace_up(M)
    with pytest.raises(VanishingInvariantError):
        laplace_down(M)


def test_normal_sequence_closed_forms():
    seq = normal_sequence(normal_epd(), -3, 3)
    assert seq.checked
    for n in range(-3, 4):
        assert seq[n].a == mono(BETA - ALPHA - 2 * n, -1)
        assert seq[n].c == mono((ALPHA + n) * (BETA - n + 1), -2)
        assert seq.invariants(n).h == mono(-(ALPHA + n + 1) * (BETA - n), -2)
    assert seq.provenance[0] == "seed"
    assert seq.provenance[2] == "up"
    assert seq.provenance[-2] == "down+gauge"


def test_integer_alpha_terminates():
    # h_n = -(alpha+n+1)(beta-n)/s^2 vanishes at n = 0 for alpha = -1
    with pytest.raises(VanishingInvariantError) as info:
        normal_sequence(normal_epd(Fraction(-1), BETA), -2, 2)
    assert info.value.step == 0


def test_toda_pair_values():
    seq = normal_sequence(normal_epd(), -2, 2)
    for p in toda_pair(seq):
        assert p.s_next == mono(BETA - ALPHA - 2 * p.n, -1)
        assert p.r == mono((ALPHA + p.n) * (BETA - p.n + 1), -2)


def test_toda_residuals_vanish():
    seq = normal_sequence(normal_epd(), -4, 4)
    res = toda_residuals(toda_pair(seq))
    assert len([k for k in res if k[0] == "2dte"]) == 7
    assert all(v.is_zero() for v in res.values())


def test_constant_coefficient_chain():
    a, c = Fraction(2), Fraction(3)
    M = HyperbolicOperator(RationalS.constant(a), zero(), RationalS.constant(c))
    seq = normal_sequence(M, 0, 3)
    for n in range(4):
        assert seq[n].a == a
        assert seq[n].c == c
    res = toda_residuals(toda_pair(seq))
    assert all(v.is_zero() for k, v in res.items() if k[0] != "2dte")


def test_float_backend_agrees_with_exact():
    Mf = gauge_conjugate(epd_seed_operator(0.5, 1 / 3), epd_normal_gauge(0.5))
    seq_f = normal_sequence(Mf, -2, 2)
    seq_e = normal_sequence(normal_epd(), -2, 2)
    for n in range(-2, 3):
        assert operators_agree(seq_f[n], seq_e[n], 1e-12)


def test_jet_sequence_matches_rational():
    base = (Fraction(5, 2), Fraction(1, 2))
    M0 = normal_epd()
    seq_j = normal_sequence(M0.to_jet(base, 8), -1, 2)
    seq_r = normal_sequence(M0, -1, 2)
    for n in range(-1, 3):
        assert operators_agree(seq_j[n], seq_r[n].to_jet(base, seq_j[n].a.order))


def test_jet_order_budget_enforced():
    with pytest.raises(FieldError):
        normal_sequence(normal_epd().to_jet((2.5, 0.5), 5), -2, 2)


def test_solution_jet_factorizes():
    M = normal_epd().to_jet((Fraction(5, 2), Fraction(1, 2)), 6)
    u = solution_jet(M, [1, Fraction(1, 3), 0, 2], [1, -1, Fraction(1, 5)])
    assert M.apply(u).truncate(4).is_zero()
    assert composition_residual(M, u).truncate(4).is_zero()
