"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL criterion k`` line (visible without -s)
before asserting, so a run of this file doubles as the acceptance report.
"""
import cmath
import math
from fractions import Fraction

import numpy as np

from gelfand_toda import epd, laplace, toda
from gelfand_toda.cli import main
from gelfand_toda.contour import QuadSettings, RationalWeight, build_pochhammer, integrate_batch, segment_regularization_factor
from gelfand_toda.fields import RationalS
from gelfand_toda.hgf import (
    AlphaWeights,
    PointConfig,
    ZMatrix,
    contiguity_sweep,
    eval_phi,
    hgs_residual,
    open_path,
)
from gelfand_toda.oracle import gauss_2f1, segment_logs_from_base, segment_tanh_sinh

from _sampling import random_alpha, random_fraction, rational_point, rng, sorted_points

ALPHA5 = AlphaWeights((-0.3, -0.45, -0.55, -0.2, -0.5))
PAIR = (0, 1)
N_RANGE = (-2, 2)
TIGHT = QuadSettings(rel_tol=1e-12)

# tolerances
JET_RTOL = 1e-10
SEGMENT_RTOL = 1e-8
GAUSS_RTOL = 1e-8
HGS_TOL = 1e-7
CONTIGUITY_TOL = 1e-8
EPD_TOL = 1e-7
LADDER_TOL = 1e-8
TODA_TOL = 1e-6
CORRUPT_MIN = 1e-3
BACKLUND_TOL = 1e-6

# frozen regression constant: Phi / (factor * Euler-integral expression) on the
# N = 4 configuration below, derived from the tanh-sinh and 2F1 oracles
GAUSS_RATIO = -1


def announce(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")


def normal_epd(a, b):
    return laplace.gauge_conjugate(laplace.epd_seed_operator(a, b), laplace.epd_normal_gauge(a))


def closed_forms(a, b, n):
    return (
        RationalS.monomial(b - a - 2 * n, -1),
        RationalS.monomial((a + n) * (b - n + 1), -2),
        RationalS.monomial(-(a + n + 1) * (b - n), -2),
    )


def table_rel(jet, ref):
    x = np.array(jet.coeffs, dtype=complex)
    y = np.array(ref.coeffs, dtype=complex)
    return float(np.abs(x - y).max() / max(np.abs(y).max(), 1e-300))


def toda_points(seed=7, count=5):
    gen = rng(seed)
    return [tuple(sorted_points(gen, 5)) for _ in range(count)]


def test_criterion_01_epd_closed_forms(capsys):
    gen = rng(101)
    pairs = [(Fraction(1, 2), Fraction(1, 3))] + [(random_fraction(gen), random_fraction(gen)) for _ in range(5)]
    base = (Fraction(5, 2), Fraction(1, 2))
    order = 22
    exact_ok = True
    worst_jet = 0.0
    for a, b in pairs:
        seq = laplace.normal_sequence(normal_epd(a, b), -5, 5)
        jseq = laplace.normal_sequence(normal_epd(a, b).to_jet(base, order), -5, 5)
        for n in range(-5, 6):
            ea, ec, eh = closed_forms(a, b, n)
            exact_ok &= seq[n].a == ea and seq[n].c == ec and seq.invariants(n).h == eh
            ja, jc = jseq[n].a, jseq[n].c
            worst_jet = max(worst_jet, table_rel(ja, ea.to_jet(base, ja.order)), table_rel(jc, ec.to_jet(base, jc.order)))
    # float jets are reported for information only
    fa, fb = 0.5, 1 / 3
    fseq = laplace.normal_sequence(normal_epd(fa, fb).to_jet((2.5, 0.5), order), -5, 5)
    worst_float = 0.0
    for n in range(-5, 6):
        ea, ec, _ = closed_forms(Fraction(1, 2), Fraction(1, 3), n)
        worst_float = max(worst_float, table_rel(fseq[n].a, ea.to_jet((2.5, 0.5), fseq[n].a.order)))
    with capsys.disabled():
        print(f"\nINFO criterion 1: float-coefficient jets at order {order} agree to {worst_float:.1e} relative")
    ok = exact_ok and worst_jet < JET_RTOL
    announce(capsys, 1, ok, f"6 parameter pairs, n in [-5, 5]: rational forms exact={exact_ok}, exact jets max rel {worst_jet:.1e}")
    assert exact_ok
    assert worst_jet < JET_RTOL


def test_criterion_02_epd_toda_chain(capsys):
    seq = laplace.normal_sequence(normal_epd(Fraction(1, 2), Fraction(1, 3)), -5, 5)
    res = laplace.toda_residuals(laplace.toda_pair(seq))
    keys = [("2dte", n) for n in range(-4, 5)]
    ok = all(k in res for k in keys) and all(v.is_zero() for v in res.values())
    announce(capsys, 2, ok, f"{len(res)} chain residuals for n in [-4, 4] are identically zero")
    assert ok


def test_criterion_03_seed_solution(capsys):
    gen = rng(103)
    params = [toda.SeedParams(Fraction(1, 2), Fraction(1, 3))]
    params += [toda.SeedParams(random_fraction(gen), random_fraction(gen), random_fraction(gen)) for _ in range(4)]
    ok = True
    for p in params:
        for n in range(-4, 5):
            ok &= toda.seed_residual(p, n).is_zero()
            ratio = toda.B_constant(p, n + 1) * toda.B_constant(p, n - 1) / toda.B_constant(p, n) ** 2
            ok &= ratio == toda.p_exponent(p, n)
    announce(capsys, 3, ok, f"{len(params)} parameter sets, |n| <= 4: seed residual and normalisation recurrence exact")
    assert ok


def test_criterion_04_pochhammer_vs_segment(capsys):
    gen = rng(104)
    worst = 0.0
    for _ in range(10):
        ai, aj = gen.uniform(-0.95, -0.05, 2) + 1j * gen.uniform(-0.5, 0.5, 2)
        b0 = gen.normal() + 1j * gen.normal()
        b1 = b0 + cmath.rect(gen.uniform(0.5, 2), gen.uniform(0, 2 * math.pi))
        mid = 0.5 * (b0 + b1)
        b2 = mid + cmath.rect(gen.uniform(1.5, 3) * abs(b1 - b0), gen.uniform(0, 2 * math.pi))
        b = np.array([b0, b1, b2])
        exps = [ai, aj, gen.uniform(-2, 1) + 1j * gen.uniform(-0.5, 0.5)]
        cyc = build_pochhammer(b0, b1, [b2])
        (val,), _ = integrate_batch(b, exps, [RationalWeight.unit(3)], cyc.path, TIGHT)
        logs = segment_logs_from_base(b, cyc.base_point, mid)
        seg, _ = segment_tanh_sinh(b, exps, b1, b0, ref_point=mid, ref_logs=logs)
        ref = segment_regularization_factor(ai, aj) * seg
        worst = max(worst, abs(val - ref) / abs(ref))
    ok = worst < SEGMENT_RTOL
    announce(capsys, 4, ok, f"10 random exponent pairs and configurations: max rel err {worst:.1e}")
    assert ok


def test_criterion_05_four_point_reduction(capsys):
    y0, L = 0.2, 4.0
    x = PointConfig((0, -1, -1 / y0, L))
    gen = np.random.default_rng(5)
    worst = 0.0
    for _ in range(5):
        a1, a2, a3 = gen.uniform(-0.9, -0.1, 3)
        a4 = -2 - a1 - a2 - a3
        v = eval_phi(x, AlphaWeights((a1, a2, a3, a4)), (0, 1), TIGHT).value
        a, c, b = a1 + 1, a1 + a2 + 2, -a3
        y = (1 + L * y0) / (1 + L)
        euler = math.gamma(a) * math.gamma(c - a) / math.gamma(c) * gauss_2f1(a, b, c, y)
        pref = cmath.exp(1j * math.pi * (a2 + a3)) * L ** (a1 + a4 + 1) * (1 + L) ** (a2 + a3 + a4 + 1) * y0 ** (-a3)
        expected = GAUSS_RATIO * segment_regularization_factor(a1, a2) * pref * euler
        worst = max(worst, abs(v - expected) / abs(expected))
    ok = worst < GAUSS_RTOL
    announce(capsys, 5, ok, f"5 parameter points against the frozen 2F1 proportionality: max rel err {worst:.1e}")
    assert ok


def test_criterion_06_gelfand_system(capsys):
    gen = rng(106)
    worst = 0.0
    for n in (4, 5):
        for _ in range(2):
            x = sorted_points(gen, n)
            second = 1 + 0.3 * (gen.uniform(-1, 1, n) + 1j * gen.uniform(-1, 1, n))
            z = ZMatrix(np.vstack([x * second, second]))
            r = hgs_residual(z, AlphaWeights(tuple(random_alpha(gen, n))))
            worst = max(worst, r.max_box(), r.max_euler(), r.max_gl2())
    x = PointConfig(tuple(sorted_points(gen, 5)))
    ctl = hgs_residual(ZMatrix.from_points(x), ALPHA5, None, path=open_path(x, (0, 1)))
    control_ok = max(ctl.max_box(), ctl.max_euler()) < HGS_TOL and ctl.max_gl2() > HGS_TOL
    ok = worst < HGS_TOL and control_ok
    announce(
        capsys,
        6,
        ok,
        f"N=4 and N=5 random z: max residual {worst:.1e}; open path: box/Euler "
        f"{max(ctl.max_box(), ctl.max_euler()):.1e}, gl(2) {ctl.max_gl2():.1e}",
    )
    assert worst < HGS_TOL
    assert control_ok


def test_criterion_07_contiguity(capsys):
    gen = rng(107)
    x = PointConfig(tuple(sorted_points(gen, 5)))
    worst = 0.0
    count = 0
    for _ in range(3):
        res = contiguity_sweep(x, AlphaWeights(tuple(random_alpha(gen, 5))), None, (0, 1))
        count += len(res)
        worst = max(worst, max(res.values()))
    ok = worst < CONTIGUITY_TOL and count == 60
    announce(capsys, 7, ok, f"3 weight draws x 20 ordered pairs: max residual {worst:.1e}")
    assert ok


def test_criterion_08_epd_residual_of_phi(capsys):
    gen = rng(108)
    x = PointConfig(tuple(sorted_points(gen, 5)))
    closed = epd.epd_sweep(x, ALPHA5)
    opened = epd.epd_sweep(x, ALPHA5, None, None, path=open_path(x, (0, 1)))
    worst_closed, worst_open = max(closed.values()), max(opened.values())
    ok = len(closed) == len(opened) == 10 and max(worst_closed, worst_open) < EPD_TOL
    announce(capsys, 8, ok, f"10 pairs: closed cycle {worst_closed:.1e}, open path {worst_open:.1e}")
    assert ok


def test_criterion_09_exact_identities(capsys):
    gen = rng(109)
    basis = epd.monomial_basis(4, 4)
    checks = {
        "S-pair": lambda a, f, pt: [epd.spair_identity_residual(0, 1, 2, a, f, pt), epd.spair_identity_residual(1, 2, 3, a, f, pt)],
        "intertwine": lambda a, f, pt: list(epd.intertwine_identity_residual(0, 1, a, f, pt)) + list(epd.intertwine_identity_residual(3, 1, a, f, pt)),
        "commutation": lambda a, f, pt: [epd.commutator_residual(0, 1, 2, 3, a, f, pt)],
        "modulo": lambda a, f, pt: [
            epd.modulo_ideal_identity_residual(0, 1, 2, a, f, pt, "up"),
            epd.modulo_ideal_identity_residual(0, 1, 2, a, f, pt, "down"),
        ],
    }
    nonzero = {name: 0 for name in checks}
    for _ in range(5):
        alpha = tuple(random_fraction(gen) for _ in range(4))
        point = rational_point(gen, 4)
        for f in basis:
            for name, fn in checks.items():
                nonzero[name] += sum(1 for r in fn(alpha, f, point) if r != 0)
    ok = not any(nonzero.values())
    announce(capsys, 9, ok, f"{len(basis)} monomials x 5 rational points, nonzero residuals {nonzero}")
    assert ok


def test_criterion_10_ladder(capsys):
    worst = 0.0
    for pt in toda_points():
        x = PointConfig(pt)
        for n in range(N_RANGE[0], N_RANGE[1] + 1):
            lc = toda.ladder_check(x, ALPHA5, PAIR, n)
            worst = max(worst, lc.up, lc.down, lc.up_then_down, lc.down_then_up)
    ok = worst < LADDER_TOL
    announce(capsys, 10, ok, f"n in [-2, 2] at 5 points: max relative ladder error {worst:.1e}")
    assert ok


def test_criterion_11_main_theorem(capsys):
    pts = toda_points()
    seq = toda.build_tau_main(None, ALPHA5, PAIR, N_RANGE)
    report = toda.verify_2dthe(seq, pts)
    worst = report.max_residual()
    bad = toda.verify_2dthe(toda.corrupt(seq, 1, 1.01), pts)
    # scaling tau_1 enters the equations at n = 0 and n = 1
    least_corrupt = min(v for (n, _), v in bad.hirota.items() if n in (0, 1))
    ok = worst < TODA_TOL and least_corrupt > CORRUPT_MIN and len(report.hirota) == 15
    announce(capsys, 11, ok, f"interior n at 5 points: max residual {worst:.1e}; corrupted tau_1 gives at least {least_corrupt:.1e}")
    assert worst < TODA_TOL
    assert least_corrupt > CORRUPT_MIN


def test_criterion_12_backlund_identity(capsys):
    pts = toda_points()
    seed = toda.SeedParams(ALPHA5[PAIR[0]], ALPHA5[PAIR[1]])
    sols = toda.gauged_phi_solutions(ALPHA5, PAIR, N_RANGE)
    worst = max(toda.backlund_identity_residual(seed, PAIR, sols, n, pt) for pt in pts for n in (-1, 0, 1))
    composed = toda.backlund_compose(seed, PAIR, N_RANGE, sols, check_points=pts)
    main_seq = toda.build_tau_main(None, ALPHA5, PAIR, N_RANGE)
    agree = 0.0
    for pt in pts:
        a, b = composed.evaluate(pt, ((0, 0),)), main_seq.evaluate(pt, ((0, 0),))
        agree = max(agree, max(abs(a[n][(0, 0)] - b[n][(0, 0)]) / abs(b[n][(0, 0)]) for n in a))
    ok = worst < BACKLUND_TOL and agree < 1e-8
    announce(capsys, 12, ok, f"interior n at 5 points: max residual {worst:.1e}; seed x ladder vs main tau {agree:.1e}")
    assert ok


def test_criterion_13_deterministic_reports(tmp_path, capsys):
    outputs = []
    for k in range(2):
        out = tmp_path / f"run{k}" / "report.csv"
        code = main(["verify", "--seed", "3", "--out", str(out)])
        outputs.append((code, out.read_bytes(), out.with_name("report.summary.json").read_bytes()))
    ok = outputs[0] == outputs[1] and outputs[0][0] == 0
    lines = outputs[0][1].count(b"\n")
    announce(capsys, 13, ok, f"two verify runs, {lines} CSV lines each: byte-identical={outputs[0][1:] == outputs[1][1:]}")
    assert ok
