"""Batch verification: configuration, check suites and reports.

A run walks the requested suites in a fixed order and collects one row per
residual.  Everything random is drawn from a single seeded generator, and
rows are written with 17 significant digits, so the same configuration and
seed reproduce the report byte for byte.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from . import epd, hgf, laplace, toda
from .contour import QuadSettings
from .errors import ContourError, DegenerateCycleError, GelfandTodaError, ParameterError, QuadratureError
from .fields import RationalS

__all__ = [
    "CHECKS",
    "CSV_COLUMNS",
    "ConfigError",
    "RunConfig",
    "Row",
    "CheckReport",
    "default_config",
    "run",
    "write_report",
    "EXIT_OK",
    "EXIT_FAIL",
    "EXIT_CONFIG",
    "EXIT_NUMERIC",
]

CHECKS = ("laplace", "seed", "hgs", "contiguity", "covariance", "epd", "identities", "toda")
CSV_COLUMNS = ("check", "i", "j", "n", "point", "residual", "scale", "tolerance", "pass")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

TOLERANCES = {
    "laplace": 0.0,
    "seed": 0.0,
    "hgs": 1e-7,
    "contiguity": 1e-8,
    "covariance": 1e-8,
    "sl2_inversion": 1e-7,
    "epd": 1e-7,
    "identities": 0.0,
    "toda": 1e-6,
    "ladder": 1e-8,
}

_TOP_KEYS = {"alpha", "x", "pair", "n_range", "A", "quad", "checks", "seed", "output"}
_QUAD_KEYS = {"abs_tol", "rel_tol", "rho", "theta_max", "max_subdivisions"}


class ConfigError(GelfandTodaError, ValueError):
    pass


def _complex(v, name: str) -> complex:
    if isinstance(v, bool):
        raise ConfigError(f"{name}: booleans are not numbers")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{name}: expected a number or a [re, im] pair, got {v!r}")


def _rational(z: complex) -> Fraction | None:
    """Exact rational from the decimal repr of a real float, None when complex."""
    if z.imag != 0:
        return None
    return Fraction(repr(z.real))


@dataclass(frozen=True)
class RunConfig:
    alpha: tuple
    x: tuple
    pair: tuple  # 0-based internally; 1-based in the file
    n_range: tuple
    A: complex = 1 + 0j
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    rho: float = 0.2
    theta_max: float = math.pi / 3
    max_subdivisions: int = 2000
    checks: tuple = CHECKS
    seed: int = 0
    output: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown keys: {sorted(unknown)}")
        for key in ("alpha", "x", "pair", "n_range"):
            if key not in data:
                raise ConfigError(f"missing key: {key}")
        alpha = tuple(_complex(v, f"alpha[{k}]") for k, v in enumerate(data["alpha"]))
        x = tuple(_complex(v, f"x[{k}]") for k, v in enumerate(data["x"]))
        if len(alpha) != len(x):
            raise ConfigError("alpha and x must have the same length")
        pair = data["pair"]
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair)):
            raise ConfigError("pair must be two integers")
        if pair[0] == pair[1] or not all(1 <= v <= len(x) for v in pair):
            raise ConfigError("pair must hold two distinct indices in 1..N")
        n_range = data["n_range"]
        if not (isinstance(n_range, list) and len(n_range) == 2 and all(isinstance(v, int) for v in n_range)):
            raise ConfigError("n_range must be two integers")
        if not n_range[0] <= 0 <= n_range[1]:
            raise ConfigError("n_range must contain 0")
        quad = data.get("quad", {})
        if not isinstance(quad, dict):
            raise ConfigError("quad must be an object")
        unknown = set(quad) - _QUAD_KEYS
        if unknown:
            raise ConfigError(f"unknown quad keys: {sorted(unknown)}")
        checks = data.get("checks", list(CHECKS))
        if not isinstance(checks, list) or not checks:
            raise ConfigError("checks must be a nonempty list")
        bad = [c for c in checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"unknown checks: {bad}")
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed must be an integer")
        output = data.get("output")
        if output is not None and not isinstance(output, str):
            raise ConfigError("output must be a path string")
        cfg = cls(
            alpha=alpha,
            x=x,
            pair=(pair[0] - 1, pair[1] - 1),
            n_range=tuple(n_range),
            A=_complex(data.get("A", 1), "A"),
            abs_tol=float(quad.get("abs_tol", 1e-12)),
            rel_tol=float(quad.get("rel_tol", 1e-10)),
            rho=float(quad.get("rho", 0.2)),
            theta_max=float(quad.get("theta_max", math.pi / 3)),
            max_subdivisions=int(quad.get("max_subdivisions", 2000)),
            checks=tuple(c for c in CHECKS if c in checks),
            seed=seed,
            output=output,
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration: {exc}") from exc
        return cls.from_dict(data)

    def validate(self) -> None:
        try:
            self.alpha_weights
            self.points
            self.settings
        except (ParameterError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.A == 0:
            raise ConfigError("A must be nonzero")
        if not 0 < self.rho < 0.5:
            raise ConfigError("rho must lie in (0, 0.5)")

    @property
    def alpha_weights(self) -> hgf.AlphaWeights:
        exact = [_rational(a) for a in self.alpha]
        if all(v is not None for v in exact) and sum(exact) == -2:
            return hgf.AlphaWeights(tuple(exact))
        return hgf.AlphaWeights(self.alpha)

    @property
    def points(self) -> hgf.PointConfig:
        return hgf.PointConfig(self.x)

    @property
    def settings(self) -> QuadSettings:
        return QuadSettings(self.abs_tol, self.rel_tol, self.max_subdivisions, self.theta_max)

    def with_overrides(self, checks=None, seed=None, tol=None, output=None) -> "RunConfig":
        kw = dict(self.__dict__)
        if checks is not None:
            bad = [c for c in checks if c not in CHECKS]
            if bad or not checks:
                raise ConfigError(f"unknown or empty checks: {bad}")
            kw["checks"] = tuple(c for c in CHECKS if c in checks)
        if seed is not None:
            kw["seed"] = seed
        if tol is not None:
            if not tol > 0:
                raise ConfigError("--tol must be positive")
            kw["rel_tol"] = tol
        if output is not None:
            kw["output"] = output
        cfg = RunConfig(**kw)
        cfg.validate()
        return cfg


def default_config() -> RunConfig:
    return RunConfig.from_dict({
        "alpha": [-0.3, -0.45, -0.55, -0.2, -0.5],
        "x": [0.4, 1.5, 2.7, 3.6, 5.0],
        "pair": [1, 2],
        "n_range": [-2, 2],
        "checks": list(CHECKS),
        "seed": 0,
    })


@dataclass(frozen=True)
class Row:
    check: str
    i: int | None
    j: int | None
    n: int | None
    point: str
    residual: float
    scale: float
    tolerance: float
    passed: bool
    note: str = ""


@dataclass
class CheckReport:
    rows: list = field(default_factory=list)
    error: str | None = None
    exit_code: int = EXIT_OK

    def add(self, check, residual, tolerance, i=None, j=None, n=None, point="", scale=1.0) -> None:
        residual = float(residual)
        ok = bool(residual <= tolerance) and math.isfinite(residual)
        self.rows.append(Row(check, i, j, n, point, residual, float(scale), float(tolerance), ok))

    def skip(self, check: str, reason: str) -> None:
        self.rows.append(Row(check, None, None, None, f"skipped: {reason}", float("nan"), float("nan"), float("nan"), True, reason))

    def summary(self) -> dict:
        per = {}
        for r in self.rows:
            name = r.check.split(":")[0]
            d = per.setdefault(name, {"rows": 0, "passed": 0, "failed": 0, "skipped": 0, "max_residual": 0.0})
            d["rows"] += 1
            if r.note:
                d["skipped"] += 1
                continue
            d["passed" if r.passed else "failed"] += 1
            d["max_residual"] = max(d["max_residual"], r.residual)
        return {
            "checks": per,
            "total_rows": len(self.rows),
            "failed": sum(d["failed"] for d in per.values()),
            "error": self.error,
            "exit_code": self.exit_code,
        }

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _one_based(v):
    return None if v is None else v + 1


def write_report(report: CheckReport, path: str | Path) -> tuple[Path, Path]:
    """CSV rows at ``path`` and the summary beside it as ``<stem>.summary.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.rows:
            w.writerow([
                r.check,
                _fmt(_one_based(r.i)),
                _fmt(_one_based(r.j)),
                _fmt(r.n),
                r.point,
                _fmt(r.residual),
                _fmt(r.scale),
                _fmt(r.tolerance),
                _fmt(r.passed),
            ])
    summary_path = path.with_name(path.stem + ".summary.json")
    summary = report.summary()
    summary["max_residual"] = {k: float("%.17g" % v["max_residual"]) for k, v in summary["checks"].items()}
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path, summary_path


# ---------------------------------------------------------------------------
# suites


def _laplace_suite(cfg: RunConfig, rep: CheckReport, rng) -> None:
    i, j = cfg.pair
    a, b = _rational(cfg.alpha[i]), _rational(cfg.alpha[j])
    if a is None or b is None:
        rep.skip("laplace", "closed-form checks need real alpha_i, alpha_j")
        return
    M0 = laplace.gauge_conjugate(laplace.epd_seed_operator(a, b), laplace.epd_normal_gauge(a))
    lo, hi = cfg.n_range
    try:
        seq = laplace.normal_sequence(M0, lo, hi)
    except ArithmeticError as exc:
        rep.skip("laplace", f"sequence terminates: {exc}")
        return
    probe = Fraction(7, 3)
    for n in range(seq.n_min, seq.n_max + 1):
        expected = {
            "a": RationalS.monomial(b - a - 2 * n, -1),
            "c": RationalS.monomial((a + n) * (b - n + 1), -2),
            "h": RationalS.monomial(-(a + n + 1) * (b - n), -2),
        }
        inv = seq.invariants(n)
        got = {"a": seq[n].a, "c": seq[n].c, "h": inv.h}
        for key in ("a", "c", "h"):
            diff = got[key] - expected[key]
            res = 0.0 if diff.is_zero() else abs(float(diff(probe)))
            rep.add(f"laplace:{key}", res, TOLERANCES["laplace"], i, j, n, "symbolic")
    for (name, n), val in sorted(laplace.toda_residuals(laplace.toda_pair(seq)).items(), key=lambda t: (t[0][0], t[0][1])):
        res = 0.0 if val.is_zero() else abs(float(val(probe)))
        rep.add(f"laplace:2dte_{name}", res, TOLERANCES["laplace"], i, j, n, "symbolic")


def _seed_suite(cfg: RunConfig, rep: CheckReport, rng) -> None:
    i, j = cfg.pair
    a, b = _rational(cfg.alpha[i]), _rational(cfg.alpha[j])
    A = _rational(cfg.A)
    if a is None or b is None or A is None:
        rep.skip("seed", "exact seed checks need real alpha_i, alpha_j and A")
        return
    params = toda.SeedParams(a, b, A)
    lo, hi = cfg.n_range
    for n in range(lo, hi + 1):
        r = toda.seed_residual(params, n)
        rep.add("seed:2dthe", abs(r.coefficient) + abs(r.exponent), TOLERANCES["seed"], i, j, n, "symbolic")


def _random_z(cfg: RunConfig, rng) -> hgf.ZMatrix:
    x = np.array(cfg.x)
    second = 1 + 0.3 * (rng.uniform(-1, 1, x.size) + 1j * rng.uniform(-1, 1, x.size))
    return hgf.ZMatrix(np.vstack([x * second, second]))


def _hgs_suite(cfg: RunConfig, rep: CheckReport, rng) -> None:
    tol = TOLERANCES["hgs"]
    for label, z in (("x", hgf.ZMatrix.from_points(cfg.points)), ("z-random", _random_z(cfg, rng))):
        r = hgf.hgs_residual(z, cfg.alpha_weights, (0, 1), cfg.settings, rho=cfg.rho)
        for (p, q), v in sorted(r.box.items()):
            rep.add("hgs:box", v, tol, p, q, None, label, r.scales[("box", p, q)])
        for p, v in sorted(r.euler.items()):
            rep.add("hgs:euler", v, tol, p, None, None, label, r.scales[("euler", p)])
        for (a, b), v in sorted(r.gl2.items()):
            rep.add("hgs:gl2", v, tol, a, b, None, label, r.scales[("gl2", a, b)])


def _contiguity_suite(cfg: RunConfig, rep: CheckReport, rng) -> None:
    res = hgf.contiguity_sweep(cfg.points, cfg.alpha_weights, None, (0, 1), cfg.settings, rho=cfg.rho)
    for (p, q), v in sorted(res.items()):
        rep.add("contiguity", v, TOLERANCES["contiguity"], p, q, None, "x")


def _covariance_suite(cfg: RunConfig, rep: CheckReport, rng) -> None:
    tol = TOLERANCES["covariance"]
    al = cfg.alpha_weights
    z = _random_z(cfg, rng)
    n = z.n
    h = 1 + 0.3 * rng.uniform(-1, 1, n) + 0.2j * rng.uniform(-1, 1, n)
    rep.add("covariance:torus", hgf.covariance_residual(z, al, h, (0, 1), cfg.settings, cfg.rho), tol, point="z-random")
    g = np.eye(2) + 0.05 * (rng.uniform(-1, 1, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2)))
    rep.add("covariance:gl2", hgf.covariance_residual(z, al, g, (0, 1), cfg.settings, cfg.rho), tol, point="z-random")
    rep.add("covariance:homogeneity", hgf.covariance_residual(z, al, [[2, 0], [0, 2]], (0, 1), cfg.settings, cfg.rho), tol, point="z-random")
    shift = float(rng.uniform(0.5, 1.5))
    chk = hgf.sl2_pullback_check(cfg.points, al, [[1, shift], [0, 1]], (0, 1), cfg.settings, cfg.rho)
    rep.add("covariance:sl2_translation", chk.residual, tol, point="x")
    rep.add("covariance:sl2_translation_epd", chk.epd_residual, TOLERANCES["epd"], point="x")
    if any(abs(v) < 1e-6 for v in cfg.x):
        rep.skip("covariance:sl2_inversion", "configuration contains 0")
        return
    try:
        inv = hgf.sl2_pullback_check(cfg.points, al, [[0, 1], [1, 0]], (0, 1), cfg.settings, cfg.rho)
    except ContourError as exc:
        rep.skip("covariance:sl2_inversion", f"no cycle for the inverted points: {exc}")
        return
    rep.add("covariance:sl2_inversion_modulus", abs(abs(inv.ratio) - 1), TOLERANCES["sl2_inversion"], point="x")
    rep.add("covariance:sl2_inversion_epd", inv.epd_residual, TOLERANCES["epd"], point="x")


def _epd_suite(cfg: RunConfig, rep: CheckReport, rng) -> None:
    res = epd.epd_sweep(cfg.points, cfg.alpha_weights, None, (0, 1), cfg.settings, rho=cfg.rho)
    for (p, q), v in sorted(res.items()):
        rep.add("epd", v, TOLERANCES["epd"], p, q, None, "x")


def _identities_suite(cfg: RunConfig, rep: CheckReport, rng) -> None:
    alpha = [_rational(a) for a in cfg.alpha]
    if any(a is None for a in alpha):
        rep.skip("identities", "exact identities need real alpha")
        return
    N = len(alpha)
    if N < 3:
        rep.skip("identities", "needs N >= 3")
        return
    # random rational point with distinct coordinates
    point = tuple(Fraction(k + 1) + Fraction(int(rng.integers(1, 97)), 97) for k in range(N))
    basis = epd.monomial_basis(N, 3, active=range(min(N, 4)))

    def worst(fn):
        return float(max(abs(fn(f)) for f in basis))

    tol = TOLERANCES["identities"]
    for i, j, k in [(0, 1, 2)] + ([(1, 2, 3)] if N > 3 else []):
        rep.add("identities:spair", worst(lambda f: epd.spair_identity_residual(i, j, k, alpha, f, point)), tol, i, k, None, "rational")
        rep.add("identities:generator", worst(lambda f: epd.spair_generator_residual(i, j, k, alpha, f, point)), tol, i, k, None, "rational")
    for p, q in [(0, 1), (1, 2)]:
        rep.add("identities:intertwine_a", worst(lambda f: epd.intertwine_identity_residual(p, q, alpha, f, point)[0]), tol, p, q, None, "rational")
        rep.add("identities:intertwine_b", worst(lambda f: epd.intertwine_identity_residual(p, q, alpha, f, point)[1]), tol, p, q, None, "rational")
    if N >= 4:
        rep.add("identities:commutator", worst(lambda f: epd.commutator_residual(0, 1, 2, 3, alpha, f, point)), tol, 0, 1, None, "rational")
    for variant in ("up", "down"):
        rep.add(f"identities:modulo_{variant}", worst(lambda f: epd.modulo_ideal_identity_residual(0, 1, 2, alpha, f, point, variant)), tol, 0, 2, None, "rational")


def _toda_points(cfg: RunConfig, rng, count: int = 5) -> list:
    x = np.array(cfg.x)
    gaps = [abs(a - b) for k, a in enumerate(x) for b in x[k + 1:]]
    jitter = 0.1 * min(gaps)
    pts = [tuple(x)]
    for _ in range(count - 1):
        pts.append(tuple(x + jitter * rng.uniform(-1, 1, x.size)))
    return pts


def _toda_suite(cfg: RunConfig, rep: CheckReport, rng) -> None:
    i, j = cfg.pair
    al = cfg.alpha_weights
    lo, hi = cfg.n_range
    pts = _toda_points(cfg, rng)
    for n in range(lo, hi + 1):
        try:
            lc = toda.ladder_check(hgf.PointConfig(pts[0]), al, (i, j), n, None, cfg.settings, cfg.rho)
        except ParameterError as exc:
            rep.skip("toda:ladder", f"n = {n}: {exc}")
            continue
        rep.add("toda:ladder_up", lc.up, TOLERANCES["ladder"], i, j, n, "p0")
        rep.add("toda:ladder_down", lc.down, TOLERANCES["ladder"], i, j, n, "p0")
        rep.add("toda:ladder_inverse", lc.up_then_down, TOLERANCES["ladder"], i, j, n, "p0")
    if hi - lo < 2:
        rep.skip("toda:2dthe", "n_range has no interior index")
        return
    seq = toda.build_tau_main(None, al, (i, j), (lo, hi), cfg.A, None, cfg.settings, cfg.rho)
    report = toda.verify_2dthe(seq, pts)
    for name, table in (("2dthe", report.hirota), ("2dte_dy_log_r", report.dy_log_r), ("2dte_dx_s", report.dx_s)):
        for (n, k), v in sorted(table.items()):
            rep.add(f"toda:{name}", v, TOLERANCES["toda"], i, j, n, f"p{k}")


_SUITES = {
    "laplace": _laplace_suite,
    "seed": _seed_suite,
    "hgs": _hgs_suite,
    "contiguity": _contiguity_suite,
    "covariance": _covariance_suite,
    "epd": _epd_suite,
    "identities": _identities_suite,
    "toda": _toda_suite,
}


def run(cfg: RunConfig) -> CheckReport:
    """Run the requested suites in canonical order.

    Exit codes: 0 all pass, 1 a residual above tolerance, 3 a numerical
    failure (rows gathered so far are kept).
    """
    rep = CheckReport()
    rng = np.random.default_rng(cfg.seed)
    for name in CHECKS:
        if name not in cfg.checks:
            continue
        try:
            _SUITES[name](cfg, rep, rng)
        except (QuadratureError, ContourError, DegenerateCycleError, ArithmeticError) as exc:
            rep.error = f"{name}: {type(exc).__name__}: {exc}"
            rep.exit_code = EXIT_NUMERIC
            return rep
    rep.exit_code = EXIT_OK if rep.all_passed else EXIT_FAIL
    return rep
