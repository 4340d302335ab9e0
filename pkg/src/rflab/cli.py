"""Command-line experiment runner.

Usage::

    rflab <experiment> [--config PATH] [--seed U64] [--out DIR] [--samples S] [--grid-log2 m]

The config file is line based: ``key = value`` pairs, ``#`` starts a
comment, blank lines are ignored and a comma separates list items.
Command-line flags override keys of the same name.
"""

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import core, exploc, moments, spreading, taylor, turan
from .errors import ArgumentError, NumericError, RflabError
from .rng import generator

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PRECONDITION = 3
EXIT_IO = 4
EXIT_NUMERIC = 5

SCHEMA_VERSION = 1


class UsageError(RflabError):
    pass


# key -> (parser, default); lists are comma separated
def _ints(v):
    return [int(x) for x in _split(v)]


def _floats(v):
    return [float(x) for x in _split(v)]


def _split(v):
    return [x.strip() for x in str(v).split(",") if x.strip()]


def _str(v):
    return str(v).strip()


COMMON = {
    "seed": (int, 0),
    "samples": (int, core.DEFAULT_ROWS),
    "grid_log2": (int, core.DEFAULT_GRID_LOG2),
    "out": (_str, "."),
}

EXPERIMENTS = {
    "khinchin": {"dim": (int, 64), "p": (_floats, [2.0, 4.0, 8.0, 16.0, 32.0, 64.0]),
                 "mc_samples": (int, 100000)},
    "bilinear": {"dim": (int, 32), "p": (_floats, [2.0, 4.0, 8.0, 16.0, 32.0]),
                 "mc_samples": (int, 100000)},
    "log-moments": {"degree": (int, 64), "instances": (int, 10), "p": (_floats, [1.0, 2.0, 3.0]),
                    "b_max": (float, 0.04)},
    "counterexample": {"N": (_ints, [4, 8, 16, 32]), "C_param": (float, 2.5)},
    "turan-survey": {"trials": (int, 200), "max_order": (int, 8), "A_cfg": (float, turan.TURAN_CONSTANT)},
    "exploc-spectrum": {"degree": (int, 16), "n": (int, 3), "tau": (float, 1.0 / 64),
                        "t_nodes": (int, 64), "A_cfg": (float, turan.TURAN_CONSTANT)},
    "spreading": {"degree": (int, 16), "n": (int, 2), "tau": (float, 1.0 / 512),
                  "density": (float, 0.5), "kappa": (float, 0.0)},
    "difference-inequality": {"mu": (_floats, [0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-6]),
                              "p": (_str, "auto"), "c": (float, spreading.C_SMALL),
                              "C": (float, spreading.C_LARGE)},
    "jensen": {"instances": (int, 100), "degree": (int, 32), "r": (float, 0.9),
               "b_re": (float, 0.3), "b_im": (float, 0.0)},
    "range": {"law": (_str, taylor.RADEMACHER), "coeffs": (_str, "inv_sqrt"),
              "M_disk": (float, 1.0), "targets": (_floats, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
              "b_grid": (int, 64), "seeds": (int, 20), "band": (float, 10.0)},
}

COEFFICIENT_FAMILIES = {
    "one": lambda k: np.ones(np.shape(k)),
    "inv_sqrt": lambda k: 1.0 / np.sqrt(np.asarray(k, dtype=np.float64) + 1.0),
    "geometric": lambda k: 2.0 ** -np.asarray(k, dtype=np.float64),
}


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict
    source: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]

    @property
    def out(self):
        return Path(self.params["out"])


def parse_config_text(text):
    """``key = value`` lines with ``#`` comments; returns raw string values."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise UsageError(f"line {lineno}: empty key")
        if key in out:
            raise UsageError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def build_config(experiment, raw):
    """Validate raw key/values against the experiment's table and fill defaults."""
    if experiment not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
    table = dict(COMMON)
    table.update(EXPERIMENTS[experiment])
    raw = dict(raw)
    raw.pop("experiment", None)
    unknown = sorted(set(raw) - set(table))
    if unknown:
        raise UsageError(f"unknown keys for {experiment}: {unknown}")
    params = {}
    for key, (conv, default) in table.items():
        if key in raw:
            try:
                params[key] = conv(raw[key])
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key!r}: {raw[key]!r} ({exc})") from None
        else:
            params[key] = list(default) if isinstance(default, list) else default
    if params["samples"] < 1:
        raise ArgumentError("samples must be >= 1")
    if not 1 <= params["grid_log2"] <= 24:
        raise ArgumentError("grid_log2 must lie in [1, 24]")
    if params["seed"] < 0 or params["seed"] >= 2 ** 64:
        raise ArgumentError("seed must be an unsigned 64-bit integer")
    return ExperimentConfig(experiment, params, {k: str(v) for k, v in raw.items()})


# experiments ------------------------------------------------------------------

def _check(name, passed, margin):
    return {"name": name, "passed": bool(passed), "margin": float(margin)}


def _khinchin(cfg):
    d = cfg["dim"]
    coeffs = core.CoefficientSeq(0, np.full(d, 1.0 / math.sqrt(d)))
    rows = []
    for p in cfg["p"]:
        m = moments.khinchin_moment(coeffs, p, cfg["mc_samples"], cfg["seed"])
        rows.append({"p": p, "moment": m.value, "standard_error": m.standard_error,
                     "samples": m.samples})
    slope = moments.loglog_slope(cfg["p"], [r["moment"] for r in rows]) if len(rows) > 1 else 0.0
    return rows, [_check("p_exponent_le_0.6", slope <= 0.6, 0.6 - slope)]


def _bilinear(cfg):
    d = cfg["dim"]
    gen = generator(cfg["seed"])
    a = gen.normal(size=(d, d))
    a = np.triu(a, 1)
    a = a / np.linalg.norm(a)
    rows = []
    for p in cfg["p"]:
        m = moments.bilinear_moment(a, p, cfg["mc_samples"], cfg["seed"])
        rows.append({"p": p, "moment": m.value, "standard_error": m.standard_error,
                     "samples": m.samples})
    slope = moments.loglog_slope(cfg["p"], [r["moment"] for r in rows]) if len(rows) > 1 else 0.0
    return rows, [_check("p_exponent_le_1.15", slope <= 1.15, 1.15 - slope)]


def _log_moments(cfg):
    S, m, deg = cfg["samples"], cfg["grid_log2"], cfg["degree"]
    gen = generator(cfg["seed"])
    rows = []
    flagged = 0
    for i in range(cfg["instances"]):
        c = gen.normal(size=deg + 1) + 1j * gen.normal(size=deg + 1)
        coeffs = core.CoefficientSeq(0, c / np.linalg.norm(c))
        signs = core.sample_sign_ensemble(cfg["seed"] + i, S, (0, deg))
        f = core.evaluate_grid(coeffs, signs, m)
        b = core.RandomConstant(cfg["b_max"] * gen.uniform(0, 1, S) * np.exp(2j * np.pi * gen.uniform(0, 1, S)))
        for p in cfg["p"]:
            est = moments.log_moment(f, b, p)
            flagged += est.flagged
            rows.append({"instance": i, "p": p, "value": est.value,
                         "standard_error": est.standard_error, "flagged": est.flagged})
    return rows, [_check("no_flagged_cells", flagged == 0, -flagged)]


def _counterexample(cfg):
    rows = []
    for N in cfg["N"]:
        r = moments.counterexample_report(N, cfg["C_param"])
        rows.append({"N": N, "C_param": r.C_param, "mu_EN": r.mu_EN, "log_mu_EN": r.log_mu_EN,
                     "norm_sq_Q": r.norm_sq_Q, "log_int_E": r.log_int_E, "ratio": r.ratio,
                     "log_ratio": r.log_ratio})
    worst = min(r["log_ratio"] for r in rows)
    return rows, [_check("ratio_ge_1", worst >= 0.0, worst)]


def _turan_survey(cfg):
    recs = turan.survey(cfg["seed"], cfg["trials"], cfg["max_order"], cfg["A_cfg"])
    rows = []
    for i, (n, mE, s, l2) in enumerate(recs):
        rows.append({"trial": i, "order": n, "measure_E": mE, "sup_ratio": s.ratio,
                     "sup_constant": s.empirical_constant, "sup_margin": s.margin,
                     "l2_ratio": l2.ratio, "l2_constant": l2.empirical_constant,
                     "l2_margin": l2.margin})
    ok = all(s.bound_ok and l2.bound_ok for _, _, s, l2 in recs)
    margin = min(min(s.margin, l2.margin) for _, _, s, l2 in recs) if recs else math.inf
    return rows, [_check("turan_bounds", ok, margin)]


def _random_grid_poly(cfg, degree):
    gen = generator(cfg["seed"])
    c = gen.normal(size=degree + 1) + 1j * gen.normal(size=degree + 1)
    coeffs = core.CoefficientSeq(0, c / np.linalg.norm(c))
    signs = core.sample_sign_ensemble(cfg["seed"], cfg["samples"], (0, degree))
    return core.evaluate_grid(coeffs, signs, cfg["grid_log2"]), gen


def _exploc_spectrum(cfg):
    g, _ = _random_grid_poly(cfg, cfg["degree"])
    n, tau = cfg["n"], cfg["tau"]
    cert = exploc.exploc_certificate(g, n, tau, cfg["t_nodes"])
    res = exploc.approximate_spectrum(g, n, tau, cfg["t_nodes"], cfg["A_cfg"], certificate=cert)
    rows = [{"index": j, "lambda": float(l), "kappa": cert.kappa, "residual": res.residual,
             "initial_residual": res.initial_residual, "t0": res.t0}
            for j, l in enumerate(res.lam.lam)]
    gain = res.initial_residual - res.residual
    return rows, [_check("refinement_monotone", gain >= 0, gain)]


def _spreading(cfg):
    g, gen = _random_grid_poly(cfg, cfg["degree"])
    E = core.ProductSet(gen.uniform(0, 1, (g.S, g.G)) < cfg["density"])
    b = core.RandomConstant.zero(g.S)
    r = spreading.spread_set(g, E, cfg["n"], cfg["tau"], cfg["kappa"], b)
    rows = [{"mu_E": E.measure(), "mu_E_tilde": r.E_tilde.measure(), "delta": r.delta,
             "gain": r.gain, "gain_bound": r.gain_bound, "white_new": r.white_new,
             "white_bound": r.white_bound, "case": r.case, "M": r.M, "gamma": r.gamma,
             "white_intervals": r.white_intervals, "black_intervals": r.black_intervals,
             "int_E": r.int_E, "int_E_tilde": r.int_E_tilde,
             "spreading_constant": r.spreading_constant}]
    cell = 1.0 / (g.S * g.G)
    return rows, [_check("measure_gain", r.gain_ok, r.gain - r.gain_bound + cell),
                  _check("white_part", r.white_ok, r.white_new - r.white_bound + cell)]


def _difference(cfg):
    rows = []
    for mu in cfg["mu"]:
        p = 2.0 * math.log(2.0 / mu) if cfg["p"] == "auto" else float(cfg["p"])
        if mu >= spreading.LARGE_MEASURE:
            bound, steps = math.log(2.0), 0
        else:
            d = spreading.solve_difference_inequality(mu, p, cfg["c"], cfg["C"])
            bound, steps = float(d.log_D_bound), d.steps
        rows.append({"mu": mu, "p": p, "log_D_bound": bound, "steps": steps})
    checks = []
    small = [r for r in rows if r["mu"] < spreading.LARGE_MEASURE]
    if len(small) > 1:
        x = [math.log(2.0 / r["mu"]) for r in small]
        slope = moments.loglog_slope(x, [r["log_D_bound"] for r in small])
        checks.append(_check("log6_exponent", slope <= 6.2, 6.2 - slope))
    return rows, checks


def _jensen(cfg):
    b = complex(cfg["b_re"], cfg["b_im"])
    rows = []
    worst = 0.0
    agree = True
    for i in range(cfg["instances"]):
        F = taylor.truncate(taylor.RADEMACHER, np.ones(cfg["degree"] + 1), 0.5, 1.0,
                            seed=cfg["seed"] + i)
        j = taylor.jensen_check(F, cfg["r"], b)
        zc = taylor.count_zeros(F, cfg["r"], b)
        rc = taylor.root_count(F, zc.r, b)
        worst = max(worst, j.diff)
        agree &= zc.n == rc
        rows.append({"instance": i, "lhs": j.lhs, "rhs": j.rhs, "diff": j.diff,
                     "contour_count": zc.n, "root_count": rc, "contour_residual": zc.residual})
    return rows, [_check("jensen_diff", worst <= 1e-6, 1e-6 - worst),
                  _check("counts_agree", agree, 0.0)]


def _range(cfg):
    if cfg["coeffs"] not in COEFFICIENT_FAMILIES:
        raise ArgumentError(f"unknown coefficient family {cfg['coeffs']!r}; "
                            f"choose from {sorted(COEFFICIENT_FAMILIES)}")
    a = COEFFICIENT_FAMILIES[cfg["coeffs"]]
    seeds = [cfg["seed"] + s for s in range(cfg["seeds"])]
    res = taylor.range_experiment(cfg["law"], a, cfg["M_disk"], cfg["targets"], cfg["b_grid"],
                                  seeds, band=cfg["band"])
    frac = res.fraction_within
    return res.rows, [_check("within_band_ge_0.95", frac >= 0.95, frac - 0.95)]


RUNNERS = {
    "khinchin": _khinchin,
    "bilinear": _bilinear,
    "log-moments": _log_moments,
    "counterexample": _counterexample,
    "turan-survey": _turan_survey,
    "exploc-spectrum": _exploc_spectrum,
    "spreading": _spreading,
    "difference-inequality": _difference,
    "jensen": _jensen,
    "range": _range,
}


# output ---------------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _parse_cell(s):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def format_csv(rows):
    if not rows:
        raise ArgumentError("no rows to write")
    header = list(rows[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if list(r) != header:
            raise ArgumentError("rows have inconsistent columns")
        w.writerow([_cell(r[k]) for k in header])
    return buf.getvalue()


def read_csv(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        return [dict(zip(header, (_parse_cell(c) for c in line))) for line in rd]


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (np.floating,)):
        return _jsonable(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def write_outputs(rows, manifest, paths):
    """Write ``paths['csv']`` and ``paths['manifest']``."""
    text = format_csv(rows)
    Path(paths["csv"]).parent.mkdir(parents=True, exist_ok=True)
    with open(paths["csv"], "w", newline="") as fh:
        fh.write(text)
    with open(paths["manifest"], "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def output_paths(cfg):
    return {"csv": cfg.out / f"{cfg.experiment}.csv",
            "manifest": cfg.out / f"{cfg.experiment}.manifest.json"}


def run_experiment(cfg, write=True):
    """Run one experiment; returns ``(rows, manifest)`` and writes both files."""
    start = time.perf_counter()
    rows, checks = RUNNERS[cfg.experiment](cfg)
    manifest = {
        "experiment": cfg.experiment,
        "artifact_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "columns": list(rows[0]) if rows else [],
        "config": dict(cfg.params),
        "wall_clock_seconds": time.perf_counter() - start,
        "checks": checks,
        "rows": len(rows),
    }
    if write:
        write_outputs(rows, manifest, output_paths(cfg))
    return rows, manifest


def manifest_schema():
    from importlib.resources import files
    return json.loads(files("rflab").joinpath("manifest.schema.json").read_text())


def _arg_parser():
    ap = argparse.ArgumentParser(prog="rflab", description="Run one experiment and emit CSV plus a JSON manifest.")
    ap.add_argument("experiment", help="one of: " + ", ".join(EXPERIMENTS))
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--samples", type=int)
    ap.add_argument("--grid-log2", type=int, dest="grid_log2")
    return ap


def main(argv=None):
    args = _arg_parser().parse_args(argv)
    try:
        raw = {}
        if args.config:
            try:
                raw = parse_config_text(Path(args.config).read_text())
            except OSError as exc:
                print(f"rflab: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
        if "experiment" in raw and raw["experiment"] != args.experiment:
            raise UsageError(f"config is for {raw['experiment']!r}, not {args.experiment!r}")
        for key in ("seed", "out", "samples", "grid_log2"):
            v = getattr(args, key)
            if v is not None:
                raw[key] = str(v)
        cfg = build_config(args.experiment, raw)
        run_experiment(cfg)
    except UsageError as exc:
        print(f"rflab: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArgumentError as exc:
        print(f"rflab: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NumericError as exc:
        print(f"rflab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"rflab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RflabError as exc:
        print(f"rflab: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
