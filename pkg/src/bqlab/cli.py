"""Command-line front end.

Exit codes: 0 when every verdict passes, 2 when a verdict fails, 1 for
configuration or resource errors (raised before any computation).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import exponents as ex
from . import sphere as sp
from .config import ConfigError, atomic_write, defaults, load_config
from .experiments import get_experiment
from .scaling import SweepPlan, compare_to_theory, run_sweep

log = logging.getLogger("bqlab")

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 1, 2
MEMORY_BUDGET = 4 * 2**30

FLAT_REGIMES = ("large_p", "mid_p", "small_p_2d")
SPHERE_REGIMES = ("large_p", "small_p", "mid_p", "zonal", "beam")


def _json_default(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(f"not serializable: {obj!r}")


def _clean(obj):
    """Replace infinities by the string ``"inf"`` so the JSON stays strict."""
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def to_csv(rows: list[dict], header: dict | None = None) -> str:
    buf = io.StringIO()
    if header is not None:
        buf.write("# " + json.dumps(_clean(header), sort_keys=True) + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ex.format_p(v) if isinstance(v, float) and math.isinf(v) else v for k, v in row.items()})
    return buf.getvalue()


def to_pretty(rows: list[dict]) -> str:
    if not rows:
        return "(no rows)\n"
    cols = list(rows[0])

    def fmt(v):
        if isinstance(v, float):
            return ex.format_p(v) if math.isinf(v) else f"{v + 0.0:.6g}"
        return str(v)

    cells = [[fmt(r.get(c, "")) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def emit(args, rows: list[dict], payload: dict, header: dict) -> None:
    """Print ``rows`` to stdout and, with ``--out``, write the chosen format atomically."""
    fmt = args.format
    text = {"csv": lambda: to_csv(rows, header), "json": lambda: dumps({"config": header, **payload}),
            "pretty": lambda: to_pretty(rows)}[fmt]()
    sys.stdout.write(text)
    if args.out:
        atomic_write(args.out, text)


def _p_list(values) -> list[float]:
    return [ex.parse_p(v) for v in values]


# -- exponents ---------------------------------------------------------------


def cmd_exponents(args) -> int:
    cfg = load_config(args.config)
    n_list = args.n if args.n is not None else cfg.get("n", [2, 3, 4])
    p_list = _p_list(args.p if args.p is not None else cfg.get("p", [2, 3, 4, 6, 8, "inf"]))
    for n in n_list:
        if int(n) < 2:
            raise ConfigError(f"dimension must be >= 2, got {n}")
    for p in p_list:
        if p < 2:
            raise ConfigError(f"p must be >= 2, got {p}")
    rows = []
    for n in n_list:
        for p in p_list:
            row = ex.exponent_row(int(n), p)
            row["breakpoints"] = " ".join(f"{b:g}" for b in row["breakpoints"])
            row["G"] = ex.bilinear_G(int(n), p).label().replace(" |log h|^0.5", " ·|log h|^{1/2}")
            rows.append(row)
    emit(args, rows, {"rows": rows}, {"command": "exponents", "n": n_list, "p": p_list})
    return EXIT_OK


# -- sweeps ------------------------------------------------------------------


def _tolerance(args, cfg, experiment_id: str, options: dict) -> float:
    if args.tolerance is not None:
        return float(args.tolerance)
    if "tolerance" in cfg:
        return float(cfg["tolerance"])
    tol = defaults()["tolerance"]
    if experiment_id.startswith("flat.") and options.get("n") == 3:
        return tol["flat_n3"]
    return tol.get(experiment_id, tol["default"])


def run_plans(args, experiment_id: str, grid: dict, p_list: list[float], options: dict, run_echo: dict) -> int:
    exp = get_experiment(experiment_id)
    options = exp.resolve_options(options)
    tolerance = None
    for p in p_list:
        exp.validate(grid, p, options)
    estimate = {}
    for p in p_list:
        est = exp.estimate(grid, p, options)
        if est.get("bytes", 0) >= estimate.get("bytes", 0):
            estimate = est
    print(f"# {experiment_id}: estimated grid points {estimate.get('grid_points', 0)}, "
          f"bytes {estimate.get('bytes', 0)}", file=sys.stderr)
    if estimate.get("bytes", 0) > MEMORY_BUDGET:
        raise ConfigError(f"estimated memory {estimate['bytes']} bytes exceeds budget {MEMORY_BUDGET}")
    cfg = load_config(args.config)
    tolerance = _tolerance(args, cfg, experiment_id, options)

    rows, fits, verdicts = [], [], []
    for p in p_list:
        points = run_sweep(SweepPlan(experiment_id, grid, p, options), jobs=args.jobs)
        for pt in points:
            if not pt.ok:
                print(f"# cell {pt.parameters} failed: {pt.error}", file=sys.stderr)
        rows += [exp.csv_row(pt, p, options) for pt in points]
        try:
            fit = exp.fit(points, p, options)
        except ValueError as exc:
            print(f"# fit failed at p={ex.format_p(p)}: {exc}", file=sys.stderr)
            verdicts.append({"experiment": experiment_id, "p": p, "slope_name": "*", "empirical": None,
                             "predicted": None, "gap": None, "pass": False, "error": str(exc)})
            continue
        fits.append({"p": p, "slopes": fit.slopes, "intercept": fit.intercept,
                     "r_squared": fit.r_squared, "max_abs_residual": fit.max_abs_residual})
        pair = exp.predicted(p, options)
        verdicts += [v.record() for v in compare_to_theory(fit, pair, tolerance, experiment_id, p, exp.sharpness)]

    header = {"defaults": defaults(), "run": {**run_echo, "options": options, "tolerance": tolerance}}
    payload = {"points": rows, "fits": fits, "verdicts": verdicts}
    if args.format == "pretty":
        sys.stdout.write(to_pretty(rows))
        sys.stdout.write(to_pretty([{k: v for k, v in r.items() if k != "error"} for r in verdicts]))
        if args.out:
            atomic_write(args.out, to_csv(rows, header))
    else:
        emit(args, rows, payload, header)
    if args.out:
        atomic_write(_verdict_path(args.out), dumps({"config": header, "fits": fits, "verdicts": verdicts}))
    return EXIT_OK if verdicts and all(v["pass"] for v in verdicts) else EXIT_FAIL


def _verdict_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".verdicts.json")


def _grid_from(args_grid: dict, cfg_grid: dict, default_grid: dict) -> dict:
    grid = dict(default_grid)
    grid.update(cfg_grid or {})
    grid.update({k: v for k, v in args_grid.items() if v is not None})
    return grid


def cmd_flat_sweep(args) -> int:
    cfg = load_config(args.config)
    dflt = defaults()["flat"]
    regime = args.regime or cfg.get("regime")
    if regime not in FLAT_REGIMES:
        raise ConfigError(f"flat-sweep needs --regime in {FLAT_REGIMES}, got {regime!r}")
    n = int(args.n or cfg.get("n", 2))
    if str(n) not in dflt["grids"]:
        raise ConfigError(f"no default grid for n={n}")
    grid = _grid_from({"h": args.h, "sigma": args.sigma}, cfg.get("grid"), dflt["grids"][str(n)])
    p_list = _p_list(args.p if args.p is not None else cfg.get("p", dflt["p"][regime]))
    options = {
        "n": n,
        "points_per_axis": args.points_per_axis or cfg.get("points_per_axis") or dflt["points_per_axis"][str(n)],
        "half_length": args.half_length or cfg.get("half_length") or dflt["half_length"],
    }
    echo = {"command": "flat-sweep", "regime": regime, "grid": grid, "p": p_list}
    return run_plans(args, f"flat.{regime}", grid, p_list, options, echo)


def cmd_sphere_sweep(args) -> int:
    cfg = load_config(args.config)
    dflt = defaults()["sphere"]
    regime = args.regime or cfg.get("regime")
    if regime not in SPHERE_REGIMES:
        raise ConfigError(f"sphere-sweep needs --regime in {SPHERE_REGIMES}, got {regime!r}")
    grid = _grid_from({"lambda": args.lam, "mu": args.mu, "k": args.k}, cfg.get("grid"), dflt["grids"][regime])
    p_list = _p_list(args.p if args.p is not None else cfg.get("p", dflt["p"][regime]))
    options = {}
    if regime == "mid_p":
        options = {"alpha": args.alpha or cfg.get("alpha") or dflt["alpha"], "d": args.d or cfg.get("d") or dflt["d"]}
    echo = {"command": "sphere-sweep", "regime": regime, "grid": grid, "p": p_list}
    return run_plans(args, f"sphere.{regime}", grid, p_list, options, echo)


# -- ensemble checks ---------------------------------------------------------


def gram_quadrature(k: int) -> sp.SphereQuadrature:
    return sp.SphereQuadrature(k + 1, 2 * k + 1)


def region_quadrature(k: int, eps: float) -> sp.SphereQuadrature:
    """Quadrature whose first few Gauss-Legendre rings fall inside the region ``S``.

    The first ring sits near ``phi = 2.405 / n_mu``; ``S`` reaches out to
    ``eps k^{-1/2}`` along ``x_1`` for ``alpha = 1/4``, and the factor 4
    leaves about three rings inside.
    """
    n_mu = max(k + 1, math.ceil(4 * 2.405 * math.sqrt(k) / eps))
    return sp.SphereQuadrature(n_mu, 2 * k + 1)


def cmd_gram_check(args) -> int:
    cfg = load_config(args.config)
    dflt = defaults()["sphere"]
    ks = args.k or cfg.get("k") or [256]
    alpha = float(args.alpha if args.alpha is not None else cfg.get("alpha", dflt["alpha"]))
    d = float(args.d or cfg.get("d") or dflt["d"])
    reports = []
    for k in ks:
        spec = sp.EnsembleSpec(int(k), alpha, d)
        eig = sp.ensemble_gram(spec, gram_quadrature(int(k)))
        reports.append({"k": int(k), "alpha": alpha, "d": d, "m": spec.m, "eigen_min": float(eig[0]),
                        "eigen_max": float(eig[-1]), "pass": sp.gram_in_range(eig)})
    header = {"defaults": defaults(), "run": {"command": "gram-check", "k": ks, "alpha": alpha, "d": d}}
    if args.format == "json" and len(reports) == 1:
        text = dumps(reports[0])
        sys.stdout.write(text)
        if args.out:
            atomic_write(args.out, text)
    else:
        emit(args, reports, {"reports": reports}, header)
    return EXIT_OK if all(r["pass"] for r in reports) else EXIT_FAIL


def region_report(k: int, alpha: float, d: float, eps: float) -> dict:
    quad = region_quadrature(k, eps)
    ens = sp.build_ensemble(sp.EnsembleSpec(k, alpha, d), quad)
    region = sp.ensemble_region(k, alpha, eps)
    floor, weight = sp.region_floor(ens.v, region)
    return {
        "k": k,
        "alpha": alpha,
        "d": d,
        "eps": eps,
        "m": ens.spec.m,
        "min_abs_v": floor,
        "floor_ratio": floor / k ** ((1 - alpha) / 2),
        "region_weight": weight,
        "w_norm_sq": ens.w_norm_sq,
        "phase_margin": sp.phase_coherence_margin(ens, region),
        "eigen_min": float(ens.eigenvalues[0]),
        "eigen_max": float(ens.eigenvalues[-1]),
    }


def cmd_region_floor(args) -> int:
    cfg = load_config(args.config)
    dflt = defaults()["sphere"]
    ks = [int(k) for k in (args.k or cfg.get("k") or dflt["structure_k"])]
    alpha = float(args.alpha if args.alpha is not None else cfg.get("alpha", dflt["alpha"]))
    d = float(args.d or cfg.get("d") or dflt["d"])
    eps = float(args.eps or cfg.get("eps") or dflt["eps"])
    reports = [region_report(k, alpha, d, eps) for k in ks]
    ratios = [r["floor_ratio"] for r in reports]
    drift = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    limit = defaults()["drift_factor"]
    ok = drift < limit and all(r["phase_margin"] >= 0.5 and 0.5 <= r["w_norm_sq"] <= 2 for r in reports)
    header = {"defaults": defaults(), "run": {"command": "region-floor", "k": ks, "alpha": alpha, "d": d, "eps": eps}}
    emit(args, reports, {"reports": reports, "floor_drift": drift, "pass": ok}, header)
    return EXIT_OK if ok else EXIT_FAIL


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="write the formatted output here (atomically)")
    common.add_argument("--format", choices=("csv", "json", "pretty"), default="pretty")
    common.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    common.add_argument("--tolerance", type=float, help="allowed |empirical - predicted| per slope")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bqlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", parents=[common], help="tabulate the exponent laws")
    p.add_argument("--n", type=int, nargs="*")
    p.add_argument("--p", nargs="*")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("flat-sweep", parents=[common], help="tube products on a periodic box")
    p.add_argument("--regime", choices=FLAT_REGIMES)
    p.add_argument("--n", type=int)
    p.add_argument("--p", nargs="*")
    p.add_argument("--h", type=float, nargs="+")
    p.add_argument("--sigma", type=float, nargs="+")
    p.add_argument("--points-per-axis", type=int)
    p.add_argument("--half-length", type=float)
    p.set_defaults(func=cmd_flat_sweep)

    p = sub.add_parser("sphere-sweep", parents=[common], help="spherical harmonic constructions")
    p.add_argument("--regime", choices=SPHERE_REGIMES)
    p.add_argument("--p", nargs="*")
    p.add_argument("--lambda", dest="lam", type=float, nargs="+")
    p.add_argument("--mu", type=float, nargs="+")
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--alpha", type=float)
    p.add_argument("--d", type=float)
    p.set_defaults(func=cmd_sphere_sweep)

    p = sub.add_parser("gram-check", parents=[common], help="Gram spectrum of a beam ensemble")
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--alpha", type=float)
    p.add_argument("--d", type=float)
    p.set_defaults(func=cmd_gram_check)

    p = sub.add_parser("region-floor", parents=[common], help="ensemble floor on the region S")
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--alpha", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_region_floor)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"bqlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
