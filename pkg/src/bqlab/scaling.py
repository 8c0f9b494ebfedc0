"""Sweeps over scale parameters and log-log fits of the measured norms."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .exponents import ExponentPair


class CollinearGridError(ValueError):
    """The regressors are (nearly) linearly dependent on the sweep grid."""


@dataclass(frozen=True)
class SweepPoint:
    parameters: dict[str, float]
    value: float
    extra: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and math.isfinite(self.value) and self.value > 0


@dataclass(frozen=True)
class ScalingFit:
    slopes: dict[str, float]
    intercept: float
    r_squared: float
    max_abs_residual: float
    n_points: int

    def negated(self, renames: dict[str, str]) -> "ScalingFit":
        """The same fit after the change of variables ``x -> 1/x`` for each renamed regressor."""
        slopes = {renames.get(k, k): (-v if k in renames else v) for k, v in self.slopes.items()}
        return ScalingFit(slopes, self.intercept, self.r_squared, self.max_abs_residual, self.n_points)


MIN_SPAN = 4.0  # two octaves


def power_law_fit(points, regressors, log_correction: tuple[str, float] | None = None) -> ScalingFit:
    """Least squares for ``log value = intercept + sum slope_i log param_i``.

    ``log_correction=(name, c)`` divides every value by ``|log param|^c``
    before fitting, so a logarithmic factor is not absorbed into a slope.
    """
    regressors = list(regressors)
    pts = [pt for pt in points if pt.ok]
    if len(pts) < len(regressors) + 2:
        raise ValueError(f"need at least {len(regressors) + 2} valid points, got {len(pts)}")
    X = np.ones((len(pts), len(regressors) + 1))
    for j, name in enumerate(regressors):
        col = np.array([pt.parameters[name] for pt in pts], dtype=float)
        if np.any(col <= 0):
            raise ValueError(f"regressor {name!r} must be positive")
        if col.max() / col.min() < MIN_SPAN:
            raise ValueError(f"regressor {name!r} spans less than two octaves")
        X[:, j + 1] = np.log(col)
    y = np.log([pt.value for pt in pts])
    if log_correction is not None:
        name, power = log_correction
        y = y - power * np.log(np.abs(np.log([pt.parameters[name] for pt in pts])))

    if np.linalg.matrix_rank(X, tol=1e-8 * np.abs(X).max()) < X.shape[1]:
        raise CollinearGridError(f"regressors {regressors} are collinear on this grid; decouple the sweep")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot <= 1e-300 else min(1.0, max(0.0, 1 - ss_res / ss_tot))
    return ScalingFit(
        slopes={name: float(c) for name, c in zip(regressors, coef[1:])},
        intercept=float(coef[0]),
        r_squared=r2,
        max_abs_residual=float(np.abs(resid).max()),
        n_points=len(pts),
    )


# slope name -> (coordinate of the pair, sign): h/sigma read the pair as is,
# lambda = 1/h and mu = 1/sigma flip the sign
_CONVENTIONS = {
    "h": ("h_exp", 1.0),
    "sigma": ("sigma_exp", 1.0),
    "lambda": ("h_exp", -1.0),
    "mu": ("sigma_exp", -1.0),
    "k": ("h_exp", -1.0),
}


@dataclass(frozen=True)
class Verdict:
    experiment: str
    p: float | str
    slope_name: str
    empirical: float
    predicted: float
    gap: float
    passed: bool
    tolerance: float
    lower_bound_ok: bool | None = None

    def record(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def compare_to_theory(
    fit: ScalingFit,
    predicted: ExponentPair,
    tolerance: float = 0.1,
    experiment: str = "",
    p: float | str = "",
    sharpness: bool = False,
) -> list[Verdict]:
    """One verdict per fitted slope.

    With ``sharpness`` the measured growth must also not fall short of the
    prediction by more than ``tolerance`` (the one-sided test for lower-bound
    constructions).
    """
    verdicts = []
    for name, emp in fit.slopes.items():
        if name not in _CONVENTIONS:
            raise ValueError(f"slope {name!r} matches no exponent convention")
        attr, sign = _CONVENTIONS[name]
        pred = sign * getattr(predicted, attr)
        gap = emp - pred
        ok = abs(gap) <= tolerance
        lower = None
        if sharpness:
            # growth = sign * slope in the frequency convention
            growth_gap = gap if sign < 0 else -gap
            lower = growth_gap >= -tolerance
            ok = ok and lower
        verdicts.append(Verdict(experiment, p, name, emp, pred, gap, bool(ok), tolerance, lower))
    return verdicts


@dataclass(frozen=True)
class SweepPlan:
    experiment: str
    grid: dict[str, list[float]]
    p: float
    options: dict = field(default_factory=dict)


def _evaluate(args):
    experiment, cell, p, options = args
    from .experiments import get_experiment

    exp = get_experiment(experiment)
    try:
        value, extra = exp.evaluate(cell, p, options)
        return SweepPoint(dict(cell), float(value), extra)
    except Exception as exc:  # recorded per cell, never aborts the sweep
        return SweepPoint(dict(cell), math.nan, {}, f"{type(exc).__name__}: {exc}")


def run_sweep(plan: SweepPlan, jobs: int = 1) -> list[SweepPoint]:
    """Evaluate every admissible grid cell; results come back in grid order."""
    from .experiments import get_experiment

    exp = get_experiment(plan.experiment)
    options = exp.resolve_options(plan.options)
    exp.validate(plan.grid, plan.p, options)
    cells = exp.cells(plan.grid)
    tasks = [(plan.experiment, cell, plan.p, options) for cell in cells]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evaluate, tasks))
    return [_evaluate(t) for t in tasks]
