"""Registered sweep experiments: flat tube products and sphere constructions.

Each experiment knows its parameter names, which grid cells are admissible,
how to measure one cell, and which exponent law the fitted slopes should
reproduce.
"""

from __future__ import annotations

import itertools
import math
from collections import OrderedDict

from . import flat_model as fm
from . import sphere as sp
from .exponents import ExponentPair, bilinear_G
from .scaling import ScalingFit, SweepPoint, power_law_fit

DEFAULT_HALF_LENGTH = 2 * math.pi
DEFAULT_POINTS = {1: 4096, 2: 1024, 3: 256}


class _FieldCache:
    """Per-process cache of built tubes, bounded by total bytes."""

    def __init__(self, budget: int = 3 * 2**29):
        self.budget = budget
        self.items: OrderedDict = OrderedDict()

    def get(self, spec: fm.GridSpec, tube: fm.TubeSpec) -> fm.GridField:
        key = (spec, tube)
        if key in self.items:
            self.items.move_to_end(key)
            return self.items[key]
        fld = fm.build_tube(spec, tube)
        self.items[key] = fld
        while len(self.items) > 2 and sum(f.samples.nbytes for f in self.items.values()) > self.budget:
            self.items.popitem(last=False)
        return fld

    def clear(self):
        self.items.clear()


TUBES = _FieldCache()


class Experiment:
    id = ""
    params: tuple[str, ...] = ()
    regressors: tuple[str, ...] = ()
    sharpness = True
    defaults: dict = {}

    def resolve_options(self, options: dict) -> dict:
        out = dict(self.defaults)
        out.update({k: v for k, v in (options or {}).items() if v is not None})
        return out

    def cells(self, grid: dict) -> list[dict]:
        names = self.params
        missing = [n for n in names if n not in grid]
        if missing:
            raise ValueError(f"{self.id}: grid is missing {missing}")
        cells = []
        for values in itertools.product(*(grid[n] for n in names)):
            cell = dict(zip(names, (float(v) for v in values)))
            if self.admissible(cell):
                cells.append(cell)
        return cells

    def admissible(self, cell: dict) -> bool:
        return True

    def validate(self, grid: dict, p: float, options: dict) -> None:
        if not p >= 1:
            raise ValueError(f"{self.id}: need p >= 1, got {p}")
        for n in self.params:
            if any(float(v) <= 0 for v in grid.get(n, [])):
                raise ValueError(f"{self.id}: parameter {n} must be positive")

    def evaluate(self, cell: dict, p: float, options: dict):
        raise NotImplementedError

    def predicted(self, p: float, options: dict) -> ExponentPair:
        raise NotImplementedError

    def fit(self, points: list[SweepPoint], p: float, options: dict) -> ScalingFit:
        pair = self.predicted(p, options)
        correction = ("h", pair.log_exp) if pair.log_exp else None
        return power_law_fit(points, self.regressors, correction)

    def csv_row(self, point: SweepPoint, p: float, options: dict) -> dict:
        raise NotImplementedError

    def estimate(self, grid: dict, p: float, options: dict) -> dict:
        return {}


class FlatRegime(Experiment):
    params = ("h", "sigma")
    regressors = ("h", "sigma")
    defaults = {"n": 2, "points_per_axis": None, "half_length": DEFAULT_HALF_LENGTH}

    def __init__(self, regime: str):
        self.regime = regime
        self.id = f"flat.{regime}"

    def resolve_options(self, options):
        out = super().resolve_options(options)
        out["n"] = int(out["n"])
        if out.get("points_per_axis") is None:
            out["points_per_axis"] = DEFAULT_POINTS[out["n"]]
        out["points_per_axis"] = int(out["points_per_axis"])
        out["half_length"] = float(out["half_length"])
        return out

    def spec(self, options) -> fm.GridSpec:
        return fm.GridSpec(options["n"], options["half_length"], options["points_per_axis"])

    def admissible(self, cell):
        return cell["sigma"] <= cell["h"]

    def validate(self, grid, p, options):
        super().validate(grid, p, options)
        if self.regime == "small_p_2d" and options["n"] != 2:
            raise ValueError("flat.small_p_2d is a two-dimensional construction")
        self.spec(options)
        for name in self.params:
            if any(not 0 < float(v) < 1 for v in grid.get(name, [])):
                raise ValueError(f"{self.id}: scales must lie in (0, 1)")

    def evaluate(self, cell, p, options):
        h, sigma = cell["h"], cell["sigma"]
        spec = self.spec(options)
        a_h, a_s = fm.regime_alphas(self.regime, h, sigma)
        tube_h, tube_s = fm.TubeSpec(h, a_h), fm.TubeSpec(sigma, a_s)
        fm.check_tube(spec, tube_h)
        fm.check_tube(spec, tube_s)
        prod = fm.product_field(TUBES.get(spec, tube_h), TUBES.get(spec, tube_s))
        return fm.lp_norm(prod, p), {"alpha_h": a_h, "alpha_sigma": a_s}

    def predicted(self, p, options):
        return bilinear_G(options["n"], max(p, 2.0))

    def csv_row(self, point, p, options):
        pair = self.predicted(p, options)
        return {
            "h": point.parameters["h"],
            "sigma": point.parameters["sigma"],
            "alpha_h": point.extra.get("alpha_h", ""),
            "alpha_sigma": point.extra.get("alpha_sigma", ""),
            "p": p,
            "norm": point.value,
            "predicted_exponent_h": pair.h_exp,
            "predicted_exponent_sigma": pair.sigma_exp,
            "error": point.error or "",
        }

    def estimate(self, grid, p, options):
        spec = self.spec(options)
        n_tubes = len(set(grid.get("h", [])) | set(grid.get("sigma", [])))
        return {"grid_points": spec.points_per_axis**spec.n, "bytes": spec.estimated_bytes() * (n_tubes + 2)}


def pair_quadrature(p: float, k_low: int, k_high: int) -> sp.SphereQuadrature:
    """Quadrature for ``|u v|^p`` when ``|u v|`` does not depend on ``theta``.

    Exact in ``cos(phi)`` for even integer ``p``; ``n_theta`` only has to
    resolve the fields themselves.
    """
    n_theta = 2 * k_high + 1
    if math.isinf(p):
        return sp.SphereQuadrature(k_low + k_high + 1, n_theta)
    degree = math.ceil(p) * (k_low + k_high)
    n_mu = degree // 2 + 1
    if not (float(p).is_integer() and int(p) % 2 == 0):
        n_mu *= 2
    return sp.SphereQuadrature(n_mu, n_theta)


class SpherePair(Experiment):
    params = ("lambda", "mu")
    regressors = ("lambda", "mu")

    def __init__(self, regime: str, kind: str):
        self.regime = regime
        self.kind = kind
        self.id = f"sphere.{regime}"

    def admissible(self, cell):
        return cell["lambda"] <= cell["mu"]

    def validate(self, grid, p, options):
        super().validate(grid, p, options)
        if any(float(v) < 1 for n in self.params for v in grid.get(n, [])):
            raise ValueError(f"{self.id}: frequencies must be >= 1")

    def _field(self, k, quad):
        if self.kind == "zonal":
            return sp.zonal(k, quad)
        return sp.gaussian_beam(sp.BeamFrame.identity(), k, quad)

    def evaluate(self, cell, p, options):
        kl, km = math.floor(cell["lambda"]), math.floor(cell["mu"])
        quad = pair_quadrature(p, kl, km)
        prod = sp.product(self._field(kl, quad), self._field(km, quad))
        return sp.lp_norm_sphere(prod, p), {"k_lambda": kl, "k_mu": km}

    def predicted(self, p, options):
        return bilinear_G(2, max(p, 2.0))

    def csv_row(self, point, p, options):
        lam, mu = point.parameters["lambda"], point.parameters["mu"]
        growth = self.predicted(p, options).growth()
        return {
            "k": math.floor(mu),
            "lambda": lam,
            "mu": mu,
            "alpha_realized": "",
            "p": p,
            "norm": point.value,
            "predicted_exponent_lambda": growth[0],
            "predicted_exponent_mu": growth[1],
            "error": point.error or "",
        }

    def estimate(self, grid, p, options):
        top = max(grid.get("mu", [1]))
        quad = pair_quadrature(p, math.floor(top), math.floor(top))
        return {"grid_points": quad.size, "bytes": quad.estimated_bytes() * 4}


class SphereEnsemble(Experiment):
    """``||Z_lambda v||_p`` with ``v`` a beam superposition of degree ``k ~ lambda^(1/(1-2 alpha))``."""

    id = "sphere.mid_p"
    params = ("lambda",)
    regressors = ("lambda",)
    defaults = {"alpha": 0.25, "d": 3.0}

    def validate(self, grid, p, options):
        super().validate(grid, p, options)
        if not 0 <= float(options["alpha"]) < 0.5:
            raise ValueError("alpha must lie in [0, 1/2)")

    @staticmethod
    def degree(lam: float, alpha: float) -> int:
        return round(lam ** (1 / (1 - 2 * alpha)))

    @staticmethod
    def quadrature(p: float, kl: int, k: int) -> sp.SphereQuadrature:
        pe = 2 if math.isinf(p) else math.ceil(p)
        n_mu = pe * (kl + k) // 2 + 1
        if not (float(p).is_integer() and int(p) % 2 == 0) and not math.isinf(p):
            n_mu *= 2
        return sp.SphereQuadrature(n_mu, max(pe, 2) * k + 1)

    def evaluate(self, cell, p, options):
        alpha, d = float(options["alpha"]), float(options["d"])
        kl = math.floor(cell["lambda"])
        k = self.degree(cell["lambda"], alpha)
        quad = self.quadrature(p, kl, k)
        ens = sp.build_ensemble(sp.EnsembleSpec(k, alpha, d), quad)
        value = sp.lp_norm_sphere(sp.product(sp.zonal(kl, quad), ens.v), p)
        realized = (1 - math.log(kl) / math.log(k)) / 2 if k > 1 and kl > 1 else alpha
        return value, {
            "k": k,
            "alpha_realized": realized,
            "m": ens.spec.m,
            "eigen_min": float(ens.eigenvalues[0]),
            "eigen_max": float(ens.eigenvalues[-1]),
        }

    def predicted(self, p, options):
        return bilinear_G(2, max(p, 2.0))

    def fit(self, points, p, options):
        """Fit in ``lambda`` after dividing out the predicted power of the realized ``mu = k``."""
        mu_exp = self.predicted(p, options).growth()[1]
        adjusted = [
            SweepPoint(pt.parameters, pt.value / pt.extra["k"] ** mu_exp, pt.extra, pt.error) if pt.ok else pt
            for pt in points
        ]
        return power_law_fit(adjusted, self.regressors)

    def csv_row(self, point, p, options):
        growth = self.predicted(p, options).growth()
        k = point.extra.get("k", self.degree(point.parameters["lambda"], float(options["alpha"])))
        return {
            "k": k,
            "lambda": point.parameters["lambda"],
            "mu": k,
            "alpha_realized": point.extra.get("alpha_realized", ""),
            "p": p,
            "norm": point.value,
            "predicted_exponent_lambda": growth[0],
            "predicted_exponent_mu": growth[1],
            "error": point.error or "",
        }

    def estimate(self, grid, p, options):
        lam = max(grid.get("lambda", [1]))
        k = self.degree(lam, float(options["alpha"]))
        quad = self.quadrature(p, math.floor(lam), k)
        m = math.floor(k ** (0.5 - float(options["alpha"])))
        return {"grid_points": quad.size, "bytes": quad.estimated_bytes() * (m + 6)}


class SphereSingle(Experiment):
    """Growth of ``||Z_k||_p`` or ``||Q_k||_p`` in the degree ``k``."""

    params = ("k",)
    regressors = ("k",)
    sharpness = False

    def __init__(self, kind: str):
        self.kind = kind
        self.id = f"sphere.{kind}"

    def evaluate(self, cell, p, options):
        k = int(cell["k"])
        pe = 2 if math.isinf(p) else max(2, math.ceil(p))
        quad = sp.product_quadrature(pe * k)
        if self.kind == "zonal":
            fld = sp.zonal(k, quad, power=pe)
        else:
            fld = sp.gaussian_beam(sp.BeamFrame.identity(), k, quad, power=pe)
        return sp.lp_norm_sphere(fld, p), {}

    def predicted(self, p, options):
        s = 0.0 if math.isinf(p) else 1 / p
        if self.kind == "zonal":
            return ExponentPair(-(0.5 - 2 * s))
        return ExponentPair(-(0.5 - s) / 2)

    def csv_row(self, point, p, options):
        return {
            "k": int(point.parameters["k"]),
            "lambda": point.parameters["k"],
            "mu": "",
            "alpha_realized": "",
            "p": p,
            "norm": point.value,
            "predicted_exponent_lambda": -self.predicted(p, options).h_exp,
            "predicted_exponent_mu": "",
            "error": point.error or "",
        }

    def estimate(self, grid, p, options):
        k = int(max(grid.get("k", [1])))
        pe = 2 if math.isinf(p) else max(2, math.ceil(p))
        quad = sp.product_quadrature(pe * k)
        return {"grid_points": quad.size, "bytes": quad.estimated_bytes() * 3}


EXPERIMENTS: dict[str, Experiment] = {
    e.id: e
    for e in [
        FlatRegime("large_p"),
        FlatRegime("mid_p"),
        FlatRegime("small_p_2d"),
        SpherePair("large_p", "zonal"),
        SpherePair("small_p", "beam"),
        SphereEnsemble(),
        SphereSingle("zonal"),
        SphereSingle("beam"),
    ]
}


def get_experiment(name: str) -> Experiment:
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise ValueError(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}") from None
