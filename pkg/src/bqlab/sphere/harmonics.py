"""Spherical harmonics on S^2 sampled on a tensor quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .quadrature import SphereQuadrature

Evaluator = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

_RESCALE = 1e150


class QuadratureError(ValueError):
    """The quadrature cannot resolve the requested field or region."""


def normalized_legendre(k: int, m: int, x) -> np.ndarray:
    """Associated Legendre function with unit L2 norm on [-1, 1].

    ``Y_m^k = N_k^m(cos phi) e^{i m theta} / sqrt(2 pi)``, Condon-Shortley
    phase included.  The recurrence runs upward in degree on values rescaled
    by a per-point log factor, so nothing over- or underflows before the
    final exponentiation.
    """
    if abs(m) > k:
        raise ValueError(f"need |m| <= k, got k={k}, m={m}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1):
        raise ValueError("arguments must lie in [-1, 1]")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    am = abs(m)

    log_scale = np.full(x.shape, 0.5 * math.log((2 * am + 1) / 2) + 0.5 * gammaln(2 * am + 1)
                        - am * math.log(2) - gammaln(am + 1))
    if am:
        with np.errstate(divide="ignore"):
            log_scale = log_scale + 0.5 * am * np.log1p(-x * x)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for l in range(am + 1, k + 1):
        a = math.sqrt((4 * l * l - 1) / (l * l - am * am))
        b = math.sqrt(((l - 1) ** 2 - am * am) / (4 * (l - 1) ** 2 - 1))
        prev, cur = cur, a * (x * cur - b * prev)
        big = np.abs(cur) > _RESCALE
        if big.any():
            cur = np.where(big, cur / _RESCALE, cur)
            prev = np.where(big, prev / _RESCALE, prev)
            log_scale = log_scale + np.where(big, math.log(_RESCALE), 0.0)

    with np.errstate(divide="ignore"):
        out = np.sign(cur) * np.exp(log_scale + np.log(np.abs(cur)))
    if am % 2:
        out = -out
    if m < 0 and am % 2:
        out = -out
    return out[0] if scalar else out


@dataclass(frozen=True, eq=False)
class SphericalField:
    quadrature: SphereQuadrature
    samples: np.ndarray = field(repr=False)
    degree_hint: int = 0
    evaluator: Evaluator | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.samples.shape != self.quadrature.shape:
            raise ValueError(f"samples have shape {self.samples.shape}, expected {self.quadrature.shape}")
        self.samples.setflags(write=False)

    def inner(self, other: "SphericalField") -> complex:
        """``<self, other> = integral of self * conj(other)``."""
        if other.quadrature != self.quadrature:
            raise QuadratureError("fields live on different quadratures")
        return complex(np.sum(self.samples * np.conj(other.samples) * self.quadrature.weights))

    def l2_norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.samples) ** 2 * self.quadrature.weights)))

    def scaled(self, factor: complex) -> "SphericalField":
        ev = self.evaluator
        scaled_ev = None if ev is None else (lambda x1, x2, x3: factor * ev(x1, x2, x3))
        return SphericalField(self.quadrature, self.samples * factor, self.degree_hint, scaled_ev)

    def normalized(self) -> "SphericalField":
        return self.scaled(1 / self.l2_norm())

    def at(self, x1, x2, x3) -> np.ndarray:
        if self.evaluator is None:
            raise ValueError("field has no closed-form evaluator")
        return self.evaluator(np.asarray(x1, float), np.asarray(x2, float), np.asarray(x3, float))

    def at_angles(self, phi, theta) -> np.ndarray:
        phi, theta = np.broadcast_arrays(np.asarray(phi, float), np.asarray(theta, float))
        s = np.sin(phi)
        return self.at(s * np.cos(theta), s * np.sin(theta), np.cos(phi))


def product(u: SphericalField, v: SphericalField) -> SphericalField:
    if u.quadrature != v.quadrature:
        raise QuadratureError("fields live on different quadratures")
    ev = None
    if u.evaluator is not None and v.evaluator is not None:
        eu, evv = u.evaluator, v.evaluator
        ev = lambda x1, x2, x3: eu(x1, x2, x3) * evv(x1, x2, x3)  # noqa: E731
    return SphericalField(u.quadrature, u.samples * v.samples, u.degree_hint + v.degree_hint, ev)


def require_degree(quad: SphereQuadrature, degree: int) -> None:
    if not quad.integrates_degree(degree):
        raise QuadratureError(
            f"quadrature ({quad.n_mu} x {quad.n_theta}) is not exact for degree {degree}; "
            f"need n_mu >= {degree // 2 + 1} and n_theta >= {degree + 1}"
        )


def _angles(x1, x2, x3):
    r = np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    return np.clip(x3 / r, -1.0, 1.0), np.arctan2(x2, x1)


def harmonic_evaluator(k: int, m: int) -> Evaluator:
    def evaluate(x1, x2, x3):
        mu, theta = _angles(x1, x2, x3)
        return normalized_legendre(k, m, mu) * np.exp(1j * m * theta) / math.sqrt(2 * math.pi)

    return evaluate


def eval_harmonic(k: int, m: int, quad: SphereQuadrature, power: int = 2) -> SphericalField:
    """Samples of the orthonormal harmonic ``Y_m^k``.

    ``power`` declares how the field will be used: the quadrature must be
    exact for polynomials of degree ``power * k`` (2 covers norms and inner
    products with any other harmonic of degree ``<= k``).
    """
    if k < 0 or abs(m) > k:
        raise ValueError(f"invalid harmonic index k={k}, m={m}")
    require_degree(quad, power * k)
    legendre = normalized_legendre(k, m, quad.mu)
    samples = np.outer(legendre, np.exp(1j * m * quad.theta)) / math.sqrt(2 * math.pi)
    return SphericalField(quad, samples, k, harmonic_evaluator(k, m))


def zonal(k: int, quad: SphereQuadrature, power: int = 2) -> SphericalField:
    return eval_harmonic(k, 0, quad, power)


def lp_norm_sphere(fld: SphericalField, p: float, refine: bool = True) -> float:
    """Quadrature L^p norm.

    For ``p = inf`` the grid maximum is a lower bound on the supremum; when
    the field has an evaluator it is improved by repeated local 2x
    refinement around the best point.
    """
    if not p >= 1:
        raise ValueError(f"need p >= 1, got {p}")
    mod = np.abs(fld.samples)
    peak = float(mod.max())
    if math.isinf(p):
        if refine and fld.evaluator is not None:
            return refine_sup(fld)
        return peak
    if peak == 0:
        return 0.0
    total = float(np.sum((mod / peak) ** p * fld.quadrature.weights))
    return peak * total ** (1 / p)


def refine_sup(fld: SphericalField, levels: int = 40, points: int = 5) -> float:
    """Best of local refinements seeded at the grid maximum and at both poles.

    Gauss-Legendre rings never touch the poles, where zonal-type fields peak.
    """
    quad = fld.quadrature
    mod = np.abs(fld.samples)
    i, j = np.unravel_index(int(np.argmax(mod)), mod.shape)
    dphi = float(np.max(np.abs(np.diff(quad.phi)))) if quad.n_mu > 1 else math.pi
    dphi = max(dphi, float(quad.phi[0]), math.pi - float(quad.phi[-1]))
    dtheta = 2 * math.pi / quad.n_theta
    seeds = [(float(quad.phi[i]), float(quad.theta[j])), (0.0, 0.0), (math.pi, 0.0)]
    return max(_refine_from(fld, phi0, theta0, dphi, dtheta, levels, points) for phi0, theta0 in seeds)


def _refine_from(fld, phi0, theta0, dphi, dtheta, levels, points) -> float:
    best = float(np.abs(fld.at_angles(np.array([phi0]), np.array([theta0])))[0])
    for _ in range(levels):
        phis = np.linspace(max(phi0 - dphi, 0.0), min(phi0 + dphi, math.pi), points)
        thetas = np.linspace(theta0 - dtheta, theta0 + dtheta, points)
        P, T = np.meshgrid(phis, thetas, indexing="ij")
        vals = np.abs(fld.at_angles(P, T))
        a, b = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[a, b] > best:
            best = float(vals[a, b])
            phi0, theta0 = float(P[a, b]), float(T[a, b])
        dphi /= 2
        dtheta /= 2
    return best


Region = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

MIN_REGION_NODES = 8


def region_floor(fld: SphericalField, region: Region) -> tuple[float, float]:
    """Minimum of ``|field|`` over the nodes inside ``region`` and the region's weight."""
    mask = np.asarray(region(*fld.quadrature.points()), dtype=bool)
    count = int(mask.sum())
    if count < MIN_REGION_NODES:
        raise QuadratureError(f"region holds {count} nodes; refine the quadrature (need {MIN_REGION_NODES})")
    return float(np.abs(fld.samples[mask]).min()), float(fld.quadrature.weights[mask].sum())


def polar_cap(radius: float, south: bool = False) -> Region:
    """Geodesic cap of angular ``radius`` around a pole."""

    def inside(x1, x2, x3):
        return np.arccos(np.clip(-x3 if south else x3, -1, 1)) < radius

    return inside


def equator_slab(half_width: float) -> Region:
    def inside(x1, x2, x3):
        return np.abs(np.arccos(np.clip(x3, -1, 1)) - math.pi / 2) < half_width

    return inside


def ensemble_region(k: int, alpha: float, eps: float) -> Region:
    """``|x1| < eps k^-(1-2 alpha)`` and ``|x2| < eps k^-(1-alpha)``."""

    def inside(x1, x2, x3):
        return (np.abs(x1) < eps * k ** -(1 - 2 * alpha)) & (np.abs(x2) < eps * k ** -(1 - alpha))

    return inside


def surface_laplacian(fld: SphericalField, l_max: int) -> SphericalField:
    """Apply the Laplace-Beltrami operator to a band-limited field.

    Spectral differentiation in ``theta`` (FFT) combined with a quadrature
    projection onto ``N_l^m(cos phi)`` for every ``|m| <= l <= l_max``.
    """
    quad = fld.quadrature
    require_degree(quad, 2 * l_max)
    coeffs = np.fft.fft(fld.samples, axis=1) / quad.n_theta
    freqs = np.fft.fftfreq(quad.n_theta, 1 / quad.n_theta).astype(int)
    out = np.zeros_like(coeffs)
    for col, m in enumerate(freqs):
        if abs(m) > l_max:
            continue
        profile = coeffs[:, col]
        for l in range(abs(m), l_max + 1):
            basis = normalized_legendre(l, m, quad.mu)
            c = np.sum(profile * basis * quad.mu_weights)
            out[:, col] += -l * (l + 1) * c * basis
    samples = np.fft.ifft(out * quad.n_theta, axis=1)
    return SphericalField(quad, samples, fld.degree_hint)
