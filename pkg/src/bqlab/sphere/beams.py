"""Gaussian beams on S^2 and superpositions of well-separated beams.

A beam of degree ``k`` is ``c_k (<x, a> + i <x, b>)^k`` for an orthonormal
right-handed frame ``(a, b, pole)``.  It concentrates in a ``k^{-1/2}``
neighbourhood of the great circle orthogonal to ``pole``; the choice of
``a`` within that circle fixes the phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .harmonics import SphericalField, require_degree
from .jacobi import hermitian_eigenvalues
from .quadrature import SphereQuadrature

GRAM_RANGE = (0.5, 2.0)


class GramCheckError(RuntimeError):
    """Beam Gram eigenvalues left the almost-orthogonality range."""


@dataclass(frozen=True)
class BeamFrame:
    pole: tuple[float, float, float]
    a: tuple[float, float, float]
    b: tuple[float, float, float]

    def __post_init__(self):
        p, a, b = (np.asarray(v, float) for v in (self.pole, self.a, self.b))
        basis = np.array([a, b, p])
        if not np.allclose(basis @ basis.T, np.eye(3), atol=1e-12):
            raise ValueError("frame vectors are not orthonormal")
        if not np.allclose(np.cross(a, b), p, atol=1e-12):
            raise ValueError("frame is not right-handed (a x b != pole)")

    @classmethod
    def identity(cls) -> "BeamFrame":
        return cls((0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0))

    @classmethod
    def from_pole(cls, pole, a) -> "BeamFrame":
        p, a = np.asarray(pole, float), np.asarray(a, float)
        b = np.cross(p, a)
        return cls(tuple(p), tuple(a), tuple(b))


def log_beam_constant(k: int) -> float:
    """``log c_k`` with ``c_k^2 = (2k+1)! / (4 pi 4^k (k!)^2)``."""
    return 0.5 * (gammaln(2 * k + 2) - math.log(4 * math.pi) - 2 * k * math.log(2) - 2 * gammaln(k + 1))


def beam_evaluator(frame: BeamFrame, k: int):
    a, b = np.asarray(frame.a), np.asarray(frame.b)
    log_c = log_beam_constant(k)

    def evaluate(x1, x2, x3):
        re = a[0] * x1 + a[1] * x2 + a[2] * x3
        im = b[0] * x1 + b[1] * x2 + b[2] * x3
        with np.errstate(divide="ignore"):
            log_mod = log_c + k * np.log(np.hypot(re, im))
        return np.exp(log_mod) * np.exp(1j * k * np.arctan2(im, re))

    return evaluate


def gaussian_beam(frame: BeamFrame, k: int, quad: SphereQuadrature, power: int = 2) -> SphericalField:
    require_degree(quad, power * k)
    ev = beam_evaluator(frame, k)
    return SphericalField(quad, ev(*quad.points()), k, ev)


@dataclass(frozen=True)
class EnsembleSpec:
    k: int
    alpha: float
    d: float

    def __post_init__(self):
        if not 0 <= self.alpha < 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2), got {self.alpha}")
        if self.d <= 0:
            raise ValueError(f"separation constant must be positive, got {self.d}")
        if self.m < 1:
            raise ValueError(f"k={self.k} gives no beams")
        if self.m * self.spacing >= math.pi / 2:
            raise ValueError(
                f"{self.m} poles spaced {self.spacing:.4g} overflow a quarter of the equator"
            )

    @property
    def m(self) -> int:
        return math.floor(self.k ** (0.5 - self.alpha))

    @property
    def spacing(self) -> float:
        """Geodesic distance between consecutive poles, ``d k^{-1/2}``."""
        return self.d / math.sqrt(self.k)

    @property
    def span(self) -> float:
        return (self.m - 1) * self.spacing

    def halved(self) -> "EnsembleSpec":
        return EnsembleSpec(self.k, self.alpha, self.d / 2)


NORTH = (0.0, 0.0, 1.0)


def place_poles(spec: EnsembleSpec) -> list[BeamFrame]:
    """Poles on the equator around ``(0, 1, 0)``, every beam real and positive at the north pole."""
    frames = []
    for j in range(spec.m):
        theta = math.pi / 2 + (j - (spec.m - 1) / 2) * spec.spacing
        pole = np.array([math.cos(theta), math.sin(theta), 0.0])
        a = np.array(NORTH)
        frames.append(BeamFrame(tuple(pole), NORTH, tuple(np.cross(pole, a))))
    return frames


def gram_matrix(beams: list[SphericalField], quad: SphereQuadrature | None = None) -> np.ndarray:
    """``G[i, j] = <q_i, q_j>`` by quadrature."""
    if not beams:
        return np.zeros((0, 0), dtype=complex)
    quad = quad or beams[0].quadrature
    for q in beams:
        if q.quadrature != quad:
            raise ValueError("beams live on different quadratures")
        require_degree(quad, 2 * q.degree_hint)
    stack = np.stack([q.samples.ravel() for q in beams])
    weighted = stack * quad.weights.ravel()
    g = weighted @ stack.conj().T
    return (g + g.conj().T) / 2


@dataclass(frozen=True, eq=False)
class Ensemble:
    spec: EnsembleSpec
    frames: list[BeamFrame]
    beams: list[SphericalField]
    gram: np.ndarray
    eigenvalues: np.ndarray
    w: SphericalField
    v: SphericalField

    @property
    def w_norm_sq(self) -> float:
        return self.w.l2_norm() ** 2

    def gram_report(self) -> dict:
        return {
            "k": self.spec.k,
            "alpha": self.spec.alpha,
            "d": self.spec.d,
            "m": self.spec.m,
            "eigen_min": float(self.eigenvalues[0]),
            "eigen_max": float(self.eigenvalues[-1]),
            "pass": gram_in_range(self.eigenvalues),
        }


def gram_in_range(eigenvalues) -> bool:
    lo, hi = GRAM_RANGE
    return bool(eigenvalues[0] >= lo and eigenvalues[-1] <= hi)


def ensemble_beams(spec: EnsembleSpec, quad: SphereQuadrature, power: int = 2):
    frames = place_poles(spec)
    return frames, [gaussian_beam(f, spec.k, quad, power) for f in frames]


def ensemble_gram(spec: EnsembleSpec, quad: SphereQuadrature) -> np.ndarray:
    """Eigenvalues of the ensemble's Gram matrix."""
    _, beams = ensemble_beams(spec, quad)
    return hermitian_eigenvalues(gram_matrix(beams, quad))


def build_ensemble(spec: EnsembleSpec, quad: SphereQuadrature, power: int = 2, check: bool = True) -> Ensemble:
    """Normalised superposition ``v = w / ||w||`` with ``w = m^{-1/2} sum q_j``."""
    frames, beams = ensemble_beams(spec, quad, power)
    gram = gram_matrix(beams, quad)
    eig = hermitian_eigenvalues(gram)
    if check and not gram_in_range(eig):
        raise GramCheckError(
            f"Gram eigenvalues [{eig[0]:.4f}, {eig[-1]:.4f}] outside {GRAM_RANGE} "
            f"for k={spec.k}, alpha={spec.alpha}, d={spec.d}"
        )
    scale = 1 / math.sqrt(spec.m)
    samples = sum(q.samples for q in beams) * scale
    evs = [q.evaluator for q in beams]
    w = SphericalField(quad, samples, spec.k, lambda x1, x2, x3: scale * sum(e(x1, x2, x3) for e in evs))
    return Ensemble(spec, frames, beams, gram, eig, w, w.normalized())


def superpose_ensemble(spec: EnsembleSpec, quad: SphereQuadrature) -> SphericalField:
    return build_ensemble(spec, quad).v


def phase_coherence_margin(ens: Ensemble, region) -> float:
    """Smallest ``Re(e^{-i arg q_1} sum q_j) / sum |q_j|`` over the region's nodes.

    The almost-in-phase argument needs this to stay at least ``1/2``.
    """
    mask = np.asarray(region(*ens.v.quadrature.points()), dtype=bool)
    if not mask.any():
        raise ValueError("region contains no nodes")
    q = np.stack([b.samples[mask] for b in ens.beams])
    ref = np.exp(-1j * np.angle(q[0]))
    total = ens.v.samples[mask] * ens.w.l2_norm() * math.sqrt(ens.spec.m)
    return float(np.min(np.real(ref * total) / np.sum(np.abs(q), axis=0)))


def calibrate_separation(
    cases, candidates=(2, 3, 4, 6, 8), quad_for=None
) -> float:
    """Smallest candidate ``d`` keeping every ``(k, alpha)`` Gram spectrum in range."""
    for d in candidates:
        ok = True
        for k, alpha in cases:
            try:
                spec = EnsembleSpec(k, alpha, d)
            except ValueError:
                ok = False
                break
            quad = quad_for(k) if quad_for else SphereQuadrature(k + 1, 2 * k + 1)
            if not gram_in_range(ensemble_gram(spec, quad)):
                ok = False
                break
        if ok:
            return float(d)
    raise GramCheckError(f"no candidate separation in {candidates} works for {list(cases)}")


def beam_sup(k: int) -> float:
    """Exact ``||Q_k||_inf = c_k``, attained on the beam's great circle."""
    return math.exp(log_beam_constant(k))

