"""Tensor quadrature on S^2: Gauss-Legendre in cos(phi), trapezoid in theta."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import roots_legendre


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    n_mu: int
    n_theta: int
    mu: np.ndarray = field(init=False, repr=False)
    mu_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_mu < 1 or self.n_theta < 1:
            raise ValueError("quadrature sizes must be positive")
        # ascending in cos(phi); reverse so phi increases from the north pole
        x, w = roots_legendre(self.n_mu)
        object.__setattr__(self, "mu", x[::-1].copy())
        object.__setattr__(self, "mu_weights", w[::-1].copy())

    def __eq__(self, other):
        return isinstance(other, SphereQuadrature) and (self.n_mu, self.n_theta) == (other.n_mu, other.n_theta)

    def __hash__(self):
        return hash((self.n_mu, self.n_theta))

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_mu, self.n_theta

    @property
    def size(self) -> int:
        return self.n_mu * self.n_theta

    @cached_property
    def phi(self) -> np.ndarray:
        return np.arccos(self.mu)

    @cached_property
    def theta(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.n_theta) / self.n_theta

    @cached_property
    def weights(self) -> np.ndarray:
        """Node weights on the ``(n_mu, n_theta)`` grid; they sum to ``4 pi``."""
        return np.outer(self.mu_weights, np.full(self.n_theta, 2 * math.pi / self.n_theta))

    def points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cartesian coordinates ``(x1, x2, x3)`` of the nodes, each of grid shape."""
        s = np.sqrt(np.maximum(1 - self.mu**2, 0.0))[:, None]
        return s * np.cos(self.theta)[None, :], s * np.sin(self.theta)[None, :], np.repeat(self.mu[:, None], self.n_theta, axis=1)

    def exact_mu_degree(self) -> int:
        return 2 * self.n_mu - 1

    def exact_theta_degree(self) -> int:
        """Largest trigonometric frequency integrated exactly by the trapezoid rule."""
        return self.n_theta - 1

    def integrates_degree(self, degree: int) -> bool:
        """Whether every polynomial of total degree ``degree`` in ``x`` is integrated exactly."""
        return degree <= self.exact_mu_degree() and degree <= self.exact_theta_degree()

    def integrate(self, values: np.ndarray) -> complex:
        return np.sum(values * self.weights)

    def estimated_bytes(self) -> int:
        return 16 * self.size


def sized_for(k_max: int, p_max: float) -> SphereQuadrature:
    """Generous quadrature for ``|f|^p`` where ``f`` has polynomial degree ``k_max``.

    For a product ``u v`` pass the summed degree.  Exact for even integer
    ``p``; odd or fractional ``p`` get both sizes doubled (convergent, not
    exact).
    """
    if math.isinf(p_max):
        p_max = 2
    if float(p_max).is_integer() and int(p_max) % 2 == 0:
        n_mu = k_max + math.ceil(p_max * k_max / 2) + 2
        n_theta = int(2 * p_max * k_max + 2)
        return SphereQuadrature(n_mu, n_theta)
    q = sized_for(k_max, 2 * math.ceil(p_max / 2))
    return SphereQuadrature(2 * q.n_mu, 2 * q.n_theta)


def product_quadrature(degree: int) -> SphereQuadrature:
    """Smallest tensor rule integrating polynomials of total degree ``degree`` exactly."""
    return SphereQuadrature(degree // 2 + 1, degree + 1)
