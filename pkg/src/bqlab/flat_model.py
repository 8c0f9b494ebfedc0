"""Tube quasimodes of the flat Laplacian on a periodic box.

The box ``[-L, L)^n`` is sampled on ``N`` points per axis.  Frequencies live
on the dual lattice ``xi_j = h * (pi / L) * j`` with ``j`` in
``[-N/2, N/2)^n``; the frequency arrays are stored centred (index ``N/2`` is
``xi = 0``), position arrays start at ``x = -L``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft

POSITION = "position"
FREQUENCY = "frequency"

# 2**28 complex samples = 4 GiB; the box stays well under the sandbox memory
MAX_SAMPLES = 2**27


class ResolutionError(ValueError):
    """The requested scale or tube cannot be represented on the grid."""


@dataclass(frozen=True)
class GridSpec:
    n: int
    half_length: float = 2 * math.pi
    points_per_axis: int = 1024

    def __post_init__(self):
        N = self.points_per_axis
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n}")
        if N < 2 or N & (N - 1):
            raise ValueError(f"points_per_axis must be a power of two, got {N}")
        if self.half_length < math.pi:
            raise ValueError(f"half_length must be >= pi, got {self.half_length}")
        if N**self.n > MAX_SAMPLES:
            raise ValueError(f"{N}^{self.n} samples exceed the budget of {MAX_SAMPLES}")

    @property
    def spacing(self) -> float:
        return 2 * self.half_length / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.n

    @property
    def lattice_step(self) -> float:
        """Spacing of the integer-frequency lattice ``pi / L`` (before the ``h`` scaling)."""
        return math.pi / self.half_length

    def axis(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.points_per_axis)

    def freq_axis(self, h: float) -> np.ndarray:
        N = self.points_per_axis
        return h * self.lattice_step * np.arange(-N // 2, N // 2)

    def coords(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.axis()] * self.n), indexing="ij", sparse=True)

    def freq_coords(self, h: float) -> list[np.ndarray]:
        return np.meshgrid(*([self.freq_axis(h)] * self.n), indexing="ij", sparse=True)

    def max_frequency(self, h: float) -> float:
        """Largest ``|xi_1|`` on the lattice at scale ``h``."""
        return h * self.lattice_step * (self.points_per_axis // 2 - 1)

    def estimated_bytes(self) -> int:
        return 16 * self.points_per_axis**self.n


@dataclass(frozen=True, eq=False)
class GridField:
    spec: GridSpec
    samples: np.ndarray = field(repr=False)
    domain: str = POSITION
    h: float | None = None

    def __post_init__(self):
        if self.domain not in (POSITION, FREQUENCY):
            raise ValueError(f"unknown domain tag {self.domain!r}")
        if self.samples.shape != self.spec.shape:
            raise ValueError(f"samples have shape {self.samples.shape}, expected {self.spec.shape}")
        if self.domain == FREQUENCY and self.h is None:
            raise ValueError("frequency-domain fields must carry their scale h")
        self.samples.setflags(write=False)

    def cell_volume(self) -> float:
        if self.domain == POSITION:
            return self.spec.cell_volume
        return (self.h * self.spec.lattice_step) ** self.spec.n

    def l2_norm(self) -> float:
        return math.sqrt(float(np.vdot(self.samples, self.samples).real) * self.cell_volume())

    def normalized(self) -> "GridField":
        norm = self.l2_norm()
        if norm == 0:
            raise ValueError("cannot normalize the zero field")
        return GridField(self.spec, self.samples / norm, self.domain, self.h)


@dataclass(frozen=True)
class TubeSpec:
    h: float
    alpha: float
    direction: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0 < self.h < 1:
            raise ValueError(f"h must lie in (0, 1), got {self.h}")
        if not 0 <= self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2], got {self.alpha}")

    def unit_direction(self, n: int) -> np.ndarray:
        if self.direction is None:
            omega = np.zeros(n)
            omega[0] = 1.0
            return omega
        omega = np.asarray(self.direction, dtype=float)
        if omega.shape != (n,):
            raise ValueError(f"direction must have {n} components")
        return omega / np.linalg.norm(omega)

    def radial_cells(self, spec: GridSpec) -> float:
        """Lattice cells across the shell ``| |xi| - 1 | < h``."""
        return 2 * self.h / (self.h * spec.lattice_step)

    def angular_cells(self, spec: GridSpec) -> float:
        """Lattice cells across the cap ``|omega - omega_0| < h**alpha`` at radius one."""
        return 2 * self.h**self.alpha / (self.h * spec.lattice_step)


def _check_shell(spec: GridSpec, h: float) -> None:
    if spec.max_frequency(h) <= 1 + h:
        raise ResolutionError(
            f"unit shell at h={h:g} exceeds the lattice (max |xi| = {spec.max_frequency(h):.3g})"
        )


def _phase(spec: GridSpec) -> np.ndarray:
    # x_0 = -L contributes exp(i pi j) = (-1)^j per axis
    j = np.arange(-spec.points_per_axis // 2, spec.points_per_axis // 2)
    return np.where(j % 2 == 0, 1.0, -1.0)


def _axes_product(vec: np.ndarray, n: int) -> np.ndarray:
    out = vec
    for _ in range(n - 1):
        out = np.multiply.outer(out, vec)
    return out


def semiclassical_fourier(fld: GridField, h: float, direction: str = "forward") -> GridField:
    """Discrete ``F_h`` (``direction='forward'``) or its inverse.

    Normalised by ``(2 pi h)^{-n/2}`` times the cell volume so that the
    discrete L2 norms (cell volume ``dx^n`` in position, ``(h pi / L)^n`` in
    frequency) agree exactly.
    """
    spec = fld.spec
    n = spec.n
    _check_shell(spec, h)
    sign = _axes_product(_phase(spec), n)
    axes = tuple(range(n))
    if direction == "forward":
        if fld.domain != POSITION:
            raise ValueError("forward transform needs a position-domain field")
        scale = spec.cell_volume / (2 * math.pi * h) ** (n / 2)
        out = scipy.fft.fftshift(scipy.fft.fftn(fld.samples, axes=axes), axes=axes)
        return GridField(spec, out * (sign * scale), FREQUENCY, h)
    if direction == "inverse":
        if fld.domain != FREQUENCY:
            raise ValueError("inverse transform needs a frequency-domain field")
        if not math.isclose(fld.h, h, rel_tol=1e-12):
            raise ValueError(f"field lives at scale h={fld.h}, asked to invert at {h}")
        dxi = (h * spec.lattice_step) ** n
        scale = dxi * spec.points_per_axis**n / (2 * math.pi * h) ** (n / 2)
        data = scipy.fft.ifftshift(fld.samples * sign, axes=axes)
        return GridField(spec, scipy.fft.ifftn(data, axes=axes) * scale, POSITION)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def tube_mask(spec: GridSpec, tube: TubeSpec) -> np.ndarray:
    """Indicator of ``| |xi| - 1 | < h`` and ``| xi/|xi| - omega_0 | < h**alpha`` on the lattice."""
    xi = spec.freq_coords(tube.h)
    r = np.sqrt(sum(c * c for c in xi))
    omega0 = tube.unit_direction(spec.n)
    with np.errstate(invalid="ignore", divide="ignore"):
        # |w - w0|^2 = 2 - 2 <w, w0> for unit vectors
        cos = sum(c * w for c, w in zip(xi, omega0)) / r
        dist = np.sqrt(np.maximum(2 - 2 * cos, 0.0))
    return (np.abs(r - 1) < tube.h) & (dist < tube.h**tube.alpha)


def check_tube(spec: GridSpec, tube: TubeSpec) -> None:
    _check_shell(spec, tube.h)
    if tube.radial_cells(spec) < 4:
        raise ResolutionError(f"only {tube.radial_cells(spec):.2f} radial cells; need >= 4 (raise L)")
    if tube.angular_cells(spec) < 4:
        raise ResolutionError(f"only {tube.angular_cells(spec):.2f} angular cells; need >= 4")


def tube_spectrum(spec: GridSpec, tube: TubeSpec) -> GridField:
    check_tube(spec, tube)
    mask = tube_mask(spec, tube)
    if not mask.any():
        raise ResolutionError(f"tube {tube} has no lattice cells")
    return GridField(spec, mask.astype(complex), FREQUENCY, tube.h).normalized()


def build_tube(spec: GridSpec, tube: TubeSpec) -> GridField:
    """Position-domain tube ``T^h_alpha`` with unit discrete L2 norm."""
    return semiclassical_fourier(tube_spectrum(spec, tube), tube.h, "inverse").normalized()


def frequency_bump(spec: GridSpec, h: float, radius: float = 1.0) -> GridField:
    """Field whose ``F_h`` is the indicator of ``|xi| < radius``, independent of ``h``."""
    _check_shell(spec, h)
    xi = spec.freq_coords(h)
    mask = sum(c * c for c in xi) < radius**2
    spectrum = GridField(spec, mask.astype(complex), FREQUENCY, h).normalized()
    return semiclassical_fourier(spectrum, h, "inverse").normalized()


def quasimode_defect(fld: GridField, h: float) -> float:
    """``||(|xi|^2 - 1) F_h u|| / ||u||`` evaluated as an exact lattice multiplier."""
    if fld.domain != POSITION:
        raise ValueError("defect is defined for position-domain fields")
    norm = fld.l2_norm()
    if norm == 0:
        raise ValueError("defect of the zero field is undefined")
    spectrum = semiclassical_fourier(fld, h, "forward")
    xi = fld.spec.freq_coords(h)
    symbol = sum(c * c for c in xi) - 1.0
    return GridField(fld.spec, spectrum.samples * symbol, FREQUENCY, h).l2_norm() / norm


def lp_norm(fld: GridField, p: float) -> float:
    """Riemann-sum L^p norm; ``p = inf`` is the exact sample maximum."""
    if fld.domain != POSITION:
        raise ValueError("L^p norms are taken in the position domain")
    if not p >= 1:
        raise ValueError(f"need p >= 1, got {p}")
    mod = np.abs(fld.samples)
    if math.isinf(p):
        return float(mod.max())
    peak = float(mod.max())
    if peak == 0:
        return 0.0
    # scale by the peak so high powers cannot overflow
    total = float(np.sum((mod / peak) ** p)) * fld.spec.cell_volume
    return peak * total ** (1 / p)


def product_field(f: GridField, g: GridField) -> GridField:
    if f.spec != g.spec:
        raise ValueError("fields live on different grids")
    if f.domain != POSITION or g.domain != POSITION:
        raise ValueError("products are taken in the position domain")
    return GridField(f.spec, f.samples * g.samples, POSITION)


def box_region(spec: GridSpec, extents: tuple[float, ...]) -> np.ndarray:
    """Mask of nodes with ``|x_i| < extents[i]`` (the last extent repeats)."""
    coords = spec.coords()
    mask = np.ones(spec.shape, dtype=bool)
    for i, c in enumerate(coords):
        e = extents[min(i, len(extents) - 1)]
        mask = mask & (np.abs(c) < e)
    return mask


def tube_box(tube: TubeSpec, eps: float = 0.1) -> tuple[float, float]:
    """Extents of the region where ``T^h_alpha`` does not oscillate."""
    return eps * tube.h ** (1 - 2 * tube.alpha), eps * tube.h ** (1 - tube.alpha)


def amplitude_floor(fld: GridField, tube: TubeSpec, eps: float = 0.1) -> float:
    """``min |T|`` over the non-oscillation box divided by ``h^{-(n-1)(1-alpha)/2}``.

    The box always contains the origin node, so it is never empty.
    """
    n = fld.spec.n
    mask = box_region(fld.spec, tube_box(tube, eps))
    floor = float(np.abs(fld.samples[mask]).min())
    return floor / tube.h ** (-(n - 1) * (1 - tube.alpha) / 2)


def half_max_extents(fld: GridField) -> tuple[float, ...]:
    """Length of the run where ``|u| >= max/2`` along each axis through the argmax."""
    mod = np.abs(fld.samples)
    peak = np.unravel_index(int(np.argmax(mod)), mod.shape)
    half = mod[peak] / 2
    extents = []
    for axis in range(fld.spec.n):
        index = list(peak)
        index[axis] = slice(None)
        line = mod[tuple(index)] >= half
        c = peak[axis]
        lo = c
        while lo > 0 and line[lo - 1]:
            lo -= 1
        hi = c
        while hi < len(line) - 1 and line[hi + 1]:
            hi += 1
        extents.append((hi - lo + 1) * fld.spec.spacing)
    return tuple(extents)


REGIMES = ("large_p", "mid_p", "small_p_2d")


def mid_alpha(h: float, sigma: float) -> float:
    """``alpha`` solving ``sigma^(1 - 2 alpha) = h``."""
    if sigma == h:
        return 0.0
    return (1 - math.log(h) / math.log(sigma)) / 2


def regime_alphas(regime: str, h: float, sigma: float) -> tuple[float, float]:
    """Cap exponents ``(alpha for h, alpha for sigma)`` of a saturating pair."""
    if sigma > h:
        raise ValueError(f"need sigma <= h, got sigma={sigma} > h={h}")
    if regime == "large_p":
        return 0.0, 0.0
    if regime == "mid_p":
        a = mid_alpha(h, sigma)
        if not 0 <= a < 0.5:
            raise ResolutionError(f"alpha_h = {a} outside [0, 1/2)")
        return 0.0, a
    if regime == "small_p_2d":
        return 0.5, 0.5
    raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")


def regime_tubes(regime: str, h: float, sigma: float, spec: GridSpec) -> tuple[GridField, GridField]:
    """The pair ``(T^h, T^sigma)`` used to saturate the bound in ``regime``."""
    if regime == "small_p_2d" and spec.n != 2:
        raise ValueError("the small_p_2d regime is two-dimensional")
    a_h, a_s = regime_alphas(regime, h, sigma)
    tube_h, tube_s = TubeSpec(h, a_h), TubeSpec(sigma, a_s)
    check_tube(spec, tube_h)
    check_tube(spec, tube_s)
    return build_tube(spec, tube_h), build_tube(spec, tube_s)


_MAGIC = b"BQL1"
_HEADER = struct.Struct("<4sIIdB")
_DOMAIN_TAGS = {POSITION: 0, FREQUENCY: 1}


def dump_field(fld: GridField, path) -> None:
    """Write ``fld`` as a little-endian ``BQL1`` record (row-major complex pairs)."""
    spec = fld.spec
    header = _HEADER.pack(_MAGIC, spec.n, spec.points_per_axis, spec.half_length, _DOMAIN_TAGS[fld.domain])
    body = np.ascontiguousarray(fld.samples, dtype="<c16").tobytes()
    Path(path).write_bytes(header + body)


def load_field(path, h: float | None = None) -> GridField:
    raw = Path(path).read_bytes()
    magic, n, N, L, tag = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a BQL1 field dump")
    domain = {v: k for k, v in _DOMAIN_TAGS.items()}[tag]
    spec = GridSpec(n, L, N)
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    if data.size != N**n:
        raise ValueError(f"{path}: expected {N**n} samples, found {data.size}")
    return GridField(spec, data.reshape(spec.shape).astype(complex), domain, h)
