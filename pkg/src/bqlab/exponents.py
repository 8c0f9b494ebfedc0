"""Piecewise exponent laws for products of two quasimodes.

Every bound is modelled as ``h**h_exp * sigma**sigma_exp * |log h|**log_exp``
with ``0 < sigma <= h < 1`` (``h = 1/lambda``, ``sigma = 1/mu``).  All
branches are affine in ``1/p``, so the Lebesgue index is carried through its
reciprocal and ``p = inf`` is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

INF = math.inf


@dataclass(frozen=True)
class ExponentPair:
    h_exp: float
    sigma_exp: float = 0.0
    log_exp: float = 0.0

    @property
    def total(self) -> float:
        """Exponent of ``h`` once ``sigma`` is set equal to ``h``."""
        return self.h_exp + self.sigma_exp

    def growth(self) -> tuple[float, float]:
        """The same law written in frequencies, as ``(lambda_exp, mu_exp)``."""
        return -self.h_exp, -self.sigma_exp

    def label(self) -> str:
        text = f"h^{self.h_exp:+.4g} sigma^{self.sigma_exp:+.4g}"
        if self.log_exp:
            text += f" |log h|^{self.log_exp:g}"
        return text


@dataclass(frozen=True)
class ProblemIndex:
    n: int
    p: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")
        if math.isnan(self.p) or self.p < 2:
            raise ValueError(f"Lebesgue index must satisfy p >= 2, got {self.p}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", float(self.p))

    @property
    def inv_p(self) -> float:
        return 0.0 if math.isinf(self.p) else 1.0 / self.p


def _index(n, p=None) -> ProblemIndex:
    if isinstance(n, ProblemIndex):
        return n
    return ProblemIndex(n, p)


def parse_p(text) -> float:
    """Accept ``inf``/``infinity``/``oo`` as well as plain numbers."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower()
    if s in ("inf", "infinity", "oo", "∞"):
        return INF
    return float(s)


def format_p(p: float) -> str:
    if math.isinf(p):
        return "inf"
    return f"{p:g}"


def sogge_critical(n: int) -> float:
    """The index ``2(n+1)/(n-1)`` where the single-function law changes branch."""
    if n < 2:
        raise ValueError(f"dimension must be >= 2, got {n}")
    return 2.0 * (n + 1) / (n - 1)


def breakpoints(n: int) -> list[float]:
    if int(n) != n or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n}")
    if n == 2:
        return [3.0, 6.0]
    return [sogge_critical(n)]


def _delta_branches(n: int, s: float) -> tuple[float, float]:
    return (n - 1) / 4 - (n - 1) * s / 2, (n - 1) / 2 - n * s


def sogge_delta(n, p=None) -> float:
    """Growth exponent in ``lambda`` of ``||u||_p / ||u||_2`` for one eigenfunction."""
    idx = _index(n, p)
    low, high = _delta_branches(idx.n, idx.inv_p)
    return low if idx.p <= sogge_critical(idx.n) else high


def _g_branches(n: int, s: float) -> list[ExponentPair]:
    # ordered by increasing p; consecutive entries meet at breakpoints(n)
    if n == 2:
        return [
            ExponentPair(-0.25, s / 2 - 0.25),
            ExponentPair(1.5 * s - 0.75, s / 2 - 0.25),
            ExponentPair(-0.5, 2 * s - 0.5),
        ]
    return [
        ExponentPair(-3 * (n - 1) / 4 + (n + 1) * s / 2, -(n - 1) / 4 + (n - 1) * s / 2),
        ExponentPair(-(n - 1) / 2, -(n - 1) / 2 + n * s),
    ]


def _branch_id(n: int, p: float) -> int:
    for i, bp in enumerate(breakpoints(n)):
        if p <= bp:
            return i
    return len(breakpoints(n))


def branch_id(n, p=None) -> int:
    """Index of the bilinear branch used at ``(n, p)`` (0 = smallest p range)."""
    idx = _index(n, p)
    return _branch_id(idx.n, idx.p)


def bilinear_G(n, p=None) -> ExponentPair:
    """Sharp exponents for ``||u v||_p`` with ``u`` at scale ``h`` and ``v`` at ``sigma``."""
    idx = _index(n, p)
    if idx.n == 3 and idx.p == 2:
        return ExponentPair(-0.5, 0.0, 0.5)
    return _g_branches(idx.n, idx.inv_p)[_branch_id(idx.n, idx.p)]


def bilinear_G_branch(n: int, p: float, branch: int) -> ExponentPair:
    """Evaluate one branch formula at ``p`` regardless of its validity range."""
    idx = _index(n, p)
    return _g_branches(idx.n, idx.inv_p)[branch]


def same_scale_F(n, p=None) -> ExponentPair:
    """Exponent of the product bound when both quasimodes live at the same scale."""
    idx = _index(n, p)
    s = idx.inv_p
    if idx.n == 3 and idx.p == 2:
        return ExponentPair(-0.5, 0.0, 0.5)
    if idx.n == 2:
        return ExponentPair(-0.5 + s / 2 if idx.p <= 3 else -1 + 2 * s)
    return ExponentPair(-idx.n + 1 + idx.n * s)


def _check_scales(h: float, sigma: float) -> None:
    if not (h > 0 and sigma > 0):
        raise ValueError(f"scales must be positive, got h={h}, sigma={sigma}")
    if h >= 1:
        raise ValueError(f"h must be < 1, got {h}")
    if sigma > h:
        raise ValueError(f"need sigma <= h, got sigma={sigma} > h={h}")


def eval_bound(pair: ExponentPair, h: float, sigma: float) -> float:
    _check_scales(h, sigma)
    value = h ** pair.h_exp * sigma ** pair.sigma_exp
    if pair.log_exp:
        value *= abs(math.log(h)) ** pair.log_exp
    return value


HOLDER_GRID_SIZE = 512


def holder_splits(n: int, p: float) -> np.ndarray:
    """Candidate values of ``1/p1`` in ``[0, 1/p]``; the partner is ``1/p - 1/p1``."""
    s = 0.0 if math.isinf(p) else 1.0 / p
    if s == 0.0:
        return np.zeros(1)
    grid = np.geomspace(s * 1e-6, s, HOLDER_GRID_SIZE)
    canonical = [0.0, s, s / 2]
    kinks = [1.0 / bp for bp in breakpoints(n) if 0 < 1.0 / bp < s]
    kinks += [s - k for k in kinks]
    return np.unique(np.concatenate([grid, canonical, kinks]))


def holder_exponents(n, p=None) -> list[tuple[float, float, float, float]]:
    """All Hölder splits as ``(p1, p2, delta(n, p1), delta(n, p2))``."""
    idx = _index(n, p)
    return list(_holder_rows(idx.n, idx.p))


@lru_cache(maxsize=256)
def _holder_rows(n: int, p: float) -> tuple:
    s = 0.0 if math.isinf(p) else 1.0 / p
    rows = []
    for s1 in holder_splits(n, p):
        s2 = max(s - s1, 0.0)
        p1 = INF if s1 == 0 else 1 / s1
        p2 = INF if s2 == 0 else 1 / s2
        d1, d2 = sogge_delta(n, p1), sogge_delta(n, p2)
        rows.append((p1, p2, d1, d2))
        rows.append((p2, p1, d2, d1))
    return tuple(rows)


@lru_cache(maxsize=256)
def _holder_deltas(n: int, p: float) -> np.ndarray:
    table = np.array([(d1, d2) for _, _, d1, d2 in _holder_rows(n, p)])
    table.setflags(write=False)
    return table


def holder_baseline(n, p, h: float, sigma: float) -> float:
    """Best bound from Hölder's inequality plus the single-function law.

    ``p1`` goes to the factor at scale ``h`` and ``p2`` to the one at
    ``sigma``; both assignments of every split are tried.
    """
    idx = _index(n, p)
    _check_scales(h, sigma)
    d = _holder_deltas(idx.n, idx.p)
    return math.exp(float(np.min(-d[:, 0] * math.log(h) - d[:, 1] * math.log(sigma))))


def holder_best_split(n, p, h: float, sigma: float) -> tuple[float, float]:
    idx = _index(n, p)
    _check_scales(h, sigma)
    lh, ls = math.log(h), math.log(sigma)
    p1, p2, _, _ = min(_holder_rows(idx.n, idx.p), key=lambda r: -r[2] * lh - r[3] * ls)
    return p1, p2


def exponent_row(n: int, p: float) -> dict:
    """Everything known about ``(n, p)`` as a flat record (used by the CLI table)."""
    idx = ProblemIndex(n, p)
    g = bilinear_G(idx)
    f = same_scale_F(idx)
    # Hölder splits (2p, 2p) and (inf, p), the latter giving h^{-delta(n,inf)} sigma^{-delta(n,p)}
    return {
        "n": idx.n,
        "p": format_p(idx.p),
        "branch": branch_id(idx),
        "delta": sogge_delta(idx),
        "G_h": g.h_exp,
        "G_sigma": g.sigma_exp,
        "G_log": g.log_exp,
        "F_h": f.h_exp,
        "F_log": f.log_exp,
        "holder_sym": -sogge_delta(idx.n, 2 * idx.p),
        "holder_sup_h": -sogge_delta(idx.n, INF),
        "holder_sup_sigma": -sogge_delta(idx),
        "breakpoints": breakpoints(idx.n),
    }
