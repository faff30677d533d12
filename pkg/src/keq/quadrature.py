"""Deterministic quadrature: adaptive 1D Gauss-Legendre panels and cubic velocity lattices.

All reductions use numpy's pairwise summation in a fixed order, so results are
bit-stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureError

GL_ORDER = 16
MAX_DEPTH = 40


@lru_cache(maxsize=8)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel(fn, a: float, b: float) -> float:
    x, w = _leggauss(GL_ORDER)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.sum(w * fn(mid + half * x)))


def adaptive_gauss(fn, a: float, b: float, rel_tol: float = 5e-14,
                   abs_tol: float = 1e-300, breakpoints=()) -> float:
    """Integrate fn over [a, b] with adaptive 16-point Gauss-Legendre panels.

    Panels are halved until the two-half refinement agrees with the parent
    panel to ``rel_tol`` relative to the running global estimate.  Raises
    QuadratureError past depth 40.
    """
    if b <= a:
        return 0.0
    edges = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    intervals = list(zip(edges[:-1], edges[1:]))
    scale = sum(abs(_panel(fn, lo, hi)) for lo, hi in intervals)
    total = 0.0
    for lo, hi in intervals:
        total += _adapt(fn, lo, hi, _panel(fn, lo, hi), rel_tol, abs_tol,
                        max(scale, abs_tol), 0)
    return total


def _adapt(fn, a, b, whole, rel_tol, abs_tol, scale, depth):
    if depth > MAX_DEPTH:
        raise QuadratureError(
            f"panel refinement exceeded depth {MAX_DEPTH} on [{a}, {b}]")
    mid = 0.5 * (a + b)
    left = _panel(fn, a, mid)
    right = _panel(fn, mid, b)
    if abs(left + right - whole) <= max(abs_tol, rel_tol * scale):
        return left + right
    scale = max(scale, abs(left) + abs(right))
    return (_adapt(fn, a, mid, left, rel_tol, abs_tol, scale, depth + 1)
            + _adapt(fn, mid, b, right, rel_tol, abs_tol, scale, depth + 1))


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cubic lattice of cell centers on [-L, L]^3 with weight h^3 per node."""

    L: float
    N: int
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("half width must be positive")
        if self.N < 4:
            raise ValueError("need at least 4 points per axis")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def weight(self) -> float:
        return self.h ** 3

    def axis(self) -> np.ndarray:
        h = self.h
        return -self.L + h * (np.arange(self.N) + 0.5)

    def nodes(self) -> np.ndarray:
        """All N^3 lattice nodes, row-major over (x, y, z), shape (N^3, 3)."""
        ax = self.axis()
        X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
        return pts + np.asarray(self.center)

    def integrate(self, values: np.ndarray) -> float:
        return self.weight * float(np.sum(values))

    def to_json(self) -> dict:
        return {"L": self.L, "N": self.N, "center": list(self.center)}

    @staticmethod
    def from_json(doc: dict) -> "VelocityGrid":
        return VelocityGrid(L=float(doc["L"]), N=int(doc["N"]),
                            center=tuple(doc.get("center", (0.0, 0.0, 0.0))))


def default_box(u_max: float, T_max: float, pad_sigmas: float = 8.0) -> float:
    """Half-width so a Gaussian envelope at the box edge is < 1e-14 of its peak."""
    return float(u_max + pad_sigmas * np.sqrt(T_max))
