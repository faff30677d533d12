"""Velocity-space distributions, moments, weighted norms, and the saturation transform.

Every distribution is immutable and exposes pointwise evaluation (vectorized over
an (n, 3) array of velocities), a numerically safe log, a gradient, and
closed-form moments where they exist.  Velocities live in R^3 only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .quadrature import VelocityGrid, adaptive_gauss


# ---------------------------------------------------------------------------
# scalar transforms

def phi_eps(x, eps: float):
    """Saturation transform x -> x / (1 - eps*x); identity when eps = 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("phi_eps requires x >= 0")
    if eps == 0.0:
        return x if x.ndim else float(x)
    denom = 1.0 - eps * x
    if np.any(denom <= 0):
        raise DomainError("phi_eps requires 1 - eps*x > 0")
    out = x / denom
    return out if out.ndim else float(out)


def phi_eps_inv(y, eps: float):
    """Inverse transform y -> y / (1 + eps*y); maps R+ onto [0, 1/eps)."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("phi_eps_inv requires y >= 0")
    out = y / (1.0 + eps * y) if eps != 0.0 else y
    return out if out.ndim else float(out)


def _logsumexp(a, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else out.reshape(())


# ---------------------------------------------------------------------------
# moments

@dataclass(frozen=True)
class Moments:
    """Conserved (rho, u, T) triple: density, mean velocity, temperature."""

    rho: float
    u: np.ndarray
    T: float

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float).reshape(3))
        if not (self.rho > 0):
            raise DomainError("density must be positive")
        if not (self.T > 0):
            raise DomainError("temperature must be positive")

    @property
    def energy(self) -> float:
        """Second moment: integral of f |v|^2."""
        return 3.0 * self.rho * self.T + self.rho * float(self.u @ self.u)

    def as_vector(self) -> np.ndarray:
        return np.array([self.rho, *(self.rho * self.u), self.energy])


@dataclass(frozen=True)
class BoxHint:
    center: np.ndarray
    radius: float
    min_scale: float


# ---------------------------------------------------------------------------
# distribution variants

class Distribution:
    """Base class; subclasses implement value / log_value / gradient."""

    kind = "Distribution"
    epsilon = None  # saturation scale, when the variant carries one

    def value(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_value(self, pts: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.value(pts))

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def exact_moments(self):
        return None

    def exact_second_moment(self):
        return None

    def sup_estimate(self):
        """Return (essential sup, method) where method is 'analytic' or 'sampled'."""
        grid = default_grid(self)
        return float(np.max(self.value(grid.nodes()))), "sampled"

    def pauli(self, pts: np.ndarray, eps: float) -> np.ndarray:
        """1 - eps*f at pts; subclasses override with cancellation-free forms."""
        return 1.0 - eps * self.value(pts)

    def log_phi(self, pts: np.ndarray, eps: float) -> np.ndarray:
        """log of phi_eps(f) at pts."""
        if eps == 0.0:
            return self.log_value(pts)
        with np.errstate(divide="ignore"):
            return self.log_value(pts) - np.log(self.pauli(pts, eps))

    def box_hint(self) -> BoxHint:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def __call__(self, pts):
        return self.value(np.asarray(pts, dtype=float).reshape(-1, 3))


def _sq_dist(pts, center):
    sq = np.einsum("ij,ij->i", pts, pts)
    c2 = float(center @ center)
    if c2 == 0.0:
        return sq
    return sq - 2.0 * (pts @ center) + c2


@dataclass(frozen=True)
class Maxwellian(Distribution):
    moments: Moments
    kind = "Maxwellian"

    def _log_norm(self):
        m = self.moments
        return np.log(m.rho) - 1.5 * np.log(2.0 * np.pi * m.T)

    def value(self, pts):
        return np.exp(self.log_value(pts))

    def log_value(self, pts):
        m = self.moments
        return self._log_norm() - _sq_dist(pts, m.u) / (2.0 * m.T)

    def gradient(self, pts):
        m = self.moments
        return self.value(pts)[:, None] * (-(pts - m.u) / m.T)

    def exact_moments(self):
        return self.moments

    def exact_second_moment(self):
        m = self.moments
        return m.rho * (m.T * np.eye(3) + np.outer(m.u, m.u))

    def sup_estimate(self):
        return float(np.exp(self._log_norm())), "analytic"

    def box_hint(self):
        m = self.moments
        return BoxHint(m.u.copy(), 8.5 * np.sqrt(m.T), m.T)

    def to_json(self):
        m = self.moments
        return {"kind": self.kind, "rho": m.rho, "u": m.u.tolist(), "T": m.T}


@dataclass(frozen=True)
class FermiDiracStat(Distribution):
    """Statistic e^{a+b|v-u|^2} / (1 + eps e^{a+b|v-u|^2}) with b < 0, eps > 0."""

    a: float
    b: float
    u: np.ndarray
    epsilon: float
    kind = "FermiDiracStat"

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float).reshape(3))
        if not (self.b < 0):
            raise DomainError("b must be negative")
        if not (self.epsilon > 0):
            raise DomainError("epsilon must be positive for a statistic")

    def _t(self, pts):
        return self.a + self.b * _sq_dist(pts, self.u)

    def value(self, pts):
        t = self._t(pts)
        # 1/(eps + e^{-t}) avoids overflow for large positive t
        return np.where(t > 0.0,
                        1.0 / (self.epsilon + np.exp(-t)),
                        np.exp(t) / (1.0 + self.epsilon * np.exp(np.minimum(t, 0.0))))

    def log_value(self, pts):
        t = self._t(pts)
        return np.where(t > 0.0,
                        -np.log(self.epsilon + np.exp(-t)),
                        t - np.log1p(self.epsilon * np.exp(np.minimum(t, 0.0))))

    def pauli(self, pts, eps):
        if eps != self.epsilon:
            return super().pauli(pts, eps)
        t = self._t(pts)
        et = np.exp(-np.abs(t))
        return np.where(t > 0.0, et / (self.epsilon + et),
                        1.0 / (1.0 + self.epsilon * et))

    def log_phi(self, pts, eps):
        if eps != self.epsilon:
            return super().log_phi(pts, eps)
        return self._t(pts)

    def gradient(self, pts):
        f = self.value(pts)
        return (f * (1.0 - self.epsilon * f) * 2.0 * self.b)[:, None] * (pts - self.u)

    def exact_moments(self):
        rho, energy = self._radial_moments()
        return Moments(rho, self.u, energy / (3.0 * rho))

    def _radial_moments(self):
        a, b, eps = self.a, self.b, self.epsilon
        r_hi = np.sqrt((max(a, 0.0) + 46.0) / (-b))

        def f_at(r):
            t = a + b * r * r
            return np.where(t > 0.0, 1.0 / (eps + np.exp(-t)),
                            np.exp(t) / (1.0 + eps * np.exp(np.minimum(t, 0.0))))

        edge = np.sqrt(a / -b) if a > 0 else 0.0
        rho = 4.0 * np.pi * adaptive_gauss(lambda r: r * r * f_at(r), 0.0, r_hi,
                                           breakpoints=(edge,))
        e2 = 4.0 * np.pi * adaptive_gauss(lambda r: r ** 4 * f_at(r), 0.0, r_hi,
                                          breakpoints=(edge,))
        return rho, e2

    def exact_second_moment(self):
        m = self.exact_moments()
        return m.rho * (m.T * np.eye(3) + np.outer(m.u, m.u))

    def sup_estimate(self):
        if self.a > 500:
            return 1.0 / self.epsilon, "analytic"
        ea = np.exp(self.a)
        return float(ea / (1.0 + self.epsilon * ea)), "analytic"

    def box_hint(self):
        m = self.exact_moments()
        radius = np.sqrt((max(self.a, 0.0) + 46.0) / (-self.b))
        return BoxHint(self.u.copy(), float(radius), min(m.T, -0.5 / self.b))

    def to_json(self):
        return {"kind": self.kind, "a": self.a, "b": self.b,
                "u": self.u.tolist(), "epsilon": self.epsilon}


@dataclass(frozen=True)
class BoseEinsteinStat(Distribution):
    """Statistic e^{a+b|v-u|^2} / (1 - eps e^{a+b|v-u|^2}); requires eps e^a < 1."""

    a: float
    b: float
    u: np.ndarray
    epsilon: float
    kind = "BoseEinsteinStat"

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float).reshape(3))
        if not (self.b < 0):
            raise DomainError("b must be negative")
        if not (self.epsilon > 0):
            raise DomainError("epsilon must be positive for a statistic")
        if not (self.epsilon * np.exp(self.a) < 1.0):
            raise DomainError("requires eps * e^a < 1")

    def _t(self, pts):
        return self.a + self.b * _sq_dist(pts, self.u)

    def value(self, pts):
        et = np.exp(self._t(pts))
        return et / (1.0 - self.epsilon * et)

    def log_value(self, pts):
        t = self._t(pts)
        return t - np.log1p(-self.epsilon * np.exp(t))

    def gradient(self, pts):
        f = self.value(pts)
        return (f * (1.0 + self.epsilon * f) * 2.0 * self.b)[:, None] * (pts - self.u)

    def exact_moments(self):
        a, b, eps = self.a, self.b, self.epsilon
        r_hi = np.sqrt(46.0 / (-b))

        def f_at(r):
            et = np.exp(a + b * r * r)
            return et / (1.0 - eps * et)

        rho = 4.0 * np.pi * adaptive_gauss(lambda r: r * r * f_at(r), 0.0, r_hi)
        e2 = 4.0 * np.pi * adaptive_gauss(lambda r: r ** 4 * f_at(r), 0.0, r_hi)
        return Moments(rho, self.u, e2 / (3.0 * rho))

    def exact_second_moment(self):
        m = self.exact_moments()
        return m.rho * (m.T * np.eye(3) + np.outer(m.u, m.u))

    def sup_estimate(self):
        ea = np.exp(self.a)
        return float(ea / (1.0 - self.epsilon * ea)), "analytic"

    def box_hint(self):
        return BoxHint(self.u.copy(), np.sqrt(46.0 / (-self.b)), -0.5 / self.b)

    def to_json(self):
        return {"kind": self.kind, "a": self.a, "b": self.b,
                "u": self.u.tolist(), "epsilon": self.epsilon}


@dataclass(frozen=True)
class DegenerateBall(Distribution):
    """Saturated ball: value 1/eps on |v-u| <= (3 eps rho / 4 pi)^{1/3}."""

    rho: float
    u: np.ndarray
    epsilon: float
    kind = "DegenerateBall"

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float).reshape(3))
        if not (self.rho > 0 and self.epsilon > 0):
            raise DomainError("rho and epsilon must be positive")

    @property
    def radius(self) -> float:
        return float((3.0 * self.epsilon * self.rho / (4.0 * np.pi)) ** (1.0 / 3.0))

    def value(self, pts):
        inside = _sq_dist(pts, self.u) <= self.radius ** 2
        return np.where(inside, 1.0 / self.epsilon, 0.0)

    def log_value(self, pts):
        inside = _sq_dist(pts, self.u) <= self.radius ** 2
        return np.where(inside, -np.log(self.epsilon), -np.inf)

    def gradient(self, pts):
        return np.zeros_like(pts)

    def exact_moments(self):
        return Moments(self.rho, self.u, self.radius ** 2 / 5.0)

    def exact_second_moment(self):
        m = self.exact_moments()
        return m.rho * (m.T * np.eye(3) + np.outer(m.u, m.u))

    def sup_estimate(self):
        return 1.0 / self.epsilon, "analytic"

    def box_hint(self):
        return BoxHint(self.u.copy(), 1.5 * self.radius, (self.radius / 6.0) ** 2)

    def to_json(self):
        return {"kind": self.kind, "rho": self.rho, "u": self.u.tolist(),
                "epsilon": self.epsilon}


@dataclass(frozen=True)
class GaussianMixture(Distribution):
    """Sum of unnormalized bumps w * exp(-|v-m|^2 / (2 s)) with weights w > 0."""

    components: tuple
    kind = "GaussianMixture"

    def __post_init__(self):
        comps = []
        for w, m, s in self.components:
            if not (w > 0 and s > 0):
                raise DomainError("weights and variances must be positive")
            comps.append((float(w), np.asarray(m, dtype=float).reshape(3), float(s)))
        object.__setattr__(self, "components", tuple(comps))

    def _log_terms(self, pts):
        # shared |v|^2 plus one matvec per component
        sq = np.einsum("ij,ij->i", pts, pts)
        return [((pts @ m) * 2.0 - sq - float(m @ m)) / (2.0 * s) + math.log(w)
                for w, m, s in self.components]

    def value(self, pts):
        terms = self._log_terms(pts)
        out = np.exp(terms[0])
        for t in terms[1:]:
            out += np.exp(t)
        return out

    def log_value(self, pts):
        terms = self._log_terms(pts)
        out = terms[0]
        for t in terms[1:]:
            hi = np.maximum(out, t)
            out = hi + np.log1p(np.exp(-np.abs(out - t)))
        return out

    def gradient(self, pts):
        out = np.zeros_like(pts)
        for w, m, s in self.components:
            g = w * np.exp(-_sq_dist(pts, m) / (2.0 * s))
            out += g[:, None] * (-(pts - m) / s)
        return out

    def exact_moments(self):
        rho = 0.0
        mom = np.zeros(3)
        e2 = 0.0
        for w, m, s in self.components:
            mass = w * (2.0 * np.pi * s) ** 1.5
            rho += mass
            mom += mass * m
            e2 += mass * (3.0 * s + m @ m)
        u = mom / rho
        return Moments(rho, u, (e2 - rho * u @ u) / (3.0 * rho))

    def exact_second_moment(self):
        S = np.zeros((3, 3))
        for w, m, s in self.components:
            mass = w * (2.0 * np.pi * s) ** 1.5
            S += mass * (s * np.eye(3) + np.outer(m, m))
        return S

    def sup_estimate(self):
        # peak lies on a segment between component means; sample densely
        pts = [m for _, m, _ in self.components]
        cand = list(pts)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                ts = np.linspace(0.0, 1.0, 129)[:, None]
                cand.append(pts[i] + ts * (pts[j] - pts[i]))
        cand = np.concatenate([np.atleast_2d(c) for c in cand], axis=0)
        return float(np.max(self.value(cand))), "sampled"

    def box_hint(self):
        m = self.exact_moments()
        center = m.u
        radius = max(float(np.linalg.norm(mu - center)) + 8.5 * np.sqrt(s)
                     for _, mu, s in self.components)
        return BoxHint(center.copy(), radius,
                       min(s for _, _, s in self.components))

    def to_json(self):
        return {"kind": self.kind,
                "components": [{"weight": w, "mean": m.tolist(), "variance": s}
                               for w, m, s in self.components]}


@dataclass(frozen=True)
class Saturated(Distribution):
    """Pointwise image g / (1 + eps g); automatically bounded by 1/eps."""

    g: Distribution
    epsilon: float
    kind = "Saturated"

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise DomainError("epsilon must be positive")

    def value(self, pts):
        gv = self.g.value(pts)
        return gv / (1.0 + self.epsilon * gv)

    def log_value(self, pts):
        gv = self.g.value(pts)
        return self.g.log_value(pts) - np.log1p(self.epsilon * gv)

    def pauli(self, pts, eps):
        if eps != self.epsilon:
            return super().pauli(pts, eps)
        return 1.0 / (1.0 + self.epsilon * self.g.value(pts))

    def log_phi(self, pts, eps):
        if eps != self.epsilon:
            return super().log_phi(pts, eps)
        return self.g.log_value(pts)

    def gradient(self, pts):
        gv = self.g.value(pts)
        return self.g.gradient(pts) / (1.0 + self.epsilon * gv)[:, None] ** 2

    def sup_estimate(self):
        s, how = self.g.sup_estimate()
        return s / (1.0 + self.epsilon * s), how

    def box_hint(self):
        return self.g.box_hint()

    def to_json(self):
        return {"kind": self.kind, "g": self.g.to_json(), "epsilon": self.epsilon}


@dataclass(frozen=True)
class Gridded(Distribution):
    """Nodal values on a VelocityGrid; off-node queries use trilinear interpolation."""

    grid: VelocityGrid
    values: np.ndarray
    kind = "Gridded"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(self.grid.N ** 3)
        floor = -1e-2 * (1.0 + float(np.max(vals, initial=0.0)))
        if np.any(vals < floor):
            raise DomainError("gridded values must be nonnegative")
        # uniform-weight conservative projection leaves bounded negative dust on
        # far-tail nodes; nodal sums keep it so invariants stay exact, while
        # pointwise evaluation clamps to >= 0
        object.__setattr__(self, "values", vals)

    def _cube(self):
        n = self.grid.N
        return self.values.reshape(n, n, n)

    def value(self, pts):
        return trilinear(self.grid, self._cube(), pts)

    def gradient(self, pts):
        gx, gy, gz = [trilinear(self.grid, c, pts) for c in self.gradient_cubes()]
        return np.stack([gx, gy, gz], axis=-1)

    def gradient_cubes(self):
        """Nodal partials via 4th-order interior / one-sided 2nd-order stencils."""
        cube = self._cube()
        return tuple(_fd_axis(cube, ax, self.grid.h) for ax in range(3))

    def exact_moments(self):
        return None

    def sup_estimate(self):
        return float(np.max(self.values)), "analytic"

    def box_hint(self):
        c = np.asarray(self.grid.center)
        return BoxHint(c, self.grid.L, self.grid.h ** 2)

    def to_json(self):
        return {"kind": self.kind, "grid": self.grid.to_json(),
                "values": self.values.tolist()}


class PhiImage(Distribution):
    """Internal wrapper for phi_eps(f) when no closed form is available."""

    kind = "PhiImage"

    def __init__(self, f: Distribution, eps: float):
        self.f = f
        self.eps = eps

    def value(self, pts):
        fv = self.f.value(pts)
        pa = self.f.pauli(pts, self.eps)
        if np.any(pa <= 0):
            raise DomainError("phi image undefined where 1 - eps*f <= 0")
        return fv / pa

    def log_value(self, pts):
        return self.f.log_phi(pts, self.eps)

    def gradient(self, pts):
        pa = self.f.pauli(pts, self.eps)
        return self.f.gradient(pts) / pa[:, None] ** 2

    def sup_estimate(self):
        s, how = self.f.sup_estimate()
        return float(phi_eps(s, self.eps)), how

    def box_hint(self):
        return self.f.box_hint()

    def to_json(self):
        raise DomainError("phi images are not serializable; saturate first")


def phi_image(f: Distribution, eps: float) -> Distribution:
    """The distribution phi_eps(f) = f/(1-eps f), simplified when possible."""
    if eps == 0.0:
        return f
    if isinstance(f, Saturated) and f.epsilon == eps:
        return f.g
    if isinstance(f, FermiDiracStat) and f.epsilon == eps:
        return GaussianMixture(((np.exp(f.a), f.u, -0.5 / f.b),))
    return PhiImage(f, eps)


def saturate(g: Distribution, eps: float) -> Distribution:
    """The distribution phi_eps^{-1}(g) = g/(1+eps g)."""
    if eps == 0.0:
        return g
    if isinstance(g, PhiImage) and g.eps == eps:
        return g.f
    return Saturated(g, eps)


# ---------------------------------------------------------------------------
# gridded helpers

def trilinear(grid: VelocityGrid, cube: np.ndarray, pts: np.ndarray,
              clamp_hi: float = np.inf) -> np.ndarray:
    """Trilinear interpolation of nodal values; zero outside, clamped to [0, hi].

    Queries are mapped to a zero-padded cube so out-of-box corners contribute
    nothing without per-corner bound checks.
    """
    n = grid.N
    h = grid.h
    loc = (pts - np.asarray(grid.center) + grid.L - 0.5 * h) / h
    i0 = np.floor(loc).astype(np.int64)
    frac = loc - i0
    # shift by 1 into a padded (n+2)^3 cube; the one-cell halo linearly decays
    # to zero and anything farther out is masked off entirely
    inside = np.all((i0 >= -1) & (i0 <= n - 1), axis=1)
    np.clip(i0, -1, n - 1, out=i0)
    padded = np.zeros((n + 2, n + 2, n + 2))
    padded[1:n + 1, 1:n + 1, 1:n + 1] = cube
    flat = padded.ravel()
    m = n + 2
    base = ((i0[:, 0] + 1) * m + (i0[:, 1] + 1)) * m + (i0[:, 2] + 1)
    fx, fy, fz = frac[:, 0], frac[:, 1], frac[:, 2]
    gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
    out = (gx * (gy * (gz * flat.take(base) + fz * flat.take(base + 1))
                 + fy * (gz * flat.take(base + m) + fz * flat.take(base + m + 1)))
           + fx * (gy * (gz * flat.take(base + m * m)
                         + fz * flat.take(base + m * m + 1))
                   + fy * (gz * flat.take(base + m * m + m)
                           + fz * flat.take(base + m * m + m + 1))))
    out *= inside
    return np.clip(out, 0.0, clamp_hi)


def quadratic_log_interp(grid: VelocityGrid, log_cube: np.ndarray,
                         pts: np.ndarray, log_hi: float = 700.0) -> np.ndarray:
    """Tensor-quadratic Lagrange interpolation of nodal logs; -inf outside.

    Exact on every statistic and Gaussian mixture component (their logs are
    quadratic polynomials of v), so sampled equilibria are exact fixed points
    of the collocated collision operator.  The caller should floor the nodal
    logs (e.g. at max - 60) and pass log_hi ~ max + 1 so the negative Lagrange
    weights cannot manufacture spurious mass near the support edge.
    """
    n = grid.N
    h = grid.h
    loc = (pts - np.asarray(grid.center) + grid.L - 0.5 * h) / h
    inside = np.all((loc > -0.5) & (loc < n - 0.5), axis=1)
    c = np.rint(loc).astype(np.int64)
    np.clip(c, 1, n - 2, out=c)
    t = loc - c
    # per-axis Lagrange weights on the stencil {-1, 0, +1}
    weights = [(0.5 * t[:, a] * (t[:, a] - 1.0),
                (1.0 - t[:, a]) * (1.0 + t[:, a]),
                0.5 * t[:, a] * (t[:, a] + 1.0)) for a in range(3)]
    flat = log_cube.ravel()
    base = (c[:, 0] * n + c[:, 1]) * n + c[:, 2]
    out = np.zeros(len(pts))
    stencil_max = np.full(len(pts), -np.inf)
    for dx in (-1, 0, 1):
        wx = weights[0][dx + 1]
        for dy in (-1, 0, 1):
            wxy = wx * weights[1][dy + 1]
            off = (dx * n + dy) * n
            for dz in (-1, 0, 1):
                vals = flat.take(base + off + dz)
                out += (wxy * weights[2][dz + 1]) * vals
                np.maximum(stencil_max, vals, out=stencil_max)
    # no-new-extrema limiter: negative Lagrange weights hitting floored logs
    # at the support edge must not manufacture mass; the margin covers the
    # legitimate between-node peak of a resolved quadratic log
    out = np.minimum(out, np.minimum(stencil_max + 0.5, log_hi))
    out[~inside] = -np.inf
    return out


def _fd_axis(cube: np.ndarray, axis: int, h: float) -> np.ndarray:
    c = np.moveaxis(cube, axis, 0)
    d = np.empty_like(c)
    # 4th-order central in the interior
    d[2:-2] = (c[:-4] - 8 * c[1:-3] + 8 * c[3:-1] - c[4:]) / (12 * h)
    # 2nd-order one-sided in the two-node boundary layer
    d[0] = (-3 * c[0] + 4 * c[1] - c[2]) / (2 * h)
    d[1] = (c[2] - c[0]) / (2 * h)
    d[-2] = (c[-1] - c[-3]) / (2 * h)
    d[-1] = (3 * c[-1] - 4 * c[-2] + c[-3]) / (2 * h)
    return np.moveaxis(d, 0, axis)


# ---------------------------------------------------------------------------
# grids sized for a distribution

def default_grid(f: Distribution, n_cap: int = 128, h_factor: float = 0.7,
                 L: float | None = None, N: int | None = None) -> VelocityGrid:
    """Cubic lattice covering f's effective support.

    The half-width follows the Gaussian-envelope rule (mean speed plus ~8 sigma)
    and the spacing resolves the narrowest component scale, so lattice sums of
    smooth variants are accurate to near machine precision.
    """
    hint = f.box_hint()
    box_L = float(L) if L is not None else hint.radius
    if N is None:
        h_target = h_factor * np.sqrt(hint.min_scale)
        n = int(np.ceil(2.0 * box_L / h_target))
        n = min(max(n + (n % 2), 16), n_cap)
    else:
        n = int(N)
    return VelocityGrid(L=box_L, N=n, center=tuple(hint.center))


def joint_grid(fs, n_cap: int = 128, h_factor: float = 0.7) -> VelocityGrid:
    """A single lattice adequate for every distribution in fs."""
    hints = [f.box_hint() for f in fs]
    center = hints[0].center
    radius = max(float(np.linalg.norm(h.center - center)) + h.radius for h in hints)
    scale = min(h.min_scale for h in hints)
    h_target = h_factor * np.sqrt(scale)
    n = int(np.ceil(2.0 * radius / h_target))
    n = min(max(n + (n % 2), 16), n_cap)
    return VelocityGrid(L=radius, N=n, center=tuple(center))


# ---------------------------------------------------------------------------
# core operations

def moments_of(f: Distribution, grid: VelocityGrid | None = None,
               rho_floor: float = 1e-12) -> Moments:
    """Density, mean velocity and temperature of f.

    Analytic variants with closed-form moments bypass quadrature; otherwise a
    lattice sum over `grid` (sized automatically when omitted) is used.
    """
    exact = f.exact_moments()
    if exact is not None and grid is None:
        return exact
    if isinstance(f, Gridded) and grid is None:
        grid = f.grid
        vals = f.values
        pts = grid.nodes()
    else:
        grid = grid or default_grid(f)
        pts = grid.nodes()
        vals = f.value(pts)
    w = grid.weight
    rho = w * float(np.sum(vals))
    if rho <= rho_floor:
        raise DomainError("distribution integrates to (numerically) zero")
    mom = w * np.einsum("i,ij->j", vals, pts)
    e2 = w * float(np.sum(vals * np.einsum("ij,ij->i", pts, pts)))
    u = mom / rho
    T = (e2 - rho * float(u @ u)) / (3.0 * rho)
    if T <= 0:
        raise DomainError("nonpositive temperature from quadrature")
    return Moments(rho, u, T)


def second_moment_matrix(f: Distribution, grid: VelocityGrid | None = None) -> np.ndarray:
    S = f.exact_second_moment()
    if S is not None and grid is None:
        return S
    if isinstance(f, Gridded) and grid is None:
        grid = f.grid
        vals = f.values
    else:
        grid = grid or default_grid(f)
        vals = f.value(grid.nodes())
    pts = grid.nodes()
    return grid.weight * np.einsum("i,ij,ik->jk", vals, pts, pts)


def sym3_eigenvalues(S: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric 3x3 matrix, ascending, by the trigonometric formula."""
    S = np.asarray(S, dtype=float)
    p1 = S[0, 1] ** 2 + S[0, 2] ** 2 + S[1, 2] ** 2
    q = np.trace(S) / 3.0
    if p1 == 0.0:
        return np.sort(np.diag(S))
    p2 = np.sum((np.diag(S) - q) ** 2) + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    B = (S - q * np.eye(3)) / p
    r = np.clip(np.linalg.det(B) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    e1 = q + 2.0 * p * np.cos(phi)
    e3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    return np.sort([e3, 3.0 * q - e1 - e3, e1])


def min_directional_temperature(f: Distribution, grid: VelocityGrid | None = None) -> float:
    """Smallest eigenvalue of the second-moment matrix divided by the density."""
    S = second_moment_matrix(f, grid)
    if not np.all(np.isfinite(S)):
        raise DomainError("second-moment matrix is not finite")
    rho = moments_of(f, grid).rho if grid is not None else moments_of(f).rho
    return float(sym3_eigenvalues(S)[0] / rho)


def weighted_lp_norm(f, p: float, s: float, grid: VelocityGrid | None = None) -> float:
    """Weighted L^p_s norm with weight (1+|v|^2)^{s/2}; p = inf takes a nodal sup.

    `f` may be a Distribution or any callable mapping (n, 3) points to values.
    """
    if p != np.inf and p < 1:
        raise DomainError("p must be in [1, inf]")
    dist = f if isinstance(f, Distribution) else None
    if grid is None:
        if dist is None:
            raise DomainError("a grid is required for bare callables")
        grid = default_grid(dist)
    pts = grid.nodes()
    vals = np.abs(dist.value(pts) if dist is not None else np.asarray(f(pts), dtype=float))
    bracket = (1.0 + np.einsum("ij,ij->i", pts, pts)) ** (s / 2.0)
    if p == np.inf:
        out = float(np.max(vals * bracket))
        if s == 0.0 and dist is not None:
            sup, how = dist.sup_estimate()
            if how == "analytic":
                out = max(out, float(sup))
        return out
    out = (grid.weight * float(np.sum(vals ** p * bracket ** p))) ** (1.0 / p)
    if not np.isfinite(out):
        raise DomainError("weighted norm is not finite")
    return out


# ---------------------------------------------------------------------------
# weights

class WeightSpec:
    """Nonnegative pointwise weight; IndicatorBelow may reference comparison values."""

    def values(self, pts: np.ndarray, f_vals: np.ndarray | None = None) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class One(WeightSpec):
    def values(self, pts, f_vals=None):
        return np.ones(len(pts))


@dataclass(frozen=True)
class PolyBracket(WeightSpec):
    s: float

    def values(self, pts, f_vals=None):
        return (1.0 + np.einsum("ij,ij->i", pts, pts)) ** (self.s / 2.0)


@dataclass(frozen=True)
class IndicatorBelow(WeightSpec):
    reference: Distribution

    def values(self, pts, f_vals=None):
        if f_vals is None:
            raise DomainError("IndicatorBelow needs the compared values")
        return np.where(f_vals <= self.reference.value(pts), 1.0, 0.0)


@dataclass(frozen=True)
class ProductWeight(WeightSpec):
    factors: tuple

    def values(self, pts, f_vals=None):
        out = np.ones(len(pts))
        for w in self.factors:
            out = out * w.values(pts, f_vals)
        return out


# ---------------------------------------------------------------------------
# serialization

_KINDS = {}


def _register(cls):
    _KINDS[cls.kind] = cls
    return cls


for _cls in (Maxwellian, FermiDiracStat, BoseEinsteinStat, DegenerateBall,
             GaussianMixture, Saturated, Gridded):
    _register(_cls)


def distribution_from_json(doc: dict) -> Distribution:
    """Rebuild a Distribution from its JSON document (discriminated by "kind")."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DomainError("distribution document must carry a 'kind' field")
    kind = doc["kind"]
    if kind not in _KINDS:
        raise DomainError(
            f"unknown distribution kind {kind!r}; valid kinds: {sorted(_KINDS)}")
    if kind == "Maxwellian":
        return Maxwellian(Moments(float(doc["rho"]), doc["u"], float(doc["T"])))
    if kind in ("FermiDiracStat", "BoseEinsteinStat"):
        cls = _KINDS[kind]
        return cls(float(doc["a"]), float(doc["b"]), doc["u"], float(doc["epsilon"]))
    if kind == "DegenerateBall":
        return DegenerateBall(float(doc["rho"]), doc["u"], float(doc["epsilon"]))
    if kind == "GaussianMixture":
        comps = [(float(c["weight"]), c["mean"], float(c["variance"]))
                 for c in doc["components"]]
        return GaussianMixture(tuple(comps))
    if kind == "Saturated":
        return Saturated(distribution_from_json(doc["g"]), float(doc["epsilon"]))
    if kind == "Gridded":
        return Gridded(VelocityGrid.from_json(doc["grid"]), doc["values"])
    raise AssertionError("unreachable")


def distribution_to_json_str(f: Distribution) -> str:
    return json.dumps(f.to_json())
