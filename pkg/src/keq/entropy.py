"""Entropy functionals, relative-entropy representation formulas, and the
saturation-scale relative-entropy curve R_g.

Three named entropies share one interface: classical (x log x - x), the
Pauli-saturated family on [0, 1/eps], and the bosonic family on R+.  A General
spec accepts arbitrary strictly convex integrands with callback derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import (Distribution, default_grid, joint_grid,
                            moments_of, phi_image, saturate)
from .equilibrium import gamma_ratio, solve_equilibrium
from .errors import DomainError, KeqError
from .quadrature import VelocityGrid, adaptive_gauss

_TINY = 1e-300


# ---------------------------------------------------------------------------
# entropy specs

class PhiSpec:
    """Strictly convex integrand Phi on an open interval, with derivatives."""

    domain = (0.0, math.inf)

    def phi(self, x):
        raise NotImplementedError

    def dphi(self, x):
        raise NotImplementedError

    def d2phi(self, x):
        raise NotImplementedError

    def entropy_values(self, vals, logvals):
        """Phi(f) nodewise from values and (analytic) logs, boundary conventions applied."""
        raise NotImplementedError

    def inner_integral(self, fv, gv, logf, logg, extra=None):
        """int_g^f (f - x) Phi''(x) dx nodewise; g must lie in the open domain."""
        raise NotImplementedError


@dataclass(frozen=True)
class ClassicalEntropy(PhiSpec):
    def phi(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, x * np.log(x) - x, 0.0)

    def dphi(self, x):
        return np.log(x)

    def d2phi(self, x):
        return 1.0 / x

    def entropy_values(self, vals, logvals):
        return np.where(vals > 0, vals * logvals - vals, 0.0)

    def inner_integral(self, fv, gv, logf, logg, extra=None):
        lead = np.where(fv > 0, fv * (logf - logg), 0.0)
        return lead + gv - fv


@dataclass(frozen=True)
class FermiDiracEntropy(PhiSpec):
    eps: float

    def __post_init__(self):
        if not (self.eps > 0):
            raise DomainError("eps must be positive (use ClassicalEntropy for 0)")
        object.__setattr__(self, "domain", (0.0, 1.0 / self.eps))

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        w = 1.0 - self.eps * x
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x > 0, x * np.log(x), 0.0)
            out = out + np.where(w > 0, w * np.log(np.maximum(w, _TINY)), 0.0) / self.eps
        return out

    def dphi(self, x):
        return np.log(x / (1.0 - self.eps * x))

    def d2phi(self, x):
        return 1.0 / (x * (1.0 - self.eps * x))

    def entropy_values(self, vals, logvals, log_pauli=None):
        if np.any(vals > 1.0 / self.eps + 1e-12):
            raise DomainError("values exceed 1/eps beyond tolerance")
        w = 1.0 - self.eps * vals
        lw = log_pauli if log_pauli is not None else \
            np.log(np.maximum(w, _TINY))
        term1 = np.where(vals > 0, vals * logvals, 0.0)
        term2 = np.where(w > _TINY, w * lw, 0.0) / self.eps
        return term1 + term2

    def inner_integral(self, fv, gv, logf, logg, extra=None):
        # extra carries (log(1-eps f), log(1-eps g)) when available analytically
        if extra is not None:
            lpf, lpg = extra
        else:
            lpf = np.log(np.maximum(1.0 - self.eps * fv, _TINY))
            lpg = np.log(np.maximum(1.0 - self.eps * gv, _TINY))
        lphi_f = logf - lpf
        lphi_g = logg - lpg
        lead = np.where(fv > 0, fv * (lphi_f - lphi_g), 0.0)
        return lead + (lpf - lpg) / self.eps


@dataclass(frozen=True)
class BoseEinsteinEntropy(PhiSpec):
    eps: float

    def __post_init__(self):
        if not (self.eps > 0):
            raise DomainError("eps must be positive (use ClassicalEntropy for 0)")

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            head = np.where(x > 0, x * np.log(x), 0.0) - x
        return head - (np.log1p(self.eps * x) * (1.0 + self.eps * x)
                       - self.eps * x) / self.eps

    def dphi(self, x):
        return np.log(x / (1.0 + self.eps * x))

    def d2phi(self, x):
        return 1.0 / (x * (1.0 + self.eps * x))

    def entropy_values(self, vals, logvals):
        head = np.where(vals > 0, vals * logvals, 0.0) - vals
        return head - (np.log1p(self.eps * vals) * (1.0 + self.eps * vals)
                       - self.eps * vals) / self.eps

    def inner_integral(self, fv, gv, logf, logg, extra=None):
        lpf = np.log1p(self.eps * fv)
        lpg = np.log1p(self.eps * gv)
        lead = np.where(fv > 0, fv * ((logf - lpf) - (logg - lpg)), 0.0)
        return lead - (lpf - lpg) / self.eps


class GeneralEntropy(PhiSpec):
    """User-supplied Phi with first and second derivative callbacks."""

    def __init__(self, phi: Callable, dphi: Callable, d2phi: Callable,
                 domain=(0.0, math.inf), convexity_samples: int = 64):
        self._phi, self._dphi, self._d2phi = phi, dphi, d2phi
        self.domain = (float(domain[0]), float(domain[1]))
        lo, hi = self.domain
        probe_hi = hi if math.isfinite(hi) else lo + 10.0
        xs = lo + (probe_hi - lo) * (np.arange(1, convexity_samples + 1)
                                     / (convexity_samples + 1.0))
        if np.any(self._d2phi(xs) <= 0):
            raise DomainError("Phi'' must be positive on the sampled interior")

    def phi(self, x):
        return self._phi(np.asarray(x, dtype=float))

    def dphi(self, x):
        return self._dphi(np.asarray(x, dtype=float))

    def d2phi(self, x):
        return self._d2phi(np.asarray(x, dtype=float))

    def entropy_values(self, vals, logvals):
        return self.phi(vals)

    def inner_integral(self, fv, gv, logf, logg, extra=None):
        out = np.empty(len(fv))
        for i, (fi, gi) in enumerate(zip(fv, gv)):
            if fi == gi:
                out[i] = 0.0
                continue
            out[i] = adaptive_gauss(
                lambda x, fi=fi: (fi - x) * self._d2phi(x),
                min(fi, gi), max(fi, gi))
            if fi < gi:
                out[i] = -out[i]
        return out


def spec_for(eps: float, family: str = "fermi") -> PhiSpec:
    if eps == 0.0 or family == "classical":
        return ClassicalEntropy()
    if family == "fermi":
        return FermiDiracEntropy(eps)
    if family == "bose":
        return BoseEinsteinEntropy(eps)
    raise DomainError(f"unknown entropy family {family!r}")


# ---------------------------------------------------------------------------
# functionals

def entropy(f: Distribution, spec: PhiSpec, grid: VelocityGrid | None = None) -> float:
    """Integral of Phi(f) over velocity space.

    The 0 log 0 = 0 convention (and its mirror at the saturation edge) is
    applied by explicit branch.  Saturated balls under their own Pauli spec
    integrate in closed form.
    """
    from .distributions import DegenerateBall
    if (isinstance(f, DegenerateBall) and isinstance(spec, FermiDiracEntropy)
            and spec.eps == f.epsilon and grid is None):
        return f.rho * math.log(1.0 / f.epsilon)
    grid = grid or default_grid(f)
    pts = grid.nodes()
    vals = f.value(pts)
    logs = f.log_value(pts)
    if isinstance(spec, FermiDiracEntropy):
        lp = np.log(np.maximum(f.pauli(pts, spec.eps), _TINY))
        integrand = spec.entropy_values(vals, logs, log_pauli=lp)
    else:
        integrand = spec.entropy_values(vals, logs)
    out = grid.integrate(integrand)
    if not math.isfinite(out):
        raise DomainError("entropy integral is not finite")
    return out


def relative_entropy(f: Distribution, g: Distribution, spec: PhiSpec,
                     grid: VelocityGrid | None = None) -> float:
    """H(f) - H(g) on a shared lattice so quadrature errors largely cancel."""
    grid = grid or joint_grid([f, g])
    return entropy(f, spec, grid) - entropy(g, spec, grid)


def _rep_inputs(f: Distribution, g: Distribution, spec: PhiSpec, pts):
    fv = f.value(pts)
    gv = g.value(pts)
    logf = f.log_value(pts)
    logg = g.log_value(pts)
    extra = None
    if isinstance(spec, FermiDiracEntropy):
        extra = (np.log(np.maximum(f.pauli(pts, spec.eps), _TINY)),
                 np.log(np.maximum(g.pauli(pts, spec.eps), _TINY)))
    return fv, gv, logf, logg, extra


def relative_entropy_representation(f: Distribution, g: Distribution,
                                    spec: PhiSpec,
                                    grid: VelocityGrid | None = None) -> float:
    """The double-integral relative entropy int int_g^f (f-x) Phi''(x) dx dv.

    Pointwise nonnegative; equals relative_entropy(f, g) exactly when g is the
    constrained minimizer for f's moments.
    """
    grid = grid or joint_grid([f, g])
    pts = grid.nodes()
    fv, gv, logf, logg, extra = _rep_inputs(f, g, spec, pts)
    inner = spec.inner_integral(fv, gv, logf, logg, extra)
    both_zero = (fv <= _TINY) & (gv <= _TINY)
    inner = np.where(both_zero, 0.0, inner)
    if not np.all(np.isfinite(inner)):
        bad = int(np.argmax(~np.isfinite(inner)))
        raise DomainError(f"inner integral failed at node {pts[bad]}")
    return grid.integrate(inner)


# ---------------------------------------------------------------------------
# constrained-minimizer equivalence report

KINETIC_CONSTRAINTS = (
    lambda pts: np.ones(len(pts)),
    lambda pts: pts[:, 0],
    lambda pts: pts[:, 1],
    lambda pts: pts[:, 2],
    lambda pts: np.einsum("ij,ij->i", pts, pts),
)


@dataclass
class GeneralEntropyProblem:
    spec: PhiSpec
    constraint_values: np.ndarray
    candidate: Distribution
    constraint_functions: Sequence[Callable] = KINETIC_CONSTRAINTS

    def constraint_matrix(self, pts):
        return np.stack([fn(pts) for fn in self.constraint_functions], axis=-1)


def check_minimizer_equivalences(problem: GeneralEntropyProblem,
                                 test_distributions: Sequence[Distribution],
                                 grid: VelocityGrid | None = None,
                                 tol: float = 1e-5,
                                 constraint_tol: float = 1e-6) -> dict:
    """Cross-check the four equivalent characterisations of the constrained minimizer.

    For each admissible test distribution: (i) the relative entropy equals its
    double-integral representation, (ii) the candidate's Phi' pairs to zero
    against moment differences, (iii) the candidate has minimal entropy, and
    (iv) Phi'(candidate) regresses exactly onto the constraint functions.
    """
    M = problem.candidate
    spec = problem.spec
    grid = grid or joint_grid([M, *test_distributions])
    pts = grid.nodes()
    X = problem.constraint_matrix(pts)
    w = grid.weight
    omega = np.asarray(problem.constraint_values, dtype=float)
    scale = np.maximum(np.abs(omega), 1.0)

    m_vals = M.value(pts)
    m_logs = M.log_value(pts)
    if isinstance(spec, (ClassicalEntropy, FermiDiracEntropy, BoseEinsteinEntropy)):
        if isinstance(spec, FermiDiracEntropy):
            dphi_m = m_logs - np.log(np.maximum(M.pauli(pts, spec.eps), _TINY))
        elif isinstance(spec, BoseEinsteinEntropy):
            dphi_m = m_logs - np.log1p(spec.eps * m_vals)
        else:
            dphi_m = m_logs
    else:
        dphi_m = spec.dphi(np.maximum(m_vals, _TINY))

    h_m = entropy(M, spec, grid)
    report = {"candidate_constraint_residual": float(
        np.max(np.abs(w * m_vals @ X - omega) / scale)), "tests": []}

    # (iv) weighted least squares of Phi'(M) on the constraint functions
    sw = np.sqrt(np.maximum(m_vals, 0.0))
    coef, *_ = np.linalg.lstsq(X * sw[:, None], dphi_m * sw, rcond=None)
    resid = dphi_m - X @ coef
    num = math.sqrt(float(np.sum(m_vals * resid ** 2)))
    den = math.sqrt(float(np.sum(m_vals * dphi_m ** 2)))
    report["fit_residual"] = num / max(den, _TINY)
    report["fit_ok"] = report["fit_residual"] <= tol

    for f in test_distributions:
        fv = f.value(pts)
        cres = float(np.max(np.abs(w * fv @ X - omega) / scale))
        if cres > constraint_tol:
            k = int(np.argmax(np.abs(w * fv @ X - omega) / scale))
            raise DomainError(
                f"test distribution violates constraint {k} (residual {cres})")
        rel = relative_entropy(f, M, spec, grid)
        rep = relative_entropy_representation(f, M, spec, grid)
        pairing = w * float((fv - m_vals) @ dphi_m)
        h_f = entropy(f, spec, grid)
        report["tests"].append({
            "identity_gap": abs(rel - rep),
            "pairing": abs(pairing),
            "min_margin": h_f - h_m,
            "ok": (abs(rel - rep) <= tol * (1.0 + abs(rep))
                   and abs(pairing) <= tol * (1.0 + abs(h_f))
                   and h_f >= h_m - tol),
        })
    report["all_ok"] = report["fit_ok"] and all(t["ok"] for t in report["tests"])
    return report


# ---------------------------------------------------------------------------
# the relative-entropy curve in the saturation scale

@dataclass(frozen=True)
class RgSample:
    eps: float
    value: float | None
    gamma: float | None
    kappa0: float | None
    error: str | None = None


def _rg_single(g: Distribution, eps: float, grid: VelocityGrid) -> RgSample:
    if eps == 0.0:
        m = moments_of(g, grid)
        sol = solve_equilibrium(m, 0.0, "classical")
        val = relative_entropy_representation(g, sol.distribution,
                                              ClassicalEntropy(), grid)
        return RgSample(0.0, val, math.inf, 1.0)
    f = saturate(g, eps)
    sup_f, _ = f.sup_estimate()
    kappa0 = 1.0 - eps * sup_f
    m = moments_of(f, grid)
    sol = solve_equilibrium(m, eps, "fermi")
    val = relative_entropy_representation(f, sol.distribution,
                                          FermiDiracEntropy(eps), grid)
    return RgSample(eps, val, gamma_ratio(m, eps), kappa0)


def rg_curve(g: Distribution, eps_samples: Sequence[float],
             grid: VelocityGrid | None = None) -> list[RgSample]:
    """R_g over the given saturation scales; per-sample failures are recorded
    and the curve continues."""
    grid = grid or default_grid(g)
    out = []
    for eps in eps_samples:
        try:
            out.append(_rg_single(g, float(eps), grid))
        except KeqError as exc:
            out.append(RgSample(float(eps), None, None, None, str(exc)))
    return out


def rg_value(g: Distribution, eps: float, grid: VelocityGrid | None = None) -> float:
    grid = grid or default_grid(g)
    sample = _rg_single(g, eps, grid)
    return sample.value


def rg_derivative(g: Distribution, eps: float,
                  grid: VelocityGrid | None = None) -> float:
    """Exact derivative of R_g at eps > 0 via the inverse-transform identity.

    The inner antiderivative of (phi_eps^{-1}(y)^2 - c^2)/y is closed-form, so
    only the outer lattice sum is numerical.  Always <= 0.
    """
    if eps <= 0:
        raise DomainError("the derivative formula needs eps > 0")
    grid = grid or default_grid(g)
    pts = grid.nodes()
    f = saturate(g, eps)
    m = moments_of(f, grid)
    sol = solve_equilibrium(m, eps, "fermi")
    m_img = phi_image(sol.distribution, eps)

    gv = g.value(pts)
    mv = m_img.value(pts)
    logg = g.log_value(pts)
    logm = m_img.log_value(pts)
    c = gv / (1.0 + eps * gv)

    bracket = (np.log1p(eps * gv) - np.log1p(eps * mv)
               + eps * (mv - gv) / ((1.0 + eps * gv) * (1.0 + eps * mv)))
    lead = np.where(gv > 0, c * c * (logg - logm), 0.0)
    inner = bracket / (eps * eps) - lead
    inner = np.where((gv <= _TINY) & (mv <= _TINY), 0.0, inner)
    if not np.all(np.isfinite(inner)):
        bad = int(np.argmax(~np.isfinite(inner)))
        raise DomainError(f"inner integral failed at node {pts[bad]}")
    return grid.integrate(inner)


def default_eps_samples(g: Distribution, n: int = 24,
                        eps_lo: float = 1e-4, headroom: float = 0.01) -> np.ndarray:
    """Geometric grid from eps_lo up to the largest eps keeping
    1 - eps * sup(phi_eps^{-1}(g)) >= headroom."""
    sup_g, _ = g.sup_estimate()
    eps_hi = (1.0 / headroom - 1.0) / sup_g
    if eps_hi <= eps_lo:
        raise DomainError("no admissible eps range for this g")
    return np.geomspace(eps_lo, eps_hi, n)
