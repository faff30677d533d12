"""Numerical certification of the entropy inequalities on configurable suites.

Every audit emits an AuditReport whose margin is oriented so that a
nonnegative value means the inequality holds; the shared tolerance policy is
max(abs_tol, rel_tol * (|lhs| + |rhs|)).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .collision import (CollisionQuad, KernelSpec, Maxwell, OverMaxwellian,
                        SuperQuadratic, production_bfd_multi, production_landau)
from .distributions import (Distribution, GaussianMixture, Maxwellian,
                            PolyBracket, Saturated, WeightSpec, default_grid,
                            min_directional_temperature, moments_of,
                            phi_image, saturate)
from .entropy import (BoseEinsteinEntropy, ClassicalEntropy, FermiDiracEntropy,
                      relative_entropy_representation)
from .equilibrium import solve_equilibrium
from .errors import DomainError
from .quadrature import VelocityGrid

ABS_TOL = 1e-8
REL_TOL = 1e-6


@dataclass(frozen=True)
class AuditReport:
    inequality_id: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    holds: bool
    inputs_digest: str
    quadrature_error_estimate: float
    notes: dict = field(default_factory=dict)

    def row(self, seed_index: int = -1):
        return [self.inequality_id, seed_index, self.lhs, self.rhs, self.margin,
                self.tolerance, self.holds, self.quadrature_error_estimate]


def margin_tolerance(lhs: float, rhs: float, abs_tol: float = ABS_TOL,
                     rel_tol: float = REL_TOL) -> float:
    return max(abs_tol, rel_tol * (abs(lhs) + abs(rhs)))


def digest_inputs(*parts) -> str:
    blob = json.dumps(parts, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def make_report(inequality_id: str, lhs: float, rhs: float, margin: float,
                digest: str, quad_error: float = 0.0,
                abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL,
                notes=None) -> AuditReport:
    tol = margin_tolerance(lhs, rhs, abs_tol, rel_tol)
    return AuditReport(inequality_id=inequality_id, lhs=lhs, rhs=rhs,
                       margin=margin, tolerance=tol,
                       holds=bool(margin >= -tol), inputs_digest=digest,
                       quadrature_error_estimate=quad_error,
                       notes=notes or {})


def kappa0_estimate(f: Distribution, eps: float) -> tuple[float, str]:
    """1 - eps * sup f, with the sup path ('analytic' or 'sampled') reported."""
    sup, how = f.sup_estimate()
    if how != "analytic":
        sup *= 1.0 + 1e-3  # sampled sups may undershoot; widen toward safety
    return 1.0 - eps * sup, how


# ---------------------------------------------------------------------------
# relative entropies to the matched statistics

def _coarse(grid: VelocityGrid) -> VelocityGrid:
    n = max(8, (grid.N // 2) + (grid.N // 2) % 2)
    return VelocityGrid(L=grid.L, N=n, center=grid.center)


def rel_entropy_fermi(f: Distribution, eps: float, grid: VelocityGrid,
                      with_error: bool = False):
    m = moments_of(f, grid)
    sol = solve_equilibrium(m, eps, "fermi" if eps > 0 else "classical")
    spec = FermiDiracEntropy(eps) if eps > 0 else ClassicalEntropy()
    val = relative_entropy_representation(f, sol.distribution, spec, grid)
    err = 0.0
    if with_error:
        err = abs(val - relative_entropy_representation(
            f, sol.distribution, spec, _coarse(grid)))
    return val, sol, err


def rel_entropy_classical_image(f: Distribution, eps: float,
                                grid: VelocityGrid, with_error: bool = False):
    g = phi_image(f, eps)
    m = moments_of(g, grid)
    sol = solve_equilibrium(m, 0.0, "classical")
    val = relative_entropy_representation(g, sol.distribution,
                                          ClassicalEntropy(), grid)
    err = 0.0
    if with_error:
        err = abs(val - relative_entropy_representation(
            g, sol.distribution, ClassicalEntropy(), _coarse(grid)))
    return val, sol, err


# ---------------------------------------------------------------------------
# entropy comparison (the two-sided transfer between the families)

def audit_entropy_sandwich(f: Distribution, eps: float, kappa0: float,
                           grid: VelocityGrid | None = None,
                           abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL):
    """Certify H_classical(image) >= H_blocked and the exp(16(1/k0-1)) reverse."""
    if eps <= 0:
        raise DomainError("the comparison needs eps > 0")
    grid = grid or default_grid(phi_image(f, eps))
    digest = digest_inputs("entropy_sandwich", f.to_json(), eps, kappa0,
                           grid.to_json())
    h0, _, e0 = rel_entropy_classical_image(f, eps, grid, with_error=True)
    he, _, ee = rel_entropy_fermi(f, eps, grid, with_error=True)
    err = e0 + ee
    lower = make_report("entropy_comparison_lower", lhs=he, rhs=h0,
                        margin=h0 - he, digest=digest, quad_error=err,
                        abs_tol=abs_tol, rel_tol=rel_tol)
    c0 = math.exp(16.0 * (1.0 / kappa0 - 1.0))
    upper = make_report("entropy_comparison_upper", lhs=h0, rhs=c0 * he,
                        margin=c0 * he - h0, digest=digest, quad_error=err,
                        abs_tol=abs_tol, rel_tol=rel_tol,
                        notes={"C0": c0, "kappa0": kappa0})
    return lower, upper


def audit_production_sandwich(f: Distribution, eps: float, kappa0: float,
                              kernel: KernelSpec | None = None,
                              quad: CollisionQuad | None = None,
                              abs_tol: float = ABS_TOL,
                              rel_tol: float = REL_TOL) -> AuditReport:
    """Two-sided check D_classical(image) >= D_blocked >= kappa0^4 D_classical."""
    kernel = kernel or Maxwell()
    res = production_bfd_multi(f, eps, [kernel], quad)[0]
    d_eps, d0 = res.value, res.classical_value
    digest = digest_inputs("production_sandwich", f.to_json(), eps, kappa0)
    margin = min(d0 - d_eps, d_eps - kappa0 ** 4 * d0)
    return make_report("production_sandwich", lhs=d_eps, rhs=d0, margin=margin,
                       digest=digest, quad_error=res.est_error,
                       abs_tol=abs_tol, rel_tol=rel_tol,
                       notes={"kappa0": kappa0,
                              "clamped_nodes": res.clamped_nodes})


def cercignani_constant(f: Distribution, kappa0: float,
                        grid: VelocityGrid | None = None) -> float:
    """(2 pi / 7) kappa0^5 min(1, T) rho T_*(f)."""
    m = moments_of(f, grid) if grid is not None else moments_of(f)
    t_star = min_directional_temperature(f, grid)
    return (2.0 * math.pi / 7.0) * kappa0 ** 5 * min(1.0, m.T) * m.rho * t_star


def audit_cercignani_superquadratic(f: Distribution, eps: float, kappa0: float,
                                    quad: CollisionQuad | None = None,
                                    grid: VelocityGrid | None = None,
                                    d_eps: float | None = None,
                                    d_err: float = 0.0,
                                    abs_tol: float = ABS_TOL,
                                    rel_tol: float = REL_TOL) -> AuditReport:
    """Production dominates K(f) times the relative entropy for kernels
    above 1 + |v - v*|^2."""
    grid = grid or default_grid(phi_image(f, eps) if eps > 0 else f)
    if d_eps is None:
        res = production_bfd_multi(f, eps, [SuperQuadratic()], quad)[0]
        d_eps, d_err = res.value, res.est_error
    he, _, ee = rel_entropy_fermi(f, eps, grid, with_error=True)
    k = cercignani_constant(f, kappa0, grid)
    lhs = k * he
    digest = digest_inputs("cercignani_superquadratic", f.to_json(), eps, kappa0)
    return make_report("cercignani_super_quadratic", lhs=lhs, rhs=d_eps,
                       margin=d_eps - lhs, digest=digest,
                       quad_error=d_err + k * ee, abs_tol=abs_tol,
                       rel_tol=rel_tol, notes={"K": k})


def audit_landau_overmaxwellian(f: Distribution, eps: float, kappa0: float,
                                quad: CollisionQuad | None = None,
                                grid: VelocityGrid | None = None,
                                abs_tol: float = ABS_TOL,
                                rel_tol: float = REL_TOL) -> AuditReport:
    """Diffusive production dominates 4 kappa0^4 rho T_*(f) times the
    relative entropy for kinetic potentials above |z|^2."""
    grid = grid or default_grid(phi_image(f, eps) if eps > 0 else f)
    res = production_landau(f, eps, OverMaxwellian(), quad)
    he, _, ee = rel_entropy_fermi(f, eps, grid, with_error=True)
    m = moments_of(f, grid)
    t_star = min_directional_temperature(f, grid)
    k = 4.0 * kappa0 ** 4 * m.rho * t_star
    lhs = k * he
    digest = digest_inputs("landau_overmaxwellian", f.to_json(), eps, kappa0)
    return make_report("landau_over_maxwellian", lhs=lhs, rhs=res.value,
                       margin=res.value - lhs, digest=digest,
                       quad_error=res.est_error + k * ee,
                       abs_tol=abs_tol, rel_tol=rel_tol, notes={"K": k})


# ---------------------------------------------------------------------------
# the sharp distance-to-equilibrium prefactor

_LAMBDA_SWITCH = 1e-2


def lambda_fn(lam):
    """(l-1)^2 / (l log l - l + 1) with its removable singularity at 1.

    Near 1 the Taylor expansion 2 + (2/3)t - t^2/9 + (7/135)t^3 (t = l - 1)
    replaces the cancelling quotient, whose rounding noise would otherwise
    exceed the tiny gap to the sharp interval bounds; at 0 the limit is 1.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("lambda must be nonnegative")
    t = lam - 1.0
    near = np.abs(t) < _LAMBDA_SWITCH
    out = np.empty_like(lam)
    ts = t[near]
    out[near] = 2.0 + (2.0 / 3.0) * ts - ts ** 2 / 9.0 + (7.0 / 135.0) * ts ** 3
    far = ~near
    lf = lam[far]
    with np.errstate(divide="ignore", invalid="ignore"):
        # grouped as l log(l) + (1 - l): both addends are O(t), so no
        # catastrophic cancellation against the constant 1
        denom = np.where(lf > 0,
                         lf * np.log(np.maximum(lf, 1e-300)) + (1.0 - lf),
                         1.0)
        out[far] = (lf - 1.0) ** 2 / denom
    return out if out.ndim else float(out)


def audit_lambda_bounds(n_per_interval: int = 10_000,
                        abs_tol: float = 1e-12) -> list[AuditReport]:
    """The three interval bounds on the prefactor plus b L(a/b) <= 2 max(a, b)."""
    digest = digest_inputs("lambda_bounds", n_per_interval)
    reports = []
    lo = np.linspace(0.0, 1.0, n_per_interval)
    m1 = float(np.min(1.0 + lo ** (2.0 / 3.0) - lambda_fn(lo)))
    reports.append(make_report("lambda_bound_pow23", lhs=0.0, rhs=m1, margin=m1,
                               digest=digest, abs_tol=abs_tol, rel_tol=0.0))
    mid = np.linspace(1.0 + 1e-12, 10.0, n_per_interval)
    m2 = float(np.min((2.0 / 3.0) * (2.0 + mid) - lambda_fn(mid)))
    reports.append(make_report("lambda_bound_linear", lhs=0.0, rhs=m2, margin=m2,
                               digest=digest, abs_tol=abs_tol, rel_tol=0.0))
    hi = np.geomspace(10.0, 1e6, n_per_interval)
    m3 = float(np.min(hi / (np.log(hi) - 1.0) - lambda_fn(hi)))
    reports.append(make_report("lambda_bound_log", lhs=0.0, rhs=m3, margin=m3,
                               digest=digest, abs_tol=abs_tol, rel_tol=0.0))
    rng = np.random.default_rng(0)
    a = rng.uniform(0.0, 5.0, n_per_interval)
    b = rng.uniform(1e-6, 5.0, n_per_interval)
    m4 = float(np.min(2.0 * np.maximum(a, b) - b * lambda_fn(a / b)))
    reports.append(make_report("lambda_two_max", lhs=0.0, rhs=m4, margin=m4,
                               digest=digest, abs_tol=abs_tol, rel_tol=0.0))
    return reports


# ---------------------------------------------------------------------------
# distance-to-equilibrium (CKP) audits

CKP_VARIANTS = ("optimal", "simplified", "standard_1", "standard_pospart",
                "standard_L12", "bose_optimal", "bose_standard")


def _conjugate_norm(grid, vals, q):
    if math.isinf(q):
        return float(np.max(vals))
    out = (grid.weight * float(np.sum(vals ** q))) ** (1.0 / q)
    if not math.isfinite(out):
        raise DomainError("conjugate norm diverged")
    return out


def _lr_norm_sq(grid, diff, w_vals, r):
    return (grid.weight * float(np.sum(np.abs(diff) ** r * w_vals ** r))) ** (2.0 / r)


def audit_ckp(f: Distribution, eps: float, r: float = 1.0,
              weight: WeightSpec | None = None, variant: str = "optimal",
              alpha: float = 1.0, grid: VelocityGrid | None = None,
              abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL) -> AuditReport:
    """Squared weighted L^r distance to the matched statistic against the
    variant's multiple of the relative entropy."""
    if variant not in CKP_VARIANTS:
        raise DomainError(f"unknown variant {variant!r}")
    if not (1.0 <= r <= 2.0):
        raise DomainError("r must lie in [1, 2]")
    grid = grid or default_grid(phi_image(f, eps) if eps > 0 else f)
    pts = grid.nodes()
    fv = f.value(pts)
    bose = variant.startswith("bose")
    digest = digest_inputs("ckp", variant, f.to_json(), eps, r, alpha)

    m = moments_of(f, grid)
    if bose:
        if eps <= 0:
            raise DomainError("bose variants need eps > 0")
        sol = solve_equilibrium(m, eps, "bose")
        spec = BoseEinsteinEntropy(eps)
    else:
        sol = solve_equilibrium(m, eps, "fermi" if eps > 0 else "classical")
        spec = FermiDiracEntropy(eps) if eps > 0 else ClassicalEntropy()
    M = sol.distribution
    h = relative_entropy_representation(f, M, spec, grid)
    h_err = abs(h - relative_entropy_representation(f, M, spec, _coarse(grid)))
    mv = M.value(pts)
    q = math.inf if r == 2.0 else r / (2.0 - r)

    if variant in ("optimal", "simplified"):
        w = (weight or PolyBracket(0.0)).values(pts, fv)
        lhs = _lr_norm_sq(grid, fv - mv, w, r)
        nm = _conjugate_norm(grid, mv * w ** 2, q)
        nf = _conjugate_norm(grid, fv * w ** 2, q)
        if variant == "optimal":
            rhs = nm * float(lambda_fn(nf / nm)) * h
        else:
            rhs = 2.0 * max(nm, nf) * h
    elif variant == "standard_1":
        lhs = _lr_norm_sq(grid, fv - mv, np.ones(len(pts)), 1.0)
        rhs = 2.0 * _conjugate_norm(grid, mv, 1.0) * h
    elif variant == "standard_pospart":
        w = PolyBracket(alpha).values(pts)
        lhs = _lr_norm_sq(grid, np.maximum(mv - fv, 0.0), w, 1.0)
        rhs = 2.0 * _conjugate_norm(grid, mv * PolyBracket(2 * alpha).values(pts),
                                    1.0) * h
    elif variant == "standard_L12":
        w = PolyBracket(2.0).values(pts)
        lhs = _lr_norm_sq(grid, fv - mv, w, 1.0)
        rhs = 8.0 * _conjugate_norm(grid, mv * PolyBracket(4.0).values(pts),
                                    1.0) * h
    elif variant == "bose_optimal":
        w = (weight or PolyBracket(0.0)).values(pts, fv)
        lhs = _lr_norm_sq(grid, fv - mv, w, r)
        nm = _conjugate_norm(grid, mv * (1.0 + eps * mv) * w ** 2, q)
        nf = _conjugate_norm(grid, fv * (1.0 + eps * fv) * w ** 2, q)
        rhs = nm * float(lambda_fn(nf / nm)) * h
    else:  # bose_standard
        w = PolyBracket(alpha).values(pts)
        lhs = _lr_norm_sq(grid, np.maximum(mv - fv, 0.0), w, 1.0)
        n1 = _conjugate_norm(grid, mv * PolyBracket(2 * alpha).values(pts), 1.0)
        n2 = _conjugate_norm(grid, mv * PolyBracket(alpha).values(pts), 2.0)
        rhs = 2.0 * (n1 + eps * n2 ** 2) * h
    return make_report(f"ckp_{variant}_r{r:g}" + (f"_a{alpha:g}" if "pospart"
                       in variant or "bose_standard" in variant else ""),
                       lhs=lhs, rhs=rhs, margin=rhs - lhs, digest=digest,
                       quad_error=h_err * max(rhs / max(h, 1e-300), 1.0),
                       abs_tol=abs_tol, rel_tol=rel_tol,
                       notes={"gamma": sol.gamma})


def audit_be_upper(f: Distribution, eps: float,
                   grid: VelocityGrid | None = None,
                   abs_tol: float = ABS_TOL,
                   rel_tol: float = REL_TOL) -> AuditReport:
    """Bosonic reversal: the classical relative entropy of the damped image is
    dominated by the bosonic relative entropy."""
    grid = grid or default_grid(f)
    digest = digest_inputs("be_upper", f.to_json(), eps)
    m = moments_of(f, grid)
    sol_be = solve_equilibrium(m, eps, "bose")
    h_be = relative_entropy_representation(f, sol_be.distribution,
                                           BoseEinsteinEntropy(eps), grid)
    g = saturate(f, eps)
    mg = moments_of(g, grid)
    sol0 = solve_equilibrium(mg, 0.0, "classical")
    h0 = relative_entropy_representation(g, sol0.distribution,
                                         ClassicalEntropy(), grid)
    err = abs(h_be - relative_entropy_representation(
        f, sol_be.distribution, BoseEinsteinEntropy(eps), _coarse(grid)))
    return make_report("bose_einstein_upper", lhs=h0, rhs=h_be,
                       margin=h_be - h0, digest=digest, quad_error=err,
                       abs_tol=abs_tol, rel_tol=rel_tol)


# ---------------------------------------------------------------------------
# membership in the counter-example moment class

def membership_c_eps(f: Distribution, eps: float,
                     grid: VelocityGrid | None = None) -> dict:
    """Per-condition report for the normalized moment class used by the
    sub-quadratic counter-example, plus the Gaussian floor check."""
    if not (0.0 < eps < 0.5):
        raise DomainError("eps must lie in (0, 1/2)")
    grid = grid or default_grid(f)
    pts = grid.nodes()
    fv = f.value(pts)
    m = moments_of(f, grid)
    member_rho = 1.0 / (1.0 + 2.0 * eps) - 1e-9 <= m.rho <= 1.0 + 2.0 * eps + 1e-9
    member_u = float(np.linalg.norm(m.u)) <= 4.0 * math.sqrt(3.0) * eps + 1e-9
    member_t = (1.0 / (1.0 + 2.0 * eps) - 1e-9 <= m.T
                <= 1.0 + 2.0 * eps + 1e-9)
    nonneg = bool(np.all(fv >= -1e-12)) and math.isfinite(
        grid.weight * float(np.sum(fv * (1 + np.einsum("ij,ij->i", pts, pts)))))
    pauli = bool(np.all(1.0 - eps * fv >= -1e-12))
    floor = 0.5 * (2.0 * math.pi) ** -1.5 * np.exp(-np.einsum("ij,ij->i",
                                                              pts, pts))
    floor_holds = bool(np.all(fv >= floor * (1.0 - 1e-9)))
    conditions = {"nonneg_L12": nonneg, "pauli": pauli, "rho_bracket": member_rho,
                  "u_bracket": member_u, "T_bracket": member_t}
    return {"member": all(conditions.values()), "conditions": conditions,
            "gaussian_floor": floor_holds,
            "moments": {"rho": m.rho, "u": m.u.tolist(), "T": m.T}}


# ---------------------------------------------------------------------------
# randomized suites

@dataclass(frozen=True)
class TestSuiteSpec:
    __test__ = False  # not a pytest case, despite the name

    seed: int = 42
    count: int = 50
    kappa0_target: float = 0.5
    kernel: str = "maxwell"
    n_components: int = 2
    mean_range: float = 1.1
    var_range: tuple = (0.7, 1.4)
    eps_range: tuple = (0.15, 0.9)
    floor_weight: float = 0.0  # optional K0 exp(-A0 |v|^2) component

    def to_json(self):
        return {"schema": 1, "seed": self.seed, "count": self.count,
                "kappa0_target": self.kappa0_target, "kernel": self.kernel,
                "n_components": self.n_components,
                "mean_range": self.mean_range,
                "var_range": list(self.var_range),
                "eps_range": list(self.eps_range),
                "floor_weight": self.floor_weight}

    @staticmethod
    def from_json(doc):
        doc = dict(doc)
        if doc.pop("schema", 1) != 1:
            raise DomainError("unsupported suite schema")
        known = {"seed", "count", "kappa0_target", "kernel", "n_components",
                 "mean_range", "var_range", "eps_range", "floor_weight"}
        unknown = set(doc) - known
        if unknown:
            raise DomainError(f"unknown suite fields: {sorted(unknown)}")
        if "var_range" in doc:
            doc["var_range"] = tuple(doc["var_range"])
        if "eps_range" in doc:
            doc["eps_range"] = tuple(doc["eps_range"])
        return TestSuiteSpec(**doc)


@dataclass(frozen=True)
class SuiteMember:
    index: int
    f: Distribution
    eps: float
    kappa0: float
    base: GaussianMixture


def make_suite(spec: TestSuiteSpec) -> list[SuiteMember]:
    """Deterministic family of saturated mixtures with 1 - eps f >= kappa0
    by construction (the mixture is rescaled so eps * sup g = 1/kappa0 - 1)."""
    rng = np.random.default_rng(spec.seed)
    members = []
    for i in range(spec.count):
        comps = []
        for _ in range(spec.n_components):
            w = rng.uniform(0.3, 1.0)
            mean = rng.uniform(-spec.mean_range, spec.mean_range, 3)
            var = rng.uniform(*spec.var_range)
            comps.append((w, mean, var))
        if spec.floor_weight > 0:
            comps.append((spec.floor_weight, np.zeros(3), 0.5))
        eps = float(rng.uniform(*spec.eps_range))
        g = GaussianMixture(tuple(comps))
        sup, _ = g.sup_estimate()
        target = (1.0 / spec.kappa0_target - 1.0) / eps
        scale = target / (sup * (1.0 + 1e-3))
        g = GaussianMixture(tuple((w * scale, m, s) for w, m, s in g.components))
        members.append(SuiteMember(index=i, f=Saturated(g, eps), eps=eps,
                                   kappa0=spec.kappa0_target, base=g))
    return members


DEFAULT_BATTERY = ("entropy_comparison_lower", "entropy_comparison_upper",
                   "production_sandwich", "cercignani_super_quadratic",
                   "landau_over_maxwellian", "ckp_optimal_r1",
                   "ckp_optimal_r1.5", "ckp_optimal_r2", "ckp_simplified_r1",
                   "ckp_standard_1", "ckp_standard_pospart", "ckp_standard_L12")


def member_grid(member: SuiteMember) -> VelocityGrid:
    return default_grid(member.base, n_cap=72)


def member_collision_quad(member: SuiteMember, n: int = 16,
                          n_polar: int = 4, n_azimuth: int = 8,
                          prune_delta: float = 1e-6) -> CollisionQuad:
    m = moments_of(member.base)
    L = 6.0 * math.sqrt(m.T)
    return CollisionQuad(grid=VelocityGrid(L=L, N=n, center=tuple(m.u)),
                         n_polar=n_polar, n_azimuth=n_azimuth,
                         prune_delta=prune_delta)


def run_battery(member: SuiteMember, collision_n: int = 16) -> list[AuditReport]:
    """All default inequalities for one suite member, sharing the expensive
    production pass between the sandwich and the super-quadratic audit."""
    f, eps, k0 = member.f, member.eps, member.kappa0
    grid = member_grid(member)
    quad = member_collision_quad(member, n=collision_n)
    reports = list(audit_entropy_sandwich(f, eps, k0, grid))
    res_maxwell, res_sq = production_bfd_multi(f, eps,
                                               [Maxwell(), SuperQuadratic()],
                                               quad)
    digest = digest_inputs("production_sandwich", f.to_json(), eps, k0)
    margin = min(res_maxwell.classical_value - res_maxwell.value,
                 res_maxwell.value - k0 ** 4 * res_maxwell.classical_value)
    reports.append(make_report("production_sandwich", lhs=res_maxwell.value,
                               rhs=res_maxwell.classical_value, margin=margin,
                               digest=digest,
                               quad_error=res_maxwell.est_error,
                               notes={"kappa0": k0}))
    reports.append(audit_cercignani_superquadratic(
        f, eps, k0, grid=grid, d_eps=res_sq.value, d_err=res_sq.est_error))
    reports.append(audit_landau_overmaxwellian(f, eps, k0, quad=quad, grid=grid))
    for r in (1.0, 1.5, 2.0):
        reports.append(audit_ckp(f, eps, r=r, variant="optimal", grid=grid))
    reports.append(audit_ckp(f, eps, r=1.0, variant="simplified", grid=grid))
    reports.append(audit_ckp(f, eps, variant="standard_1", grid=grid))
    reports.append(audit_ckp(f, eps, variant="standard_pospart", alpha=1.0,
                             grid=grid))
    reports.append(audit_ckp(f, eps, variant="standard_L12", grid=grid))
    return reports
