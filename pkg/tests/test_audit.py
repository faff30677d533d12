import math

import numpy as np
import pytest

from keq.audit import (ABS_TOL, REL_TOL, TestSuiteSpec, audit_be_upper,
                       audit_ckp, audit_cercignani_superquadratic,
                       audit_entropy_sandwich, audit_lambda_bounds,
                       audit_landau_overmaxwellian, audit_production_sandwich,
                       cercignani_constant, kappa0_estimate, lambda_fn,
                       make_report, make_suite, margin_tolerance,
                       member_collision_quad, member_grid, membership_c_eps,
                       run_battery)
from keq.distributions import (GaussianMixture, Gridded, Maxwellian, Moments,
                               Saturated, joint_grid, moments_of)
from keq.entropy import FermiDiracEntropy, relative_entropy_representation
from keq.equilibrium import ZETA_3_2, ZETA_5_2, solve_equilibrium
from keq.errors import DomainError


def test_lambda_fn_values():
    assert lambda_fn(1.0) == 2.0
    assert lambda_fn(0.0) == 1.0
    assert abs(lambda_fn(math.e) - (math.e - 1.0) ** 2) <= 1e-12
    # at lambda = 10 both the linear and the log bound apply
    l10 = lambda_fn(10.0)
    assert l10 <= (2.0 / 3.0) * 12.0 and l10 <= 10.0 / (math.log(10.0) - 1.0)


def test_lambda_bounds_audit():
    reports = audit_lambda_bounds(10_000)
    assert all(r.holds for r in reports)
    assert all(r.margin >= -1e-12 for r in reports)


def test_lambda_bound_tight_at_one():
    # the 2/3-power bound touches the prefactor at lambda = 1
    assert abs((1.0 + 1.0) - lambda_fn(1.0)) == 0.0


def test_upper_transfer_constant():
    # kappa0 = 1/2 gives the constant e^16
    assert math.exp(16.0 * (1.0 / 0.5 - 1.0)) == pytest.approx(8886110.520507872)


def test_tolerance_policy():
    assert margin_tolerance(0.0, 0.0) == ABS_TOL
    assert margin_tolerance(10.0, 5.0) == REL_TOL * 15.0


def test_report_orientation_sanity():
    # corrupting the rhs constant by 1e-3 must flip holds
    ok = make_report("demo", lhs=1.0, rhs=1.5, margin=0.5, digest="x")
    assert ok.holds
    bad_rhs = 1.5e-3
    bad = make_report("demo", lhs=1.0, rhs=bad_rhs, margin=bad_rhs - 1.0,
                      digest="x")
    assert not bad.holds


def make_member(kappa0=0.5, eps=0.4, seed=0):
    return make_suite(TestSuiteSpec(seed=seed, count=1, kappa0_target=kappa0,
                                    eps_range=(eps, eps)))[0]


def test_suite_construction_deterministic_and_admissible():
    spec = TestSuiteSpec(seed=9, count=4, kappa0_target=0.4)
    s1, s2 = make_suite(spec), make_suite(spec)
    for a, b in zip(s1, s2):
        assert a.eps == b.eps
        assert a.f.to_json() == b.f.to_json()
    for mem in s1:
        grid = member_grid(mem)
        vals = mem.f.value(grid.nodes())
        assert np.all(1.0 - mem.eps * vals >= mem.kappa0 - 1e-9)


def test_kappa0_estimate_paths():
    mx = Maxwellian(Moments(1.0, (0, 0, 0), 1.0))
    k, how = kappa0_estimate(mx, 0.5)
    assert how == "analytic"
    assert abs(k - (1.0 - 0.5 * (2 * math.pi) ** -1.5)) < 1e-12
    mem = make_member()
    k, how = kappa0_estimate(mem.f, mem.eps)
    assert how == "sampled" and k <= mem.kappa0 + 1e-6


def test_entropy_sandwich_holds_and_equilibrium_trivial():
    mem = make_member()
    lower, upper = audit_entropy_sandwich(mem.f, mem.eps, mem.kappa0)
    assert lower.holds and upper.holds
    assert lower.margin > 0
    sol = solve_equilibrium(moments_of(mem.f), mem.eps, "fermi")
    lo2, up2 = audit_entropy_sandwich(sol.distribution, mem.eps, mem.kappa0)
    assert abs(lo2.lhs) < 1e-7 and abs(lo2.rhs) < 1e-7
    assert lo2.holds and up2.holds


def test_production_sandwich_near_unit_kappa0():
    # both margins shrink together as the blocking disappears
    mem = make_member(kappa0=0.999, eps=0.2, seed=3)
    quad = member_collision_quad(mem, n=12)
    rep = audit_production_sandwich(mem.f, mem.eps, mem.kappa0, quad=quad)
    assert rep.holds
    gap = (rep.rhs - rep.lhs) / rep.rhs
    assert gap <= 0.02


def test_cercignani_constant_formula():
    mem = make_member()
    grid = member_grid(mem)
    m = moments_of(mem.f, grid)
    k = cercignani_constant(mem.f, mem.kappa0, grid)
    assert k > 0
    assert k <= (2 * math.pi / 7) * mem.kappa0 ** 5 * m.rho * m.T * 1.5


def test_landau_and_cercignani_audits_hold():
    mem = make_member(seed=5)
    quad = member_collision_quad(mem, n=12)
    rep = audit_cercignani_superquadratic(mem.f, mem.eps, mem.kappa0, quad=quad)
    assert rep.holds and rep.rhs >= rep.lhs
    repl = audit_landau_overmaxwellian(mem.f, mem.eps, mem.kappa0, quad=quad)
    assert repl.holds


def test_ckp_variants_hold():
    mem = make_member(seed=7)
    grid = member_grid(mem)
    for variant, kw in (("optimal", {"r": 1.0}), ("optimal", {"r": 1.5}),
                        ("optimal", {"r": 2.0}), ("simplified", {"r": 1.0}),
                        ("standard_1", {}), ("standard_pospart", {"alpha": 1.0}),
                        ("standard_L12", {})):
        rep = audit_ckp(mem.f, mem.eps, variant=variant, grid=grid, **kw)
        assert rep.holds, (variant, rep)
        assert rep.rhs >= rep.lhs - rep.tolerance
    # optimal is at least as sharp as simplified for the same r
    opt = audit_ckp(mem.f, mem.eps, r=1.0, variant="optimal", grid=grid)
    simp = audit_ckp(mem.f, mem.eps, r=1.0, variant="simplified", grid=grid)
    assert opt.rhs <= simp.rhs + 1e-12


def test_ckp_classical_variants():
    gm = GaussianMixture(((0.4, (0.8, 0, 0), 0.9), (0.4, (-0.8, 0, 0), 1.1)))
    for variant in ("optimal", "standard_1", "standard_L12"):
        rep = audit_ckp(gm, 0.0, variant=variant)
        assert rep.holds


def test_ckp_equilibrium_input_trivial():
    sol = solve_equilibrium(Moments(1.0, (0, 0, 0), 1.0), 0.3, "fermi")
    rep = audit_ckp(sol.distribution, 0.3, variant="standard_1")
    assert rep.holds
    assert abs(rep.lhs) < 1e-10


def test_ckp_bose_variants_hold():
    gm = GaussianMixture(((0.2, (0.2, 0, 0), 1.0), (0.15, (-0.3, 0.1, 0), 0.8)))
    eps = 0.4
    for variant, kw in (("bose_optimal", {"r": 1.0}), ("bose_optimal", {"r": 2.0}),
                        ("bose_standard", {"alpha": 1.0})):
        rep = audit_ckp(gm, eps, variant=variant, **kw)
        assert rep.holds, (variant, rep)


def test_be_upper_holds_incl_near_critical():
    gm = GaussianMixture(((0.2, (0.2, 0, 0), 1.0), (0.15, (-0.3, 0.1, 0), 0.8)))
    rep = audit_be_upper(gm, 0.4)
    assert rep.holds and rep.margin >= 0
    # near-critical temperature: scale eps so T = 1.05 * threshold
    m = moments_of(gm)
    # threshold(eps) = (z52/z32) * (rho eps / z32)^{2/3} / (2 pi); solve for eps
    eps_crit = (m.T / 1.05 * 2 * math.pi * ZETA_3_2 / ZETA_5_2) ** 1.5 \
        * ZETA_3_2 / m.rho
    rep2 = audit_be_upper(gm, eps_crit * 0.999)
    assert rep2.holds


def test_ckp_homotopy_no_blowup():
    mem = make_member(seed=11)
    grid = member_grid(mem)
    m = moments_of(mem.f, grid)
    sol = solve_equilibrium(m, mem.eps, "fermi")
    pts = grid.nodes()
    fv = mem.f.value(pts)
    mv = sol.distribution.value(pts)
    spec = FermiDiracEntropy(mem.eps)
    ratios = []
    for t in (0.0, 0.5, 0.9, 0.99):
        blend = Gridded(grid, (1 - t) * fv + t * mv)
        h = relative_entropy_representation(blend, sol.distribution, spec, grid)
        lhs = (grid.weight * float(np.sum(np.abs(blend.values - mv)))) ** 2
        rhs = 2.0 * m.rho * h
        ratios.append(lhs / max(rhs, 1e-300))
    assert all(np.isfinite(r) for r in ratios)
    assert max(ratios) <= 1.0 + 1e-9


def test_membership_examples():
    mx = Maxwellian(Moments(1.0, (0, 0, 0), 1.0))
    rep = membership_c_eps(Saturated(mx, 0.2), 0.2)
    assert rep["member"] and rep["gaussian_floor"]
    rep2 = membership_c_eps(Saturated(Maxwellian(Moments(2.0, (0, 0, 0), 1.0)),
                                      0.2), 0.2)
    assert not rep2["member"] and not rep2["conditions"]["rho_bracket"]
    rep3 = membership_c_eps(Saturated(Maxwellian(Moments(1.0, (1, 0, 0), 1.0)),
                                      0.1), 0.1)
    assert not rep3["member"] and not rep3["conditions"]["u_bracket"]
    with pytest.raises(DomainError):
        membership_c_eps(mx, 0.7)


def test_run_battery_all_hold():
    mem = make_member(seed=13)
    reports = run_battery(mem, collision_n=12)
    assert len(reports) == 12
    assert all(r.holds for r in reports)
    ids = [r.inequality_id for r in reports]
    assert "entropy_comparison_lower" in ids
    assert "production_sandwich" in ids


def test_cercignani_classical_path():
    # kappa0 = 1, eps = 0: the plain super-quadratic lower bound
    gm = GaussianMixture(((0.05, (0.9, 0, 0), 0.8), (0.05, (-0.9, 0, 0), 0.8)))
    quad = member_collision_quad(make_member(seed=1), n=12)
    rep = audit_cercignani_superquadratic(gm, 0.0, 1.0, quad=quad)
    assert rep.holds
    assert rep.rhs / max(rep.lhs, 1e-300) >= 1.0


def test_full_default_battery_via_cli(tmp_path):
    # the documented default battery: 50 members x 12 inequalities
    from keq.cli import main
    out = tmp_path / "default.csv"
    code = main(["audit", "--suite", "default", "--seed", "42",
                 "--count", "50", "--quad", "12", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 1 + 50 * 12
    holds_col = [line.split(",")[6] for line in lines[1:]]
    assert all(h == "true" for h in holds_col)


def test_suite_spec_json_round_trip_and_unknown_field():
    spec = TestSuiteSpec(seed=1, count=3)
    doc = spec.to_json()
    assert TestSuiteSpec.from_json(doc) == spec
    doc["bogus"] = 1
    with pytest.raises(DomainError, match="bogus"):
        TestSuiteSpec.from_json(doc)
