import math

import numpy as np
import pytest

from keq.distributions import (DegenerateBall, GaussianMixture, Maxwellian,
                               Moments, Saturated, default_grid, moments_of)
from keq.equilibrium import (GAMMA_DAG, P_FLOOR, ZETA_3_2, ZETA_5_2,
                             SpecialFunctionTable, eval_I, eval_I_be, eval_P,
                             fermi_temperature, gamma_ratio,
                             linf_saturation_bound, solve_equilibrium)
from keq.errors import CondensationRegime, DegenerateInput, DomainError


def eps_for_gamma(rho, T, gamma):
    # gamma = T / ((1/2)(3 eps rho / 4 pi)^{2/3})
    return (2.0 * T / gamma) ** 1.5 * (4.0 * np.pi / (3.0 * rho))


def test_fermi_temperature_values():
    assert abs(fermi_temperature(4 * np.pi / 3, 1.0) - 0.5) < 1e-14
    assert fermi_temperature(1.0, 0.0) == 0.0
    assert abs(fermi_temperature(4 * np.pi / 3, 8.0) - 2.0) < 1e-13


def test_gamma_ratio_values():
    assert abs(gamma_ratio(Moments(4 * np.pi / 3, (0, 0, 0), 0.5), 1.0) - 1.0) < 1e-14
    ball = moments_of(DegenerateBall(4 * np.pi / 3, (0, 0, 0), 1.0))
    assert abs(gamma_ratio(ball, 1.0) - 0.4) < 1e-14
    assert gamma_ratio(Moments(1.0, (0, 0, 0), 1.0), 0.0) == math.inf


def test_eval_I_large_tau_asymptotic():
    # sandwich e^{-r^2}/(1+t) <= 1/(1+t e^{r^2}) <= e^{-r^2}/t
    tau = 1e6
    assert abs(tau * eval_I(2, tau) - math.sqrt(math.pi) / 4) \
        < 1e-5 * (math.sqrt(math.pi) / 4)


def test_eval_I_monotone_in_tau():
    assert eval_I(2, 1.0) > eval_I(2, 2.0)
    assert eval_I(4, 0.5) > eval_I(4, 0.7)


def test_P_above_floor_and_monotone():
    assert eval_P(0.1) > P_FLOOR
    taus = np.geomspace(1e-6, 1e6, 25)
    ps = [eval_P(t) for t in taus]
    assert all(p1 < p2 for p1, p2 in zip(ps, ps[1:]))
    assert all(p > P_FLOOR for p in ps)


def test_special_function_table_check():
    table = SpecialFunctionTable()
    for t in (0.01, 0.1, 1.0, 10.0, 100.0):
        table.P(t)
    assert table.check()


def test_classical_solution_closed_form():
    sol = solve_equilibrium(Moments(1.0, (0, 0, 0), 1.0), 0.0, "classical")
    assert abs(sol.a - math.log((2 * math.pi) ** -1.5)) < 1e-14
    assert sol.b == -0.5
    assert sol.gamma == math.inf and sol.fermi_T == 0.0


def test_degenerate_rejection_names_threshold():
    m = moments_of(DegenerateBall(4 * np.pi / 3, (0, 0, 0), 1.0))
    with pytest.raises(DegenerateInput, match="2/5"):
        solve_equilibrium(m, 1.0, "fermi")
    # truncated density that lands 1.3e-8 above the threshold: unresolvable
    with pytest.raises(DegenerateInput, match="2/5"):
        solve_equilibrium(Moments(4.18879, (0, 0, 0), 0.2), 1.0, "fermi")


def test_fermi_solve_matches_moments():
    sol = solve_equilibrium(Moments(1.0, (0, 0, 0), 1.0), 0.2, "fermi")
    got = moments_of(sol.distribution)
    assert abs(got.rho - 1.0) < 1e-6
    assert abs(got.T - 1.0) < 1e-6
    assert float(np.max(np.abs(got.u))) < 1e-9


def test_round_trip_randomized_suite():
    rng = np.random.default_rng(123)
    for _ in range(50):
        rho = rng.uniform(0.5, 2.0)
        T = rng.uniform(0.5, 2.0)
        u = rng.uniform(-1, 1, 3)
        gamma = rng.uniform(0.55, 50.0)
        eps = eps_for_gamma(rho, T, gamma)
        sol = solve_equilibrium(Moments(rho, u, T), eps, "fermi")
        assert float(np.max(sol.residual)) <= 1e-6


def test_classical_limit_continuity():
    mx = Maxwellian(Moments(1.0, (0, 0, 0), 1.0))
    pts = default_grid(mx).nodes()
    peak = mx.sup_estimate()[0]
    prev = None
    for eps in (1e-2, 1e-3, 1e-4):
        sol = solve_equilibrium(Moments(1.0, (0, 0, 0), 1.0), eps, "fermi")
        dist = float(np.max(np.abs(sol.distribution.value(pts) - mx.value(pts))))
        rel = dist / peak
        if prev is not None:
            assert rel < prev
        prev = rel
    assert prev <= 0.05


def test_galilean_shift_leaves_exponents():
    s0 = solve_equilibrium(Moments(1.3, (0, 0, 0), 0.8), 0.7, "fermi")
    s1 = solve_equilibrium(Moments(1.3, (0.5, -1.0, 2.0), 0.8), 0.7, "fermi")
    assert abs(s0.a - s1.a) <= 1e-12
    assert abs(s0.b - s1.b) <= 1e-12


def test_degenerate_ball_gamma_randomized():
    rng = np.random.default_rng(7)
    for _ in range(20):
        rho = rng.uniform(0.2, 3.0)
        eps = rng.uniform(0.1, 5.0)
        m = moments_of(DegenerateBall(rho, rng.uniform(-1, 1, 3), eps))
        assert abs(gamma_ratio(m, eps) - 0.4) <= 1e-9


def test_gamma_dag_value():
    assert abs(GAMMA_DAG - (4 / math.pi) ** (1 / 3) * (5 / 3) ** (5 / 3)) < 1e-15
    assert 2.5 < GAMMA_DAG < 2.6


def test_linf_saturation_bound():
    # gamma at the threshold gives rhs exactly 2/3
    rho, T = 1.0, 1.0
    eps = eps_for_gamma(rho, T, GAMMA_DAG)
    sol = solve_equilibrium(Moments(rho, (0, 0, 0), T), eps, "fermi")
    lhs, rhs, holds = linf_saturation_bound(sol)
    assert abs(rhs - 2.0 / 3.0) < 1e-9
    assert holds
    # any solved statistic above the threshold satisfies the bound
    for gamma in (3.0, 5.0, 20.0):
        eps = eps_for_gamma(rho, T, gamma)
        sol = solve_equilibrium(Moments(rho, (0, 0, 0), T), eps, "fermi")
        lhs, rhs, holds = linf_saturation_bound(sol)
        assert lhs <= rhs + 1e-12 and holds
    low = solve_equilibrium(Moments(rho, (0, 0, 0), T),
                            eps_for_gamma(rho, T, 1.0), "fermi")
    with pytest.raises(DomainError):
        linf_saturation_bound(low)


def test_bose_solve_and_condensation():
    sol = solve_equilibrium(Moments(1.0, (0.1, 0, 0), 1.0), 0.5, "bose")
    assert float(np.max(sol.residual)) <= 1e-6
    tc = (1.0 * 1.0 / ZETA_3_2) ** (2 / 3) / (2 * np.pi)
    threshold = ZETA_5_2 / ZETA_3_2 * tc
    near = solve_equilibrium(Moments(1.0, (0, 0, 0), threshold * 1.05), 1.0, "bose")
    assert float(np.max(near.residual)) <= 1e-6
    with pytest.raises(CondensationRegime):
        solve_equilibrium(Moments(1.0, (0, 0, 0), threshold * 0.9), 1.0, "bose")


def test_bose_special_function_near_one():
    # the sinh substitution keeps the near-critical layer resolved
    v1 = eval_I_be(2, 1.0 + 1e-6)
    v2 = eval_I_be(2, 1.0 + 1e-5)
    assert v1 > v2 > 0
    # reference: I_2^+(1) = (sqrt(pi)/4) zeta(3/2) by termwise expansion
    ref = math.sqrt(math.pi) / 4 * ZETA_3_2
    assert abs(eval_I_be(2, 1.0 + 1e-9) - ref) < 1e-4 * ref


def test_saturated_mixture_round_trip():
    gm = GaussianMixture(((0.8, (0.5, 0, 0), 1.0), (0.4, (-0.7, 0.3, 0), 0.7)))
    f = Saturated(gm, 0.35)
    m = moments_of(f)
    sol = solve_equilibrium(m, 0.35, "fermi")
    got = moments_of(sol.distribution)
    assert abs(got.rho - m.rho) / m.rho < 1e-6
    assert abs(got.T - m.T) / m.T < 1e-6
