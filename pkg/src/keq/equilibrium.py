"""Equilibrium statistics matching prescribed moments.

The Maxwellian case is closed-form.  The saturated (Pauli) and bosonic cases
reduce to one scalar root solve on the strictly increasing ratio
P(tau) = I4(tau) I2(tau)^{-5/3} built from the special functions

    I_s(tau)     = int_0^inf r^s / (1 + tau e^{r^2}) dr        (Pauli)
    I_s^+(tau)   = int_0^inf r^s / (tau e^{r^2} - 1) dr        (bosonic, tau > 1)

after which the exponents (a, b) follow explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (BoseEinsteinStat, DegenerateBall, Distribution,
                            FermiDiracStat, Maxwellian, Moments, moments_of)
from .errors import (CondensationRegime, DegenerateInput, DomainError,
                     RootBracketFailure)
from .quadrature import adaptive_gauss

#: (4/pi)^{1/3} (5/3)^{5/3}; saturation threshold for the sup bound
GAMMA_DAG = (4.0 / math.pi) ** (1.0 / 3.0) * (5.0 / 3.0) ** (5.0 / 3.0)

#: lower edge of the range of P
P_FLOOR = 3.0 ** (5.0 / 3.0) / 5.0

# Riemann zeta at 3/2 and 5/2 (defining series sum_{k>=1} k^{-s}), 30 digits
ZETA_3_2 = 2.61237534868548834334856756792
ZETA_5_2 = 1.34148725725091717975676969335

_TAU_FLOOR = 1e-250
_TRUNC = 1e-18


def fermi_temperature(rho: float, eps: float) -> float:
    """Saturation temperature (1/2)(3 eps rho / 4 pi)^{2/3}; zero in the classical case."""
    if rho <= 0:
        raise DomainError("rho must be positive")
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    if eps == 0.0:
        return 0.0
    return 0.5 * (3.0 * eps * rho / (4.0 * math.pi)) ** (2.0 / 3.0)


def gamma_ratio(m: Moments, eps: float) -> float:
    """T / T_F(rho, eps), with +inf in the classical case."""
    tf = fermi_temperature(m.rho, eps)
    return math.inf if tf == 0.0 else m.T / tf


def _r_max(s: int, tau: float) -> float:
    # integrand < r^s e^{-r^2} / tau; cut where that falls below _TRUNC * tau
    r2 = max(4.0, math.log(1.0 / (_TRUNC * tau)) if _TRUNC * tau < 1 else 4.0)
    for _ in range(4):
        r2 = max(4.0, math.log(max(math.sqrt(r2), 1.0) ** s / (_TRUNC * tau)))
    return math.sqrt(r2)


def eval_I(s: int, tau: float) -> float:
    """I_s(tau) for s in {2, 4} by adaptive panels, truncated in the far tail."""
    if s not in (2, 4):
        raise DomainError("s must be 2 or 4")
    if tau <= 0:
        raise DomainError("tau must be positive")

    def integrand(r):
        er = np.exp(-r * r)
        return r ** s * er / (er + tau)

    breaks = (math.sqrt(math.log(1.0 / tau)),) if tau < 1.0 else ()
    return adaptive_gauss(integrand, 0.0, _r_max(s, tau), breakpoints=breaks)


def eval_I_be(s: int, tau: float) -> float:
    """Bosonic counterpart of eval_I, defined for tau > 1.

    Near tau = 1 the sharp layer at r ~ sqrt(tau-1) is resolved with the
    substitution r = sinh(w) sqrt((tau-1)/tau) on the innermost panel.
    """
    if s not in (2, 4):
        raise DomainError("s must be 2 or 4")
    if tau <= 1.0:
        raise DomainError("tau must exceed 1")

    def integrand(r):
        # r^s e^{-r^2} / (tau - e^{-r^2}) never cancels, even as tau -> 1
        er = np.exp(-r * r)
        return r ** s * er / (tau - er)

    r_hi = _r_max(s, tau)
    if tau - 1.0 >= 1e-3:
        return adaptive_gauss(integrand, 0.0, r_hi)
    c = math.sqrt((tau - 1.0) / tau)
    w_hi = math.asinh(0.1 / c)

    def inner(w):
        r = c * np.sinh(w)
        er = np.exp(-r * r)
        return r ** s * er / (tau - er) * c * np.cosh(w)

    head = adaptive_gauss(inner, 0.0, w_hi)
    tail = adaptive_gauss(integrand, 0.1, r_hi)
    return head + tail


def eval_P(tau: float, bose: bool = False) -> float:
    I = eval_I_be if bose else eval_I
    return I(4, tau) * I(2, tau) ** (-5.0 / 3.0)


@dataclass
class SpecialFunctionTable:
    """Memo of I_s / P evaluations with cheap self-checks on the cached samples."""

    bose: bool = False

    def __post_init__(self):
        self._cache = {}

    def I(self, s: int, tau: float) -> float:
        key = (s, tau)
        if key not in self._cache:
            self._cache[key] = eval_I_be(s, tau) if self.bose else eval_I(s, tau)
        return self._cache[key]

    def P(self, tau: float) -> float:
        return self.I(4, tau) * self.I(2, tau) ** (-5.0 / 3.0)

    def check(self) -> bool:
        taus = sorted({t for (_, t) in self._cache})
        ps = [self.P(t) for t in taus]
        rising = all(p1 < p2 for p1, p2 in zip(ps, ps[1:]))
        above = all(p > P_FLOOR for p in ps) if not self.bose else True
        return rising and above


def _solve_tau(target: float, bose: bool) -> float:
    """Root of P(tau) = target by geometric bracketing, bisection, Newton polish."""
    table = SpecialFunctionTable(bose=bose)
    P = table.P
    tau = 2.0 if bose else 1.0
    p0 = P(tau)
    if p0 < target:
        lo, hi = tau, tau
        for _ in range(60):
            hi *= 10.0
            if P(hi) >= target:
                break
            lo = hi
        else:
            raise RootBracketFailure("could not bracket the target from above")
    else:
        hi, lo = tau, tau
        for _ in range(60):
            lo = 1.0 + (lo - 1.0) / 10.0 if bose else lo / 10.0
            if P(lo) <= target:
                break
            hi = lo
        else:
            # P approaches its lower edge only logarithmically, so a target
            # this deep is beyond floating-point resolution of the exponents
            if bose:
                raise RootBracketFailure(
                    "target below the bosonic branch; no admissible statistic")
            raise DegenerateInput(
                "moments are numerically indistinguishable from the saturated"
                " ball state (gamma = 2/5)", gamma=None)
    while hi - lo > 1e-14 * lo:
        mid = 0.5 * (lo + hi)
        if P(mid) < target:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    for _ in range(5):
        h = 1e-6 * tau
        deriv = (P(tau + h) - P(tau - h)) / (2.0 * h)
        if deriv <= 0:
            break
        step = (P(tau) - target) / deriv
        new = tau - step
        if not (lo * 0.5 <= new <= hi * 2.0):
            break
        tau = new
    return tau


@dataclass(frozen=True)
class EquilibriumSolution:
    """Solved statistic plus its exponents and diagnostics."""

    distribution: Distribution
    a: float
    b: float
    u: np.ndarray
    gamma: float
    fermi_T: float
    residual: np.ndarray
    linf_bound_check: bool

    def to_json(self) -> dict:
        return {
            "distribution": self.distribution.to_json(),
            "coefficients": {"a": self.a, "b": self.b, "u": self.u.tolist()},
            "diagnostics": {
                "gamma": self.gamma,
                "fermi_T": self.fermi_T,
                "residual": self.residual.tolist(),
                "linf_bound_check": self.linf_bound_check,
            },
        }


def _moment_residual(dist: Distribution, m: Moments) -> np.ndarray:
    got = moments_of(dist)
    scale_u = max(float(np.max(np.abs(m.u))), math.sqrt(m.T))
    return np.array([
        abs(got.rho - m.rho) / m.rho,
        float(np.max(np.abs(got.u - m.u))) / scale_u,
        abs(got.T - m.T) / m.T,
    ])


def solve_equilibrium(m: Moments, eps: float, statistics: str = "fermi",
                      check_residual: bool = True) -> EquilibriumSolution:
    """Statistic (Maxwellian, saturated, or bosonic) matching the moments m.

    Parameters
    ----------
    m : Moments
        Prescribed (rho, u, T).
    eps : float
        Quantum saturation scale; 0 selects the classical case regardless of
        `statistics`.
    statistics : {"fermi", "bose", "classical"}

    Raises
    ------
    DegenerateInput
        Pauli case with gamma at or numerically unresolvably near 2/5.
    CondensationRegime
        Bosonic case below the critical temperature threshold.
    RootBracketFailure
        The monotone solve could not bracket its target.
    """
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    gamma = gamma_ratio(m, eps)
    tf = fermi_temperature(m.rho, eps)
    if statistics == "classical" or eps == 0.0:
        a = math.log(m.rho * (2.0 * math.pi * m.T) ** -1.5)
        b = -0.5 / m.T
        dist = Maxwellian(m)
        return EquilibriumSolution(dist, a, b, m.u.copy(), gamma, tf,
                                   np.zeros(3), True)

    if statistics == "fermi":
        if gamma <= 0.4 + 1e-9:
            hint = " (the matching state is the saturated ball)" \
                if abs(gamma - 0.4) <= 1e-9 else ""
            raise DegenerateInput(
                f"gamma = {gamma!r} is at or below the degenerate threshold 2/5"
                + hint, gamma=gamma)
        target = 0.5 * 3.0 ** (5.0 / 3.0) * gamma
        try:
            tau = _solve_tau(target, bose=False)
        except DegenerateInput:
            raise DegenerateInput(
                f"gamma = {gamma!r} is too close to the degenerate threshold 2/5"
                " to resolve", gamma=gamma) from None
        a = -math.log(eps * tau)
        b = -(4.0 * math.pi * eval_I(2, tau) / (eps * m.rho)) ** (2.0 / 3.0)
        dist = FermiDiracStat(a, b, m.u.copy(), eps)
        res = _moment_residual(dist, m) if check_residual else np.zeros(3)
        if check_residual and float(np.max(res)) > 1e-6:
            raise DomainError(f"moment residual {res} exceeds 1e-6")
        bound_ok = True
        if gamma >= GAMMA_DAG:
            lhs, rhs, bound_ok = linf_saturation_bound_values(a, eps, gamma)
        return EquilibriumSolution(dist, a, b, m.u.copy(), gamma, tf, res, bound_ok)

    if statistics == "bose":
        t_c = (m.rho * eps / ZETA_3_2) ** (2.0 / 3.0) / (2.0 * math.pi)
        if m.T < (ZETA_5_2 / ZETA_3_2) * t_c * (1.0 - 1e-12):
            raise CondensationRegime(
                f"T = {m.T!r} below the critical threshold "
                f"{(ZETA_5_2 / ZETA_3_2) * t_c!r}")
        target = 0.5 * 3.0 ** (5.0 / 3.0) * gamma
        tau = _solve_tau(target, bose=True)
        a = -math.log(eps * tau)
        b = -(4.0 * math.pi * eval_I_be(2, tau) / (eps * m.rho)) ** (2.0 / 3.0)
        dist = BoseEinsteinStat(a, b, m.u.copy(), eps)
        res = _moment_residual(dist, m) if check_residual else np.zeros(3)
        if check_residual and float(np.max(res)) > 1e-6:
            raise DomainError(f"moment residual {res} exceeds 1e-6")
        return EquilibriumSolution(dist, a, b, m.u.copy(), gamma, tf, res, True)

    raise DomainError(f"unknown statistics {statistics!r}")


def linf_saturation_bound_values(a: float, eps: float, gamma: float):
    lhs = eps * math.exp(a)
    rhs = (2.0 / 3.0) * (gamma / GAMMA_DAG) ** -1.5
    return lhs, rhs, lhs <= rhs + 1e-12


def linf_saturation_bound(sol: EquilibriumSolution):
    """Check eps * e^a against (2/3)(gamma/gamma_dag)^{-3/2}; needs gamma >= gamma_dag."""
    if not isinstance(sol.distribution, FermiDiracStat):
        raise DomainError("bound applies to the saturated statistic only")
    if sol.gamma < GAMMA_DAG:
        raise DomainError(f"gamma = {sol.gamma} below gamma_dag = {GAMMA_DAG}")
    return linf_saturation_bound_values(sol.a, sol.distribution.epsilon, sol.gamma)


def degenerate_ball_for(m: Moments, eps: float) -> DegenerateBall:
    """The saturated ball carrying density m.rho at velocity m.u."""
    return DegenerateBall(m.rho, m.u.copy(), eps)
