"""Quantum-kinetic equilibria, entropy functionals, and quadrature-certified
entropy inequalities for blocked (Pauli) and bosonic statistics."""

__version__ = "0.1.0"

from .distributions import (BoseEinsteinStat, DegenerateBall, Distribution,
                            FermiDiracStat, GaussianMixture, Gridded,
                            IndicatorBelow, Maxwellian, Moments, One,
                            PolyBracket, ProductWeight, Saturated, WeightSpec,
                            distribution_from_json, min_directional_temperature,
                            moments_of, phi_eps, phi_eps_inv, phi_image,
                            saturate, weighted_lp_norm)
from .equilibrium import (GAMMA_DAG, EquilibriumSolution, eval_I, eval_I_be,
                          eval_P, fermi_temperature, gamma_ratio,
                          linf_saturation_bound, solve_equilibrium)
from .entropy import (BoseEinsteinEntropy, ClassicalEntropy, FermiDiracEntropy,
                      GeneralEntropy, entropy, relative_entropy,
                      relative_entropy_representation, rg_curve, rg_derivative)
from .collision import (CollisionQuad, HardSphere, Maxwell, OverMaxwellian,
                        SphereQuadrature, SuperQuadratic,
                        entropy_production_bfd, entropy_production_landau,
                        post_collision, q_bfd, weak_form_moments)
from .audit import (AuditReport, TestSuiteSpec, audit_ckp,
                    audit_entropy_sandwich, audit_lambda_bounds, lambda_fn,
                    make_suite, membership_c_eps)
from .dynamics import SimulationConfig, TrajectoryDiagnostics, run, step
from .errors import (BlowupError, CondensationRegime, DegenerateInput,
                     DomainError, KeqError, QuadratureError, RootBracketFailure)
from .quadrature import VelocityGrid, adaptive_gauss
