"""Numerical laboratory for the constrained minimax eigenvalue levels of the
scalar field equation -Delta u + V(x) u = lambda |u|^(p-2) u on the unit
L^p sphere."""

__version__ = "0.1.0"

from .domain import (Grid, ProblemSpec, WSpec, build_grid, dual_norm_W,
                     eval_W, load_problem_spec)
from .field import (GridFunction, NodalLabeling, lp_norm, lp_normalize,
                    nodal_domains, split_signs, translate)
from .energy import (EnergyBreakdown, deviation_bound, energy_J,
                     euler_lagrange_residual, kinetic_energy,
                     manifold_gradient, mass_I)
from .groundstate import (DecayFit, RadialProfile, fit_decay,
                          minimize_lambda1, profile_on_grid, shoot_excited,
                          shoot_ground)
from .pathlab import (PathFamily, SampledPath, SphereMap, balanced_point,
                      disjoint_support_max, gamma_R, nodal_sphere_map,
                      overlap_integrals, path_max_J, translated_bump_path)
from .minimax import (Lambda2Bounds, LevelsReport, ProfileDiagnostic,
                      bump_diagnostic, lambda2_bounds, lambda2_radial,
                      lambda_sharp, multiplicity_floor, nodality_check,
                      refine_path)
