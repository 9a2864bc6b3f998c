"""Sequential-in-time PDE solving with natural-gradient fitted neural networks."""
from .baselines import (AdamState, ObtiConfig, TdvpConfig, adam_step, obti_step,
                        projection_residual, tdvp_rhs, tdvp_rk4_step)
from .geometry import CollocationGrid, l2_inner, l2_norm, make_rng, subsample_params, tensor_grid
from .linalg import LstsqConfig, cgls, solve_lstsq, svd_lstsq
from .net import (FieldBatch, NetworkArch, TrigLinearModel, evaluate_field, init_params,
                  param_jacobian, sobolev_stack)
from .pde import (InitialCondition, PdeSpec, allen_cahn, apply_operator, burgers, heat,
                  initial_condition, named_ic, two_dim_exp, three_dim_trig, burgers_alt)
from .spectral import (ReferenceSolution, SpectrumField, dft, heat_exact, idft, spectral_rhs,
                       spectral_rk4_evolve, truncate_spectrum)
from .stepper import (EvolutionState, FitConfig, FitResult, StepperConfig, Trajectory,
                      build_target_euler, evolve, fit_initial, residual_bound, step_euler,
                      step_heun, step_rk4, teng_stepper)

__version__ = "0.1.0"
