"""Inverse Sturm-Liouville recovery from two eigenvalue sequences.

Given finitely many eigenvalues of two problems -u'' + q u = lam u on
[0, 1] that share the potential q and the left Robin parameter h0 but
differ in the right parameter (h1 vs h2), this package recovers
(h0, h1, h2, q) by conjugate-gradient descent on a least-squares
eigenvalue functional, and numerically certifies the bilinear-form
identities that rule out spurious strict local minima.
"""

__version__ = "0.1.0"

from .kernels import backend_name, set_backend
from .objective import (
    GradientVector,
    ProblemVector,
    SpectralTarget,
    eigen_gradient,
    eval_G,
    eval_grad_G,
)
from .optimize import (
    DescentConfig,
    IterateRecord,
    LineSearchConfig,
    StepFailure,
    pr_cg_minimize,
    reset_potential,
    steepest_descent_step,
)
from .slcore import (
    Eigenpair,
    Potential,
    RobinPair,
    SolverFailure,
    solve_eigenfunction,
    solve_eigenvalue,
    solve_eigenvalues,
    solve_ivp_backward,
)
from .spectra import (
    NoiseSpec,
    asymptotic_remainders,
    benchmark_step_ramp,
    check_interlacing,
    default_index_set,
    generate_target,
    smooth_default,
)
from .verify import (
    gamma_form,
    gamma_tilde_bridge,
    independence_smoke,
    lemma_biorthogonality,
)

__all__ = [
    "__version__",
    "backend_name",
    "set_backend",
    "Potential",
    "RobinPair",
    "Eigenpair",
    "SolverFailure",
    "solve_eigenvalue",
    "solve_eigenvalues",
    "solve_eigenfunction",
    "solve_ivp_backward",
    "ProblemVector",
    "SpectralTarget",
    "GradientVector",
    "eval_G",
    "eval_grad_G",
    "eigen_gradient",
    "DescentConfig",
    "LineSearchConfig",
    "IterateRecord",
    "StepFailure",
    "pr_cg_minimize",
    "steepest_descent_step",
    "reset_potential",
    "NoiseSpec",
    "generate_target",
    "default_index_set",
    "benchmark_step_ramp",
    "smooth_default",
    "check_interlacing",
    "asymptotic_remainders",
    "gamma_form",
    "lemma_biorthogonality",
    "gamma_tilde_bridge",
    "independence_smoke",
]
