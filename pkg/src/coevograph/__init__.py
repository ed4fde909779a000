"""Nonlocal continuity equations on co-evolving weighted graphs.

Mass sits on vertices and is transported along edges by an upwind-style
flux; the edge weights relax toward a mass-dependent target.  The package
provides the discrete nonlocal calculus, admissible flux interpolations,
kernel-driven velocity/weight fields, time integrators and a Picard solver,
contraction-constant analysis, and slow/fast/graph-limit convergence
studies, plus a config-driven CLI.
"""

__version__ = "0.1.0"

from .analysis import (
    ContractionInputs,
    ContractionReport,
    ConvergenceStudy,
    contraction_report,
    default_panel,
    fast_limit_study,
    fit_rate,
    graph_limit_study,
    slow_limit_study,
    working_constants,
)
from .dynamics import (
    DivergenceError,
    IntegratorConfig,
    NonConvergenceError,
    PicardConfig,
    SystemSpec,
    eta_exact,
    eta_exact_curve,
    integrate,
    picard_solve,
    rhs,
)
from .fields import (
    OmegaFunctional,
    VelocityField,
    constant_omega,
    convolution_omega,
    cosine_window_kernel,
    edge_omega_kernel,
    estimate_constants,
    eval_omega,
    eval_velocity,
    gaussian_kernel,
    constant_kernel,
    interaction_velocity,
    modulation_linexp,
    modulation_one,
    modulation_sine,
    pair_omega_kernel,
    tabulated_omega,
    tabulated_velocity,
    zero_velocity,
)
from .flux import (
    FluxInterpolation,
    antisymmetrize,
    assemble_flux,
    check_admissibility,
    interpolation,
    mass_rhs,
)
from .graph_core import (
    GridMismatchError,
    Trajectory,
    VertexSet,
    d_infinity,
    nonlocal_divergence,
    nonlocal_gradient,
    sup_norm,
    tv_norm,
)
