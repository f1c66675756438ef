"""Ensemble time stepping for heat conduction with temperature-dependent
conductivity on P1 triangular meshes.

The implicit operator is shared by every ensemble member and factorized
once per run; stability of the stepping is independent of the timestep.
"""

from .assembly import (
    SparseSymMatrix,
    apply_dirichlet,
    assemble_boundary_load,
    assemble_boundary_mass,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    error_norms,
    interpolate,
    l2_norm,
)
from .backend import active_backend
from .conductivity import ConductivityModel, kappa_eval, kappa_prime_field
from .ensemble import (
    EnsembleState,
    MemberSpec,
    Scenario,
    StepReport,
    TimeSeries,
    detect_steady_state,
    ensemble_mean,
    initial_state,
    prepare_factor,
    run,
    run_until_steady,
    shared_operator,
    step_mixed,
    step_robin,
)
from .mesh import (
    BoundaryPartition,
    DirichletBC,
    Mesh,
    NeumannBC,
    RobinBC,
    build_structured_mesh,
    export_mesh,
    import_mesh,
    mesh_size,
)
from .solver import (
    FactorizationError,
    SpdFactor,
    factorization_count,
    factorize,
    pcg_solve,
    reset_factorization_count,
    solve_block,
)
from .verification import (
    convergence_rate,
    convergence_study,
    steady_state_analytic,
    steady_state_study,
    triple_norms,
)

__version__ = "0.1.0"
