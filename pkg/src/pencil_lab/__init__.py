"""pencil-lab: ellipticity checks, half-line model solvers and a priori
estimate verification for operator pencils with general boundary conditions."""

__version__ = "0.1.0"

from .errors import (
    DegenerateProblemError,
    InputError,
    PencilLabError,
    RootFindingError,
    StructuralError,
)
from .newton import (
    NewtonPolygon,
    WeightSpec,
    build_polygon,
    epsilon_weight,
    phi_weight,
    shifted_phi,
    shifted_weight,
    theta_weight,
    weight_equiv,
    weight_sum,
)
from .symbols import (
    BoundarySet,
    EpsilonPencil,
    MultiPoly,
    OperatorPencil,
    UniPoly,
    ValidationReport,
    eval_pencil,
    eval_poly,
    from_epsilon,
    homogeneous_part,
    principal_pencil,
    restrict_to_normal,
    scale_symbol,
    to_epsilon,
    validate_problem,
)
from .rootsplit import (
    HalfPlaneSplit,
    RootGroupsReport,
    RootSet,
    a_plus_factor,
    find_roots,
    q_plus,
    q_polynomial,
    split_half_planes,
    verify_root_groups,
)
from .elliptic_check import (
    CheckConfig,
    EllipticityReport,
    MarginReport,
    check_epsilon,
    check_regular_degeneration,
    condition_b_scan,
    condition_c,
    condition_d,
    full_check,
    interior_margin,
    lopatinskii_det,
    lopatinskii_matrix,
)
from .halfline import (
    EstimateTable,
    ExpPolySolution,
    SolverConfig,
    boundary_values,
    check_homogeneity,
    deriv_l2_norm,
    estimate_table,
    fundamental_solution,
    ode_residual,
    phi_ratio_table,
    solve_bvp,
)
from .estimate_lab import (
    BoundaryDataSpec,
    RatioTable,
    SpectralGrid,
    apriori_ratio,
    eps_apriori,
    gaussian_profile,
    halfspace_solution,
    lhs_seminorm,
    parametrix_p0,
    ring_profile,
    scaling_identity_test,
    wholespace_ratio,
)
