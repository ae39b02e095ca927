"""Group-sparse recovery from block-diagonal compressive measurements."""
from .analysis import (
    CoherenceReport,
    GripEstimate,
    coherence_mu,
    coherence_omega,
    disjoint_support_check,
    factorization_check,
    gnsp_falsify,
    gric,
    lift_opnorm_V,
    lift_V,
    lift_V_tilde,
)
from .basis import UnitaryBasis, dft_matrix, make_basis, partial_block, random_unitary
from .bounds import (
    BoundInputs,
    GnspConstants,
    chaos_Eu,
    covnum_maurey,
    covnum_volumetric,
    dense_lower_bound,
    empirical_covering,
    extended_maurey_bound,
    gamma2_entropy_estimate,
    grip_to_gnsp,
    maurey_K,
    measurement_bound,
)
from .group_model import (
    GroupPartition,
    GroupSparseSignal,
    best_group_approx,
    group_norm,
    group_norms,
    group_support_count,
    random_group_sparse,
)
from .sensing import (
    BlockDiagonalOperator,
    DenseOperator,
    SubgaussianEnsemble,
    adjoint_apply,
    apply,
    draw_operator,
    materialize,
    measure,
)
from .solver import RecoveryResult, SolverConfig, recovery_error_bound, solve_group_qcbp

__version__ = "0.1.0"
