"""Quantum Fisher information and the fragility of probe states under phase noise."""

from .errors import (
    ApproximationRegimeViolated,
    BadSpec,
    DimensionMismatch,
    InsufficientMembers,
    NotHermitian,
    NotPSD,
    NotSquare,
    NotUnitTrace,
    QFragilityError,
    QuadratureNotConverged,
    SingularProbability,
)
from .fisher import (
    POVM,
    BoundReport,
    bound_report,
    classical_fi,
    qfi_lower_bound,
    qfi_mixed,
    qfi_pure,
    qfi_upper_bounds,
)
from .fluctuations import (
    AveragedState,
    PeriodicGaussian,
    PurityLossResult,
    average_state_montecarlo,
    average_state_quadrature,
    bound_chain,
    purity_loss_analytic_purified,
    purity_loss_analytic_system,
    purity_loss_empirical,
)
from .states import (
    BipartitePureState,
    DensityMatrix,
    HermitianOperator,
    PureState,
    eig_hermitian,
    embed_on_system,
    evolve,
    partial_trace_memory,
    purify,
    purity,
    validate_density,
)
from .yu import (
    PureEnsemble,
    average_variance,
    build_Y,
    build_Z,
    ensemble_purity_loss,
    optimal_unravelling,
    random_unravelling,
)

__version__ = "0.1.0"
