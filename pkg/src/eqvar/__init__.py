"""Causal ordering of equal-variance linear SEMs by conditional variances."""

from .covariance import (
    CovarianceEstimate,
    SubsetResult,
    best_subset_conditional_variance,
    conditional_variance,
    exhaustive_subset_oracle,
    precision_diagonal,
    sample_covariance,
)
from .edges import EstimatedGraph, LassoFit, cv_lasso, lasso_fit, select_edges
from .errors import (
    AllTied,
    CombinatorialBlowup,
    CyclicGraph,
    EqvarError,
    Exhausted,
    LengthMismatch,
    NoConvergence,
    NonPositiveScale,
    NonZeroDiagonal,
    SingularConditioningSet,
    SizeMismatch,
    TooFewRows,
)
from .metrics import EdgeMetrics, edge_metrics, kendall_tau, kendall_tau_pairs, ordering_to_ranks, true_ranks
from .ordering import (
    BoundInputs,
    OrderingConfig,
    discover_order,
    order_bottomup,
    order_topdown,
    sample_size_bound_highdim,
    sample_size_bound_lowdim,
)
from .sem import (
    ErrorSpec,
    Ordering,
    SemModel,
    WeightedDag,
    is_topological,
    population_covariance,
    rescale_known_ratios,
    validate_dag,
    zeta,
)
from .simulate import (
    CoeffLaw,
    GraphRecipe,
    gen_chain_random,
    gen_fully_connected,
    gen_highdim,
    gen_peters,
    generate,
    make_rng,
    sample_data,
)

__version__ = "0.1.0"
