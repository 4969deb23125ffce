"""A/B experiment analysis on an inventory-constrained booking platform.

Exact steady-state analysis, estimator asymptotics, information lower
bounds, analytic power curves, and an event-driven Monte Carlo engine for
Bernoulli customer-randomized experiments under inventory interference.
"""

from .model import (
    CustomerType,
    Distribution,
    NumericalError,
    PlatformModel,
    SignClass,
    ValidationError,
    ade,
    aggregate_types,
    booking_rate,
    classify_sign,
    dominates,
    gte,
    steady_state,
)
from .kernels import (
    augmented_kernel,
    interarrival_kernel,
    propagate_arrival_distributions,
    seen_state_kernel,
)
from .asymptotics import (
    AsymptoticReport,
    centered_variance,
    cov_tail_sum,
    dm_asymptotic_variance,
    fundamental_solve,
)
from .cramer_rao import CRBound, ValueFunction, cr_lower_bound, growth_scan, value_function
from .power import (
    PowerCurve,
    fnp_curves,
    naive_test_power,
    normal_quantile,
    power_curves,
    unbiased_test_power,
)
from .scenarios import (
    example_sign_inconsistent_alt,
    example_sign_inconsistent_null,
    logit_limits,
    logit_scenario,
    meanfield_family,
)
from .simulate import (
    ExchangeableMoments,
    ReplicationSummary,
    SimConfig,
    TrajectoryOutcome,
    exchangeable_oracle,
    run_replications,
    simulate_trajectory,
)

__version__ = "0.1.0"
