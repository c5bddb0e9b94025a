"""Simulation, exact computation and statistical checks for the two-colour
Pólya-Friedman mixed urn."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Color,
    DerivedConstants,
    DrawOutcome,
    Rule,
    StepDelta,
    Trajectory,
    UrnBatch,
    UrnParams,
    UrnState,
    derived_constants,
    drift,
    sample_outcome,
    simulate,
    simulate_batch,
    step,
    validate_params,
)
from .oracle import (  # noqa: E402
    EventCounts,
    ExactDistribution,
    conditional_checks,
    exact_distribution,
    exact_moment,
    verify_drift_bound,
)
from .rng import SEED_RULE, CounterRNG, replicate_seed, replicate_seeds  # noqa: E402
