"""zenolab: sequential projective measurement on finite quantum systems.

The package separates what is measured from what is merely overlapped:
state-overlap autocorrelation is shift-invariant with zero initial
slope, while observable probabilities decay at a rate set by the
state/observable commutator.  Measurement sequences, the refinement
limit, random-axis monitoring, and golden-rule decay on discretized
continua build on that kernel, with a scenario-file CLI on top.
"""

from ._version import __version__
from .errors import (
    DimensionMismatchError,
    StructuralError,
    ZeroProbabilityBranchError,
)
from .operators import (
    PAULIS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityOperator,
    Operator,
    StateVector,
    commutator_norm,
    evolve,
    max_abs,
    projector_onto,
    propagator,
    spectral_decompose,
    tolerances,
)
from .probability import (
    DerivativeProbe,
    ProbabilityValue,
    WeightedObservable,
    autocorrelation,
    central_difference,
    derivative_probe,
    initial_decay_rate,
    probability,
    zeno_condition_holds,
)
from .measurement import (
    DecayCurve,
    ExponentialFit,
    MeasurementSequence,
    Trajectory,
    ZenoLimitPoint,
    collapse,
    conditional_product_curve,
    fit_exponential,
    monte_carlo_curve,
    random_axis_expectation_curve,
    random_axis_sequence,
    simulate_trajectory,
    spin_projector,
    zeno_limit_study,
)
from .goldenrule import (
    Channel,
    ChannelRates,
    ContinuumModel,
    MultichannelCheck,
    RateSweepPoint,
    build_model,
    channel_orthogonality_check,
    decayed_spectrum,
    golden_rule_rate,
    monitored_decay_experiment,
    multichannel_decay_check,
    rate_sweep,
)
from .scenario import (
    Check,
    RunReport,
    Scenario,
    ScenarioError,
    load_scenario,
    parse_scenario,
)
from .scenario import run as run_scenario
from .scenario import verify as verify_suite

__all__ = [
    "__version__",
    "DimensionMismatchError",
    "StructuralError",
    "ZeroProbabilityBranchError",
    "PAULIS",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "DensityOperator",
    "Operator",
    "StateVector",
    "commutator_norm",
    "evolve",
    "max_abs",
    "projector_onto",
    "propagator",
    "spectral_decompose",
    "tolerances",
    "DerivativeProbe",
    "ProbabilityValue",
    "WeightedObservable",
    "autocorrelation",
    "central_difference",
    "derivative_probe",
    "initial_decay_rate",
    "probability",
    "zeno_condition_holds",
    "DecayCurve",
    "ExponentialFit",
    "MeasurementSequence",
    "Trajectory",
    "ZenoLimitPoint",
    "collapse",
    "conditional_product_curve",
    "fit_exponential",
    "monte_carlo_curve",
    "random_axis_expectation_curve",
    "random_axis_sequence",
    "simulate_trajectory",
    "spin_projector",
    "zeno_limit_study",
    "Channel",
    "ChannelRates",
    "ContinuumModel",
    "MultichannelCheck",
    "RateSweepPoint",
    "build_model",
    "channel_orthogonality_check",
    "decayed_spectrum",
    "golden_rule_rate",
    "monitored_decay_experiment",
    "multichannel_decay_check",
    "rate_sweep",
    "Check",
    "RunReport",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "verify_suite",
]
