"""Reliability of systems whose nodes share a correlated NHPP workload."""

from .config import ConfigError, dump_config, load_config, parse_config
from .node_survival import (
    NodeSpec,
    baseline_reliability,
    conditional_node_survival,
    f_kernel,
    node_survival_unconditional,
)
from .process import (
    ArrivalRealization,
    Constant,
    IntensityFunction,
    Linear,
    PiecewiseConstant,
    SumIntensity,
    mean_function,
    sample_arrivals,
    superpose,
)
from .quadrature import QuadratureError, QuadratureSettings
from .simulate import (
    EstimatorConfig,
    estimate_stream_covariance,
    estimate_system_survival,
    integrated_hazard,
    sample_node_lifetime,
    sample_system_realization,
    verify_superposition,
)
from .structure import (
    Bridge,
    CapacityError,
    Component,
    KofN,
    MonomialExpansion,
    Parallel,
    Paths,
    Series,
    boolean_state,
    evaluate,
    expand,
    min_path_sets,
)
from .system_survival import (
    SurvivalCurve,
    SystemModel,
    parallel_survival_direct,
    series_survival_direct,
    stream_correlation,
    survival_curve,
    system_survival,
    term_survival,
)
from .workload import (
    Exponential,
    StressDistribution,
    Uniform,
    Weibull,
    WorkloadRealization,
    sample_workload,
    service_survival,
    shock_exposure,
    stress_expectation,
)

__version__ = "0.1.0"
