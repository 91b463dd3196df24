"""Decaying-interest non-homogeneous Poisson process: simulation, exact
inter-event distributions and power-law inference."""

from nhpp_decay.intensity import (
    IntensityParams,
    cumulative_intensity,
    intensity_at,
    inverse_cumulative,
)
from nhpp_decay.analytic import (
    QuadratureConfig,
    QuadratureError,
    TailAsymptote,
    cdf_Tn,
    density_Tn,
    distribution_Tn,
    eq8_approximation,
    survival_Tn,
    tail_exponent,
    upper_incomplete_gamma,
)
from nhpp_decay.simulate import (
    EventSeries,
    IntervalSample,
    SimulationConfig,
    child_seed,
    sample_path_inversion,
    sample_path_thinning,
    Ensemble,
    simulate_ensemble,
)
from nhpp_decay.inference import (
    BinnedDistribution,
    FitResult,
    NhppFit,
    fit_hill_mle,
    fit_loglog_regression,
    fit_nhpp_mle,
    intervals_from_events,
    ks_distance,
    ks_two_sample,
    log_binned_ccdf,
    log_binned_pdf,
)

__version__ = "0.1.0"
