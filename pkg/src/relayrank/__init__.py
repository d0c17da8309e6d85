"""Predict final relay places from intermediate changeover times."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateSampleError,
    DomainError,
    IllConditionedError,
    InsufficientDataError,
    ParseError,
    RelayRankError,
    SingularFitError,
    TieError,
    ValidationError,
)
from .estimators import PopulationEstimate, german_tank_umvue, sample_max
from .evaluation import RmseReport, SplitSpec, rmse, run_experiment, split_train_test
from .models import (
    MODEL_NAMES,
    FwosModel,
    GpHyperparameters,
    GpModel,
    OlsModel,
    RidgeModel,
    TrainingSet,
    fit_model,
    fwos_fit,
    gp_fit,
    ols_fit,
    ridge_fit,
)
from .simulator import RaceTable, SimConfig, paper_like_config, rank_final_times, simulate_race
from .stats import (
    LognormalParams,
    fit_lognormal_mle,
    lognormal_cdf,
    lognormal_quantile,
    norm_cdf,
    norm_ppf,
    uniform_order_stat_mean,
)
