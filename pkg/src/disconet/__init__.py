"""Probabilistic predictors trained by sampled dissimilarity minimization.

A generator network turns an input and a uniform noise draw into one
sample from the model's conditional output distribution. Training
minimizes a sampled dissimilarity between the data and the model: a
data-fit term minus gamma times a sample-diversity term, which at
gamma = 1/2 is the energy scoring rule. Everything runs on a small
reverse-mode autodiff core over dense float64 arrays; no framework.
"""

from .autodiff import SINGULARITY_EPS, Graph, Tensor, grad_check
from .errors import (
    ConfigError,
    ContractError,
    DimensionError,
    DisconetError,
    EstimatorError,
    NumericError,
    ParameterError,
    ParseError,
    SchemaError,
)
from .metrics import (
    JointLayout,
    MetricsReport,
    base_candidates,
    ff,
    majee,
    mejee,
    metrics_report,
    meu_predict,
    pearson_matrix,
    probloss,
)
from .network import (
    CandidateSet,
    NetConfig,
    NetworkParams,
    bind_params,
    forward,
    forward_rows,
    grad_flat,
    init_params,
    predict,
    predict_rows,
    sample_candidates,
    sample_noise,
)
from .objective import (
    ObjectiveConfig,
    disco_objective,
    disco_objective_node,
    div_pq_hat,
    div_qq_hat,
)
from .rng import derive_seed, substream
from .scoring import (
    LOSS_DIM1,
    LOSS_DIM2,
    DiscreteDistribution,
    LossSpec,
    delta,
    div_exact,
    divergence_discrete,
    energy_score_sample,
)
from .synth import (
    TOY_MIXTURE,
    DiagGaussianParams,
    GmmComponent,
    GmmSpec,
    GridSpec,
    fit_gaussian_grid,
    gen_conditional_bimodal,
    gen_gmm2d,
    load_csv,
    save_csv,
    toy_cross_table,
)
from .training import (
    EpochStats,
    TrainConfig,
    TrainHistory,
    sgd_momentum_step,
    train,
    train_val_split,
)

__version__ = "0.1.0"

__all__ = [
    "SINGULARITY_EPS",
    "Graph",
    "Tensor",
    "grad_check",
    "DisconetError",
    "ConfigError",
    "ContractError",
    "DimensionError",
    "EstimatorError",
    "NumericError",
    "ParameterError",
    "ParseError",
    "SchemaError",
    "JointLayout",
    "MetricsReport",
    "base_candidates",
    "ff",
    "majee",
    "mejee",
    "metrics_report",
    "meu_predict",
    "pearson_matrix",
    "probloss",
    "CandidateSet",
    "NetConfig",
    "NetworkParams",
    "bind_params",
    "forward",
    "forward_rows",
    "grad_flat",
    "init_params",
    "predict",
    "predict_rows",
    "sample_candidates",
    "sample_noise",
    "ObjectiveConfig",
    "disco_objective",
    "disco_objective_node",
    "div_pq_hat",
    "div_qq_hat",
    "derive_seed",
    "substream",
    "LOSS_DIM1",
    "LOSS_DIM2",
    "DiscreteDistribution",
    "LossSpec",
    "delta",
    "div_exact",
    "divergence_discrete",
    "energy_score_sample",
    "TOY_MIXTURE",
    "DiagGaussianParams",
    "GmmComponent",
    "GmmSpec",
    "GridSpec",
    "fit_gaussian_grid",
    "gen_conditional_bimodal",
    "gen_gmm2d",
    "load_csv",
    "save_csv",
    "toy_cross_table",
    "EpochStats",
    "TrainConfig",
    "TrainHistory",
    "sgd_momentum_step",
    "train",
    "train_val_split",
]
