"""Generalized (Kendall-like) correlation matrices, eigenvalue cleaning and
Markowitz backtests on synthetic Student-t data."""
from .cleaning import CleanedCorrelation, clip, kendall_clip, rie, rie_gamma, rie_id
from .datagen import GroundTruth, StudentConfig, inject_duplicate, make_factor_truth, sample_student
from .estimators import (
    correlation_matrix,
    CorrelationMatrix,
    Kernel,
    ReturnPanel,
    clipped_pearson_matrix,
    gcc_matrix,
    gcc_pair,
    kendall_matrix,
    kendall_pair_fast,
    pearson_matrix,
    spearman_matrix,
)
from .icvc import FoldPlan, IcvcResult, icvc, pava
from .metrics import duplicate_weight_sum, eigenvalue_comparison, fcm, fcm_random_benchmark
from .portfolio import BacktestConfig, BacktestReport, build_predictor, markowitz_weights, reconstruct_covariance, run_backtest
from .pipelines import estimate
from .preprocess import StandardizedPanel, standardize
from .spectral import SymmetricSpectrum, eig_sym, kendall_mp_upper_edge, mp_upper_edge, stieltjes

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig",
    "BacktestReport",
    "build_predictor",
    "CleanedCorrelation",
    "clip",
    "clipped_pearson_matrix",
    "correlation_matrix",
    "CorrelationMatrix",
    "duplicate_weight_sum",
    "eig_sym",
    "eigenvalue_comparison",
    "estimate",
    "fcm",
    "fcm_random_benchmark",
    "FoldPlan",
    "gcc_matrix",
    "gcc_pair",
    "GroundTruth",
    "icvc",
    "IcvcResult",
    "inject_duplicate",
    "kendall_clip",
    "kendall_matrix",
    "kendall_mp_upper_edge",
    "kendall_pair_fast",
    "Kernel",
    "make_factor_truth",
    "markowitz_weights",
    "mp_upper_edge",
    "pava",
    "pearson_matrix",
    "reconstruct_covariance",
    "ReturnPanel",
    "rie",
    "rie_gamma",
    "rie_id",
    "run_backtest",
    "sample_student",
    "spearman_matrix",
    "standardize",
    "StandardizedPanel",
    "stieltjes",
    "StudentConfig",
    "SymmetricSpectrum",
]
