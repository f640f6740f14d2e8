"""Synthetic-data experiment protocols, one function per parameter point.

Every function is a pure function of its arguments (seeds included) so the
CLI can farm points out to worker processes and reassemble them in order.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .datagen import GroundTruth, StudentConfig, inject_duplicate, make_factor_truth, sample_student
from .errors import GcmError
from .estimators import correlation_matrix
from .metrics import duplicate_weight_sum, fcm
from .pipelines import estimate
from .portfolio import BacktestConfig, run_backtest
from .preprocess import standardize
from .spectral import eig_sym

# Stand-in for an empirical equity correlation matrix: dominant market mode
# (about 0.3 N), ten sector modes and a non-degenerate bulk.
DEFAULT_TRUTH = {"market_beta": 0.5, "n_sectors": 10, "sector_rho": 0.2, "dispersion": 0.3, "truth_seed": 7}


def point_seed(seed: int, *key: int) -> np.random.SeedSequence:
    """Seed of replicate ``key`` under master ``seed``, independent of scheduling."""
    return np.random.SeedSequence([int(seed), *map(int, key)])


def sample_count(n: int, q: float) -> int:
    return max(2, int(round(n / q)))


def factor_truth(n: int, params: Optional[dict] = None) -> GroundTruth:
    p = {**DEFAULT_TRUTH, **(params or {})}
    if p["market_beta"] == 0 and p["n_sectors"] == 0:
        return GroundTruth.from_matrix(np.eye(n))
    return make_factor_truth(n, p["market_beta"], p["n_sectors"], p["sector_rho"],
                             dispersion=p["dispersion"], seed=p["truth_seed"])


def _panel(truth: GroundTruth, nu: float, T: int, seed, convention="covariance_is_C"):
    return sample_student(truth, StudentConfig(nu=nu, T=T, scale_convention=convention), seed=seed)


def eigs_point(C: np.ndarray, q: float, nu: float, methods: Sequence[str], seed: int, rep: int) -> dict:
    """Sorted eigenvalues of each method on one Student panel (Fig. 1 protocol)."""
    truth = GroundTruth.from_matrix(C)
    n = truth.n
    X = standardize(_panel(truth, nu, sample_count(n, q), point_seed(seed, rep))).X
    out, failures = {}, []
    for m in methods:
        try:
            out[m] = np.sort(estimate(X, m).eigenvalues)
        except (GcmError, ValueError) as exc:
            failures.append({"method": m, "rep": rep, "error": type(exc).__name__, "message": str(exc)})
    return {"eigenvalues": out, "failures": failures}


def duplicate_point(C: np.ndarray, q: float, nu: float, rho_dup: float, estimators: Sequence[str],
                    seed: int, rep: int) -> dict:
    """Duplicate-pair weight on the smallest eigenvector (Fig. 2 protocol).

    The clone of asset 0 is appended as the last asset; ``q`` refers to the
    size of the base universe.
    """
    base = GroundTruth.from_matrix(C)
    truth = inject_duplicate(base, 0, rho_dup)
    T = sample_count(base.n, q)
    X = standardize(_panel(truth, nu, T, point_seed(seed, rep))).X
    pair = (0, truth.n - 1)
    return {e: duplicate_weight_sum(correlation_matrix(X, e), pair) for e in estimators}


def fcm_point(C: np.ndarray, q: float, nu: float, estimators: Sequence[str], mode_sides: Sequence[str],
              n_max: Optional[int], seed: int, rep: int) -> dict:
    """FCM curves of each estimator against the truth (Fig. 3/4 and sweeps)."""
    truth = GroundTruth.from_matrix(C)
    X = standardize(_panel(truth, nu, sample_count(truth.n, q), point_seed(seed, rep))).X
    out = {}
    for e in estimators:
        spec = eig_sym(correlation_matrix(X, e).values)
        for side in mode_sides:
            out[(side, e)] = fcm(truth.spectrum, spec, side, n_max).values
    return out


def backtest_point(C: np.ndarray, q: float, nu: float, T_out: int, n_windows: int, methods: Sequence[str],
                   strategies: Sequence[str], seed: int, rep: int, n_folds: int = 10,
                   annualization_factor: float = 252.0):
    """One synthetic backtest (Fig. 5 / table protocol) with ``n_windows`` windows."""
    truth = GroundTruth.from_matrix(C)
    T_in = sample_count(truth.n, q)
    T_tot = T_in + 1 + n_windows * T_out
    panel = standardize(_panel(truth, nu, T_tot, point_seed(seed, rep)))
    cfg = BacktestConfig(T_in=T_in, T_out=T_out, annualization_factor=annualization_factor,
                         n_folds=n_folds, seed=int(seed) * 1000003 + rep)
    return run_backtest(panel, cfg, methods, strategies, truth=truth.C)


def nu_label(nu: float) -> str:
    return "inf" if math.isinf(nu) else f"{nu:g}"
