"""Markowitz portfolios and the rolling out-of-sample risk backtest."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .cleaning import CleanedCorrelation
from .datagen import make_rng
from .errors import GcmError, MissingContext, SingularCovariance, ZeroPredictor
from .pipelines import estimate
from .preprocess import StandardizedPanel, scale_rows

logger = logging.getLogger(__name__)

STRATEGIES = ("min_variance", "omniscient", "mean_reversion", "random_long_short")
MAX_CONDITION = 1e12


@dataclass
class Predictor:
    g: np.ndarray
    strategy_tag: str
    norm: float


def normalize_predictor(raw: np.ndarray, strategy: str) -> Predictor:
    """Rescale ``raw`` so that ``||g|| = sqrt(N)``."""
    raw = np.asarray(raw, dtype=float)
    size = np.linalg.norm(raw)
    if not size > 0:
        raise ZeroPredictor(f"{strategy} predictor is identically zero")
    norm = np.sqrt(raw.size) / size
    return Predictor(raw * norm, strategy, float(norm))


def build_predictor(strategy_tag: str, context: Optional[dict] = None) -> Predictor:
    """Assemble the predictor of a strategy.

    ``context`` keys: ``n`` (min_variance), ``future_returns`` N x T_out
    vol-normalized returns of the coming window (omniscient),
    ``previous_returns`` N-vector (mean_reversion), ``n`` and ``seed``
    (random_long_short).
    """
    context = context or {}

    def need(key):
        if key not in context:
            raise MissingContext(f"strategy {strategy_tag!r} needs {key!r} in its context")
        return context[key]

    if strategy_tag == "min_variance":
        raw = np.ones(int(need("n")))
    elif strategy_tag == "omniscient":
        raw = np.asarray(need("future_returns"), dtype=float).sum(axis=1)
    elif strategy_tag == "mean_reversion":
        raw = -np.asarray(need("previous_returns"), dtype=float)
    elif strategy_tag == "random_long_short":
        raw = make_rng(need("seed")).standard_normal(int(need("n")))
    else:
        raise ValueError(f"unknown strategy {strategy_tag!r}")
    return normalize_predictor(raw, strategy_tag)


def _factor(sigma: np.ndarray):
    sigma = np.asarray(sigma, dtype=float)
    lam = np.linalg.eigvalsh(0.5 * (sigma + sigma.T))
    cond = np.inf if lam[0] <= 0 else lam[-1] / lam[0]
    if cond > MAX_CONDITION:
        raise SingularCovariance(f"covariance condition number {cond:.3g} exceeds {MAX_CONDITION:g}", cond)
    try:
        return cho_factor(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(str(exc), cond) from exc


def _weights_from_factor(factor, g: np.ndarray, gain: float) -> np.ndarray:
    y = cho_solve(factor, g)
    return gain * y / np.sum(g * y, axis=0)


def markowitz_weights(Sigma, g, G: float = 1.0) -> np.ndarray:
    """``w = G Sigma^-1 g / (g^T Sigma^-1 g)``, the minimum-variance portfolio with ``w.g = G``."""
    g = getattr(g, "g", g)
    g = np.asarray(g, dtype=float)
    if not np.any(g):
        raise ZeroPredictor("predictor is identically zero")
    return _weights_from_factor(_factor(Sigma), g, G)


def reconstruct_covariance(corr, sigma) -> np.ndarray:
    """``Sigma_ij = sigma_i sigma_j Xi_ij``."""
    xi = corr.values if isinstance(corr, CleanedCorrelation) else np.asarray(corr, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("scales must be positive")
    return sigma[:, None] * xi * sigma[None, :]


@dataclass
class BacktestConfig:
    T_in: int = 1000
    T_out: int = 60
    annualization_factor: float = 252.0
    gain: float = 1.0
    n_folds: int = 10
    fold_style: str = "contiguous_blocks"
    eta: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.T_in < 2:
            raise ValueError("T_in must be at least 2")
        if self.T_out < 1:
            raise ValueError("T_out must be at least 1")
        if self.annualization_factor <= 0:
            raise ValueError("annualization_factor must be positive")

    def n_windows(self, T_tot: int) -> int:
        return max(0, (T_tot - self.T_in - 1) // self.T_out)


@dataclass
class BacktestReport:
    config: dict
    methods: list
    strategies: list
    n_windows: int
    risks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def ann_vol(self, strategy: str, method: str) -> np.ndarray:
        return np.sqrt(self.config["annualization_factor"] * self.risks[(strategy, method)])

    def summary(self) -> dict:
        """Mean and standard deviation of the annualized volatility per (strategy, method)."""
        out = {}
        for strategy in self.strategies:
            for method in self.methods:
                vol = self.ann_vol(strategy, method)
                ok = vol[np.isfinite(vol)]
                out[(strategy, method)] = {
                    "mean_risk": float(np.mean(self.risks[(strategy, method)][np.isfinite(vol)])) if ok.size else None,
                    "mean_ann_vol": float(np.mean(ok)) if ok.size else None,
                    "std_ann_vol": float(np.std(ok, ddof=1)) if ok.size > 1 else None,
                    "n_ok": int(ok.size),
                }
        return out

    def rows(self):
        for strategy in self.strategies:
            for method in self.methods:
                risk = self.risks[(strategy, method)]
                vol = self.ann_vol(strategy, method)
                for k in range(self.n_windows):
                    yield {"window": k, "method": method, "strategy": strategy,
                           "risk": float(risk[k]), "ann_vol": float(vol[k])}

    def to_json(self) -> dict:
        summary = self.summary()
        return {
            "config": self.config,
            "n_windows": self.n_windows,
            "methods": list(self.methods),
            "strategies": list(self.strategies),
            "summary": {f"{s}/{m}": summary[(s, m)] for s, m in sorted(summary)},
            "risks": {f"{s}/{m}": [None if not np.isfinite(v) else float(v) for v in self.risks[(s, m)]]
                      for s, m in sorted(self.risks)},
            "failures": self.failures,
        }


def _window_risks(cov: np.ndarray, strategies, x_in_last, x_out, gain, random_seed):
    """Out-of-sample quadratic risk of each strategy for one covariance estimate."""
    n, t_out = x_out.shape
    factor = _factor(cov)
    out = {}
    for strategy in strategies:
        if strategy == "mean_reversion":
            # Daily rebalancing: day tau trades against the return of day tau - 1.
            prev = np.concatenate([x_in_last[:, None], x_out[:, :-1]], axis=1)
            g = np.column_stack([build_predictor(strategy, {"previous_returns": prev[:, k]}).g
                                 for k in range(t_out)])
            w = _weights_from_factor(factor, g, gain)
            daily = np.sum(w * x_out, axis=0)
        else:
            context = {"n": n, "future_returns": x_out, "seed": random_seed}
            w = _weights_from_factor(factor, build_predictor(strategy, context).g, gain)
            daily = w @ x_out
        out[strategy] = float(np.mean(daily**2))
    return out


def run_backtest(panel, cfg: BacktestConfig, methods: Sequence[str],
                 strategies: Sequence[str] = STRATEGIES, truth: Optional[np.ndarray] = None) -> BacktestReport:
    """Rolling, non-overlapping out-of-sample evaluation of estimation methods.

    ``panel`` is either a :class:`StandardizedPanel` of the full history or
    an N x T_tot array of vol-normalized returns. Window ``k`` estimates on
    columns ``[1 + k T_out, 1 + k T_out + T_in)`` and is evaluated on the
    following ``T_out`` columns. Each in-sample window is re-standardized
    row-wise; its row scales turn the cleaned correlation into a covariance.
    Numerical failures are recorded per (window, method) and leave NaN risks.
    """
    x = panel.vol_normalized if isinstance(panel, StandardizedPanel) else np.asarray(panel, dtype=float)
    n, t_tot = x.shape
    if t_tot < cfg.T_in + cfg.T_out + 1:
        raise ValueError(f"need at least T_in + T_out + 1 = {cfg.T_in + cfg.T_out + 1} dates, got {t_tot}")
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}")
    n_win = cfg.n_windows(t_tot)
    report = BacktestReport(asdict(cfg), list(methods), list(strategies), n_win)
    for s in strategies:
        for m in methods:
            report.risks[(s, m)] = np.full(n_win, np.nan)
    for k in range(n_win):
        start = 1 + k * cfg.T_out
        stop = start + cfg.T_in
        x_in, sigma = scale_rows(x[:, start:stop])
        x_out = x[:, stop:stop + cfg.T_out]
        random_seed = np.random.SeedSequence([cfg.seed, k])
        for m in methods:
            try:
                corr = estimate(x_in, m, n_folds=cfg.n_folds, fold_style=cfg.fold_style,
                                eta=cfg.eta, truth=truth)
                cov = reconstruct_covariance(corr, sigma)
                risks = _window_risks(cov, strategies, x[:, stop - 1], x_out, cfg.gain, random_seed)
            except GcmError as exc:
                logger.info("window %d, method %s failed: %s", k, m, exc)
                report.failures.append({"window": k, "method": m, "error": type(exc).__name__,
                                        "message": str(exc)})
                continue
            for s in strategies:
                report.risks[(s, m)][k] = risks[s]
    return report
