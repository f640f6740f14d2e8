"""Return standardization: demean, cross-sectional volatility, per-asset scale."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantAsset, ZeroCrossSectionalVol
from .estimators import ReturnPanel, _as_values

FLAT_TOL = 1e-12


@dataclass
class StandardizedPanel:
    """Standardized returns ``X`` plus the scales needed to undo the last step.

    ``X[i, t] = x[i, t] / cross_vol[t] / sigma[i]`` where ``x`` are the
    demeaned raw returns. Sample standard deviations use the population
    convention (denominator T), so ``X @ X.T / T`` has trace exactly N.
    """

    X: np.ndarray
    sigma: np.ndarray
    cross_vol: np.ndarray
    asset_ids: list
    timestamps: list

    @property
    def vol_normalized(self) -> np.ndarray:
        """Demeaned returns divided by the cross-sectional volatility."""
        return self.X * self.sigma[:, None]

    def as_panel(self) -> ReturnPanel:
        return ReturnPanel(self.X, self.asset_ids, self.timestamps)


def scale_rows(x: np.ndarray):
    """Demean each row and divide by its population standard deviation.

    Returns ``(standardized, sigma)``.
    """
    centered = x - x.mean(axis=1, keepdims=True)
    sigma = np.sqrt(np.mean(centered**2, axis=1))
    # Demeaning a constant row leaves rounding noise, hence the relative floor.
    floor = FLAT_TOL * np.max(np.abs(x), axis=1)
    bad = np.flatnonzero(~(sigma > floor))
    if bad.size:
        raise ConstantAsset(int(bad[0]))
    return centered / sigma[:, None], sigma


def standardize(raw) -> StandardizedPanel:
    """Demean each asset, divide each date by its cross-sectional volatility
    ``sqrt(sum_j x_jt^2)``, then rescale each asset to unit standard deviation.
    """
    if isinstance(raw, ReturnPanel):
        ids, stamps = list(raw.asset_ids), list(raw.timestamps)
        values = raw.values
    else:
        values, ids = _as_values(raw)
        stamps = [str(k) for k in range(values.shape[1])]
    if values.shape[0] < 2:
        raise ValueError("standardization needs at least two assets")
    demeaned = values - values.mean(axis=1, keepdims=True)
    cross_vol = np.sqrt(np.sum(demeaned**2, axis=0))
    bad = np.flatnonzero(~(cross_vol > FLAT_TOL * np.max(np.abs(values))))
    if bad.size:
        raise ZeroCrossSectionalVol(int(bad[0]))
    normalized = demeaned / cross_vol[None, :]
    X, sigma = scale_rows(normalized)
    return StandardizedPanel(X, sigma, cross_vol, ids, stamps)
