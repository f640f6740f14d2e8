"""Synthetic data: ground-truth correlation matrices and Student-t return panels.

Random numbers come from numpy's ``Philox`` counter-based bit generator.
Independent streams for sweeps are derived with
``numpy.random.SeedSequence(seed).spawn(k)`` (see :func:`derive_seeds`), so a
given ``(seed, index)`` always maps to the same stream whatever the number of
workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotPSD
from .estimators import ReturnPanel
from .spectral import SymmetricSpectrum, eig_sym

CONVENTIONS = ("covariance_is_C", "shape_is_C")


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def derive_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """Child seed sequences for ``count`` independent experiments."""
    return np.random.SeedSequence(int(seed)).spawn(count)


@dataclass
class GroundTruth:
    C: np.ndarray
    spectrum: SymmetricSpectrum

    @classmethod
    def from_matrix(cls, c, tol: float = 1e-10) -> "GroundTruth":
        c = np.asarray(c, dtype=float)
        c = 0.5 * (c + c.T)
        if np.max(np.abs(np.diag(c) - 1.0)) > 1e-12:
            raise ValueError("a ground-truth correlation matrix needs a unit diagonal")
        spec = eig_sym(c)
        if spec.eigenvalues[0] < -tol:
            raise NotPSD(f"smallest eigenvalue {spec.eigenvalues[0]:.3g} is negative")
        return cls(c, spec)

    @property
    def n(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class StudentConfig:
    nu: float = 3.0
    T: int = 500
    seed: int = 0
    scale_convention: str = "covariance_is_C"

    def __post_init__(self):
        if not self.nu > 2:
            raise ValueError(f"nu must exceed 2 so that the covariance exists, got {self.nu}")
        if self.T < 2:
            raise ValueError("T must be at least 2")
        if self.scale_convention not in CONVENTIONS:
            raise ValueError(f"scale_convention must be one of {CONVENTIONS}")


def _square_root(c: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        lam, vec = np.linalg.eigh(c)
        if lam[0] < -1e-10:
            raise NotPSD(f"smallest eigenvalue {lam[0]:.3g} is negative")
        return vec * np.sqrt(np.maximum(lam, 0.0))


def sample_student(truth: GroundTruth, cfg: StudentConfig, seed=None) -> ReturnPanel:
    """Draw ``cfg.T`` i.i.d. multivariate Student vectors with zero mean.

    Under ``covariance_is_C`` the shape matrix is ``C (nu - 2) / nu`` so that
    the covariance equals ``C``; under ``shape_is_C`` the shape matrix is ``C``.
    ``nu = inf`` gives Gaussian draws. ``seed`` (int or SeedSequence)
    overrides ``cfg.seed``.
    """
    c = truth.C
    if np.linalg.eigvalsh(c)[0] < -1e-10:
        raise NotPSD("ground-truth matrix is not positive semidefinite")
    rng = make_rng(cfg.seed if seed is None else seed)
    n = c.shape[0]
    gaussian = math.isinf(cfg.nu)
    shape = c
    if cfg.scale_convention == "covariance_is_C" and not gaussian:
        shape = c * (cfg.nu - 2.0) / cfg.nu
    root = _square_root(shape)
    z = rng.standard_normal((n, cfg.T))
    x = root @ z
    if not gaussian:
        chi2 = rng.chisquare(cfg.nu, size=cfg.T)
        x *= np.sqrt(cfg.nu / chi2)[None, :]
    return ReturnPanel(x)


def make_factor_truth(N: int, market_beta: float, n_sectors: int = 0, sector_rho: float = 0.0,
                      *, dispersion: float = 0.0, seed: Optional[int] = None) -> GroundTruth:
    """One market factor plus sector factors, completed by idiosyncratic variance.

    With ``dispersion == 0`` every pair has correlation ``market_beta**2``,
    plus ``sector_rho`` when both assets sit in the same sector (sectors are
    contiguous, near-equal blocks). A positive ``dispersion`` scales each
    asset's loadings by ``1 + dispersion * u`` with ``u`` uniform on
    ``[-1, 1]``, which splits the degenerate bulk of the spectrum.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if n_sectors < 0 or sector_rho < 0:
        raise ValueError("n_sectors and sector_rho must be non-negative")
    if not 0 <= dispersion < 1:
        raise ValueError("dispersion must lie in [0, 1)")
    scale = np.ones(N)
    if dispersion > 0:
        scale = 1.0 + dispersion * make_rng(0 if seed is None else seed).uniform(-1.0, 1.0, N)
    loadings = [market_beta * scale]
    if n_sectors > 0 and sector_rho > 0:
        labels = np.arange(N) * n_sectors // N
        for s in range(n_sectors):
            loadings.append(np.where(labels == s, math.sqrt(sector_rho), 0.0) * scale)
    b = np.vstack(loadings)
    c = b.T @ b
    residual = 1.0 - np.diag(c)
    if np.min(residual) < 0:
        raise NotPSD("factor loadings explain more than unit variance")
    c[np.diag_indices(N)] = 1.0
    return GroundTruth.from_matrix(c)


def inject_duplicate(truth: GroundTruth, asset: int, rho_dup: float) -> GroundTruth:
    """Append a near-copy of ``asset`` correlated at ``rho_dup`` with it.

    The clone is ``rho_dup * x_asset + sqrt(1 - rho_dup^2) * noise``, so its
    correlation with any other asset ``j`` is ``rho_dup * C[asset, j]``.
    """
    if not 0 < rho_dup < 1 - 1e-8:
        raise ValueError("rho_dup must lie in (0, 1 - 1e-8)")
    c = truth.C
    n = c.shape[0]
    if not 0 <= asset < n:
        raise IndexError(f"asset index {asset} out of range")
    row = rho_dup * c[asset]
    out = np.empty((n + 1, n + 1))
    out[:n, :n] = c
    out[n, :n] = row
    out[:n, n] = row
    out[n, n] = 1.0
    return GroundTruth.from_matrix(out)
