"""Eigenvalue cleaning schemes for correlation matrices.

Every scheme keeps the eigenvectors of the input estimator and only replaces
its eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NegativeZeta, NoBulk
from .spectral import (
    SymmetricSpectrum,
    kendall_mp_upper_edge,
    mp_stieltjes,
    mp_upper_edge,
    stieltjes_many,
)

SCHEMES = ("raw", "clipped", "rie", "rie_gamma", "rie_id", "kendall_clipped", "icvc", "kendall_icvc")


@dataclass
class CleanedCorrelation:
    values: np.ndarray
    scheme_tag: str
    base_spectrum: SymmetricSpectrum
    eigenvalues: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))

    @property
    def spectrum(self) -> SymmetricSpectrum:
        # Shares the eigenvector array of the input estimator.
        return SymmetricSpectrum(self.eigenvalues, self.base_spectrum.eigenvectors)


def _cleaned(spec: SymmetricSpectrum, xi: np.ndarray, tag: str) -> CleanedCorrelation:
    return CleanedCorrelation(spec.reconstruct(xi), tag, spec, xi)


def raw(spec: SymmetricSpectrum, matrix=None) -> CleanedCorrelation:
    """No cleaning; ``matrix`` (when given) is returned as is instead of being rebuilt."""
    values = spec.reconstruct() if matrix is None else np.asarray(matrix, dtype=float)
    return CleanedCorrelation(values, "raw", spec, spec.eigenvalues.copy())


def _clip_at(spec: SymmetricSpectrum, edge: float, tag: str) -> CleanedCorrelation:
    lam = spec.eigenvalues
    n = lam.size
    noise = lam <= edge
    m = int(np.count_nonzero(noise))
    if m == 0:
        raise NoBulk(f"no eigenvalue lies below the edge {edge:.6g}")
    zeta = (n - float(np.sum(lam[~noise]))) / m
    if zeta < 0:
        raise NegativeZeta(f"trace cannot be preserved: zeta = {zeta:.6g}")
    xi = np.where(noise, zeta, lam)
    return _cleaned(spec, xi, tag)


def clip(spec: SymmetricSpectrum, q: float) -> CleanedCorrelation:
    """Replace eigenvalues below the Marchenko-Pastur edge by a trace-preserving constant."""
    return _clip_at(spec, mp_upper_edge(q), "clipped")


def kendall_clip(spec: SymmetricSpectrum, q: float) -> CleanedCorrelation:
    """Same as :func:`clip`, with the bulk edge of a Kendall matrix."""
    return _clip_at(spec, kendall_mp_upper_edge(q), "kendall_clipped")


def _default_eta(n: int, eta: Optional[float]) -> float:
    eta = n ** -0.5 if eta is None else float(eta)
    if not eta > 0:
        raise ValueError("eta must be positive")
    return eta


def rie_eigenvalues(lam: np.ndarray, q: float, eta: Optional[float] = None) -> np.ndarray:
    """Rotationally invariant estimator ``lambda / |1 - q + q z s(z)|^2`` at ``z = lambda - i eta``."""
    if q <= 0:
        raise ValueError("q must be positive")
    lam = np.asarray(lam, dtype=float)
    eta = _default_eta(lam.size, eta)
    z = lam - 1j * eta
    s = stieltjes_many(lam, z)
    denom = np.abs(1.0 - q + q * z * s) ** 2
    return np.maximum(lam, 0.0) / denom


def bun_gamma(lam: np.ndarray, q: float, eta: float, sigma2: Optional[float] = None) -> np.ndarray:
    """Finite-``eta`` bias ratio of the RIE measured on a Marchenko-Pastur null.

    ``Gamma_k = sigma2 * |1 - q + q z_k g_mp(z_k)|^2 / lambda_k`` where ``g_mp``
    is the Stieltjes transform of the Marchenko-Pastur law of variance
    ``sigma2``. By default ``sigma2`` puts the lower bulk edge on the smallest
    sample eigenvalue.
    """
    if not 0 < q < 1:
        raise ValueError("the RIE Gamma correction needs 0 < q < 1")
    lam = np.asarray(lam, dtype=float)
    if sigma2 is None:
        sigma2 = max(float(lam[0]), 0.0) / (1.0 - np.sqrt(q)) ** 2
    z = lam - 1j * eta
    g = mp_stieltjes(z, q, sigma2) if sigma2 > 0 else np.zeros_like(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = sigma2 * np.abs(1.0 - q + q * z * g) ** 2 / lam
    return np.where(lam > 0, gamma, 1.0)


def rie(spec: SymmetricSpectrum, q: float, eta: Optional[float] = None) -> CleanedCorrelation:
    return _cleaned(spec, rie_eigenvalues(spec.eigenvalues, q, eta), "rie")


def rie_gamma(spec: SymmetricSpectrum, q: float, eta: Optional[float] = None,
              gamma: Optional[Callable] = None) -> CleanedCorrelation:
    """RIE with the small-eigenvalue lift ``xi * max(1, Gamma_k)``.

    ``gamma(lam, q, eta)`` may be supplied to replace :func:`bun_gamma`.
    """
    lam = spec.eigenvalues
    eta = _default_eta(lam.size, eta)
    xi = rie_eigenvalues(lam, q, eta)
    g = (gamma or bun_gamma)(lam, q, eta)
    g = np.where(np.isfinite(g), g, 1.0)
    return _cleaned(spec, xi * np.maximum(1.0, g), "rie_gamma")


def rie_id(spec: SymmetricSpectrum, q: float, eta: Optional[float] = None) -> CleanedCorrelation:
    """RIE shifted by a multiple of the identity so that the trace equals N."""
    xi = rie_eigenvalues(spec.eigenvalues, q, eta)
    n = xi.size
    alpha = (n - float(np.sum(xi))) / n
    out = xi + alpha
    if np.any(out < 0):
        out = np.maximum(out, 0.0)
        out *= n / np.sum(out)
    return _cleaned(spec, out, "rie_id")


def clean(spec: SymmetricSpectrum, scheme: str, q: float, eta: Optional[float] = None) -> CleanedCorrelation:
    """Dispatch on a scheme tag (ICVC schemes live in :mod:`gcmport.icvc`)."""
    if scheme == "raw":
        return raw(spec)
    if scheme == "clipped":
        return clip(spec, q)
    if scheme == "kendall_clipped":
        return kendall_clip(spec, q)
    if scheme == "rie":
        return rie(spec, q, eta)
    if scheme == "rie_gamma":
        return rie_gamma(spec, q, eta)
    if scheme == "rie_id":
        return rie_id(spec, q, eta)
    raise ValueError(f"unknown cleaning scheme {scheme!r}")
