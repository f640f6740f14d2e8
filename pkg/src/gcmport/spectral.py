"""Symmetric eigendecomposition, Marchenko-Pastur edges and the Stieltjes transform."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSymmetric, PoleHit

# Kendall matrices of i.i.d. data behave like a*W + b*I with W a Wishart matrix.
KENDALL_SLOPE = 2.0 / 3.0
KENDALL_INTERCEPT = 1.0 / 3.0


@dataclass
class SymmetricSpectrum:
    """Ascending eigenvalues with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self, eigenvalues=None) -> np.ndarray:
        """Return ``V diag(eigenvalues) V^T`` (own eigenvalues by default)."""
        lam = self.eigenvalues if eigenvalues is None else np.asarray(eigenvalues, dtype=float)
        v = self.eigenvectors
        m = (v * lam) @ v.T
        return 0.5 * (m + m.T)


def eig_sym(m, tol: float = 1e-8) -> SymmetricSpectrum:
    """Eigendecomposition of a symmetric matrix.

    Each eigenvector is oriented so that its largest-magnitude component is
    positive (first such component on exact ties), which makes the output
    deterministic up to degenerate subspaces.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.T), initial=0.0) > tol * scale:
        raise NotSymmetric("matrix is not symmetric")
    lam, vec = np.linalg.eigh(0.5 * (m + m.T))
    pivot = np.argmax(np.abs(vec), axis=0)
    signs = np.sign(vec[pivot, np.arange(vec.shape[1])])
    signs[signs == 0] = 1.0
    return SymmetricSpectrum(lam, vec * signs)


def mp_upper_edge(q: float) -> float:
    """Upper edge ``(1 + sqrt(q))^2`` of the Marchenko-Pastur bulk."""
    if q <= 0:
        raise ValueError("q must be positive")
    return (1.0 + np.sqrt(q)) ** 2


def mp_lower_edge(q: float) -> float:
    if q <= 0:
        raise ValueError("q must be positive")
    return (1.0 - np.sqrt(q)) ** 2


def kendall_mp_upper_edge(q: float, slope: float = KENDALL_SLOPE,
                          intercept: float = KENDALL_INTERCEPT) -> float:
    """Upper bulk edge of a Kendall matrix of independent series."""
    return slope * mp_upper_edge(q) + intercept


def stieltjes(spec, z: complex) -> complex:
    """Empirical Stieltjes transform ``mean(1 / (z - lambda_k))``."""
    lam = spec.eigenvalues if isinstance(spec, SymmetricSpectrum) else np.asarray(spec, dtype=float)
    gaps = z - lam
    if np.min(np.abs(gaps)) < 1e-14:
        raise PoleHit(f"z={z} coincides with an eigenvalue")
    return complex(np.mean(1.0 / gaps))


def stieltjes_many(lam: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized empirical Stieltjes transform at several points."""
    gaps = z[:, None] - lam[None, :]
    if np.min(np.abs(gaps)) < 1e-14:
        raise PoleHit("an evaluation point coincides with an eigenvalue")
    return np.mean(1.0 / gaps, axis=1)


def mp_stieltjes(z, q: float, sigma2: float = 1.0):
    """Stieltjes transform of the Marchenko-Pastur law with variance ``sigma2``.

    The square-root branch is taken as the product of principal roots, which
    behaves like ``z`` at infinity and has its cut on the bulk support.
    """
    z = np.asarray(z, dtype=complex)
    lo = sigma2 * (1.0 - np.sqrt(q)) ** 2
    hi = sigma2 * (1.0 + np.sqrt(q)) ** 2
    root = np.sqrt(z - lo) * np.sqrt(z - hi)
    return (z + sigma2 * (q - 1.0) - root) / (2.0 * q * z * sigma2)
