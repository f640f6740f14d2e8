"""Isotonic cross-validation covariance (ICVC).

For each fold, eigenvectors are estimated on the other folds and their
variances are measured on the held-out fold. Averaged variances are made
monotone by isotonic regression and recombined with the eigenvectors of the
full-sample estimator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .cleaning import CleanedCorrelation
from .errors import DegenerateFold, DegenerateSeries
from .estimators import correlation_matrix
from .preprocess import StandardizedPanel
from .spectral import SymmetricSpectrum, eig_sym
from .datagen import make_rng

Source = Union[str, Callable[[np.ndarray], np.ndarray]]


@dataclass
class FoldPlan:
    n_folds: int
    assignment: np.ndarray
    style: str = "contiguous_blocks"

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=int)
        sizes = np.bincount(self.assignment, minlength=self.n_folds)
        if sizes.size != self.n_folds or np.any(sizes == 0):
            raise ValueError("every fold must be non-empty")
        if sizes.max() - sizes.min() > 1:
            raise ValueError("fold sizes may differ by at most one")

    @classmethod
    def make(cls, T: int, n_folds: int = 10, style: str = "contiguous_blocks", seed=0) -> "FoldPlan":
        if not 2 <= n_folds <= T:
            raise ValueError(f"need 2 <= n_folds <= T, got n_folds={n_folds}, T={T}")
        blocks = np.arange(T) * n_folds // T
        if style == "contiguous_blocks":
            return cls(n_folds, blocks, style)
        if style == "random":
            return cls(n_folds, make_rng(seed).permutation(blocks), style)
        raise ValueError(f"unknown fold style {style!r}")

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_folds)

    def held_out(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == k)

    def training(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != k)


@dataclass
class IcvcResult:
    eigenvalues_iso: np.ndarray
    eigenvalues_raw: np.ndarray
    eigenvectors: np.ndarray
    folds: FoldPlan
    source_spectrum: SymmetricSpectrum

    @property
    def matrix(self) -> np.ndarray:
        return self.source_spectrum.reconstruct(self.eigenvalues_iso)

    def as_cleaned(self, tag: str = "icvc") -> CleanedCorrelation:
        return CleanedCorrelation(self.matrix, tag, self.source_spectrum, self.eigenvalues_iso)


def pava(y, weights=None) -> np.ndarray:
    """Weighted least-squares non-decreasing fit by pool-adjacent-violators."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != y.shape:
        raise ValueError("weights and values must have the same shape")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be non-negative and not all zero")
    means, mass, counts = [], [], []
    for yi, wi in zip(y, w):
        means.append(yi)
        mass.append(wi)
        counts.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, c2 = means.pop(), mass.pop(), counts.pop()
            w1 = mass[-1]
            total = w1 + w2
            # Zero-weight blocks take the value of whatever they pool with.
            means[-1] = (w1 * means[-1] + w2 * m2) / total if total > 0 else max(means[-1], m2)
            mass[-1] = total
            counts[-1] += c2
    return np.repeat(means, counts)


def _source_fn(source: Source) -> Callable[[np.ndarray], np.ndarray]:
    if callable(source):
        return source
    return lambda x: correlation_matrix(x, source).values


def icvc(panel, source: Source = "pearson", folds: FoldPlan = None) -> IcvcResult:
    """Cross-validated, isotonic eigenvalues for the eigenvectors of ``source``.

    ``panel`` is a :class:`StandardizedPanel` or an N x T array of
    standardized returns. ``source`` is an estimator tag understood by
    :func:`gcmport.estimators.correlation_matrix` (``pearson``, ``kendall``,
    ``gcc:tanh:1`` ...) or a callable mapping an N x T' array to an N x N
    matrix.
    """
    x = panel.X if isinstance(panel, StandardizedPanel) else np.asarray(panel, dtype=float)
    n, t_len = x.shape
    folds = folds or FoldPlan.make(t_len)
    if folds.assignment.size != t_len:
        raise ValueError("fold plan does not cover the panel's columns")
    if np.any(t_len - folds.sizes < 2):
        raise ValueError("every training complement needs at least two columns")
    estimate = _source_fn(source)
    fold_vars = np.empty((folds.n_folds, n))
    for k in range(folds.n_folds):
        train, test = folds.training(k), folds.held_out(k)
        try:
            vectors = eig_sym(estimate(x[:, train])).eigenvectors
        except DegenerateSeries as exc:
            raise DegenerateFold(f"fold {k}: {exc}") from exc
        proj = vectors.T @ x[:, test]
        fold_vars[k] = np.mean(proj**2, axis=1)
    mu = fold_vars.mean(axis=0)
    mu_iso = pava(mu)
    full = eig_sym(estimate(x))
    return IcvcResult(mu_iso, mu, full.eigenvectors, folds, full)
