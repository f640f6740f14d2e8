"""Named estimation pipelines: correlation estimator followed by a cleaning step.

A method tag is either one of the names in :data:`METHODS` or the generic
form ``<estimator>+<scheme>``, e.g. ``gcc:tanh:0.5+icvc`` or
``spearman+rie_id``.
"""
from __future__ import annotations

import warnings
from typing import Optional

import numpy as np

from . import cleaning
from .cleaning import CleanedCorrelation
from .estimators import correlation_matrix
from .icvc import FoldPlan, icvc
from .spectral import eig_sym

METHODS = {
    "pearson": ("pearson", "raw"),
    "clipped": ("pearson", "clipped"),
    "rie": ("pearson", "rie"),
    "rie_gamma": ("pearson", "rie_gamma"),
    "rie_id": ("pearson", "rie_id"),
    "icvc": ("pearson", "icvc"),
    "spearman": ("spearman", "raw"),
    "clipped_pearson": ("clipped_pearson", "raw"),
    "kendall": ("kendall", "raw"),
    "kendall_clipped": ("kendall", "kendall_clipped"),
    "kendall_icvc": ("kendall", "icvc"),
    "tanh": ("gcc:tanh:1", "raw"),
    "tanh_icvc": ("gcc:tanh:1", "icvc"),
}


def parse_method(tag: str) -> tuple[str, str]:
    if tag in METHODS:
        return METHODS[tag]
    if tag == "oracle":
        return "oracle", "raw"
    estimator, plus, scheme = tag.partition("+")
    if not plus:
        return estimator, "raw"
    if scheme not in cleaning.SCHEMES or scheme == "kendall_icvc":
        raise ValueError(f"unknown cleaning scheme in method {tag!r}")
    return estimator, scheme


def estimate(X: np.ndarray, method: str, *, n_folds: int = 10, fold_style: str = "contiguous_blocks",
             eta: Optional[float] = None, truth: Optional[np.ndarray] = None) -> CleanedCorrelation:
    """Run a method pipeline on standardized returns ``X`` (N x T).

    ``oracle`` returns ``truth`` unchanged and exists for benchmarking.
    """
    n, t_len = X.shape
    q = n / t_len
    estimator, scheme = parse_method(method)
    if estimator == "oracle":
        if truth is None:
            raise ValueError("the oracle method needs the true correlation matrix")
        spec = eig_sym(truth)
        return CleanedCorrelation(np.asarray(truth, dtype=float), "oracle", spec, spec.eigenvalues)
    if scheme == "icvc":
        folds = FoldPlan.make(t_len, n_folds, fold_style)
        tag = "kendall_icvc" if estimator == "kendall" else "icvc"
        return icvc(X, estimator, folds).as_cleaned(tag)
    matrix = correlation_matrix(X, estimator).values
    spec = eig_sym(matrix)
    if scheme == "raw":
        return cleaning.raw(spec, matrix)
    if scheme == "rie" and q > 1:
        warnings.warn(f"q = {q:.3g} > 1: {n - t_len} zero modes persist under plain RIE", stacklevel=2)
    return cleaning.clean(spec, scheme, q, eta)
