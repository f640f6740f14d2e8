"""Spectral comparison metrics between a true and an estimated correlation matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import make_rng
from .errors import DimensionMismatch
from .spectral import SymmetricSpectrum, eig_sym


@dataclass
class FcmCurve:
    mode_side: str
    values: np.ndarray

    def __getitem__(self, n: int) -> float:
        """FCM of the leading ``n`` modes (1-based, as in the plots)."""
        return float(self.values[n - 1])


def _ordered(vectors: np.ndarray, eigenvalues: np.ndarray, mode_side: str) -> np.ndarray:
    order = np.argsort(eigenvalues, kind="stable")
    if mode_side == "large":
        order = order[::-1]
    elif mode_side != "small":
        raise ValueError("mode_side must be 'large' or 'small'")
    return vectors[:, order]


def fcm_from_overlap(overlap: np.ndarray, n_max: int = None) -> np.ndarray:
    """Geometric mean of singular values of every leading n x n block, n <= n_max."""
    n = overlap.shape[0] if n_max is None else min(n_max, overlap.shape[0])
    out = np.empty(n)
    with np.errstate(divide="ignore"):
        for k in range(1, n + 1):
            w = np.linalg.svd(overlap[:k, :k], compute_uv=False)
            out[k - 1] = np.exp(np.mean(np.log(w)))
    return out


def fcm(truth_spec: SymmetricSpectrum, est_spec: SymmetricSpectrum, mode_side: str = "large",
        n_max: int = None) -> FcmCurve:
    """Fraction of common modes between two eigenbases, for n = 1..N."""
    if truth_spec.n != est_spec.n:
        raise DimensionMismatch(f"sizes differ: {truth_spec.n} vs {est_spec.n}")
    p = _ordered(truth_spec.eigenvectors, truth_spec.eigenvalues, mode_side)
    p_hat = _ordered(est_spec.eigenvectors, est_spec.eigenvalues, mode_side)
    return FcmCurve(mode_side, fcm_from_overlap(p.T @ p_hat, n_max))


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def fcm_random_benchmark(N: int, n_draws: int = 100, seed: int = 0, n_max: int = None) -> FcmCurve:
    """Average FCM of Haar-random orthogonal bases against the canonical basis."""
    if N < 2:
        raise ValueError("N must be at least 2")
    rng = make_rng(seed)
    acc = np.zeros(N if n_max is None else min(n_max, N))
    for _ in range(n_draws):
        acc += fcm_from_overlap(haar_orthogonal(N, rng), n_max)
    return FcmCurve("random", acc / n_draws)


def duplicate_weight_sum(est_matrix, pair) -> float:
    """Squared weight of ``pair`` in the eigenvector of the smallest eigenvalue."""
    m = getattr(est_matrix, "values", est_matrix)
    u = eig_sym(m).eigenvectors[:, 0]
    i, j = pair
    return float(u[i] ** 2 + u[j] ** 2)


def eigenvalue_comparison(truth_spec: SymmetricSpectrum, est_specs: dict) -> list[dict]:
    """Rank-aligned table of true eigenvalues against each method's eigenvalues.

    ``est_specs`` maps a method name to a spectrum (or an array of
    eigenvalues). Rows are ordered by ascending rank.
    """
    truth = np.sort(truth_spec.eigenvalues)
    columns = {}
    for name, spec in est_specs.items():
        lam = getattr(spec, "eigenvalues", spec)
        lam = np.sort(np.asarray(lam, dtype=float))
        if lam.size != truth.size:
            raise DimensionMismatch(f"method {name!r} has {lam.size} eigenvalues, truth has {truth.size}")
        columns[name] = lam
    rows = []
    for k in range(truth.size):
        row = {"rank": k + 1, "true": float(truth[k])}
        row.update({name: float(lam[k]) for name, lam in columns.items()})
        rows.append(row)
    return rows
