"""Pairwise and matrix-valued correlation estimators.

Generalized correlation coefficients (GCCs) are built from an odd kernel
applied to all pairwise differences ``x_t - x_s`` with ``t < s``::

    gcc(x, y) = sum phi(dx) phi(dy) / (sqrt(sum phi(dx)^2) * sqrt(sum phi(dy)^2))

The identity kernel recovers Pearson's estimator and the sign kernel recovers
Kendall's tau (tau-b normalization when ties are present, since ``phi(0) = 0``
removes tied pairs from the numerator and from the matching denominator sum).

Two computational routes are provided:

* a dense route that materializes the ``C(T, 2)`` pairwise differences in
  blocks and accumulates their Gram matrix (any kernel);
* an ``O(T log T)`` per-pair route for the sign kernel, based on sorting and
  merge-sort inversion counting with tie-group corrections.

For the sign kernel both routes produce the same integer counts, so their
outputs agree bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from numba import njit
from scipy.stats import rankdata

from .errors import DegenerateSeries

__all__ = [
    "Kernel",
    "ReturnPanel",
    "CorrelationMatrix",
    "gcc_pair",
    "gcc_matrix",
    "kendall_pair_fast",
    "kendall_matrix",
    "pearson_matrix",
    "spearman_matrix",
    "clipped_pearson_matrix",
    "correlation_matrix",
]

# Max pairwise differences held in memory per asset and block.
_BLOCK_PAIRS = 1 << 16

_KERNEL_ALIASES = {
    "identity": "identity",
    "pearson": "identity",
    "linear": "identity",
    "sign": "sign",
    "kendall": "sign",
    "tanh": "tanh_beta",
    "tanh_beta": "tanh_beta",
}


@dataclass(frozen=True)
class Kernel:
    """Odd scalar function parameterizing a GCC.

    ``variant`` is one of ``identity``, ``sign`` or ``tanh_beta``; ``beta`` is
    only used by ``tanh_beta`` and gives ``phi(x) = tanh(beta * x)``.
    """

    variant: str = "sign"
    beta: float = 1.0

    def __post_init__(self):
        if self.variant not in ("identity", "sign", "tanh_beta"):
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"kernel beta must be positive, got {self.beta}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.variant == "identity":
            return x
        if self.variant == "sign":
            return np.sign(x)
        return np.tanh(self.beta * x)

    @property
    def tag(self) -> str:
        if self.variant == "tanh_beta":
            return f"tanh:{self.beta:g}"
        return self.variant

    @classmethod
    def parse(cls, text: str) -> "Kernel":
        """Parse ``sign``, ``identity``, ``kendall``, ``tanh`` or ``tanh:<beta>``."""
        name, _, arg = text.strip().lower().partition(":")
        variant = _KERNEL_ALIASES.get(name)
        if variant is None:
            raise ValueError(f"unknown kernel {text!r}")
        if arg and variant != "tanh_beta":
            raise ValueError(f"kernel {name!r} takes no parameter")
        return cls(variant, float(arg) if arg else 1.0)

    @classmethod
    def identity(cls) -> "Kernel":
        return cls("identity")

    @classmethod
    def sign(cls) -> "Kernel":
        return cls("sign")

    @classmethod
    def tanh(cls, beta: float = 1.0) -> "Kernel":
        return cls("tanh_beta", beta)


@dataclass
class ReturnPanel:
    """N x T matrix of returns, rows are assets and columns are dates."""

    values: np.ndarray
    asset_ids: Sequence[str] = field(default=None)
    timestamps: Sequence[str] = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("panel values must be a 2-d array (assets x time)")
        n, t = values.shape
        if n < 2 or t < 2:
            raise ValueError(f"panel needs N >= 2 and T >= 2, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("panel contains non-finite entries")
        self.values = values
        if self.asset_ids is None:
            self.asset_ids = [f"a{i}" for i in range(n)]
        if self.timestamps is None:
            self.timestamps = [str(k) for k in range(t)]
        self.asset_ids = [str(a) for a in self.asset_ids]
        self.timestamps = [str(s) for s in self.timestamps]
        if len(self.asset_ids) != n or len(self.timestamps) != t:
            raise ValueError("label lengths do not match panel shape")

    @property
    def n_assets(self) -> int:
        return self.values.shape[0]

    @property
    def n_obs(self) -> int:
        return self.values.shape[1]


@dataclass
class CorrelationMatrix:
    values: np.ndarray
    estimator_tag: str

    def violations(self, tol: float = 1e-12) -> list[str]:
        """Return the list of violated invariants (empty when valid)."""
        m = self.values
        n = m.shape[0]
        out = []
        if np.max(np.abs(m - m.T)) > tol:
            out.append("not symmetric")
        if np.max(np.abs(np.diag(m) - 1.0)) > tol:
            out.append("diagonal not unit")
        if np.max(np.abs(m)) > 1.0 + tol:
            out.append("entries outside [-1, 1]")
        if np.linalg.eigvalsh(m)[0] < -1e-10 * n:
            out.append("not positive semidefinite")
        return out

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _as_values(panel) -> tuple[np.ndarray, list[str]]:
    if isinstance(panel, ReturnPanel):
        return panel.values, panel.asset_ids
    values = np.asarray(panel, dtype=float)
    if values.ndim != 2:
        raise ValueError("expected a 2-d array (assets x time)")
    return values, [f"a{i}" for i in range(values.shape[0])]


def _finish(gram: np.ndarray, ids, what: str) -> np.ndarray:
    """Normalize a Gram matrix into a correlation matrix."""
    diag = np.diag(gram).copy()
    bad = np.flatnonzero(~(diag > 0))
    if bad.size:
        i = int(bad[0])
        raise DegenerateSeries(f"asset {ids[i]!r} is degenerate under {what}", asset=ids[i])
    root = np.sqrt(diag)
    corr = gram / (root[:, None] * root[None, :])
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def _difference_blocks(values: np.ndarray, kernel: Kernel,
                       block_pairs: int = _BLOCK_PAIRS) -> Iterator[np.ndarray]:
    """Yield kernel-transformed pairwise differences, in t-major order, by blocks."""
    t_len = values.shape[1]
    t = 0
    while t < t_len - 1:
        parts = []
        size = 0
        while t < t_len - 1 and (size == 0 or size + t_len - 1 - t <= block_pairs):
            parts.append(values[:, t:t + 1] - values[:, t + 1:])
            size += t_len - 1 - t
            t += 1
        yield kernel(np.concatenate(parts, axis=1))


def _pairwise_gram(values: np.ndarray, kernel: Kernel) -> np.ndarray:
    n = values.shape[0]
    gram = np.zeros((n, n))
    for block in _difference_blocks(values, kernel):
        gram += block @ block.T
    return gram


def gcc_pair(x, y, kernel: Kernel) -> float:
    """Estimate the generalized correlation coefficient of two series."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("series must have equal length")
    if x.size < 2:
        raise ValueError("need at least two observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("series contain non-finite values")
    gram = _pairwise_gram(np.vstack([x, y]), kernel)
    sxx, syy = gram[0, 0], gram[1, 1]
    if not sxx > 0:
        raise DegenerateSeries("first series is degenerate under the kernel", asset=0)
    if not syy > 0:
        raise DegenerateSeries("second series is degenerate under the kernel", asset=1)
    return float(gram[0, 1] / (np.sqrt(sxx) * np.sqrt(syy)))


# -- sign kernel via inversion counting ----------------------------------------

_RUN = 16


@njit(cache=True)
def _tied_pairs_sorted(v):
    """Number of tied pairs in a sorted array."""
    total = 0
    run = 1
    for k in range(1, v.size):
        if v[k] == v[k - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


@njit(cache=True)
def _count_inversions(a, buf):
    """Sort ``a`` in place (bottom-up merge sort); return #{i < j : a[i] > a[j]}."""
    n = a.size
    swaps = 0
    # Insertion-sort short runs first: each shift removes exactly one inversion.
    for lo in range(0, n, _RUN):
        hi = min(lo + _RUN, n)
        for k in range(lo + 1, hi):
            v = a[k]
            m = k
            while m > lo and a[m - 1] > v:
                a[m] = a[m - 1]
                m -= 1
            a[m] = v
            swaps += k - m
    width = _RUN
    src = a
    dst = buf
    flipped = False
    while width < n:
        lo = 0
        while lo < n:
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            # Branch-free merge step; random data defeats the branch predictor.
            while i < mid and j < hi:
                right = src[j] < src[i]
                dst[k] = src[j] if right else src[i]
                swaps += (mid - i) * right
                j += right
                i += 1 - right
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
            lo = hi
        src, dst = dst, src
        flipped = not flipped
        width *= 2
    if flipped:
        a[:] = src
    return swaps


@njit(cache=True)
def _sign_counts(xs, y, buf):
    """Return (sum sign(dx) sign(dy), #pairs untied in y) for ``xs`` sorted and ``y`` aligned.

    ``y`` is modified in place. Pairs tied in x are excluded by the caller
    through the x-tie count.
    """
    n = xs.size
    joint_ties = 0
    start = 0
    # Sort y inside each x-tie group so tied-x pairs never count as inversions.
    while start < n:
        stop = start + 1
        while stop < n and xs[stop] == xs[start]:
            stop += 1
        if stop - start > 1:
            y[start:stop] = np.sort(y[start:stop])
            joint_ties += _tied_pairs_sorted(y[start:stop])
        start = stop
    x_ties = _tied_pairs_sorted(xs)
    swaps = _count_inversions(y, buf)
    y_ties = _tied_pairs_sorted(y)
    n0 = n * (n - 1) // 2
    s = n0 - x_ties - y_ties + joint_ties - 2 * swaps
    return s, n0 - x_ties, n0 - y_ties


def _kendall_pair_sorted(x, y):
    # numpy's vectorized sort beats numba's; stability is not needed because
    # y is re-sorted inside every x-tie group.
    order = np.argsort(x)
    xs = x[order]
    ys = y[order]
    buf = np.empty_like(ys)
    return _sign_counts(xs, ys, buf)


@njit(cache=True)
def _kendall_gram(values, orders):
    """Integer Gram matrix of sign-transformed pairwise differences.

    ``orders[i]`` sorts row ``i``.
    """
    n, t_len = values.shape
    gram = np.zeros((n, n), dtype=np.int64)
    buf = np.empty(t_len)
    for i in range(n):
        order = orders[i]
        xs = values[i][order]
        for j in range(i + 1, n):
            ys = values[j][order]
            s, nx, ny = _sign_counts(xs, ys, buf)
            gram[i, j] = s
            gram[j, i] = s
            gram[i, i] = nx
            gram[j, j] = ny
    if n == 1:
        gram[0, 0] = t_len * (t_len - 1) // 2 - _tied_pairs_sorted(np.sort(values[0]))
    return gram


def kendall_pair_fast(x, y) -> float:
    """Kendall's tau-b in O(T log T); identical to ``gcc_pair(x, y, Kernel.sign())``."""
    x = np.ascontiguousarray(x, dtype=float).ravel()
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("series must have equal length")
    if x.size < 2:
        raise ValueError("need at least two observations")
    s, nx, ny = _kendall_pair_sorted(x, y)
    if nx == 0:
        raise DegenerateSeries("first series is constant", asset=0)
    if ny == 0:
        raise DegenerateSeries("second series is constant", asset=1)
    return float(float(s) / (np.sqrt(float(nx)) * np.sqrt(float(ny))))


def kendall_matrix(panel) -> CorrelationMatrix:
    """Kendall GCM assembled from per-pair inversion counts."""
    values, ids = _as_values(panel)
    values = np.ascontiguousarray(values)
    gram = _kendall_gram(values, np.argsort(values, axis=1)).astype(float)
    return CorrelationMatrix(_finish(gram, ids, "the sign kernel"), "kendall")


def gcc_matrix(panel, kernel: Kernel) -> CorrelationMatrix:
    """Generalized correlation matrix of all asset pairs.

    The sign kernel is routed through :func:`kendall_matrix`; other kernels
    accumulate the Gram matrix of the kernel-transformed pairwise
    differences block by block, which makes the result positive
    semidefinite by construction.
    """
    if kernel.variant == "sign":
        out = kendall_matrix(panel)
        out.estimator_tag = "gcc:sign"
        return out
    values, ids = _as_values(panel)
    gram = _pairwise_gram(values, kernel)
    return CorrelationMatrix(_finish(gram, ids, f"kernel {kernel.tag}"), f"gcc:{kernel.tag}")


def _dense_gcc_matrix(panel, kernel: Kernel) -> np.ndarray:
    # Pairwise-difference route for every kernel, sign included.
    values, ids = _as_values(panel)
    return _finish(_pairwise_gram(values, kernel), ids, f"kernel {kernel.tag}")


def pearson_matrix(panel) -> CorrelationMatrix:
    values, ids = _as_values(panel)
    centered = values - values.mean(axis=1, keepdims=True)
    return CorrelationMatrix(_finish(centered @ centered.T, ids, "Pearson"), "pearson")


def spearman_matrix(panel) -> CorrelationMatrix:
    """Pearson correlation of per-row ranks (average ranks for ties)."""
    values, ids = _as_values(panel)
    ranks = rankdata(values, axis=1)
    centered = ranks - ranks.mean(axis=1, keepdims=True)
    return CorrelationMatrix(_finish(centered @ centered.T, ids, "Spearman"), "spearman")


def clipped_pearson_matrix(panel, clip_quantile: float = 0.95) -> CorrelationMatrix:
    """Pearson correlation after winsorizing each row at its [1-q, q] quantiles."""
    if not 0.5 < clip_quantile <= 1.0:
        raise ValueError("clip_quantile must lie in (0.5, 1]")
    values, ids = _as_values(panel)
    if clip_quantile < 1.0:
        lo = np.quantile(values, 1.0 - clip_quantile, axis=1, keepdims=True)
        hi = np.quantile(values, clip_quantile, axis=1, keepdims=True)
        values = np.clip(values, lo, hi)
    centered = values - values.mean(axis=1, keepdims=True)
    out = _finish(centered @ centered.T, ids, "clipped Pearson")
    return CorrelationMatrix(out, f"clipped_pearson:{clip_quantile:g}")


def correlation_matrix(panel, estimator: str) -> CorrelationMatrix:
    """Dispatch on an estimator tag.

    Accepted tags: ``pearson``, ``spearman``, ``clipped_pearson[:q]``,
    ``kendall`` and ``gcc:<kernel>`` (e.g. ``gcc:sign``, ``gcc:tanh:0.5``),
    plus the shorthand ``tanh[:beta]``.
    """
    name, _, arg = estimator.strip().lower().partition(":")
    if name == "pearson" and not arg:
        return pearson_matrix(panel)
    if name == "spearman" and not arg:
        return spearman_matrix(panel)
    if name == "clipped_pearson":
        return clipped_pearson_matrix(panel, float(arg) if arg else 0.95)
    if name == "kendall" and not arg:
        return kendall_matrix(panel)
    if name == "gcc":
        return gcc_matrix(panel, Kernel.parse(arg))
    if name == "tanh":
        return gcc_matrix(panel, Kernel.parse(estimator))
    raise ValueError(f"unknown estimator {estimator!r}")
