import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcmport.datagen import GroundTruth, StudentConfig, make_factor_truth, sample_student
from gcmport.errors import DegenerateFold
from gcmport.estimators import correlation_matrix, pearson_matrix
from gcmport.icvc import FoldPlan, icvc, pava
from gcmport.preprocess import scale_rows, standardize
from gcmport.spectral import eig_sym


def pava_oracle(y, w):
    """Exhaustive search over contiguous block partitions.

    The isotonic fit is piecewise constant with block values equal to the
    weighted block means; the optimum is the best monotone candidate.
    """
    n = len(y)
    best, best_fit = np.inf, None
    for cuts in itertools.product([False, True], repeat=n - 1):
        bounds = [0] + [k + 1 for k, c in enumerate(cuts) if c] + [n]
        fit = np.empty(n)
        for a, b in zip(bounds[:-1], bounds[1:]):
            fit[a:b] = np.sum(w[a:b] * y[a:b]) / np.sum(w[a:b])
        if np.all(np.diff(fit) >= -1e-12):
            loss = np.sum(w * (y - fit) ** 2)
            if loss < best - 1e-14:
                best, best_fit = loss, fit
    return best_fit


@pytest.mark.parametrize("y,expected", [([1, 2, 3], [1, 2, 3]), ([3, 1, 2], [2, 2, 2]), ([1, 3, 2], [1, 2.5, 2.5])])
def test_pava_examples(y, expected):
    np.testing.assert_allclose(pava(y), expected, rtol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8), st.integers(0, 2**32 - 1))
def test_pava_matches_oracle(y, seed):
    y = np.array(y)
    w = np.random.default_rng(seed).uniform(0.1, 3, y.size)
    np.testing.assert_allclose(pava(y, w), pava_oracle(y, w), atol=1e-8)
    np.testing.assert_allclose(pava(y), pava_oracle(y, np.ones_like(y)), atol=1e-8)


def test_pava_validation():
    with pytest.raises(ValueError):
        pava([1, 2], [1])
    with pytest.raises(ValueError):
        pava([1, 2], [-1, 1])


class TestFoldPlan:
    def test_contiguous(self):
        plan = FoldPlan.make(23, 5)
        assert plan.sizes.sum() == 23 and np.ptp(plan.sizes) <= 1
        assert np.all(np.diff(plan.assignment) >= 0)
        np.testing.assert_array_equal(np.sort(np.concatenate([plan.held_out(k) for k in range(5)])), np.arange(23))

    def test_random_is_seeded(self):
        a = FoldPlan.make(50, 10, "random", seed=3)
        b = FoldPlan.make(50, 10, "random", seed=3)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        assert a.sizes.tolist() == [5] * 10

    @pytest.mark.parametrize("n_folds", [1, 11])
    def test_bad_fold_count(self, n_folds):
        with pytest.raises(ValueError):
            FoldPlan.make(10, n_folds)


def test_null_panel_unit_variances():
    truth = GroundTruth.from_matrix(np.eye(20))
    X = standardize(sample_student(truth, StudentConfig(nu=np.inf, T=2000, seed=0))).X
    res = icvc(X)
    assert np.all((res.eigenvalues_iso >= 0.9) & (res.eigenvalues_iso <= 1.1))


def test_factor_variance_recovered():
    # row scaling only: the cross-sectional step of the full pipeline divides
    # out part of the market mode, which would bias the comparison
    truth = make_factor_truth(50, 0.7)
    raw = sample_student(truth, StudentConfig(nu=np.inf, T=2000, seed=1)).values
    res = icvc(scale_rows(raw)[0])
    top = truth.spectrum.eigenvalues[-1]
    assert abs(res.eigenvalues_iso[-1] / top - 1) < 0.15


@pytest.fixture(scope="module")
def student_panel():
    truth = make_factor_truth(30, 0.5, 3, 0.2, dispersion=0.3, seed=2)
    return standardize(sample_student(truth, StudentConfig(nu=3, T=120, seed=4)))


@pytest.mark.parametrize("source", ["pearson", "kendall", "gcc:tanh:1"])
def test_result_invariants(student_panel, source):
    res = icvc(student_panel, source)
    assert np.all(np.diff(res.eigenvalues_iso) >= 0)
    assert np.all(res.eigenvalues_raw >= 0) and np.all(res.eigenvalues_iso >= 0)
    full = eig_sym(correlation_matrix(student_panel.X, source).values)
    np.testing.assert_array_equal(res.eigenvectors, full.eigenvectors)
    assert eig_sym(res.matrix).eigenvalues[0] > -1e-10
    cleaned = res.as_cleaned()
    assert cleaned.spectrum.eigenvectors is res.source_spectrum.eigenvectors


def test_raw_variances_by_hand(student_panel):
    X = student_panel.X
    folds = FoldPlan.make(X.shape[1], 4)
    res = icvc(X, "pearson", folds)
    mu = np.zeros(X.shape[0])
    for k in range(4):
        v = eig_sym(pearson_matrix(X[:, folds.training(k)]).values).eigenvectors
        mu += np.mean((v.T @ X[:, folds.held_out(k)]) ** 2, axis=1) / 4
    np.testing.assert_allclose(res.eigenvalues_raw, mu, rtol=1e-12)
    np.testing.assert_allclose(res.eigenvalues_iso, pava(mu), rtol=1e-12)


def test_out_of_fold(student_panel):
    X = student_panel.X
    folds = FoldPlan.make(X.shape[1], 5, "random", seed=1)
    seen = []

    def source(x):
        seen.append(x.copy())
        return pearson_matrix(x).values

    icvc(X, source, folds)
    assert len(seen) == 6
    for k in range(5):
        np.testing.assert_array_equal(seen[k], X[:, folds.training(k)])
    np.testing.assert_array_equal(seen[5], X)


def test_degenerate_fold():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((3, 40))
    X[2, 4:] = 0.0  # varies only inside fold 0
    with pytest.raises(DegenerateFold):
        icvc(X, "kendall", FoldPlan.make(40, 10))


def test_fold_plan_must_cover_panel(student_panel):
    with pytest.raises(ValueError):
        icvc(student_panel, folds=FoldPlan.make(50, 5))
