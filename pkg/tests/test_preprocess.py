import numpy as np
import pytest

from gcmport.errors import ConstantAsset, ZeroCrossSectionalVol
from gcmport.estimators import ReturnPanel, pearson_matrix
from gcmport.preprocess import scale_rows, standardize


def check_normalized(X):
    np.testing.assert_allclose(X.mean(axis=1), 0.0, atol=1e-10)
    np.testing.assert_allclose(X.std(axis=1), 1.0, atol=1e-10)


def test_row_moments(rng):
    raw = rng.standard_t(3, (15, 80)) * rng.uniform(0.5, 3, (15, 1)) + 0.1
    out = standardize(raw)
    check_normalized(out.X)
    assert np.max(np.abs(np.diag(pearson_matrix(out.X).values) - 1)) < 1e-12


def test_hand_computed_pair():
    raw = np.array([[1.0, -1, 1, -1], [2.0, -2, 2, -2]])
    out = standardize(raw)
    # cross-sectional vol is sqrt(5) every day, after which both rows are +-1 up to scale
    np.testing.assert_allclose(out.cross_vol, np.sqrt(5.0))
    np.testing.assert_allclose(out.X, [[1, -1, 1, -1]] * 2, atol=1e-15)
    assert pearson_matrix(out.X).values[0, 1] == pytest.approx(1.0, abs=1e-15)


def test_already_normalized_input(rng):
    X = standardize(rng.standard_normal((6, 40))).X
    check_normalized(standardize(X).X)


def test_idempotent_moments(rng):
    once = standardize(ReturnPanel(rng.standard_normal((5, 30)), list("vwxyz")))
    twice = standardize(once.as_panel())
    check_normalized(twice.X)
    assert twice.asset_ids == list("vwxyz")


def test_column_scale_invariance(rng):
    # mirrored columns keep every row mean at zero before and after rescaling,
    # so the per-date factor is absorbed entirely by the cross-sectional vol
    half = rng.standard_normal((8, 25))
    raw = np.hstack([half, -half])
    c = np.tile(rng.uniform(0.1, 10, 25), 2)
    np.testing.assert_allclose(standardize(raw * c).X, standardize(raw).X, atol=1e-12, rtol=0)


def test_vol_normalized_roundtrip(rng):
    out = standardize(rng.standard_normal((4, 25)))
    x, sigma = scale_rows(out.vol_normalized)
    np.testing.assert_allclose(x, out.X, atol=1e-13)
    np.testing.assert_allclose(sigma, out.sigma, rtol=1e-13)


def test_zero_cross_sectional_vol(rng):
    raw = rng.standard_normal((3, 10))
    raw[:, 4] = 0.0
    others = np.arange(10) != 4
    raw[:, others] -= raw[:, others].mean(axis=1, keepdims=True)
    with pytest.raises(ZeroCrossSectionalVol) as info:
        standardize(raw)
    assert info.value.t == 4


def test_constant_asset(rng):
    with pytest.raises(ConstantAsset):
        scale_rows(np.vstack([rng.standard_normal(10), np.full(10, 2.0)]))
