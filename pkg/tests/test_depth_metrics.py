import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bronchosim.metrics import (DepthEvalPair, depth_metrics,
                                median_scale_align)


def test_identity_prediction():
    gt = np.random.default_rng(0).uniform(0.002, 0.05, (16, 16))
    m = depth_metrics(DepthEvalPair(gt.copy(), gt))
    assert m.l1 == 0.0
    assert m.abs_rel == 0.0
    assert m.rmse == 0.0
    assert m.delta1 == m.delta2 == m.delta3 == 100.0


def test_uniform_scale_1p3():
    gt = np.random.default_rng(1).uniform(0.002, 0.05, (16, 16))
    m = depth_metrics(DepthEvalPair(1.3 * gt, gt))
    assert m.abs_rel == pytest.approx(0.3, abs=1e-12)
    assert m.delta1 == 0.0        # 1.3 > 1.25
    assert m.delta2 == 100.0      # 1.3 < 1.5625


def scalar_loop_oracle(pred, gt, mask):
    n = 0
    s_l1 = s_rel = s_sq = 0.0
    c1 = c2 = c3 = 0
    h, w = gt.shape
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            n += 1
            d_hat, d = pred[i, j], gt[i, j]
            s_l1 += abs(d_hat - d)
            s_rel += abs(d_hat - d) / d
            s_sq += (d_hat - d) ** 2
            r = max(d_hat / d, d / d_hat)
            c1 += r < 1.25
            c2 += r < 1.25 ** 2
            c3 += r < 1.25 ** 3
    return (s_l1 / n, s_rel / n, (s_sq / n) ** 0.5,
            100 * c1 / n, 100 * c2 / n, 100 * c3 / n)


def test_matches_scalar_oracle():
    rng = np.random.default_rng(2)
    gt = rng.uniform(0.002, 0.05, (8, 8))
    pred = gt * rng.uniform(0.5, 2.0, (8, 8))
    mask = rng.random((8, 8)) > 0.2
    m = depth_metrics(DepthEvalPair(pred, gt, mask))
    l1, rel, rmse, d1, d2, d3 = scalar_loop_oracle(pred, gt, mask)
    assert m.l1 == pytest.approx(l1, abs=1e-12)
    assert m.abs_rel == pytest.approx(rel, abs=1e-12)
    assert m.rmse == pytest.approx(rmse, abs=1e-12)
    assert m.delta1 == pytest.approx(d1, abs=1e-12)
    assert m.delta2 == pytest.approx(d2, abs=1e-12)
    assert m.delta3 == pytest.approx(d3, abs=1e-12)


def test_mask_permutation_invariance():
    rng = np.random.default_rng(3)
    gt = rng.uniform(0.01, 0.05, (10, 10))
    pred = gt * rng.uniform(0.8, 1.3, (10, 10))
    m0 = depth_metrics(DepthEvalPair(pred, gt))
    perm = rng.permutation(100)
    m1 = depth_metrics(DepthEvalPair(pred.ravel()[perm].reshape(10, 10),
                                     gt.ravel()[perm].reshape(10, 10)))
    assert m0.to_dict() == pytest.approx(m1.to_dict())


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_delta_monotonicity(seed):
    rng = np.random.default_rng(seed)
    gt = rng.uniform(0.002, 0.05, (6, 6))
    pred = gt * rng.lognormal(0.0, 0.4, (6, 6))
    m = depth_metrics(DepthEvalPair(pred, gt))
    assert m.delta1 <= m.delta2 <= m.delta3


def test_infinite_gt_excluded_by_mask():
    gt = np.full((4, 4), 0.02)
    gt[0, 0] = np.inf
    gt[0, 1] = 0.0
    m = depth_metrics(DepthEvalPair(np.full((4, 4), 0.02), gt))
    assert m.l1 == 0.0


def test_empty_mask_rejected():
    gt = np.zeros((4, 4))
    with pytest.raises(ValueError, match="empty"):
        depth_metrics(DepthEvalPair(np.ones((4, 4)), gt))


# -- median scale alignment ------------------------------------------------------

def test_align_double_scale():
    gt = np.random.default_rng(4).uniform(0.01, 0.05, (8, 8))
    aligned = median_scale_align(2.0 * gt, gt)
    assert np.allclose(aligned, gt, atol=1e-15)


def test_align_identity_scale():
    gt = np.random.default_rng(5).uniform(0.01, 0.05, (8, 8))
    aligned = median_scale_align(gt.copy(), gt)
    assert np.allclose(aligned, gt, atol=1e-15)


def test_align_with_outlier_block_sort_oracle():
    rng = np.random.default_rng(6)
    gt = rng.uniform(0.01, 0.05, (10, 10))
    pred = 1.7 * gt
    pred[:1, :] = 10.0  # 10% outlier block
    aligned = median_scale_align(pred, gt)
    # sort-based median oracle
    med = lambda a: np.sort(a.ravel())[[49, 50]].mean()
    scale = med(gt) / med(pred)
    assert np.allclose(aligned, pred * scale, atol=1e-15)


def test_align_rejects_nonpositive_median():
    gt = np.full((4, 4), 0.02)
    with pytest.raises(ValueError, match="median"):
        median_scale_align(np.full((4, 4), -1.0), gt)
