import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cceval.colorspace import ciede2000
from cceval.errors import ShapeMismatch
from cceval.pbcloss import (
    DEFAULT,
    PbcParams,
    chroma_weight,
    delta_e_grad,
    pbc_loss,
    pbc_loss_batch,
    pbc_loss_grad,
    pbc_loss_map,
)


def lab_image(rng, shape=(8, 8)):
    return np.stack([rng.uniform(5, 95, shape), rng.uniform(-70, 70, shape),
                     rng.uniform(-70, 70, shape)], axis=-1)


def numeric_grad(f, x, h=1e-4):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def test_chroma_weight_values():
    assert chroma_weight(0) == 1.0
    assert chroma_weight(128) == 3.0
    assert chroma_weight(64) == 1.5
    with pytest.raises(ValueError):
        chroma_weight(-1)


def test_zero_at_identity(rng):
    x = lab_image(rng)
    assert pbc_loss(x, x) == 0.0


def test_worked_example():
    gt = np.array([[50.0, 0, 0]])
    pred = np.array([[50.0, 3, 4]])
    assert pbc_loss(pred, gt) == pytest.approx(ciede2000(pred[0], gt[0]) + 12.5, abs=1e-12)


def test_lightness_only_error():
    gt = np.array([[40.0, 10, -5]])
    pred = gt + [[3.0, 0, 0]]
    assert pbc_loss(pred, gt) == pytest.approx(ciede2000(pred[0], gt[0]) + 0.2 * 9.0)


def test_term_isolation(rng):
    a, b = lab_image(rng), lab_image(rng)
    de_only = PbcParams(1.0, 0.0, 0.0)
    assert pbc_loss(a, b, de_only) == pytest.approx(np.mean(ciede2000(a, b)))
    ab_only = PbcParams(0.0, 1.0, 0.0, beta=0.0)
    assert pbc_loss(a, b, ab_only) == pytest.approx(np.mean(np.sum((a - b)[..., 1:] ** 2, axis=-1)))


def test_weight_uses_ground_truth_chroma():
    gt = np.array([[50.0, 128.0, 0.0]])
    pred = np.array([[50.0, 127.0, 0.0]])
    p = PbcParams(0.0, 1.0, 0.0)
    assert pbc_loss(pred, gt, p) == pytest.approx(3.0)
    assert pbc_loss(gt, pred, p) == pytest.approx(chroma_weight(127.0))


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        pbc_loss(np.zeros((2, 2, 3)), np.zeros((2, 3, 3)))
    with pytest.raises(ShapeMismatch):
        pbc_loss(np.zeros((2, 2)), np.zeros((2, 2)))


def test_map_shape(rng):
    assert pbc_loss_map(lab_image(rng, (4, 5)), lab_image(rng, (4, 5))).shape == (4, 5)


def test_batch_is_pixel_weighted(rng):
    a1, b1 = lab_image(rng, (4, 4)), lab_image(rng, (4, 4))
    a2, b2 = lab_image(rng, (2, 3)), lab_image(rng, (2, 3))
    want = (16 * pbc_loss(a1, b1) + 6 * pbc_loss(a2, b2)) / 22
    assert pbc_loss_batch([a1, a2], [b1, b2]) == pytest.approx(want)


@pytest.mark.parametrize("seed", range(20))
def test_squared_term_gradient(seed):
    rng = np.random.default_rng(seed)
    pred, gt = lab_image(rng), lab_image(rng)
    p = PbcParams(0.0, 0.5, 0.2)
    num = numeric_grad(lambda x: pbc_loss(x, gt, p), pred)
    ana = pbc_loss_grad(pred, gt, p)
    rel = np.linalg.norm(ana - num) / np.linalg.norm(num)
    assert rel < 1e-4


@pytest.mark.parametrize("seed", range(20))
def test_delta_e_gradient_richardson(seed):
    rng = np.random.default_rng(100 + seed)
    pred, gt = lab_image(rng), lab_image(rng)
    g1 = delta_e_grad(pred, gt, 1e-4)
    g2 = delta_e_grad(pred, gt, 2e-4)
    extrap = (4 * g1 - g2) / 3
    # central differences: halving the step moves the estimate by O(h^2)
    assert np.linalg.norm(g1 - extrap) / np.linalg.norm(extrap) < 1e-4
    assert np.linalg.norm(g1 - g2) / np.linalg.norm(g1) < 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_full_gradient_against_loss(seed):
    rng = np.random.default_rng(200 + seed)
    pred, gt = lab_image(rng, (4, 4)), lab_image(rng, (4, 4))
    num = numeric_grad(lambda x: pbc_loss(x, gt), pred)
    ana = pbc_loss_grad(pred, gt)
    assert np.linalg.norm(ana - num) / np.linalg.norm(num) < 1e-4


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 300), st.floats(0, 300))
def test_weight_monotone(c1, c2):
    lo, hi = sorted((c1, c2))
    assert chroma_weight(lo) <= chroma_weight(hi)
    # strict once the weight gap (>= 2 * 1e-6 / 128**2) is above double rounding
    if hi - lo >= 1e-3 and hi >= 1e-3:
        assert chroma_weight(lo) < chroma_weight(hi)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_non_negative(seed):
    rng = np.random.default_rng(seed)
    a, b = lab_image(rng, (3, 3)), lab_image(rng, (3, 3))
    assert pbc_loss(a, b, DEFAULT) > 0
