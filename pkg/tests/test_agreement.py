import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cceval.agreement import (
    AgreementReport,
    ObserverMatrix,
    agreement_metrics,
    bias,
    bootstrap_mean_ci,
    lin_ccc,
    loo_ceiling,
    nccc,
    normalized_error,
    observer_variability,
    pearson,
)
from cceval.errors import (
    DegenerateInputs,
    InsufficientData,
    MismatchedKeys,
    NoOverlap,
    ZeroCeiling,
    ZeroMean,
    ZeroSd,
    ZeroVariance,
)


def brute_ccc(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y)) / n
    sxx = sum((a - mx) ** 2 for a in x) / n
    syy = sum((b - my) ** 2 for b in y) / n
    return 2 * sxy / (sxx + syy + (mx - my) ** 2)


def test_pearson_examples():
    x = [1.0, 4.0, 2.0, 8.0]
    assert pearson(x, x) == 1.0
    assert pearson(x, [-v for v in x]) == -1.0
    assert pearson(x, [2 * v + 7 for v in x]) == pytest.approx(1.0)
    with pytest.raises(ZeroVariance):
        pearson(x, [3.0] * 4)
    with pytest.raises(InsufficientData):
        pearson([1.0], [2.0])


def test_bias_examples():
    h = {"a": 10.0, "b": 20.0, "c": 30.0}
    assert bias(h, h) == 0.0
    assert bias({k: v + 5 for k, v in h.items()}, h) == 5.0
    assert bias({"a": 9.0, "b": 20.0, "c": 34.0}, h) == 1.0
    with pytest.raises(MismatchedKeys):
        bias({"a": 1.0}, h)


def test_normalized_error_examples():
    h = [10.0, 20.0]
    assert normalized_error(h, h, 3.0) == 0.0
    assert normalized_error([12.0, 22.0], h, 4.0) == pytest.approx(0.5)
    assert normalized_error([13.0, 24.0], h, 5.0) == pytest.approx(math.sqrt(12.5) / 5, abs=1e-4)
    with pytest.raises(ZeroSd):
        normalized_error(h, h, 0.0)


def test_ccc_worked_example():
    # cov = 1, var = 2/3 and 14/9, mean gap 1/3: 2 / (21/9) = 6/7
    assert lin_ccc([1, 2, 3], [1, 2, 4]) == pytest.approx(6 / 7, abs=1e-12)
    assert lin_ccc([1, 2, 3], [1, 2, 4]) == pytest.approx(brute_ccc([1, 2, 3], [1, 2, 4]))
    assert lin_ccc([1, 2, 3], [1, 2, 3]) == 1.0
    assert lin_ccc([1, 2, 3], [6, 7, 8]) < 1
    with pytest.raises(DegenerateInputs):
        lin_ccc([2, 2], [2, 2])


def test_ccc_bounded_by_pearson_500_pairs():
    rng = np.random.default_rng(99)
    for _ in range(500):
        n = rng.integers(3, 30)
        x = rng.normal(rng.uniform(-50, 50), rng.uniform(0.1, 20), n)
        y = rng.normal(0, 1, n) * rng.uniform(0.1, 20) + rng.uniform(-50, 50) + rng.uniform(-2, 2) * x
        c = lin_ccc(x, y)
        assert c <= abs(pearson(x, y)) + 1e-12
        assert c == pytest.approx(lin_ccc(y, x), abs=1e-12)
        assert c == pytest.approx(brute_ccc(x, y), abs=1e-9)


def identical(n_subj=5):
    row = {"c1": 80.0, "c2": 95.0, "c3": 60.0, "c4": 110.0}
    return ObserverMatrix.from_dict({f"s{i}": dict(row) for i in range(n_subj)}), row


@pytest.mark.parametrize("n", [2, 3, 4, 7])
def test_identical_ceiling_exactly_one(n):
    m, row = identical(n)
    assert loo_ceiling(m) == 1.0
    assert nccc(row, m) == 1.0


def test_anti_concordant_ceiling():
    m = ObserverMatrix(["a", "b"], ["x", "y", "z"], [[1.0, -2.0, 1.0], [-1.0, 2.0, -1.0]])
    assert loo_ceiling(m) <= 0
    with pytest.raises(ZeroCeiling):
        nccc([1.0, 0.0, 0.0], m)


def test_ceiling_needs_two_subjects():
    with pytest.raises(InsufficientData):
        loo_ceiling(ObserverMatrix(["a"], ["x", "y"], [[1.0, 2.0]]))


def test_missing_cells_equal_complete_submatrix():
    vals = np.array([[1.0, 2.0, np.nan, 4.0], [2.0, 3.0, 5.0, 4.5], [1.5, 2.5, 4.0, 5.0]])
    m = ObserverMatrix(["a", "b", "c"], ["w", "x", "y", "z"], vals)
    # each LOO pair drops NaNs independently; reproduce by hand
    want = []
    for i in range(3):
        rest = np.delete(vals, i, axis=0)
        others = np.nanmean(rest, axis=0)
        ok = np.isfinite(vals[i]) & np.isfinite(others)
        want.append(brute_ccc(vals[i][ok], others[ok]))
    assert loo_ceiling(m) == pytest.approx(np.mean(want))
    assert m.mean_vector()["y"] == pytest.approx(4.5)
    assert m.pooled_sd() == pytest.approx(np.std(vals[np.isfinite(vals)], ddof=1))


def test_variability_examples():
    m, _ = identical(3)
    v = observer_variability(m)
    assert all(s.mean_pearson == pytest.approx(1.0) for s in v.values())
    m = ObserverMatrix(["a", "b"], ["x", "y", "z"], [[50.0, 100.0, 150.0], [70.0, 70.0, 70.0]])
    v = observer_variability(m)
    assert v["a"].cv == pytest.approx(0.408, abs=1e-3)
    assert v["b"].cv == 0.0
    assert math.isnan(v["b"].mean_pearson)
    with pytest.raises(ZeroMean):
        observer_variability(ObserverMatrix(["a", "b"], ["x", "y"], [[-1.0, 1.0], [1.0, 2.0]]))


def test_bootstrap_reproducible():
    vals = {f"s{i}": v for i, v in enumerate([-3.0, -5.0, 1.0, -8.0, -2.0, -6.5])}
    a = bootstrap_mean_ci(vals, seed=4)
    b = bootstrap_mean_ci(vals, seed=4)
    assert a == b
    mean, lo, hi = a
    assert lo < mean < hi
    assert mean == pytest.approx(np.mean(list(vals.values())))
    assert bootstrap_mean_ci(vals, seed=4, n_resamples=500) != a


def test_agreement_metrics_self():
    m, row = identical(4)
    met = agreement_metrics(row, m)
    assert met.bias == 0.0 and met.normalized_error == 0.0
    assert met.accuracy == pytest.approx(1.0) and met.nccc == 1.0
    with pytest.raises(NoOverlap):
        agreement_metrics({"other": 1.0}, m)


def test_report_serialisation():
    m, row = identical(3)
    rep = AgreementReport()
    rep.add("model", "all", "cci", agreement_metrics(row, m))
    doc = rep.to_json_dict()
    assert doc["metrics"]["model"]["all"]["cci"]["nccc"] == 1.0
    text = rep.to_text()
    assert "ncCCC" in text and "model" in text


vecs = st.lists(st.floats(-100, 100), min_size=3, max_size=20)


@settings(max_examples=200, deadline=None)
@given(vecs, st.floats(-50, 50))
def test_translation_covariance(v, c):
    h = [x * 0.5 + 3 for x in v]
    assert bias([x + c for x in v], [x + c for x in h]) == pytest.approx(bias(v, h), abs=1e-9)
    assert normalized_error([x + c for x in v], [x + c for x in h], 2.0) == pytest.approx(
        normalized_error(v, h, 2.0), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(vecs, vecs)
def test_ccc_symmetric_and_bounded(x, y):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    try:
        c = lin_ccc(x, y)
    except DegenerateInputs:
        return
    assert -1 - 1e-12 <= c <= 1 + 1e-12
    assert c == pytest.approx(lin_ccc(y, x), abs=1e-12)
