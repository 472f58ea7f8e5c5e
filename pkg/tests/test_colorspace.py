import csv
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cceval.colorspace import (
    D65,
    chroma,
    check_gamut,
    ciede2000,
    in_gamut,
    lab_to_linear,
    linear_to_lab,
    linear_to_srgb,
    srgb_to_lab,
    srgb_to_linear,
    white_point,
    lab_to_xyz,
    xyz_to_lab,
)
from cceval.errors import OutOfGamut

DATA = Path(__file__).parent / "data"


def sharma_pairs():
    with open(DATA / "ciede2000_sharma.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(np.array([float(r[k]) for k in ("L1", "a1", "b1")]),
             np.array([float(r[k]) for k in ("L2", "a2", "b2")]),
             float(r["dE00"])) for r in rows]


unit = st.floats(0.0, 1.0, allow_nan=False)
rgb = st.tuples(unit, unit, unit).map(np.array)


def test_srgb_fixed_points():
    assert np.array_equal(srgb_to_linear([0, 0, 0]), [0, 0, 0])
    assert np.array_equal(srgb_to_linear([1, 1, 1]), [1, 1, 1])


def test_srgb_mid_grey():
    np.testing.assert_allclose(srgb_to_linear([0.5] * 3), 0.21404, atol=5e-6)


def test_srgb_threshold_is_continuous():
    lo = srgb_to_linear(0.04045)
    hi = srgb_to_linear(np.nextafter(0.04045, 1.0))
    # the standard constants leave a jump of a few 1e-9 at the knee
    assert abs(hi - lo) < 1e-7


def test_lab_black_and_white():
    np.testing.assert_allclose(linear_to_lab([0, 0, 0]), [0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(linear_to_lab([1, 1, 1]), [100, 0, 0], atol=1e-9)
    np.testing.assert_allclose(lab_to_linear([100, 0, 0]), [1, 1, 1], atol=1e-12)
    np.testing.assert_allclose(lab_to_linear([0, 0, 0]), [0, 0, 0], atol=1e-12)


def test_lab_mid_grey():
    lab = linear_to_lab([0.5, 0.5, 0.5])
    assert lab[0] == pytest.approx(76.0693, abs=1e-4)
    assert abs(lab[1]) < 1e-9 and abs(lab[2]) < 1e-9


def test_chroma_examples():
    assert chroma([50, 0, 0]) == 0
    assert chroma([50, 3, 4]) == pytest.approx(5.0)
    assert chroma([20, -60, 80]) == pytest.approx(100.0)


@pytest.mark.parametrize("i", range(34))
def test_ciede2000_reference_vectors(i):
    x, y, expected = sharma_pairs()[i]
    assert ciede2000(x, y) == pytest.approx(expected, abs=1e-4)
    assert ciede2000(y, x) == pytest.approx(expected, abs=1e-4)


def test_ciede2000_vectorised_matches_scalar():
    pairs = sharma_pairs()
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    d = ciede2000(a, b)
    assert d.shape == (len(pairs),)
    np.testing.assert_allclose(d, [ciede2000(x, y) for x, y, _ in pairs], rtol=0, atol=1e-13)


def test_ciede2000_worked_example():
    assert ciede2000([50, 2.6772, -79.7751], [50, 0, -82.7485]) == pytest.approx(2.0425, abs=1e-4)


def test_out_of_gamut_names_channel():
    with pytest.raises(OutOfGamut) as info:
        lab_to_linear([50, 120, 0], strict=True)
    assert info.value.channel in "rgb"
    assert "channel" in str(info.value)
    with pytest.raises(OutOfGamut, match="patch 3"):
        check_gamut([0.5, 1.2, 0.5], upper=1.0, where="patch 3")
    assert in_gamut(np.array([[0.2, 0.3, 0.4], [1.1, 0.2, 0.2]]), upper=1.0).tolist() == [True, False]


def test_white_point_validation():
    assert white_point([0.95047, 1, 1.08883]) == D65
    with pytest.raises(ValueError):
        white_point([0.9, 0, 1.0])


def test_round_trips_1000_seeded():
    rng = np.random.default_rng(2024)
    c = rng.random((1000, 3))
    assert np.max(np.abs(linear_to_srgb(srgb_to_linear(c)) - c)) < 1e-9
    lab = linear_to_lab(c)
    assert np.max(np.abs(linear_to_lab(lab_to_linear(lab)) - lab)) < 1e-9


def test_custom_white_point_keeps_white_at_100():
    wp = white_point([0.9642, 1.0, 0.8249])
    np.testing.assert_allclose(xyz_to_lab(np.array(wp), wp), [100.0, 0.0, 0.0], atol=1e-12)
    lab = np.array([40.0, 10.0, -20.0])
    np.testing.assert_allclose(xyz_to_lab(lab_to_xyz(lab, wp), wp), lab, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(rgb)
def test_srgb_round_trip_property(c):
    assert np.max(np.abs(linear_to_srgb(srgb_to_linear(c)) - c)) < 1e-9


@settings(max_examples=200, deadline=None)
@given(rgb)
def test_lab_round_trip_property(c):
    lab = linear_to_lab(c)
    assert np.max(np.abs(lab_to_linear(lab) - c)) < 1e-9


@settings(max_examples=200, deadline=None)
@given(unit)
def test_achromatic_preservation(v):
    lab = linear_to_lab(np.array([v, v, v]))
    assert abs(lab[1]) < 1e-9 and abs(lab[2]) < 1e-9
    assert abs(srgb_to_lab(np.array([v, v, v]))[1]) < 1e-9


lab_st = st.tuples(st.floats(0, 100), st.floats(-128, 128), st.floats(-128, 128)).map(np.array)


@settings(max_examples=300, deadline=None)
@given(lab_st, lab_st)
def test_ciede2000_metric_properties(x, y):
    d = ciede2000(x, y)
    assert d >= 0
    assert d == pytest.approx(ciede2000(y, x), abs=1e-9)
    assert ciede2000(x, x) == 0.0


@settings(max_examples=200, deadline=None)
@given(lab_st)
def test_chroma_sign_and_lightness_invariance(c):
    flipped = np.array([100 - c[0], -c[1], -c[2]])
    assert chroma(c) == pytest.approx(chroma(flipped))
