import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cceval.errors import DegenerateAxis, InvariantViolation, MismatchedKeys, MissingCompetitor
from cceval.psychophys import (
    LABELS,
    CciRecord,
    CompetitorSet,
    ModelOutputs,
    cci,
    delta_cci,
    derive_match,
    project_onto_axis,
)

R = np.array([60.0, 0.0, 0.0])
T = np.array([58.0, -12.0, 24.0])


def comps(r=R, t=T):
    return CompetitorSet.equally_spaced(r, t)


def _nearest_on_line(P, r, t, lo=-1.0, hi=2.5):
    """Axis parameter (1 at R) of the line point nearest ``P``: a coarse
    scan at 0.001 followed by a 1e-7 scan around the best coarse point."""
    for step in (1e-3, 1e-7):
        grid = np.arange(lo, hi + step / 2, step)
        line = r[None, :] + (1.0 - grid)[:, None] * (t - r)[None, :]
        best = grid[np.argmin(np.linalg.norm(line - P, axis=1))]
        lo, hi = best - 1e-3, best + 1e-3
    return best


def scan_oracle(outputs, cs, step=0.001):
    """Match CCI by exhaustive search, independent of the closed forms.

    Projections come from a nearest-point scan; the match is the point of
    the R-T line, scanned at ``step`` (in units of the R-T length), lying
    between the two nearest competitors whose distances to them best follow
    the inverse-distance rule.
    """
    r, t = cs.R, cs.T
    length = np.linalg.norm(t - r)
    dist = {k: abs(1.0 - _nearest_on_line(outputs[k], r, t)) * length for k in LABELS}
    l1, l2 = sorted(LABELS, key=lambda k: (dist[k], LABELS.index(k)))[:2]
    d1, d2 = dist[l1], dist[l2]
    c1, c2 = cs[l1], cs[l2]
    grid = np.arange(-1.0, 2.5 + step / 2, step)
    pts = r[None, :] + (1.0 - grid)[:, None] * (t - r)[None, :]
    lam = (pts - c1) @ (c2 - c1) / np.dot(c2 - c1, c2 - c1)
    inside = (lam >= -step) & (lam <= 1 + step)
    if d1 + d2 == 0:
        resid = np.abs(lam - 0.5)
    else:
        resid = np.abs(d2 * np.linalg.norm(pts - c1, axis=1) - d1 * np.linalg.norm(pts - c2, axis=1))
    resid = np.where(inside, resid, np.inf)
    return 100.0 * float(grid[np.argmin(resid)])


def random_config(rng):
    r = np.array([rng.uniform(30, 80), rng.uniform(-10, 10), rng.uniform(-10, 10)])
    t = r + rng.normal(0, 15, 3)
    cs = CompetitorSet.equally_spaced(r, t)
    outs = {k: cs[k] + rng.normal(0, 6, 3) for k in LABELS}
    return cs, outs


def test_project_endpoints_and_perpendicular():
    p, tt = project_onto_axis(R, R, T)
    np.testing.assert_allclose(p, R)
    assert tt == 1.0
    p, tt = project_onto_axis(T, R, T)
    np.testing.assert_allclose(p, T)
    assert tt == pytest.approx(0.0, abs=1e-15)
    axis = T - R
    perp = np.cross(axis, [1.0, 0, 0])
    p, tt = project_onto_axis((R + T) / 2 + perp, R, T)
    np.testing.assert_allclose(p, (R + T) / 2, atol=1e-12)
    assert tt == pytest.approx(0.5)


def test_degenerate_axis():
    with pytest.raises(DegenerateAxis):
        project_onto_axis(R, R, R)
    with pytest.raises(DegenerateAxis):
        CompetitorSet.equally_spaced(R, R).validate()


def test_cci_identities_exact():
    cs = comps()
    assert cci(cs.R, cs) == 100.0
    assert cci(cs.T, cs) == 0.0
    s1, s2 = cci(cs["S1"], cs), cci(cs["S2"], cs)
    assert 0 < s2 < s1 < 100
    assert s1 == pytest.approx(200 / 3) and s2 == pytest.approx(100 / 3)
    assert cci(cs["O"], cs) == pytest.approx(100 + 100 / 3)


def test_cci_over_constancy():
    cs = comps()
    m = R + 0.1299 * (R - T)
    assert cci(m, cs) == pytest.approx(112.99)


def test_perfect_and_zero_constancy_matches():
    cs = comps()
    perfect = {k: cs[k] + np.array([0, 3.0, -2.0]) for k in LABELS}
    perfect["R"] = R.copy()
    m = derive_match(ModelOutputs(perfect), cs)
    assert m.chosen_pair[0] == "R" and m.d1 == 0.0
    np.testing.assert_array_equal(m.match, R)
    assert cci(m.match, cs) == 100.0
    zero = {k: cs[k] + (R - T) for k in LABELS}
    m = derive_match(ModelOutputs(zero), cs)
    assert m.chosen_pair[0] == "T"
    np.testing.assert_array_equal(m.match, T)
    assert cci(m.match, cs) == 0.0


def test_inverse_distance_example():
    cs = comps()
    L = np.linalg.norm(T - R)
    u = (T - R) / L
    outs = {"R": R + 0.8 * L * u, "S1": R + 2.0 * u, "S2": R + 6.0 * u, "T": T, "O": R + 0.9 * L * u}
    m = derive_match(ModelOutputs(outs), cs)
    assert m.chosen_pair == ("S1", "S2")
    assert (m.d1, m.d2) == pytest.approx((2.0, 6.0))
    np.testing.assert_allclose(m.match, 0.75 * cs["S1"] + 0.25 * cs["S2"], atol=1e-12)


def test_tie_break_and_double_zero():
    cs = comps()
    outs = {k: R.copy() for k in LABELS}
    m = derive_match(ModelOutputs(outs), cs)
    assert m.chosen_pair == ("R", "S1")
    np.testing.assert_allclose(m.match, (cs.R + cs["S1"]) / 2)
    assert m.cluster_warning and m.cluster_spread == 0.0


def test_cluster_warning_threshold():
    cs = comps()
    spread = {k: cs[k] for k in LABELS}
    assert not derive_match(ModelOutputs(spread), cs).cluster_warning


def test_missing_competitor():
    with pytest.raises(MissingCompetitor):
        ModelOutputs({"R": R, "S1": R, "S2": R, "T": T})
    with pytest.raises(MissingCompetitor):
        CompetitorSet({"R": R, "T": T})


def test_validate_rejects_off_line():
    pos = comps().to_dict()
    pos["S1"] = [pos["S1"][0] + 5, pos["S1"][1], pos["S1"][2]]
    with pytest.raises(InvariantViolation, match="S1"):
        CompetitorSet(pos).validate()


def test_delta_cci():
    a = CciRecord("indoor", "suppressed", "blue", "m", 101.89)
    b = CciRecord("indoor", "baseline", "blue", "m", 104.99)
    assert round(delta_cci(a, b), 2) == -3.10
    assert delta_cci(a, a) == 0.0
    with pytest.raises(MismatchedKeys):
        delta_cci(a, CciRecord("outdoor", "baseline", "blue", "m", 1.0))


def test_ab_plane_ignores_lightness():
    cs = comps()
    outs = {k: cs[k] + np.array([30.0, 0, 0]) for k in LABELS}
    outs["R"] = cs.R + np.array([25.0, 0, 0])
    m = derive_match(ModelOutputs(outs), cs, plane="ab")
    assert cci(m.match, cs, plane="ab") == pytest.approx(100.0)


def test_brute_force_oracle_200_configs():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(200):
        cs, outs = random_config(rng)
        got = cci(derive_match(ModelOutputs(outs), cs).match, cs)
        worst = max(worst, abs(got - scan_oracle(outs, cs)))
    assert worst < 0.1


vec = st.tuples(*[st.floats(-20, 20)] * 3).map(np.array)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), vec)
def test_translation_equivariance(seed, offset):
    cs, outs = random_config(np.random.default_rng(seed))
    base = derive_match(ModelOutputs(outs), cs)
    moved = CompetitorSet({k: cs[k] + offset for k in LABELS})
    m2 = derive_match(ModelOutputs({k: v + offset for k, v in outs.items()}), moved)
    assert m2.chosen_pair == base.chosen_pair
    assert cci(m2.match, moved) == pytest.approx(cci(base.match, cs), abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations(LABELS))
def test_order_free(seed, order):
    cs, outs = random_config(np.random.default_rng(seed))
    a = derive_match(ModelOutputs(outs), cs)
    b = derive_match(ModelOutputs({k: outs[k] for k in order}),
                     CompetitorSet({k: cs[k] for k in order}))
    np.testing.assert_array_equal(a.match, b.match)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_match_convex_and_on_axis(seed):
    cs, outs = random_config(np.random.default_rng(seed))
    m = derive_match(ModelOutputs(outs), cs)
    c1, c2 = cs[m.chosen_pair[0]], cs[m.chosen_pair[1]]
    proj, t = project_onto_axis(m.match, cs.R, cs.T)
    assert np.linalg.norm(proj - m.match) < 1e-9
    assert m.d1 <= m.d2
    lam = np.dot(m.match - c1, c2 - c1) / np.dot(c2 - c1, c2 - c1)
    assert -1e-12 <= lam <= 1 + 1e-12
    assert cci(m.match, cs) == pytest.approx(100 * t)
