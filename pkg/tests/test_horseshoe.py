"""Horseshoe region geometry, verification report, manifolds, trellises."""

import math

import numpy as np
import pytest

from attractorlab import horseshoe
from attractorlab.horseshoe import (HorseshoeRegion, RefinementExplosion,
                                    count_components, find_saddles,
                                    leaf_component_count, leaf_strip_intervals,
                                    model_horseshoe_map, trellis,
                                    unstable_manifold, verify_ah)
from attractorlab.dynamics import find_cycle
from attractorlab.chaos import max_lyapunov_norm_sum
from attractorlab.maps import pioneer_climax_full, user_map

SINK_Y = -79.0 / 19.0


def test_region_membership_and_frame_roundtrip():
    region = HorseshoeRegion()
    assert region.inside_h(np.array([[-2.0, 4.0]]))[0] == pytest.approx(4.0)
    assert region.inside_h(np.array([[5.0, 4.0]]))[0] == pytest.approx(-3.0)
    assert region.inside_c0(np.array([[-2.0, -3.0]]))[0] == pytest.approx(2.0)
    assert region.inside_c1(np.array([[-2.0, 11.0]]))[0] == pytest.approx(2.0)
    assert region.inside_s_half(np.array([[-2.0, 4.0]]))[0] == pytest.approx(1.0)

    framed = HorseshoeRegion(matrix=[[0.3, 0.1], [-0.2, 0.5]],
                             offset=[1.5, -2.0])
    pts = np.array([[0.0, 0.0], [-2.0, 4.0], [1.0, -3.0]])
    np.testing.assert_allclose(framed.to_model(framed.to_world(pts)), pts,
                               atol=1e-12)
    with pytest.raises(ValueError):
        HorseshoeRegion(matrix=[[1.0, 2.0], [2.0, 4.0]])


def test_region_sampling():
    region = HorseshoeRegion()
    for piece in ("h", "z", "c0", "c1", "s0", "s_half", "s1"):
        pts = region.sample(piece, 16)
        assert len(pts) > 0
    z = region.sample("z", 16)
    assert np.all(region.inside_z(z) >= 0)
    with pytest.raises(ValueError):
        region.sample("annulus", 8)
    hb = region.sample("h", 8, boundary=True)
    d = region.inside_h(hb)
    assert d.min() > -1e-9 and abs(d.min()) < 1e-9


def test_verify_ah_model_passes_with_exact_rates():
    handle = model_horseshoe_map()
    report = verify_ah(handle, HorseshoeRegion())
    assert report.all_pass, report.as_text()
    assert report.lambda_contr == pytest.approx(0.2, abs=1e-6)
    assert report.mu_exp == pytest.approx(4.0, abs=1e-6)
    saddle = report.saddle
    assert saddle is not None and saddle.period == 1
    np.testing.assert_allclose(saddle.points[0], [0.0, 0.0], atol=1e-9)
    names = [e.name for e in report.entries]
    assert names == ["injectivity", "region_into_interior",
                     "caps_into_sink_cap", "fold_band_into_top_cap",
                     "vertical_transversality", "sink_cap_contraction",
                     "band_saddle", "foliation_rates"]
    text = report.as_text()
    assert text.splitlines()[0] == "condition\tstatus\tmargin\twitness"
    assert len(text.splitlines()) == 9


def test_verify_ah_framed_region():
    region = HorseshoeRegion(matrix=[[0.3, 0.1], [-0.2, 0.5]],
                             offset=[1.5, -2.0])
    handle = model_horseshoe_map(region=region)
    report = verify_ah(handle, region, sampling=32)
    assert report.all_pass, report.as_text()
    assert report.lambda_contr == pytest.approx(0.2, abs=1e-6)
    assert report.mu_exp == pytest.approx(4.0, abs=1e-6)


def test_verify_ah_identity_fails_with_boundary_witness():
    ident = user_map(lambda x: x, 2, jac=lambda x: np.eye(2),
                     batch=lambda p: p)
    region = HorseshoeRegion()
    report = verify_ah(ident, region)
    assert not report.all_pass
    into = report.entry("region_into_interior")
    assert into.status == "fail"
    assert into.margin <= 0.0
    # worst witness sits on the capsule boundary, which maps onto itself
    wd = region.inside_h(region.to_model(into.witness[None, :]))[0]
    assert abs(wd) < 1e-9
    assert report.entry("caps_into_sink_cap").status == "fail"
    assert report.entry("foliation_rates").status == "fail"
    with pytest.raises(KeyError):
        report.entry("nonexistent")


def test_model_map_validation_and_seams():
    with pytest.raises(ValueError):
        model_horseshoe_map(contraction=1.2)
    with pytest.raises(ValueError):
        model_horseshoe_map(expansion=0.9)
    handle = model_horseshoe_map()
    # continuity across the four seams
    for seam in (-1.0, 3.0, 5.0, 9.0):
        for x1 in (-5.5, -2.0, 1.5):
            lo = handle.eval(np.array([x1, seam - 1e-9]))
            hi = handle.eval(np.array([x1, seam + 1e-9]))
            assert np.linalg.norm(hi - lo) < 1e-7


def test_model_fold_injectivity_sampled():
    handle = model_horseshoe_map()
    g1, g2 = np.meshgrid(np.linspace(-6.0, 2.0, 24),
                         np.linspace(3.0, 5.0, 24), indexing="ij")
    pts = np.column_stack([g1.ravel(), g2.ravel()])
    img = handle.eval_many(pts)
    d2 = ((img[:, None, :] - img[None, :, :]) ** 2).sum(axis=2)
    d2[np.diag_indices(len(img))] = np.inf
    pre_d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    assert d2[pre_d2 > 1e-6].min() > 1e-8


def test_find_saddles_model_inventory():
    handle = model_horseshoe_map()
    cycles = find_saddles(handle, [(-6.0, 2.0), (-5.0, 13.0)], k_max=2,
                          n_seeds=9)
    assert sorted(c.period for c in cycles) == [1, 1, 1, 2]
    anchors = {c.period: [] for c in cycles}
    for c in cycles:
        for p in c.points:
            anchors[c.period].append(p)
    fixed = np.array(anchors[1])
    expected = np.array([[0.0, 0.0], [0.0, SINK_Y], [-8.0 / 3.0, 6.4]])
    for e in expected:
        assert np.min(np.linalg.norm(fixed - e, axis=1)) < 1e-9
    two = [c for c in cycles if c.period == 2][0]
    want = {(-40.0 / 13.0, 32.0 / 17.0), (-8.0 / 13.0, 128.0 / 17.0)}
    for p in two.points:
        assert min(np.hypot(p[0] - a, p[1] - b) for a, b in want) < 1e-9
    np.testing.assert_allclose(np.sort(two.multipliers),
                               [-16.0, -0.04], atol=1e-9)
    assert two.stability == "saddle"
    with pytest.raises(ValueError):
        find_saddles(handle, [(-1, 1), (-1, 1)], k_max=0)


def test_find_saddles_translation_finds_nothing():
    shift = user_map(lambda x: x + np.array([0.3, 0.0]), 2,
                     batch=lambda p: p + np.array([0.3, 0.0]))
    assert find_saddles(shift, [(-1.0, 1.0), (-1.0, 1.0)], n_seeds=4) == []


def _bisect(f, lo, hi):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_find_saddles_pioneer_fixed_point_census():
    handle = pioneer_climax_full(3.0, 3.0)
    cycles = find_saddles(handle, [(0.0, 8.0), (0.0, 8.0)], k_max=1)
    assert len(cycles) == 5
    # axis roots of 0.8 y exp(3 - 0.8 y) = 1 and the interior crossing
    gy = lambda y: 0.8 * y * math.exp(3.0 - 0.8 * y) - 1.0
    y_lo = _bisect(gy, 0.01, 1.0)
    y_hi = _bisect(gy, 1.0, 8.0)
    hx = lambda x: (12.0 - 3.0 * x) * math.exp(3.0 * x - 9.0) - 1.0
    x_int = _bisect(hx, 1.0, 3.5)
    expected = np.array([[0.0, 0.0], [3.75, 0.0], [0.0, y_lo], [0.0, y_hi],
                         [x_int, 15.0 - 4.0 * x_int]])
    found = np.array([c.points[0] for c in cycles])
    for e in expected:
        assert np.min(np.linalg.norm(found - e, axis=1)) < 1e-8
    interior = cycles[int(np.argmin(np.linalg.norm(found - expected[-1],
                                                   axis=1)))]
    assert interior.stability == "saddle"


def test_unstable_manifold_model_exact_axis():
    handle = model_horseshoe_map()
    saddle = find_cycle(handle, 1, np.array([0.05, 0.02]))
    cloud = unstable_manifold(handle, saddle, arc_budget=4.0, tol=1e-3)
    pts = cloud.points
    assert cloud.ordered
    # the branch stays on the x2-axis: S0 is diagonal and the lower cap
    # preserves x1 = 0, and arc budget 2 per branch stops short of the fold
    assert np.abs(pts[:, 0]).max() < 1e-9
    assert np.all(np.diff(pts[:, 1]) > 0)
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    assert gaps.max() <= 1e-3 + 1e-9
    assert cloud.meta["multiplier"] == pytest.approx(4.0, abs=1e-9)
    assert cloud.meta["period"] == 1
    n_minus, n_plus = cloud.meta["branch_sizes"]
    assert n_minus + n_plus + 1 == len(pts)
    # downward branch has fallen into the sink cap, heading for the sink
    assert SINK_Y - 1e-9 < pts[0, 1] < -4.0


def test_unstable_manifold_rejects_wrong_stability():
    handle = model_horseshoe_map()
    sink = find_cycle(handle, 1, np.array([0.1, -4.0]))
    with pytest.raises(ValueError):
        unstable_manifold(handle, sink)
    source = find_cycle(pioneer_climax_full(3.0, 3.0), 1,
                        np.array([3.7, 0.05]))
    assert source.stability == "source"
    with pytest.raises(ValueError):
        unstable_manifold(pioneer_climax_full(3.0, 3.0), source)


def test_refinement_explosion_carries_partial(monkeypatch):
    # chaotic vertical dynamics fold the branch forever; a tiny point
    # budget must surface as RefinementExplosion with the partial cloud
    def step(x):
        return np.array([0.5 * x[0] + 0.1 * x[1],
                         3.9 * x[1] * (1.0 - x[1])])

    def batch(p):
        return np.column_stack([0.5 * p[:, 0] + 0.1 * p[:, 1],
                                3.9 * p[:, 1] * (1.0 - p[:, 1])])

    def jac(x):
        return np.array([[0.5, 0.1], [0.0, 3.9 * (1.0 - 2.0 * x[1])]])

    handle = user_map(step, 2, jac=jac, batch=batch)
    saddle = find_cycle(handle, 1, np.array([0.01, 0.01]))
    assert saddle.stability == "saddle"
    monkeypatch.setattr(horseshoe, "POINT_CAP", 20_000)
    with pytest.raises(RefinementExplosion) as exc:
        unstable_manifold(handle, saddle, arc_budget=50.0, tol=1e-7)
    partial = exc.value.partial
    assert 0 < len(partial.points) <= 20_000
    assert partial.ordered


def test_trellis_components_and_cycle_exchange():
    handle = model_horseshoe_map()
    two = find_cycle(handle, 2, np.array([-3.0, 1.9]))
    assert two.period == 2
    cloud = trellis(handle, two, arc_budget=1.0, tol=1e-3)
    slices = cloud.meta["component_slices"]
    assert len(slices) == 2
    assert slices[0][0] == 0 and slices[-1][1] == len(cloud.points)
    comp0 = cloud.points[slices[0][0]:slices[0][1]]
    comp1 = cloud.points[slices[1][0]:slices[1][1]]
    # the second component passes through the other cycle point exactly
    p0, p1 = two.points
    assert np.min(np.linalg.norm(comp0 - p0, axis=1)) < 1e-9
    assert np.min(np.linalg.norm(comp1 - p1, axis=1)) < 1e-9
    # component 1 is the pointwise image of component 0 plus refinements
    img0 = handle.eval_many(comp0[:50])
    d = np.linalg.norm(comp1[None, :, :] - img0[:, None, :], axis=2)
    assert d.min(axis=1).max() < 1e-9


def test_leaf_strip_intervals_and_component_counts():
    np.testing.assert_allclose(leaf_strip_intervals(0), [[-6.0, 2.0]])
    np.testing.assert_allclose(leaf_strip_intervals(1),
                               [[-3.6, -2.0], [-1.2, 0.4]], atol=1e-12)
    lvl1 = leaf_strip_intervals(1)
    lvl2 = leaf_strip_intervals(2)
    for lo, hi in lvl2:
        assert any(plo - 1e-12 <= lo and hi <= phi + 1e-12
                   for plo, phi in lvl1)
    for depth in range(7):
        count = leaf_component_count(depth, n_samples=1 << 18)
        assert count == 2 ** depth
    with pytest.raises(ValueError):
        leaf_component_count(-1)
    with pytest.raises(ValueError):
        leaf_component_count(2, x2_level=20.0)
    assert count_components(np.array([True, True, False, True])) == 2
    assert count_components(np.array([], dtype=bool)) == 0


def test_norm_sum_exact_at_model_saddle():
    handle = model_horseshoe_map()
    est = max_lyapunov_norm_sum(handle, [0.0, 0.0], 500, 0)
    # the origin is float-exact fixed; every step contributes log 4
    assert est.max_exponent == pytest.approx(math.log(4.0), abs=1e-12)
