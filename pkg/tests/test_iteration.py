import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bregcyclic import (AssumptionError, HybridParams, OrbitError, averaging_identity_check,
                        bregman, bregman_trajectory, cesaro, find_fixed_point, find_proximity_cycle,
                        fixed_point_set_convexity_probe, geometric_bound_check, orbit,
                        quasi_nonexpansive_certificate)
from bregcyclic.systems import (constant_system, expanding_clipped_system, halving_system,
                                intersecting_system, non_cyclic_system, plane_shrink_system,
                                reflection_system, rotation_system, two_interval_system)


def test_orbit_halving():
    tr = orbit(halving_system(), [1.0], 10)
    np.testing.assert_array_equal(tr.points[:, 0], 0.5 ** np.arange(11))
    assert tr.set_indices == [0] * 11 and tr.error is None


def test_orbit_cut_short():
    tr = orbit(non_cyclic_system(), [1.0], 5)
    assert tr.length == 1 and "step 1" in tr.error


def test_orbit_alternates_sets():
    tr = orbit(two_interval_system(), [3.0], 6)
    assert tr.set_indices == [0, 1, 0, 1, 0, 1, 0]


def test_trajectory_halving(sq1):
    hs = halving_system()
    d = bregman_trajectory(sq1, orbit(hs, [1.0], 20), orbit(hs, [-1.0], 20))
    np.testing.assert_array_equal(d, 4.0 * 0.25 ** np.arange(21))


def test_geometric_bound(sq1):
    rep = geometric_bound_check(sq1, halving_system(), HybridParams.constant(0.25), [1.0], [-1.0], 30)
    assert rep.passed
    assert np.all(rep.margins >= -1e-10)


def test_geometric_bound_requires_hybrid(sq1):
    with pytest.raises(AssumptionError):
        geometric_bound_check(sq1, halving_system(), HybridParams.constant(0.1), [1.0], [-1.0], 5)
    with pytest.raises(AssumptionError):
        geometric_bound_check(sq1, halving_system(), HybridParams.constant(0.25, 0.1), [1.0], [-1.0], 5)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60))
def test_cesaro_plain_halving_closed_form(n):
    S = cesaro(halving_system(), [1.0], "plain", n)
    assert S[n][0] == pytest.approx((2 - 2.0 ** (1 - n)) / n, rel=1e-14)


def test_cesaro_rotation_pattern():
    S = cesaro(rotation_system(), [1.0, 0.0], "plain", 40)
    norms = np.linalg.norm(S.values, axis=1)
    n = np.arange(1, 41)
    want = np.select([n % 4 == 0, n % 4 == 2], [0.0, np.sqrt(2) / n], 1.0 / n)
    np.testing.assert_allclose(norms, want, atol=1e-15)


def test_cesaro_kinds_by_exponents():
    ev = two_interval_system()
    tr = orbit(ev, [3.0], 40)
    pts = tr.points[:, 0]
    assert cesaro(ev, [3.0], "comp_i", 5)[5][0] == pytest.approx(pts[[0, 2, 4, 6, 8]].mean())
    assert cesaro(ev, [3.0], "comp_ij", 5, j=1)[5][0] == pytest.approx(pts[[1, 3, 5, 7, 9]].mean())
    assert cesaro(ev, [3.0], "shift_j", 4, j=3)[4][0] == pytest.approx(pts[3:7].mean())
    assert cesaro(ev, [3.0], "ext_j", 4, j=2)[4][0] == pytest.approx(pts[:6].sum() / 4)
    assert cesaro(ev, [3.0], "ext_ij", 3, j=2)[3][0] == pytest.approx(pts[[0, 2, 4, 6, 8]].sum() / 3)


def test_cesaro_argument_errors():
    ev = two_interval_system()
    with pytest.raises(ValueError):
        cesaro(ev, [3.0], "comp_ij", 5, j=2)
    with pytest.raises(ValueError):
        cesaro(ev, [3.0], "median", 5)
    with pytest.raises(AssumptionError):
        cesaro(ev, [3.0], "comp_i", 5, i=1)
    with pytest.raises(OrbitError):
        cesaro(non_cyclic_system(), [1.0], "plain", 5)


def test_cesaro_index_from_one():
    S = cesaro(halving_system(), [1.0], "plain", 3)
    with pytest.raises(IndexError):
        S[0]


@pytest.mark.parametrize("sys,x", [(two_interval_system(), [3.0]), (rotation_system(), [0.3, 0.8]),
                                   (halving_system(), [1.0]), (reflection_system(), [1.5])])
def test_identities_hold(sys, x):
    for j in range(0, 9):
        rep = averaging_identity_check(sys, x, j, 200)
        assert rep.passed, rep
        for name in ("shift", "extension", "composite_extension"):
            assert rep.by_name(name).status == "pass"


def test_composite_shift_gating():
    ev = averaging_identity_check(two_interval_system(), [3.0], 1, 100)
    assert ev.by_name("composite_shift").status == "pass"
    out = averaging_identity_check(two_interval_system(), [3.0], 2, 100)
    assert out.by_name("composite_shift").status == "not_applicable"
    clip = averaging_identity_check(expanding_clipped_system(), [0.3], 0, 50)
    assert clip.by_name("composite_shift").status in ("pass", "not_applicable")


def test_fixed_point_halving(sq1):
    rep = find_fixed_point(halving_system(), sq1, [1.0])
    assert rep.converged and rep.classification == "fixed_point"
    assert abs(rep.limit[0]) <= 1e-10 and rep.residual <= 1e-10
    assert rep.iterations_used <= 40


def test_fixed_point_rotation_fails():
    rep = find_fixed_point(rotation_system(), None, [1.0, 0.0], max_iter=1000)
    assert rep.classification == "no_convergence" and rep.limit is None


def test_fixed_point_constant():
    rep = find_fixed_point(constant_system(), None, [0.7])
    assert rep.limit[0] == 0.0 and rep.iterations_used == 1


def test_proximity_cycle():
    rep = find_proximity_cycle(two_interval_system(), [3.0])
    assert rep.classification == "proximity_cycle"
    v1, v2 = rep.cycle
    assert v1[0] == pytest.approx(1.0, abs=1e-8) and v2[0] == pytest.approx(-1.0, abs=1e-8)
    assert rep.details["realizes_distance"]


def test_proximity_cycle_from_second_set():
    rep = find_proximity_cycle(two_interval_system(), [-3.0])
    assert rep.details["start_set"] == 1
    assert rep.cycle[0][0] == pytest.approx(-1.0, abs=1e-8)


def test_proximity_intersecting_degenerates():
    rep = find_proximity_cycle(intersecting_system(), [1.0])
    assert rep.converged and rep.details["distances"][0] == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(rep.cycle, 0.0, atol=1e-9)


def test_reflection_no_cycle_detected_from_interior():
    # T^2 = identity: every point is fixed, so the search stops immediately
    rep = find_proximity_cycle(reflection_system(), [1.5])
    assert rep.converged and not rep.details["realizes_distance"]


def test_quasi_nonexpansive(sq1, sq2):
    cert = quasi_nonexpansive_certificate(sq2, plane_shrink_system(), 0, [0.25, 0.0])
    assert cert.passed
    bad = quasi_nonexpansive_certificate(sq1, expanding_clipped_system(), 0, [0.0])
    assert not bad.passed
    x = np.asarray(bad.witness["x"])
    z = x
    for _ in range(bad.witness["block"]):
        z = np.clip(2 * z, -1, 1)
    assert bregman(sq1, [0.0], z) > bregman(sq1, [0.0], x)
    with pytest.raises(AssumptionError):
        quasi_nonexpansive_certificate(sq2, plane_shrink_system(), 0, [0.0, 0.5])


def test_fixed_set_convexity():
    cert = fixed_point_set_convexity_probe(plane_shrink_system(), 0, [[-1, 0], [1, 0], [0.2, 0]])
    assert cert.passed and cert.samples_checked == 1000
    with pytest.raises(AssumptionError):
        fixed_point_set_convexity_probe(plane_shrink_system(), 0, [[0.0, 1.0]])
