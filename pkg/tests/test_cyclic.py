import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bregcyclic import (AssumptionError, Ball, CyclicSystem, HybridParams, Interval, OrbitError,
                        bregman, composite_hybrid_certificate, composite_map,
                        cyclic_contraction_certificate, hybrid_certificate, khat,
                        meir_keeler_evidence, set_bregman_distance, set_distance,
                        validate_cyclicity, FunctionSpec, build)
from bregcyclic.cyclic import affine_piece, composite_contraction_certificate, rotation_matrix
from bregcyclic.systems import (expanding_clipped_system, halving_system, intersecting_system,
                                non_cyclic_system, reflection_system, rotation_system,
                                system_from_descriptor, two_interval_system)


def test_system_validation():
    with pytest.raises(ValueError):
        CyclicSystem([Interval(0, 1)], [], "bad")
    with pytest.raises(ValueError):
        CyclicSystem([Interval(0, 1), Ball([0, 0], 1)], [abs, abs])


def test_iterate_and_locate():
    ev = two_interval_system()
    assert ev.p == 2 and ev.dim == 1
    np.testing.assert_allclose(ev.apply([3.0], 0), [-2.0])
    np.testing.assert_allclose(ev.iterate([3.0], 0, 2), [1.5])
    assert ev.locate([-2.0]) == 1
    with pytest.raises(AssumptionError):
        ev.locate([0.0])


def test_orbit_error_fields():
    nc = non_cyclic_system()
    with pytest.raises(OrbitError) as exc:
        nc.iterate([1.0], 0, 3)
    assert exc.value.stage == 1 and exc.value.set_index == 1
    assert exc.value.distance == pytest.approx(0.5)


def test_rotation_matrix_exact():
    R = rotation_matrix(np.pi / 2)
    assert np.array_equal(R, [[0.0, -1.0], [1.0, 0.0]])
    assert np.array_equal(np.linalg.matrix_power(R, 4), np.eye(2))


@settings(max_examples=50, deadline=None)
@given(st.floats(1, 3))
def test_composite_map_formula(x):
    ev = two_interval_system()
    # T^2 on A_0 is x -> (x + 3) / 4
    assert composite_map(ev, 0, [x])[0] == pytest.approx((x + 3) / 4, rel=1e-15)


def test_composite_map_rejects_outside():
    with pytest.raises(OrbitError):
        composite_map(two_interval_system(), 0, [0.0])


def test_cyclicity_certificates():
    assert validate_cyclicity(two_interval_system()).passed
    cert = validate_cyclicity(non_cyclic_system())
    assert not cert.passed
    w = cert.witness
    assert w["set_index"] == 0
    assert not Interval(-3, -1).contains(-0.5 * np.asarray(w["x"]))


def test_hybrid_params_broadcast_and_ranges():
    hp = HybridParams(0.5, 0.0)
    assert hp.K(3, [0.0]) == 0.5
    hp2 = HybridParams([lambda y: 0.1 + abs(y[0]), 0.2], [0.0, 0.0], a_caps=[1.0, 1.0], lambda_bound=1.0)
    assert hp2.K(0, [0.5]) == pytest.approx(0.6)
    assert hp2.check_ranges(halving_system()).passed is False  # 0.1 + 1 > cap 1
    assert HybridParams(0.0, 0.0).check_ranges(halving_system()).passed is False


def test_khat_product():
    ev = two_interval_system()
    hp = HybridParams([lambda y: 0.5, lambda y: 0.25], [0.0, 0.0])
    assert khat(ev, hp, [-2.0], 0) == pytest.approx(0.125)
    with pytest.raises(OrbitError):
        khat(ev, hp, [2.0], 0)


def test_hybrid_certificate_halving(sq1):
    hs = halving_system()
    ok = hybrid_certificate(hs, sq1, HybridParams.constant(0.25))
    assert ok.passed and ok.worst_margin == pytest.approx(0.0, abs=1e-15)
    assert ok.details["khat_lt_1"]
    bad = hybrid_certificate(hs, sq1, HybridParams.constant(0.1))
    assert not bad.passed
    w = bad.witness
    x, y = np.asarray(w["x"]), np.asarray(w["y"])
    assert bregman(sq1, x / 2, y / 2) > 0.1 * bregman(sq1, x, y)


def test_hybrid_with_lambda_rotation(sq2):
    # an isometry is (1, lambda)-hybrid only for lambda = 0 in general; check lambda = 0
    assert hybrid_certificate(rotation_system(), sq2, HybridParams.constant(1.0)).passed


def test_composite_hybrid(sq1):
    ev = two_interval_system()
    assert composite_hybrid_certificate(ev, sq1, 0, 1 / 16).passed
    assert composite_hybrid_certificate(ev, sq1, 1, 1 / 16).passed
    assert not composite_hybrid_certificate(ev, sq1, 0, 1 / 32).passed


def test_set_distances(sq1, sq2):
    d = set_bregman_distance(sq1, Interval(1, 3), Interval(-3, -1))
    assert d.value == pytest.approx(4.0, abs=1e-9)
    np.testing.assert_allclose(np.ravel(d.argmin_pair), [1.0, -1.0], atol=1e-6)
    assert set_distance(Interval(-1, 1), Interval(-1, 1)) == pytest.approx(0.0, abs=1e-9)
    assert set_distance(Ball([0, 0], 1), Ball([3, 0], 1)) == pytest.approx(1.0, abs=1e-6)


def test_set_bregman_entropy_positive_gap(entropy):
    from bregcyclic import Box
    d = set_bregman_distance(entropy, Box([1, 1], [2, 2]), Box([3, 3], [4, 4]))
    # D(x, y) = x ln(x/y) - x + y per coordinate; minimum at x = 2, y = 3
    want = 2 * (2 * np.log(2 / 3) - 2 + 3)
    assert d.value == pytest.approx(want, rel=1e-6)


def test_contraction_certificates():
    ev = two_interval_system()
    c = composite_contraction_certificate(ev, 0)
    assert c.passed and c.details["lipschitz_estimate"] == pytest.approx(0.25, abs=1e-6)
    cyc = cyclic_contraction_certificate(ev, 0.5)
    assert cyc.passed
    assert cyc.details["distances"][0] == pytest.approx(2.0, abs=1e-6)
    assert not cyclic_contraction_certificate(reflection_system(), 0.5).passed
    with pytest.raises(ValueError):
        cyclic_contraction_certificate(halving_system(), 0.5)


def test_meir_keeler_evidence_labelled():
    ev = meir_keeler_evidence(two_interval_system(), 0)
    assert ev.passed
    assert "sampled" in str(ev.details).lower()


def test_expanding_map_is_cyclic_but_not_contractive(sq1):
    ex = expanding_clipped_system()
    assert validate_cyclicity(ex).passed
    assert not hybrid_certificate(ex, sq1, HybridParams.constant(1.0)).passed


def test_intersecting_system_composite_contracts():
    ins = intersecting_system()
    assert composite_contraction_certificate(ins, 0).passed


def test_descriptor_builder():
    sys = system_from_descriptor([{"kind": "interval", "lo": -1, "hi": 1}],
                                 {"kind": "affine", "matrix": [[2.0]], "project_to_target": True})
    np.testing.assert_allclose(sys.apply([0.8], 0), [1.0])
    with pytest.raises(ValueError):
        system_from_descriptor([{"kind": "interval", "lo": -1, "hi": 1}],
                               {"pieces": [{"kind": "constant", "value": [0.0]}] * 2})
    rot = system_from_descriptor([{"kind": "ball", "center": [0, 0], "radius": 1}],
                                 {"kind": "rotation", "angle": np.pi / 2})
    np.testing.assert_array_equal(rot.apply([1.0, 0.0], 0), [0.0, 1.0])
