import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ohara.curve import make_named_curve
from ohara.energy import energy_cosine
from ohara.errors import MobiusError
from ohara.kernel import KernelSpec
from ohara.mobius import (
    Inversion,
    MobiusMap,
    Rotation,
    Scaling,
    Translation,
    apply_map_point,
    distance_to_curve,
    fit_circle,
    parse_map,
    transform_curve,
)

points = arrays(np.float64, 3, elements=st.floats(-5, 5))


@given(points)
def test_inversion_is_an_involution(x):
    inv = Inversion(np.array([0.5, -1.0, 2.0]), 1.7)
    assume(np.linalg.norm(x - inv.center) > 1e-2)
    assert np.allclose(inv.apply(inv.apply(x)), x, rtol=1e-12, atol=1e-12)


@given(points)
def test_inversion_fixes_its_sphere(x):
    c = np.array([1.0, 0.0, 0.0])
    d = x - c
    assume(np.linalg.norm(d) > 1e-3)
    on_sphere = c + 2.0 * d / np.linalg.norm(d)
    assert np.allclose(Inversion(c, 2.0).apply(on_sphere), on_sphere, atol=1e-13)


def test_inversion_of_point_frozen():
    assert np.allclose(apply_map_point(MobiusMap((Inversion(np.zeros(3), 2.0),)), [4.0, 0, 0]), [1.0, 0, 0])


def test_inversion_center_maps_to_infinity():
    with pytest.raises(MobiusError):
        Inversion(np.zeros(3), 1.0).apply(np.zeros((1, 3)))


def test_composition_order():
    m = MobiusMap((Translation(np.array([1.0, 0, 0])), Scaling(2.0)))
    assert np.allclose(m.apply([0.0, 0, 0]), [2.0, 0, 0])
    m2 = m.then(Rotation.about_axis([0, 0, 1], math.pi / 2))
    assert np.allclose(m2.apply([0.0, 0, 0]), [0, 2.0, 0], atol=1e-15)


def test_rotation_must_be_orthogonal():
    with pytest.raises(MobiusError):
        Rotation(np.diag([1.0, 2.0, 1.0]))
    with pytest.raises(MobiusError):
        Scaling(-1.0)
    with pytest.raises(MobiusError):
        Inversion(np.zeros(3), 0.0)


def test_circle_image_is_a_circle():
    c = make_named_curve("circle", N=256)
    img = transform_curve(parse_map("inv:3,0,0,1"), c)
    center, radius, resid = fit_circle(img.positions)
    # the circle |x| = 1 inverts through (3,0,0) with ρ = 1 to the circle
    # through 3 - 1/2 and 3 - 1/4
    assert radius == pytest.approx(0.125, rel=1e-12)
    assert np.allclose(center, [2.625, 0, 0], atol=1e-12)
    assert resid < 1e-12
    assert img.length == pytest.approx(2 * math.pi * 0.125, rel=1e-12)


def test_circle_moebius_energy_survives_inversion():
    c = make_named_curve("circle", N=256)
    img = transform_curve(parse_map("inv:0,2,0.5,1.3"), c)
    assert energy_cosine(img, KernelSpec.power(2)).total == pytest.approx(4.0, abs=1e-10)


def test_center_too_close_is_rejected():
    c = make_named_curve("circle", N=128)
    with pytest.raises(MobiusError, match="from the curve"):
        transform_curve(parse_map("inv:1.000001,0,0,1"), c)


def test_trefoil_inversion_moderate_n():
    tre = make_named_curve("trefoil", N=512)
    k = KernelSpec.power(2)
    before = energy_cosine(tre, k).total
    after = energy_cosine(transform_curve(parse_map("inv:0,0,2,1"), tre), k).total
    assert after == pytest.approx(before, rel=1e-5)


def test_distance_to_curve():
    c = make_named_curve("circle", N=128)
    assert distance_to_curve([3.0, 0, 0], c) == pytest.approx(2.0, rel=1e-12)


def test_parse_map_variants():
    m = parse_map("inv:0,0,0,1; scale:2 ;trans:1,2,3;rot:0,0,1,0.5")
    kinds = [type(f).__name__ for f in m.factors]
    assert kinds == ["Inversion", "Scaling", "Translation", "Rotation"]
    for bad in ("inv:1,2", "warp:1", "scale:x", "rot:1,2"):
        with pytest.raises(MobiusError):
            parse_map(bad)


def test_fit_circle_recovers_tilted_circle():
    t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    R = Rotation.about_axis([1, 1, 0], 0.7).matrix
    pts = (np.stack([2 * np.cos(t), 2 * np.sin(t), 0 * t], axis=1) @ R.T) + [1, 2, 3]
    center, radius, resid = fit_circle(pts)
    assert radius == pytest.approx(2.0, rel=1e-12)
    assert np.allclose(center, [1, 2, 3], atol=1e-12)
    assert resid < 1e-12
