import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ohara.curve import make_named_curve, reparametrize_by_arclength
from ohara.energy import (
    EVALUATORS,
    QuadratureSpec,
    circle_energy_reduced,
    correction_weight,
    energy_cosine,
    energy_cosine_combined,
    energy_decomposition,
    energy_direct,
    evaluate,
    normalized_energy,
    pair_angle_table,
    pair_integrands,
    wedge_inner,
)
from ohara.errors import AssumptionViolation, ConfigError, KernelError, NotEmbeddedError
from ohara.kernel import KernelSpec

# round-circle values of E_(α,1) from the one-dimensional reduction
CIRCLE_2_5 = 5.387670479738
CIRCLE_2_9 = 17.780035042846
# trefoil (R=2, r=1), α = 2, cosine route, m = 1 with diagonal correction
TREFOIL_MOEBIUS_512 = 81.8408767390497
TREFOIL_MOEBIUS_1024 = 81.84085595900792


@pytest.fixture(scope="module")
def circle256():
    return make_named_curve("circle", N=256)


@pytest.fixture(scope="module")
def trefoil256():
    return make_named_curve("trefoil", N=256)


def test_reduced_circle_oracle():
    assert circle_energy_reduced(2.0) == pytest.approx(4.0, abs=1e-12)
    assert circle_energy_reduced(2.0, L=17.0) == pytest.approx(4.0, abs=1e-12)
    assert circle_energy_reduced(2.5) == pytest.approx(CIRCLE_2_5, rel=1e-11)
    assert circle_energy_reduced(2.9) == pytest.approx(CIRCLE_2_9, rel=1e-11)


def test_circle_moebius_energy_is_four(circle256):
    k = KernelSpec.power(2)
    for method in EVALUATORS:
        tol = 1e-4 if method == "direct" else 1e-12
        assert evaluate(circle256, k, method).total == pytest.approx(4.0, abs=tol), method


@pytest.mark.parametrize("alpha,expected", [(2.5, CIRCLE_2_5), (2.9, CIRCLE_2_9)])
def test_circle_against_reduced_oracle(alpha, expected):
    c = make_named_curve("circle", N=512)
    k = KernelSpec.power(alpha)
    assert energy_cosine(c, k).total == pytest.approx(expected, rel=1e-5)
    assert energy_direct(c, k).total == pytest.approx(expected, rel=1e-5)


def test_circle_decomposition_parts(circle256):
    bd = energy_decomposition(circle256, KernelSpec.power(2))
    assert bd.e1 == pytest.approx(2 * math.pi**2, rel=1e-12)
    assert bd.e2 == pytest.approx(-2 * math.pi**2, rel=1e-12)
    assert bd.tail == 4.0


def test_circle_conformal_part_vanishes(circle256):
    bd = energy_cosine(circle256, KernelSpec.power(2.5))
    assert abs(bd.e3) < 1e-20
    assert bd.e4 + bd.tail == pytest.approx(bd.total)


def test_trefoil_frozen_values():
    k = KernelSpec.power(2)
    assert energy_cosine(make_named_curve("trefoil", N=512), k).total == pytest.approx(TREFOIL_MOEBIUS_512, rel=1e-12)
    assert energy_cosine(make_named_curve("trefoil", N=1024), k).total == pytest.approx(TREFOIL_MOEBIUS_1024, rel=1e-12)


def test_alpha_two_has_no_tangent_part(trefoil256):
    assert energy_cosine(trefoil256, KernelSpec.power(2)).e4 == 0.0


@pytest.mark.parametrize("alpha", [2.0, 2.5, 2.9])
def test_all_routes_agree_on_trefoil(trefoil256, alpha):
    k = KernelSpec.power(alpha)
    totals = {m: evaluate(trefoil256, k, m).total for m in ("decomp", "pv", "cosine", "combined")}
    ref = totals["cosine"]
    for m, v in totals.items():
        assert v == pytest.approx(ref, rel=1e-13), m
    assert energy_direct(trefoil256, k).total == pytest.approx(ref, rel=1e-3)


def test_diagonal_correction_restores_second_order():
    k = KernelSpec.power(2.5)
    errs = {}
    for corr in (False, True):
        q = QuadratureSpec(correction=corr)
        errs[corr] = [abs(energy_cosine(make_named_curve("circle", N=n), k, q).total - CIRCLE_2_5) for n in (64, 128)]
    # uncorrected: O(h^(3-α)) = O(h^0.5); corrected: at least O(h²)
    assert 0.3 < math.log2(errs[False][0] / errs[False][1]) < 0.7
    assert math.log2(errs[True][0] / errs[True][1]) > 1.8
    assert errs[True][1] < 1e-3 * errs[False][1]


def test_correction_weights():
    assert correction_weight(2.0, 1) == pytest.approx(1.0)
    # 2 (-ζ(1/2)) for |u|^(-1/2) rows
    assert correction_weight(2.5, 1) == pytest.approx(2 * 1.4603545088095868, rel=1e-12)
    with pytest.raises(KernelError):
        correction_weight(3.0, 1)


def test_exclusion_width_changes_little():
    c = make_named_curve("trefoil", N=512)
    k = KernelSpec.power(2.5)
    e1 = energy_cosine(c, k, QuadratureSpec(m=1)).total
    e3 = energy_cosine(c, k, QuadratureSpec(m=3)).total
    assert e1 == pytest.approx(e3, rel=1e-4)


def test_bad_exclusion_width(circle256):
    with pytest.raises(ConfigError):
        energy_cosine(circle256, KernelSpec.power(2), QuadratureSpec(m=100))
    with pytest.raises(ConfigError):
        evaluate(circle256, KernelSpec.power(2), "simpson")


def test_scaling_law(trefoil256):
    k = KernelSpec.power(2.5)
    base = energy_cosine(trefoil256, k).total
    big = energy_cosine(trefoil256.scaled(2.0), k).total
    assert big == pytest.approx(2.0**-0.5 * base, rel=1e-12)
    assert normalized_energy(trefoil256.scaled(2.0), 2.5) == pytest.approx(normalized_energy(trefoil256, 2.5), rel=1e-12)


def test_rigid_motion_and_start_point_invariance(trefoil256):
    k = KernelSpec.power(2.5)
    base = energy_cosine(trefoil256, k).total
    th = 0.83
    R = np.array([[math.cos(th), -math.sin(th), 0], [math.sin(th), math.cos(th), 0], [0, 0, 1]])
    assert energy_cosine(trefoil256.rigid_motion(R, [1, -2, 3]), k).total == pytest.approx(base, rel=1e-13)
    assert energy_cosine(trefoil256.shifted(37), k).total == pytest.approx(base, rel=1e-13)


def test_thread_count_does_not_change_bits(trefoil256, monkeypatch):
    k = KernelSpec.power(2.5)
    monkeypatch.setenv("OHARA_THREADS", "1")
    a = energy_cosine(trefoil256, k).total
    monkeypatch.setenv("OHARA_THREADS", "4")
    b = energy_cosine(trefoil256, k).total
    assert a == b


def test_non_embedded_curve_raises():
    t = 2 * np.pi * np.arange(256) / 256
    c = reparametrize_by_arclength(np.stack([np.sin(t), np.sin(t) * np.cos(t)], axis=1), 128)
    with pytest.raises(NotEmbeddedError):
        energy_cosine(c, KernelSpec.power(2))


def test_combined_route_checks_infimum_assumption(circle256):
    with pytest.warns(RuntimeWarning):
        k = KernelSpec.power(1.5, unsafe=True)
    with pytest.raises(AssumptionViolation):
        energy_cosine_combined(circle256, k)


def test_cosine_integrands_are_nonnegative(trefoil256):
    parts = pair_integrands(trefoil256, KernelSpec.power(2.9), "cosine")
    assert parts["e3"].min() >= -1e-12
    assert parts["e4"].min() >= -1e-12


def test_angle_table(circle256):
    c = make_named_curve("circle", N=32)
    tab = pair_angle_table(c, KernelSpec.power(2.5))
    assert tab.shape == (32 * 31, 5)
    assert np.allclose(tab[:, 3], 1.0, atol=1e-13)
    assert np.allclose(tab[:, 4], 1 / 6 * tab[:, 2] + 5 / 6)


def test_breakdown_row_fields(circle256):
    row = energy_cosine(circle256, KernelSpec.power(2)).as_row()
    assert list(row) == ["method", "N", "m", "alpha", "total", "e1", "e2", "e3", "e4", "tail"]


@settings(max_examples=30)
@given(st.lists(st.floats(-1, 1), min_size=12, max_size=12))
def test_wedge_inner_is_lagrange_identity(v):
    a, b, c, d = (np.array(v[i : i + 3]) for i in range(0, 12, 3))
    expected = np.dot(np.cross(a, b), np.cross(c, d))
    assert wedge_inner(a, b, c, d) == pytest.approx(expected, abs=1e-14)
