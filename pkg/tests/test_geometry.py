import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vstate.boundary import FourierBoundary, from_ellipse, rotate
from vstate.geometry import (
    align_mode,
    area,
    center_of_vorticity,
    classify,
    coefficient_distance,
    fit_ellipse,
    radial_bounds,
    rotational_symmetry,
    shape_report,
    symmetric_difference_area,
)


def test_disk_area_and_center():
    b = FourierBoundary.disk(2.0, 4)
    assert area(b) == pytest.approx(4 * math.pi, abs=1e-13)
    assert np.allclose(center_of_vorticity(b), 0, atol=1e-15)


def test_area_of_cos_mode():
    # |D| = pi (1 + a^2 / 2) for R = 1 + a cos k theta
    b = FourierBoundary.from_modes(4, cos={3: 0.2})
    assert area(b) == pytest.approx(math.pi * 1.02, abs=1e-13)


def test_translation_mode_moves_center():
    # R = 1 + e cos theta puts the center at e to first order
    b = FourierBoundary.from_modes(2, cos={1: 1e-4})
    assert center_of_vorticity(b)[0] == pytest.approx(1e-4, rel=1e-3)


def test_ellipse_area():
    b = from_ellipse(1.5, 0.5, 64)
    assert area(b) == pytest.approx(math.pi * 0.75, rel=1e-8)


def test_symmetric_difference_of_concentric_disks():
    d = symmetric_difference_area(FourierBoundary.disk(1.0, 2), FourierBoundary.disk(1.1, 2))
    assert d == pytest.approx(math.pi * 0.21, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.05, 0.05), min_size=5, max_size=5),
       st.lists(st.floats(-0.05, 0.05), min_size=5, max_size=5))
def test_symmetric_difference_is_a_metric_like(a, b):
    p = FourierBoundary(1.0, a, b)
    q = FourierBoundary.disk(1.0, 5)
    assert symmetric_difference_area(p, p) == 0
    assert symmetric_difference_area(p, q) == pytest.approx(symmetric_difference_area(q, p))


def test_radial_bounds():
    b = FourierBoundary.from_modes(4, cos={2: 0.1})
    rmin, rmax = radial_bounds(b)
    assert rmin == pytest.approx(0.9, abs=1e-12)
    assert rmax == pytest.approx(1.1, abs=1e-12)
    _, _, up, down = radial_bounds(b, delta=0.04)
    assert up == pytest.approx(0.5, abs=1e-10) and down == pytest.approx(0.5, abs=1e-10)


def test_align_mode():
    b = rotate(FourierBoundary.from_modes(4, cos={2: 0.1, 4: 0.01}), 0.4)
    a = align_mode(b, 2)
    assert a.sin_coeffs[1] == pytest.approx(0, abs=1e-15)
    assert a.cos_coeffs[1] == pytest.approx(0.1, abs=1e-15)


@pytest.mark.parametrize("modes, expected", [({}, 0), ({2: 0.1}, 2), ({2: 0.1, 4: 0.01}, 2),
                                             ({3: 0.1, 6: 0.02}, 3), ({2: 0.1, 3: 0.01}, 1)])
def test_rotational_symmetry(modes, expected):
    assert rotational_symmetry(FourierBoundary.from_modes(8, cos=modes)) == expected


def test_classify_disk_and_ellipse():
    assert classify(FourierBoundary.disk(3.0, 16))[0] == "disk"
    e = from_ellipse(1.3, 0.9, 48, tol=1e-12)
    label, resid = classify(e)
    assert label == "ellipse" and resid < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.floats(1.05, 1.6), st.floats(0, 2 * math.pi))
def test_classify_is_rotation_invariant(aspect, phi):
    e = rotate(from_ellipse(aspect, 1.0, 48, tol=1e-10), phi)
    assert classify(e)[0] == "ellipse"


def test_classify_other():
    b = FourierBoundary.from_modes(8, cos={3: 0.05})
    assert classify(b)[0] == "other"
    b = FourierBoundary.from_modes(8, cos={2: 0.05, 4: 0.01})
    assert classify(b)[0] == "other"


def test_classify_requires_centering():
    with pytest.raises(ValueError, match="center"):
        classify(FourierBoundary.from_modes(4, cos={1: 0.01}))


def test_fit_ellipse_recovers_aspect():
    e = from_ellipse(1.4, 1.0, 48, tol=1e-10)
    fitted, aspect = fit_ellipse(FourierBoundary(1.0, e.cos_coeffs, e.sin_coeffs))
    assert aspect == pytest.approx(1.4, abs=1e-10)
    assert coefficient_distance(fitted, e) < 1e-12


def test_shape_report():
    rep = shape_report(from_ellipse(1.2, 1 / 1.2, 48))
    d = rep.to_dict()
    assert d["classification"] == "ellipse"
    assert d["rotational_symmetry"] == 2
    assert d["area"] == pytest.approx(math.pi, rel=1e-8)
    assert rep.radial_max == pytest.approx(1.2, abs=1e-8)
