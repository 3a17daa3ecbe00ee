import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skelquant import geometry, oracle
from skelquant.geometry import (
    CornerAmbiguity,
    MalformedCurve,
    curve_from_spec,
    curve_to_spec,
    reflect,
    shoot,
)

CURVES = {
    "circle": geometry.circle(),
    "rectangle": geometry.rectangle(2.0, 1.0),
    "stadium": geometry.stadium(1.5),
    "anti_stadium": geometry.anti_stadium(1.5),
    "broken": geometry.broken_rectangle(1, Fraction(1, 2), Fraction(1, 2)),
}

incidence = st.floats(0.05, math.pi - 0.05)
fraction = st.floats(0.0, 1.0, exclude_max=True)


def test_perimeters():
    assert CURVES["circle"].total_length == pytest.approx(2 * math.pi, abs=1e-15)
    assert CURVES["rectangle"].total_length == 6.0
    assert CURVES["stadium"].total_length == pytest.approx(3.0 + 2 * math.pi, abs=1e-14)
    assert CURVES["broken"].total_length == 4.0


@pytest.mark.parametrize("name", sorted(CURVES))
def test_closed_curve(name):
    c = CURVES[name]
    p0 = np.array(c.position(0.0))
    p1 = np.array(c.position(c.total_length - 1e-12))
    assert np.linalg.norm(p0 - p1) < 1e-9


@pytest.mark.parametrize("name", sorted(CURVES))
@given(u=st.floats(0.01, 0.99))
def test_unit_speed(name, u):
    c = CURVES[name]
    s = u * c.total_length
    h = 1e-7
    if any(abs(s - s0) < 2 * h for s0 in list(c.arc_starts) + [c.total_length]):
        return
    p_plus = np.array(c.position(s + h))
    p_minus = np.array(c.position(s - h))
    assert np.linalg.norm(p_plus - p_minus) / (2 * h) == pytest.approx(1.0, abs=1e-6)


@given(alpha=incidence)
def test_reflect_is_an_involution(alpha):
    assert reflect(reflect(alpha)) == pytest.approx(alpha, abs=1e-15)


@given(alpha=incidence, u=fraction)
def test_circle_keeps_its_incidence(alpha, u):
    hit = shoot(CURVES["circle"], 2 * math.pi * u, alpha)
    assert hit.arrival_incidence == pytest.approx(alpha, abs=1e-10)
    assert hit.chord == pytest.approx(2 * math.sin(alpha), abs=1e-12)


@pytest.mark.parametrize("name", ["rectangle", "stadium", "broken"])
@given(alpha=incidence, u=st.floats(0.01, 0.99))
def test_hit_lies_on_the_boundary_and_reflects(name, alpha, u):
    c = CURVES[name]
    try:
        hit = shoot(c, u * c.total_length, alpha)
    except geometry.GeometryError:
        return
    end = np.array(hit.origin) + hit.chord * np.array([math.cos(hit.gamma), math.sin(hit.gamma)])
    assert np.linalg.norm(end - np.array(c.position(hit.arrival_s))) < 1e-9
    assert hit.arrival_incidence == pytest.approx(reflect(hit.incoming_incidence), abs=1e-12)
    # escape angle after arrival: tangent plus outgoing incidence equals the mirrored heading
    beta = c.tangent_angle(hit.arrival_s) if not c.tangent_info(hit.arrival_s)[1] else None
    if beta is not None:
        out = geometry.wrap_angle(beta + hit.arrival_incidence)
        mirrored = geometry.wrap_angle(2 * beta - hit.gamma)
        assert math.cos(out - mirrored) == pytest.approx(1.0, abs=1e-10)


def test_rectangle_hits_match_direct_simulation():
    rect = CURVES["rectangle"]
    s, alpha = 0.5, 1.0
    sim = oracle.simulate_rectangle(2.0, 1.0, 0.5, 1.0, 5)
    for x, y, chord in sim:
        hit = shoot(rect, s, alpha)
        assert hit.arrival == pytest.approx((x, y), abs=1e-12)
        assert hit.chord == pytest.approx(chord, abs=1e-12)
        s, alpha = hit.arrival_s, hit.arrival_incidence


def test_circle_hits_match_direct_simulation():
    disk = CURVES["circle"]
    s = 0.0
    for x, y, chord in oracle.simulate_circle(0.0, 1.0, 4):
        hit = shoot(disk, s, 1.0)
        assert hit.arrival == pytest.approx((x, y), abs=1e-12)
        assert hit.chord == pytest.approx(chord, abs=1e-12)
        s = hit.arrival_s


def test_corner_hit_is_ambiguous():
    with pytest.raises(CornerAmbiguity):
        shoot(CURVES["rectangle"], 1.0, 0.25 * math.pi)


def test_corner_hit_allowed_on_request():
    hit = shoot(CURVES["rectangle"], 1.0, 0.25 * math.pi, allow_corner=True)
    assert hit.arrival == pytest.approx((2.0, 1.0), abs=1e-9)


def test_incidence_outside_range_rejected():
    with pytest.raises(ValueError):
        shoot(CURVES["circle"], 0.0, 0.0)


def test_curvature_signs():
    stadium = CURVES["stadium"]
    assert stadium.curvature(0.5) == 0.0
    assert stadium.curvature(1.5 + 0.1) == pytest.approx(1.0)
    anti = CURVES["anti_stadium"]
    assert anti.curvature(3.5 + 0.1) == pytest.approx(-1.0)


def test_containment():
    assert CURVES["stadium"].contains(-0.5, 1.0)
    assert not CURVES["anti_stadium"].contains(-0.5, 1.0)
    assert not CURVES["broken"].contains(0.75, 0.75)
    assert CURVES["broken"].contains(0.75, 0.25)


@pytest.mark.parametrize("name", sorted(CURVES))
def test_spec_round_trip(name):
    c = CURVES[name]
    again = curve_from_spec(curve_to_spec(c))
    assert again.kind == c.kind
    assert again.params == c.params
    assert again.total_length == pytest.approx(c.total_length, abs=1e-14)


def test_broken_rectangle_zero_bay_is_a_rectangle():
    c = geometry.broken_rectangle(1, 1, Fraction(1, 2))
    assert len(c.arcs) == 4
    assert c.total_length == 4.0


def test_malformed_inputs():
    with pytest.raises(MalformedCurve):
        geometry.polygon([(0, 0), (1, 0)])
    with pytest.raises(MalformedCurve):
        geometry.polygon([(0, 0), (1, 0), (2, 0)])
    with pytest.raises(MalformedCurve):
        curve_from_spec({"kind": "broken_rectangle", "b": 1, "a_prime": 0.5, "b_prime": "1/2"})
    with pytest.raises(MalformedCurve):
        curve_from_spec({"kind": "ellipse"})


def test_clockwise_polygon_is_reoriented():
    cw = geometry.polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
    # anticlockwise: the first edge heads along +x
    assert cw.tangent_angle(0.5) == pytest.approx(0.0, abs=1e-15)
