import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skelquant import geometry, quantize, wavefield
from skelquant.transport import circle_chi_series
from skelquant.wavefield import (
    CircleMode,
    FieldGrid,
    GridSpec,
    RectangleMode,
    SampleAtFocalPoint,
    multi_bounce_scar_sum,
    resonance_factor,
    scar_profile,
    scar_q,
    scar_values,
)


def _level(entries, qn):
    return next(e for e in entries if e.quantum_numbers == qn)


def _helmholtz_residual(fn, x, y, k2, h=1e-4):
    lap = (fn(x + h, y) + fn(x - h, y) + fn(x, y + h) + fn(x, y - h) - 4 * fn(x, y)) / (h * h)
    return lap + k2 * fn(x, y)


# ------------------------------------------------------------------ grids


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(1, 5, 0, 1, 0, 1)
    with pytest.raises(ValueError):
        GridSpec(5, 5, 1, 0, 0, 1)


def test_binary_round_trip():
    e = _level(quantize.rectangle_spectrum(2.0, 1.0, 1.0, 3, 2), (3, 2))
    grid = wavefield.rectangle_field(e, GridSpec(17, 9, 0.0, 2.0, 0.0, 1.0))
    blob = grid.to_binary()
    assert len(blob) == 48 + 16 * 17 * 9
    again = FieldGrid.from_binary(blob)
    assert again.spec == grid.spec
    assert np.array_equal(again.values, grid.values)


def test_csv_layout():
    e = _level(quantize.rectangle_spectrum(2.0, 1.0, 1.0, 1, 1), (1, 1))
    grid = wavefield.rectangle_field(e, GridSpec(3, 2, 0.0, 2.0, 0.0, 1.0))
    lines = grid.to_csv().strip().splitlines()
    assert lines[0] == "x,y,re,im,inside,allowed"
    assert len(lines) == 1 + 6


# ------------------------------------------------------------------ circle


@pytest.mark.parametrize("qn", [(1, 1), (2, 3), (3, 2)])
@given(r=st.floats(0.2, 0.99), phi=st.floats(-math.pi, math.pi))
def test_circle_mode_is_an_angular_harmonic(qn, r, phi):
    e = _level(quantize.circle_spectrum(1.0, 3, 3, order=0), qn)
    if r < math.cos(e.alpha) + 0.02:
        return
    mode = CircleMode(e)
    m = qn[0]
    base = mode.evaluate(np.array([r]), np.array([0.0]))[0][0]
    here = mode.evaluate(np.array([r * math.cos(phi)]), np.array([r * math.sin(phi)]))[0][0]
    assert here == pytest.approx(base * cmath.exp(1j * m * phi), abs=1e-9 * max(1.0, abs(base)))


def test_circle_conjugate_mode():
    e = _level(quantize.circle_spectrum(1.0, 2, 2, order=0), (2, 2))
    pts = np.array([[0.7, 0.2], [-0.5, 0.6], [0.1, -0.9]])
    plus = CircleMode(e, 1).evaluate(pts[:, 0], pts[:, 1])[0]
    minus = CircleMode(e, -1).evaluate(pts[:, 0], pts[:, 1])[0]
    assert np.allclose(minus, np.conj(plus), atol=1e-13)


def test_circle_field_is_zero_inside_the_caustic():
    e = _level(quantize.circle_spectrum(1.0, 2, 2, order=0), (2, 1))
    grid = wavefield.circle_field(e, GridSpec.square(41, (-1, 1, -1, 1)))
    X, Y = grid.spec.mesh()
    dark = np.hypot(X, Y) < grid.diagnostics["caustic_radius"]
    assert np.all(grid.values[dark] == 0)
    assert not np.any(grid.allowed[np.hypot(X, Y) > 1.0 + 1e-9])


@pytest.mark.parametrize("qn", [(0, 2), (1, 3), (2, 2)])
def test_circle_field_vanishes_on_the_wall(qn):
    e = _level(quantize.circle_spectrum(1.0, 2, 3, order=0), qn)
    pts = wavefield.boundary_samples(geometry.circle(), 360)
    edge = np.abs(CircleMode(e).evaluate(pts[:, 0], pts[:, 1])[0]).max()
    interior = wavefield.circle_field(e, GridSpec.square(81, (-1, 1, -1, 1))).max_abs()
    assert edge / interior < 1e-9


def test_circle_first_order_chi_keeps_the_wall_node():
    e = _level(quantize.circle_spectrum(1.0, 2, 3), (1, 3))
    chi = circle_chi_series(e.alpha, e.momentum, 1, 1)
    pts = wavefield.boundary_samples(geometry.circle(), 90)
    edge = np.abs(CircleMode(e, 1, chi).evaluate(pts[:, 0], pts[:, 1])[0]).max()
    assert edge < 1e-9


def test_circle_field_rejects_other_families():
    e = quantize.rectangle_spectrum(1.0, 1.0, 1.0, 1, 1)[0]
    with pytest.raises(ValueError):
        wavefield.circle_field(e)


def test_circle_field_approximately_solves_helmholtz():
    e = _level(quantize.circle_spectrum(1.0, 1, 6, order=0), (1, 6))
    mode = CircleMode(e)

    def fn(x, y):
        return mode.evaluate(np.array([x]), np.array([y]))[0][0]

    k2 = e.wavenumber**2
    res = abs(_helmholtz_residual(fn, 0.6, 0.3, k2))
    # zeroth-order amplitude: the residual is a 1/k^2 fraction of k^2 |psi|
    assert res < 0.05 * k2 * abs(fn(0.6, 0.3))


# --------------------------------------------------------------- rectangle


@pytest.mark.parametrize("a,b,qn", [(2.0, 1.0, (3, 2)), (2.0, 1.0, (4, 1)), (math.pi, 1.3, (2, 5))])
def test_rectangle_four_terms_equal_product(a, b, qn):
    e = _level(quantize.rectangle_spectrum(a, b, 1.0, qn[0], qn[1]), qn)
    grid = wavefield.rectangle_field(e, GridSpec.square(41, (0, a, 0, b)), strict=True)
    assert grid.diagnostics["product_deviation"] < 1e-12
    assert grid.diagnostics["term_count"] == 4
    assert grid.diagnostics["closure_mismatch"] < 1e-12


@given(x=st.floats(0.05, 1.95), y=st.floats(0.05, 0.95))
def test_rectangle_field_solves_helmholtz(x, y):
    e = _level(quantize.rectangle_spectrum(2.0, 1.0, 1.0, 3, 2), (3, 2))
    mode = RectangleMode(e)

    def fn(px, py):
        return mode.evaluate(np.array([px]), np.array([py]))[0][0]

    assert abs(_helmholtz_residual(fn, x, y, e.wavenumber**2, h=1e-3)) < 1e-3


# ---------------------------------------------------------------- bouncing


def test_bouncing_field_solves_helmholtz_in_the_core():
    e = _level(quantize.bouncing_mode_spectrum(1.5, 2.0, 1.0, 3, 3), (2, 3))
    mode = wavefield.BouncingMode(e, geometry.stadium(1.5))

    def fn(x, y):
        return mode.evaluate(np.array([x]), np.array([y]))[0][0]

    k2 = 2.0 * e.E
    for x, y in ((0.4, 0.7), (1.1, 1.6)):
        assert abs(_helmholtz_residual(fn, x, y, k2, h=1e-3)) < 1e-3


def test_anti_stadium_core_matches_stadium_core():
    e = _level(quantize.bouncing_mode_spectrum(1.5, 2.0, 1.0, 2, 2), (2, 2))
    spec = GridSpec.square(31, (0.0, 1.5, 0.0, 2.0))
    s = wavefield.bouncing_field(e, geometry.stadium(1.5), spec)
    a = wavefield.bouncing_field(e, geometry.anti_stadium(1.5), spec)
    assert np.allclose(s.values, a.values, atol=1e-14)


@given(n=st.integers(1, 4), m=st.integers(1, 4))
def test_broken_rectangle_seam_is_continuous(n, m):
    spec = quantize.CommensurateSpec(Fraction(1), Fraction(1, 2), Fraction(1, 2))
    e = _level(quantize.broken_rectangle_spectrum(spec, 1.0, 4, 4), (n, m))
    assert wavefield.BouncingMode(e, spec.curve()).seam_mismatch() < 1e-12


def test_broken_rectangle_bay_is_dark():
    spec = quantize.CommensurateSpec(Fraction(1), Fraction(1, 2), Fraction(1, 2))
    e = _level(quantize.broken_rectangle_spectrum(spec, 1.0, 2, 2), (1, 2))
    grid = wavefield.bouncing_field(e, spec.curve(), GridSpec.square(41, (0, 1, 0, 1)))
    X, Y = grid.spec.mesh()
    assert np.all(grid.values[(X > 0.51) & (Y > 0.51)] == 0)


def test_bouncing_regions_need_matching_curve():
    spec = quantize.CommensurateSpec(Fraction(1), Fraction(1, 2), Fraction(1, 2))
    e = quantize.broken_rectangle_spectrum(spec, 1.0, 1, 1)[0]
    with pytest.raises(ValueError):
        wavefield.bouncing_regions(e, geometry.rectangle(1.0, 1.0))
    with pytest.raises(ValueError):
        wavefield.bouncing_regions(quantize.bouncing_mode_spectrum(1.0, 1.0, 1.0, 1, 1)[0], geometry.circle())


# -------------------------------------------------------------------- scar


@given(a=st.floats(0.2, 3.0), k=st.floats(0.5, 20.0), n=st.integers(1, 12))
def test_multi_bounce_remainder_bound(a, k, n):
    xs = wavefield.scar_sample_points(a, 21)
    closed = scar_values(a, k, xs)
    partial = multi_bounce_scar_sum(a, k, 1.0, xs, n)
    bound = scar_q(a) ** (2 * n) * np.abs(closed)
    assert np.all(np.abs(partial - closed) <= bound * (1 + 1e-9) + 1e-12)


def test_q_zero_limit_keeps_the_unit_prefactor():
    a, k = 1.0, 3.0
    xs = np.array([-0.8, 0.2, 1.3])
    bare = (2 * xs + 1 + 0j) ** -0.5
    bare = np.where(2 * xs + 1 < 0, np.abs(2 * xs + 1) ** -0.5 * np.exp(-0.5j * math.pi), bare)
    bare = bare * np.exp(-1j * k * (a - xs + 1))
    vals = scar_values(a, k, xs, q=0.0)
    assert np.allclose(vals, cmath.exp(1j * k * (a + 2)) * bare, atol=1e-14)
    assert np.allclose(np.abs(vals), np.abs(bare), atol=1e-14)


@given(a=st.floats(0.2, 3.0))
def test_resonance_contrast(a):
    q2 = scar_q(a) ** 2
    on = resonance_factor(a, math.pi / (a + 2))
    off = resonance_factor(a, 1.5 * math.pi / (a + 2))
    assert on / off == pytest.approx((1 + q2) / (1 - q2), rel=1e-12)


def test_scar_profile_reports_endpoints():
    prof = scar_profile(1.0, 3.0, samples=11)
    assert len(prof.xs) == 11
    assert all(abs(v) > 0 for v in prof.endpoint_values)
    assert prof.to_csv().splitlines()[0] == "x,re,im,abs"


def test_focal_point_is_rejected():
    with pytest.raises(SampleAtFocalPoint):
        scar_values(1.0, 3.0, [-0.5])
    with pytest.raises(ValueError):
        scar_values(1.0, 3.0, [2.5])
    with pytest.raises(ValueError):
        multi_bounce_scar_sum(1.0, 3.0, 1.0, 0.0, 0)
