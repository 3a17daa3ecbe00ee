import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skelquant import geometry, oracle
from skelquant.bundles import Bundle, build_map, split_by_target
from skelquant.transport import (
    ContourSignatureMismatch,
    LogLaurent,
    UnsupportedBundleFamily,
    advance_chi,
    caustic_continuation_factor,
    circle_chi_series,
    circle_first_correction,
    circle_first_correction_alternative,
    circle_first_correction_formula,
    laplacian_ds,
    reduced_operator,
    reflect_chi,
    reflection_factor,
    semicircle_quadrature,
    transition_eta,
    wall_chi_series,
)

# E1 from the oracle's contour quadrature (radius 0.1 sin a), frozen
QUADRATURE_E1 = {
    0.5 * math.pi: 0.12499999999997691,
    math.pi / 3: 0.2592592592587711,
    0.25 * math.pi: 0.6666666666672616,
    1.0: 0.2978395616993744,
}

incidence = st.floats(0.3, 0.5 * math.pi)


def _first_map(curve, alpha):
    b = Bundle.whole_arc(curve, 0, alpha)
    piece = split_by_target(curve, b)[0]
    return build_map(curve, b, float(curve.arc_starts[piece.target_arc]), (piece.source_lo, piece.source_hi))


# ---------------------------------------------------------------- phases


def test_caustic_factor_is_a_quarter_turn():
    assert caustic_continuation_factor(1) == -1j
    assert caustic_continuation_factor(-1) == 1j
    assert transition_eta(1, False) == 1.0


def test_bad_signature():
    with pytest.raises(ValueError):
        caustic_continuation_factor(0)


@pytest.mark.parametrize("sigma", [1, -1])
def test_rectangle_normal_reflection(sigma):
    b = 1.0
    bmap = _first_map(geometry.rectangle(2.0, b), 0.5 * math.pi)
    k = 3.7
    chi = 0.4 - 0.2j
    _, out = reflect_chi([chi], [0.8], bmap, k, sigma)
    assert out[0] == pytest.approx(-cmath.exp(1j * sigma * k * b) * chi, abs=1e-14)


@pytest.mark.parametrize("sigma", [1, -1])
@given(alpha=st.floats(0.2, math.pi - 0.2), k=st.floats(0.5, 30.0))
def test_circle_reflection_factor(sigma, alpha, k):
    bmap = _first_map(geometry.circle(), alpha)
    expected = -(-sigma * 1j) * cmath.exp(sigma * 1j * k * (2 * math.sin(alpha) - 2 * alpha * math.cos(alpha)))
    assert reflection_factor(bmap, k, sigma, 0.3) == pytest.approx(expected, abs=1e-9)


@given(alpha=st.floats(0.2, math.pi - 0.2), k=st.floats(0.5, 30.0))
def test_reflection_conserves_flux_on_rectangle(alpha, k):
    bmap = _first_map(geometry.rectangle(2.0, 1.0), alpha)
    s = 0.5 * (bmap.source_lo + bmap.source_hi)
    _, out = reflect_chi([1.0], [s], bmap, k, 1)
    assert abs(out[0]) ** 2 / math.sin(bmap.target_alpha) == pytest.approx(1.0 / math.sin(alpha), rel=1e-12)


# ---------------------------------------------------------- log-Laurent


terms = st.dictionaries(
    st.tuples(st.integers(-5, 4), st.integers(0, 2)),
    st.complex_numbers(max_magnitude=10.0, allow_nan=False, allow_infinity=False),
    max_size=5,
)


@given(coeffs=terms, w=st.floats(0.2, 3.0))
def test_antiderivative_inverts_derivative(coeffs, w):
    f = LogLaurent.from_dict(coeffs)
    back = f.antiderivative().derivative()
    assert back.evaluate(w) == pytest.approx(f.evaluate(w), rel=1e-10, abs=1e-10)


@given(coeffs=terms, w=st.floats(0.2, 3.0))
def test_derivative_matches_finite_difference(coeffs, w):
    f = LogLaurent.from_dict(coeffs)
    h = 1e-6
    fd = (f.evaluate(w + h) - f.evaluate(w - h)) / (2 * h)
    scale = max(1.0, max((abs(c) for c in coeffs.values()), default=1.0)) * max(w**-7, w**4)
    assert abs(f.derivative().evaluate(w) - fd) < 1e-5 * scale


def test_product_and_sum():
    a = LogLaurent.power(2, 3.0)
    b = LogLaurent.from_dict({(-1, 1): 2.0})
    w = 1.7
    assert (a * b).evaluate(w) == pytest.approx(a.evaluate(w) * b.evaluate(w))
    assert (a - a).terms == ()


# ------------------------------------------------------------ operators


@given(alpha=incidence, d=st.floats(0.0, 2.0))
def test_reduced_potential_matches_symbolic_oracle(alpha, d):
    w = math.sin(alpha) - d
    if abs(w) < 0.05:
        return
    op = reduced_operator(alpha)
    assert complex(op.apply_to_one(d)) == pytest.approx(complex(oracle.reduced_potential(d, alpha)), rel=1e-10)


def test_negative_potential_variant_differs():
    op = reduced_operator(1.0, negative_potential=True)
    good = reduced_operator(1.0)
    d = 0.2
    w = math.sin(1.0) - d
    assert complex(good.apply_to_one(d) - op.apply_to_one(d)) == pytest.approx(0.5 / w**2)


@given(alpha=incidence, frac=st.floats(0.0, 1.0), s=st.floats(0.0, 2 * math.pi))
def test_circle_laplacian_of_harmonic_function(alpha, frac, s):
    # points along the chord, so every sample lies in the closed disk
    d = 2 * math.sin(alpha) * frac
    J = abs(math.sin(alpha) - d)
    if J < 0.1:
        return
    # central differences lose accuracy like h^2 / J^4 near the caustic
    tol = 1e-5 / min(1.0, J) ** 4
    lap = laplacian_ds("circle", alpha)

    def f(dd, ss):
        x = math.cos(ss) - dd * math.sin(ss + alpha)
        y = math.sin(ss) + dd * math.cos(ss + alpha)
        return math.exp(x) * math.sin(y)

    def g(dd, ss):
        x = math.cos(ss) - dd * math.sin(ss + alpha)
        y = math.sin(ss) + dd * math.cos(ss + alpha)
        return x * x + y * y

    assert lap.apply(f, d, s, h=1e-3) == pytest.approx(0.0, abs=tol)
    assert lap.apply(g, d, s, h=1e-3) == pytest.approx(4.0, abs=tol)


@given(alpha=st.floats(0.3, math.pi - 0.3), d=st.floats(0.0, 2.0), s=st.floats(0.0, 2.0))
def test_wall_laplacian_of_plane_wave(alpha, d, s):
    k = 2.0
    lap = laplacian_ds("wall", alpha)

    def f(dd, ss):
        return math.cos(k * (dd + ss * math.cos(alpha)))

    assert lap.apply(f, d, s, h=1e-3) == pytest.approx(-k * k * f(d, s), abs=1e-4)


def test_unknown_family():
    with pytest.raises(UnsupportedBundleFamily):
        laplacian_ds("ellipse", 1.0)
    with pytest.raises(UnsupportedBundleFamily):
        reduced_operator(1.0, "ellipse")


# ----------------------------------------------------------- chi series


@pytest.mark.parametrize("alpha", sorted(QUADRATURE_E1))
def test_circle_e1_matches_frozen_quadrature(alpha):
    assert circle_first_correction(alpha) == pytest.approx(QUADRATURE_E1[alpha], abs=1e-9)


@given(alpha=st.floats(0.2, 0.5 * math.pi))
def test_circle_e1_closed_form(alpha):
    assert circle_first_correction(alpha) == pytest.approx(circle_first_correction_formula(alpha), rel=1e-10)


def test_alternative_form_is_far_from_quadrature():
    assert circle_first_correction_alternative(0.5 * math.pi) == pytest.approx(-0.125)
    assert abs(circle_first_correction_alternative(0.5 * math.pi) - QUADRATURE_E1[0.5 * math.pi]) == pytest.approx(0.25)


@pytest.mark.parametrize("sigma", [1, -1])
@given(alpha=st.floats(0.3, 1.4), frac=st.floats(0.0, 0.95), p=st.floats(1.0, 20.0))
def test_circle_chi1_before_caustic(sigma, alpha, frac, p):
    sa, c2 = math.sin(alpha), math.cos(alpha) ** 2
    d = frac * sa
    J = sa - d
    e1 = circle_first_correction_formula(alpha)
    closed = (sigma * 1j / (2 * p)) * (
        5.0 / 12.0 * c2 * (J**-3 - sa**-3) + 0.25 * (1 / J - 1 / sa) + 2 * e1 * d
    )
    chi1 = circle_chi_series(alpha, p, sigma).values_at(d)[1]
    assert complex(chi1) == pytest.approx(closed, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("sigma", [1, -1])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 0.25 * math.pi, 0.5 * math.pi])
def test_circle_chi1_past_caustic_matches_quadrature(sigma, alpha):
    p = 4.0
    series = circle_chi_series(alpha, p, sigma)
    op = series.operator
    e1 = series.energies.corrections[0]
    sa = math.sin(alpha)
    d_end = 1.7 * sa

    def integrand(d):
        return (sigma * 1j / (2 * p)) * (op.apply_to_one(d) + 2 * e1)

    contour = "above" if sigma == 1 else "below"
    quad = semicircle_quadrature(integrand, sa, 0.2 * sa, 0.0, d_end, contour)
    assert complex(series.values_at(d_end)[1]) == pytest.approx(quad, abs=1e-9)


@pytest.mark.parametrize("alpha", [0.4, 1.0, 0.5 * math.pi])
def test_circle_chi1_closes_over_the_chord(alpha):
    chi1 = circle_chi_series(alpha, 5.0).values_at(2 * math.sin(alpha))[1]
    assert abs(complex(chi1)) < 1e-10


def test_conjugate_series_swaps_signature():
    plus = circle_chi_series(1.0, 5.0, 1)
    minus = circle_chi_series(1.0, 5.0, -1)
    conj = plus.conjugate()
    assert conj.sigma == -1
    for d in (0.3, 1.2, 1.6):
        assert complex(minus.values_at(d)[1]) == pytest.approx(complex(np.conj(plus.values_at(d)[1])), abs=1e-12)
        assert complex(conj.values_at(d)[1]) == pytest.approx(complex(minus.values_at(d)[1]), abs=1e-12)


def test_contour_must_match_signature():
    series = circle_chi_series(1.0, 5.0, 1)
    assert advance_chi(series, 0.5, "above")[0] == pytest.approx(1.0)
    with pytest.raises(ContourSignatureMismatch):
        advance_chi(series, 0.5, "below")
    with pytest.raises(ValueError):
        advance_chi(series, 0.5, "sideways")


def test_wall_series_has_no_correction():
    series = wall_chi_series(1.0, 3.0)
    assert complex(series.values_at(0.7)[1]) == pytest.approx(0.0, abs=1e-15)


def test_energy_series_assembly():
    series = circle_chi_series(0.5 * math.pi, 4.0)
    lam = 10.0
    assert series.energies.assembled(lam) == pytest.approx(8.0 + 0.125 / lam**2, rel=1e-12)


def test_semicircle_quadrature_picks_the_half_residue():
    above = semicircle_quadrature(lambda z: 1.0 / (z - 1.0), 1.0, 0.3, 0.0, 2.0, "above")
    below = semicircle_quadrature(lambda z: 1.0 / (z - 1.0), 1.0, 0.3, 0.0, 2.0, "below")
    assert above == pytest.approx(-1j * math.pi, abs=1e-12)
    assert below == pytest.approx(1j * math.pi, abs=1e-12)
