"""Worked values for single operations, each checked on its own."""

import math

import numpy as np
import pytest

from skelquant import geometry, oracle, quantize, wavefield
from skelquant.bundles import Bundle, associated_bundle
from skelquant.skeleton import build_skeleton, last_quantization_residual, trace_orbit


def test_tangent_directions():
    assert geometry.circle().tangent_angle(0.0) == pytest.approx(0.5 * math.pi)
    rect = geometry.rectangle(2.0, 1.0)
    assert rect.tangent_angle(1.0) == pytest.approx(0.0)
    assert rect.tangent_angle(2.5) == pytest.approx(0.5 * math.pi)


def test_unit_square_diagonal():
    hit = geometry.shoot(geometry.rectangle(1.0, 1.0), 0.0, 0.25 * math.pi, allow_corner=True)
    assert hit.arrival == pytest.approx((1.0, 1.0), abs=1e-12)
    assert hit.chord == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_stadium_horizontal_orbit():
    a = 1.0
    stadium = geometry.stadium(a)
    # leftmost point: middle of the left cap
    caps = [i for i, arc in enumerate(stadium.arcs) if isinstance(arc, geometry.CircularArc)]
    i = min(caps, key=lambda j: stadium.arcs[j].center[0])
    s_left = stadium.arc_starts[i] + 0.5 * stadium.arcs[i].length
    assert stadium.position(s_left) == pytest.approx((-1.0, 1.0), abs=1e-12)
    hit = geometry.shoot(stadium, s_left, 0.5 * math.pi)
    assert hit.arrival == pytest.approx((a + 1.0, 1.0), abs=1e-12)
    assert hit.chord == pytest.approx(a + 2.0, abs=1e-12)


@pytest.mark.parametrize("alpha,expected", [(0.5 * math.pi, 0.5 * math.pi), (0.25 * math.pi, 0.75 * math.pi),
                                            (0.75 * math.pi, 0.25 * math.pi)])
def test_reflected_incidence(alpha, expected):
    assert geometry.reflect(alpha) == pytest.approx(expected)


def test_normal_bundle_is_its_own_associate():
    b = Bundle.whole_arc(geometry.circle(), 0, 0.5 * math.pi)
    assert associated_bundle(b).alpha == pytest.approx(b.alpha)


def test_bouncing_two_bounce_residual():
    b, m = 1.0, 3
    rect = geometry.rectangle(2.0, b)
    sk = build_skeleton(rect, Bundle.whole_arc(rect, 0, 0.5 * math.pi))
    tr = trace_orbit(sk, 0, 0.7, max_bounces=2)
    assert tr.closed and tr.bounce_count == 2
    assert abs(last_quantization_residual(tr, m * math.pi / b)) < 1e-12


def test_residual_grows_with_the_orbit_length():
    entry = next(e for e in quantize.rectangle_spectrum(2.0, 1.0, 1.0, 3, 2) if e.quantum_numbers == (3, 2))
    rect = geometry.rectangle(2.0, 1.0)
    sk = build_skeleton(rect, Bundle.whole_arc(rect, 0, entry.alpha))
    tr = trace_orbit(sk, 0, 0.7639320225002102, max_bounces=400)
    n = tr.bundle_returns[-1]
    length = math.fsum(tr.deltas[:n])
    eps = 1e-6
    slope = abs(last_quantization_residual(tr, entry.wavenumber + eps)) / eps
    assert slope == pytest.approx(length, rel=1e-5)


def test_irrational_rectangle_orbit_keeps_approaching():
    rect = geometry.rectangle(2.0, 1.0)
    alpha = math.atan(math.sqrt(2.0))
    sk = build_skeleton(rect, Bundle.whole_arc(rect, 0, alpha))
    gaps = [trace_orbit(sk, 0, 0.7, max_bounces=n).min_return_distance for n in (100, 1000, 10000)]
    assert not trace_orbit(sk, 0, 0.7, max_bounces=1000).closed
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[2] < gaps[0]


def test_circle_ground_level():
    e = quantize.circle_spectrum(1.0, 0, 1)[0]
    assert e.E0 == pytest.approx((0.75 * math.pi) ** 2 / 2)
    assert e.E0 == pytest.approx(2.775826, abs=1e-6)
    assert e.alpha == 0.5 * math.pi


def test_first_dipole_level_near_its_bessel_zero():
    e = next(x for x in quantize.circle_spectrum(1.0, 1, 1) if x.quantum_numbers == (1, 1))
    assert abs(e.wavenumber - 3.831705970207512) < 0.12


def test_rectangle_level_value():
    e = next(x for x in quantize.rectangle_spectrum(2.0, 1.0, 1.0, 3, 1) if x.quantum_numbers == (3, 1))
    assert e.E == pytest.approx(13 * math.pi**2 / 8, rel=1e-15)


def test_square_bouncing_ground_level():
    e = quantize.bouncing_mode_spectrum(math.pi, math.pi, 1.0, 1, 1)[0]
    assert e.E == pytest.approx(1.0, rel=1e-14)


def test_scar_weight():
    assert wavefield.scar_q(1.0) == pytest.approx(5 ** -0.5)
    assert wavefield.scar_q(1.0) == pytest.approx(0.44721, abs=1e-5)


def test_one_bounce_sum_without_reflection_is_the_single_term():
    a, k = 1.0, 2.5
    xs = np.array([-0.9, 0.3, 1.7])
    multi = wavefield.multi_bounce_scar_sum(a, k, 1.0, xs, 1, q=0.0)
    single = wavefield.scar_values(a, k, xs, q=0.0)
    assert np.array_equal(multi, single)
    assert np.allclose(np.abs(single), np.abs((2 * xs + 1 + 0j) ** -0.5))


def test_bessel_at_the_origin():
    assert oracle.bessel_j(1, 0.0) == 0.0
    assert oracle.bessel_j(0, 0.0) == 1.0


def test_square_level_count():
    assert oracle.rectangle_level_count(math.pi, math.pi, 1.0 + 1e-12) == 1
    assert oracle.exact_rectangle_spectrum(math.pi, math.pi, 1.0, 1, 1)[0][2] == pytest.approx(1.0)

