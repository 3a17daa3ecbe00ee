import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from skelquant import geometry, quantize
from skelquant.bundles import Bundle
from skelquant.skeleton import (
    SkeletonError,
    TraceNotClosed,
    build_skeleton,
    last_quantization_residual,
    trace_orbit,
)

DISK = geometry.circle()
RECT = geometry.rectangle(2.0, 1.0)
GOLDEN = 0.3819660112501051


def test_disk_has_one_bundle():
    sk = build_skeleton(DISK, Bundle.whole_arc(DISK, 0, 1.0)).require_closed()
    assert len(sk) == 1
    assert sk.self_associated is False
    assert sk.strongly_connected()


def test_rectangle_generic_incidence_has_eight_bundles():
    sk = build_skeleton(RECT, Bundle.whole_arc(RECT, 0, 1.0)).require_closed()
    assert len(sk) == 8
    assert sk.strongly_connected()
    assert {round(b.alpha, 12) for b in sk.bundles} == {1.0, round(math.pi - 1.0, 12),
                                                       round(0.5 * math.pi - 1.0, 12),
                                                       round(0.5 * math.pi + 1.0, 12)}


def test_rectangle_normal_incidence_has_two_bundles():
    sk = build_skeleton(RECT, Bundle.whole_arc(RECT, 0, 0.5 * math.pi)).require_closed()
    assert len(sk) == 2
    assert sk.self_associated


@given(alpha=st.floats(0.1, math.pi - 0.1).filter(lambda a: abs(a - 0.5 * math.pi) > 1e-3))
def test_rectangle_skeleton_is_self_associated(alpha):
    sk = build_skeleton(RECT, Bundle.whole_arc(RECT, 0, alpha)).require_closed()
    assert len(sk) == 8
    assert sk.self_associated


@given(alpha=st.floats(0.1, math.pi - 0.1))
def test_disk_skeleton_associates_to_mirror(alpha):
    sk = build_skeleton(DISK, Bundle.whole_arc(DISK, 0, alpha)).require_closed()
    assoc = sk.associated()
    assert len(assoc) == 1
    assert assoc.bundles[0].alpha == pytest.approx(math.pi - alpha)


def test_stadium_generic_incidence_does_not_close():
    stadium = geometry.stadium(1.5)
    sk = build_skeleton(stadium, Bundle.whole_arc(stadium, 0, 1.0), max_bundles=16)
    assert not sk.closed
    with pytest.raises(SkeletonError):
        sk.require_closed()


@pytest.mark.parametrize("qn", [(1, 1), (4, 1), (3, 2), (5, 7)])
def test_rectangle_trace_closes_on_levels(qn):
    entry = next(e for e in quantize.rectangle_spectrum(2.0, 1.0, 1.0, 6, 8) if e.quantum_numbers == qn)
    sk = build_skeleton(RECT, Bundle.whole_arc(RECT, 0, entry.alpha))
    tr = trace_orbit(sk, 0, GOLDEN * 2.0, max_bounces=400)
    assert tr.closed
    assert abs(last_quantization_residual(tr, entry.wavenumber)) < 1e-10


def test_residual_is_nonzero_off_level():
    entry = quantize.rectangle_spectrum(2.0, 1.0, 1.0, 1, 1)[0]
    sk = build_skeleton(RECT, Bundle.whole_arc(RECT, 0, entry.alpha))
    tr = trace_orbit(sk, 0, GOLDEN * 2.0, max_bounces=400)
    assert abs(last_quantization_residual(tr, entry.wavenumber * 1.01)) > 1e-3


def test_trace_records_cumulative_length():
    sk = build_skeleton(RECT, Bundle.whole_arc(RECT, 0, 1.0))
    tr = trace_orbit(sk, 0, 0.7, max_bounces=12)
    assert tr.bounce_count == 12
    assert tr.total_length == pytest.approx(math.fsum(h.chord for h in tr.hits))
    assert tr.prefix(5).bounce_count == 5


def test_trace_outside_start_bundle():
    sk = build_skeleton(RECT, Bundle.whole_arc(RECT, 0, 1.0))
    with pytest.raises(SkeletonError):
        trace_orbit(sk, 0, 2.5)


def test_residual_needs_a_return():
    sk = build_skeleton(RECT, Bundle.whole_arc(RECT, 0, 1.0))
    tr = trace_orbit(sk, 0, 0.7, max_bounces=1)
    with pytest.raises(TraceNotClosed):
        last_quantization_residual(tr, 3.0)


def test_disk_trace_returns_every_bounce():
    sk = build_skeleton(DISK, Bundle.whole_arc(DISK, 0, 1.0))
    tr = trace_orbit(sk, 0, 0.1, max_bounces=5)
    assert tr.bundle_returns == [1, 2, 3, 4, 5]
    assert all(tr.caustic_flags)


@pytest.mark.parametrize("alpha", [1.5625, 0.5 * math.pi - 1e-4])
def test_near_normal_incidence_keeps_the_corner_slivers(alpha):
    # only a thin strip of rays next to the corner reaches the side walls
    sk = build_skeleton(RECT, Bundle.whole_arc(RECT, 0, alpha)).require_closed()
    assert len(sk) == 8
