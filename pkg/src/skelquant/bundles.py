"""Constant-incidence ray bundles, their Jacobians, caustics and boundary maps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    BoundaryCurve,
    CircularArc,
    GeometryError,
    shoot,
)

ALPHA_TOL = 1e-9


class BundleError(Exception):
    pass


class DeltaNotConstant(BundleError):
    pass


class NonConstantIncidence(BundleError):
    """The reflected image of a bundle is not a constant-incidence family."""


class InconsistentMap(BundleError):
    pass


@dataclass(frozen=True)
class Bundle:
    """Rays leaving the open boundary interval (start, start + length) at incidence ``alpha``.

    ``curvature`` is d(beta)/ds on the carrying arc, which equals the derivative of the
    escape angle because the incidence is constant.
    """

    arc_index: int
    start: float
    length: float
    alpha: float
    curvature: float
    tag: str = "forward"

    def __post_init__(self):
        if not 0.0 < self.alpha < math.pi:
            raise ValueError(f"incidence {self.alpha!r} outside (0, pi)")
        if self.length <= 0.0:
            raise ValueError("bundle segment must have positive length")

    @classmethod
    def on_curve(cls, curve: BoundaryCurve, start: float, length: float, alpha: float, tag="forward"):
        i, t = curve.locate_forward(start)
        arc = curve.arcs[i]
        full = isinstance(arc, CircularArc) and arc.is_full_circle
        if not full and t + length > arc.length * (1 + 1e-12) + 1e-12:
            raise ValueError("bundle segment leaves its arc")
        return cls(i, float(start), float(length), float(alpha), float(arc.curvature), tag)

    @classmethod
    def whole_arc(cls, curve: BoundaryCurve, arc_index: int, alpha: float, tag="forward"):
        start = float(curve.arc_starts[arc_index])
        return cls.on_curve(curve, start, curve.arcs[arc_index].length, alpha, tag)

    @property
    def end(self) -> float:
        return self.start + self.length

    def contains(self, s: float, period: float | None = None, tol: float = 0.0) -> bool:
        x = s - self.start
        if period is not None:
            x = math.fmod(x, period)
            if x < 0:
                x += period
        return -tol < x < self.length + tol

    def sample_points(self, n: int, lo: float | None = None, hi: float | None = None) -> np.ndarray:
        """n points strictly inside (lo, hi), defaulting to the bundle segment."""
        lo = self.start if lo is None else lo
        hi = self.end if hi is None else hi
        return lo + (hi - lo) * (np.arange(n) + 0.5) / n

    def same_family(self, other: "Bundle", tol: float = 1e-9) -> bool:
        return (
            self.arc_index == other.arc_index
            and abs(self.alpha - other.alpha) < ALPHA_TOL
            and abs(self.start - other.start) < tol
            and abs(self.length - other.length) < tol
        )


def escape_angle(curve: BoundaryCurve, bundle: Bundle, s: float) -> float:
    return curve.tangent_angle(s) + bundle.alpha


def jacobian(bundle: Bundle, d, s=None):
    """gamma'(s) d - sin(alpha); the zero set is the caustic."""
    return bundle.curvature * np.asarray(d) - math.sin(bundle.alpha)


@dataclass(frozen=True)
class CausticData:
    distance: float
    forward: bool

    @property
    def in_billiard_distance(self) -> float:
        return self.distance if self.forward else math.inf


def caustic_data(bundle: Bundle, s=None) -> CausticData:
    if bundle.curvature == 0.0:
        return CausticData(math.inf, False)
    k = math.sin(bundle.alpha) / bundle.curvature
    return CausticData(k, k > 0.0)


def caustic_distance(bundle: Bundle, s=None) -> float:
    """Distance to the caustic along the ray, +inf when none lies ahead."""
    return caustic_data(bundle, s).in_billiard_distance


def associated_bundle(bundle: Bundle) -> Bundle:
    tag = "associated" if bundle.tag == "forward" else "forward"
    return replace(bundle, alpha=math.pi - bundle.alpha, tag=tag)


# ------------------------------------------------------------------ images


@dataclass(frozen=True)
class ImagePiece:
    """Part of a bundle whose rays all land on one arc."""

    source_lo: float
    source_hi: float
    target_arc: int
    target_alpha: float
    target_lo: float
    target_hi: float


def _raw_key(curve, s, alpha):
    return shoot(curve, s, alpha, allow_corner=True).arc_index


def _breakpoint(curve, alpha, s_left, s_right, key_left, iters=200):
    """Bracket the first switch away from ``key_left``; returns (cut, first s past it)."""
    lo, hi = s_left, s_right
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _raw_key(curve, mid, alpha) == key_left:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), hi


def _image_ends(curve, alpha, lo, hi):
    """Arrival arc-lengths at both ends of (lo, hi), extrapolated from interior rays.

    Constant-incidence maps between lines, and between points of one circle, are affine,
    so the extrapolation is exact there.  Interior arrivals are lifted one small step at
    a time so an image that wraps past s = 0 stays continuous.
    """
    L = curve.total_length
    fr = np.array([0.125, 0.375, 0.625, 0.875])
    pts = lo + (hi - lo) * fr
    lifted = [shoot(curve, pts[0], alpha).arrival_s]
    for s in pts[1:]:
        lifted.append(lifted[-1] + math.remainder(shoot(curve, s, alpha).arrival_s - lifted[-1], L))
    slope, icpt = np.polyfit(pts, lifted, 1)
    affine = float(np.max(np.abs(np.polyval([slope, icpt], pts) - lifted))) < 1e-9 * L
    return slope * lo + icpt, slope * hi + icpt, affine


def split_by_target(curve: BoundaryCurve, bundle: Bundle, n_probe: int = 64) -> list[ImagePiece]:
    """Cut a bundle at the points where its rays switch target arc and describe each image.

    Probes include rays just inside both ends, and every switch between neighbouring
    probes is followed until the right-hand key is reached, so thin slivers next to a
    corner are not lost.  A target visited and left again between two probes is missed.
    """
    alpha = bundle.alpha
    # far enough from the ends that a ray into the neighbouring wall clears the self-hit cutoff
    eps = 1e-6 * bundle.length
    pts = [bundle.start + eps, *bundle.sample_points(n_probe), bundle.end - eps]
    keys = [_raw_key(curve, s, alpha) for s in pts]
    intervals = [[bundle.start, None, keys[0]]]
    for p, q, kq in zip(pts, pts[1:], keys[1:]):
        lo, key = p, intervals[-1][2]
        for _ in range(len(curve.arcs) + 1):
            if key == kq:
                break
            cut, past = _breakpoint(curve, alpha, lo, q, key)
            key = _raw_key(curve, past, alpha)
            intervals[-1][1] = cut
            intervals.append([cut, None, key])
            lo = past
        else:
            raise BundleError("target arc keeps switching between two probe rays")
    intervals[-1][1] = bundle.end
    # slivers of rounding width come from rays that hit a corner exactly
    merged = []
    for lo, hi, key in intervals:
        if merged and hi - lo < 1e-9 * bundle.length:
            merged[-1][1] = hi
        else:
            merged.append([lo, hi, key])

    L = curve.total_length
    pieces = []
    for lo, hi, key in merged:
        width = hi - lo
        inner = [lo + width * f for f in (0.125, 0.375, 0.625, 0.875)]
        alphas = [shoot(curve, s, bundle.alpha).arrival_incidence for s in inner]
        if max(alphas) - min(alphas) > ALPHA_TOL:
            raise NonConstantIncidence(
                f"image of bundle on arc {bundle.arc_index} at alpha={bundle.alpha} has varying incidence"
            )
        h_lo, h_hi, affine = _image_ends(curve, bundle.alpha, lo, hi)
        if not affine:
            eps = 1e-12 * width
            h_lo = shoot(curve, lo + eps, bundle.alpha).arrival_s
            h_hi = h_lo + math.remainder(shoot(curve, hi - eps, bundle.alpha).arrival_s - h_lo, L)
        a, b = sorted((h_lo, h_hi))
        pieces.append(ImagePiece(lo, hi, key, float(np.mean(alphas)), a, b))
    return pieces


# ------------------------------------------------------------- bundle maps


@dataclass(frozen=True, eq=False)
class BundleMap:
    curve: BoundaryCurve = field(repr=False)
    source: Bundle
    reference_start: float
    source_lo: float
    source_hi: float
    target_arc: int
    target_alpha: float
    delta: float
    delta_spread: float
    delta_std: float
    caustic_crossed: bool
    h_prime_fd_error: float
    wraps: bool

    def hit(self, s: float):
        return shoot(self.curve, s, self.source.alpha)

    def h(self, s: float) -> float:
        return self.hit(s).arrival_s

    def chord(self, s: float) -> float:
        return self.hit(s).chord

    def h_prime(self, s: float, chord: float | None = None) -> float:
        """dh/ds from the sine projection of the arrival geometry."""
        d = self.chord(s) if chord is None else chord
        return (d * self.source.curvature - math.sin(self.source.alpha)) / math.sin(self.target_alpha)

    def target_offset(self, s: float, h: float) -> float:
        L = self.curve.total_length
        if self.wraps:
            lifted = s + ((h - s) % L)
            return lifted - self.reference_start
        return (h - self.reference_start) % L

    def to_json(self) -> dict:
        return {
            "source_arc": self.source.arc_index,
            "source_lo": self.source_lo,
            "source_hi": self.source_hi,
            "target_arc": self.target_arc,
            "target_alpha": self.target_alpha,
            "reference_start": self.reference_start,
            "delta": self.delta,
            "caustic_crossed": bool(self.caustic_crossed),
        }


def build_map(
    curve: BoundaryCurve,
    bundle: Bundle,
    reference_start: float,
    subrange: tuple[float, float] | None = None,
    n_samples: int = 32,
) -> BundleMap:
    """Boundary-to-boundary map of (a sub-range of) a bundle and its phase constant.

    ``delta = D + (s - u) cos(alpha) - (h - u') cos(alpha')`` is evaluated at every
    sample and must come out constant.
    """
    if n_samples < 8:
        raise ValueError("need at least 8 samples")
    lo, hi = subrange if subrange is not None else (bundle.start, bundle.end)
    samples = bundle.sample_points(n_samples, lo, hi)
    hits = [shoot(curve, s, bundle.alpha) for s in samples]
    arcs = {h.arc_index for h in hits}
    if len(arcs) != 1:
        raise BundleError(f"sub-range ({lo}, {hi}) lands on several arcs {sorted(arcs)}")
    alphas = np.array([h.arrival_incidence for h in hits])
    if alphas.max() - alphas.min() > ALPHA_TOL:
        raise NonConstantIncidence("arrival incidence varies across the sub-range")
    target_alpha = float(alphas.mean())
    target_arc = hits[0].arc_index

    L = curve.total_length
    arc = curve.arcs[target_arc]
    wraps = isinstance(arc, CircularArc) and arc.is_full_circle
    stub = BundleMap(curve, bundle, float(reference_start), lo, hi, target_arc, target_alpha, 0.0, 0.0, 0.0, False, 0.0, wraps)

    ca, cb = math.cos(bundle.alpha), math.cos(target_alpha)
    deltas = np.array(
        [h.chord + (s - bundle.start) * ca - stub.target_offset(s, h.arrival_s) * cb for s, h in zip(samples, hits)]
    )
    delta = float(deltas.mean())
    spread = float(deltas.max() - deltas.min())
    if spread > 1e-9 * (1.0 + abs(delta)):
        raise DeltaNotConstant(f"delta varies by {spread:.3e} across the bundle (mean {delta:.12g})")

    k = caustic_distance(bundle)
    crossed = [0.0 < k < h.chord for h in hits]
    if len(set(crossed)) != 1:
        raise BundleError("some rays of the sub-range cross the caustic and some do not")

    # finite-difference check of dh/ds and of the cosine projection identity
    worst = 0.0
    step = 1e-6 * (hi - lo)
    for s, h in list(zip(samples, hits))[:: max(1, n_samples // 4)]:
        fwd = shoot(curve, s + step, bundle.alpha)
        bwd = shoot(curve, s - step, bundle.alpha)
        fd = math.remainder(fwd.arrival_s - bwd.arrival_s, L) / (2 * step)
        analytic = stub.h_prime(s, h.chord)
        worst = max(worst, abs(fd - analytic) / max(1.0, abs(analytic)))
        d_prime = (fwd.chord - bwd.chord) / (2 * step)
        cos_line = analytic * cb - (ca + d_prime)
        worst = max(worst, abs(cos_line) / max(1.0, abs(ca) + abs(d_prime)))
    if worst > 1e-5:
        raise InconsistentMap(f"dh/ds disagrees with finite differences by {worst:.3e}")

    return replace(
        stub,
        delta=delta,
        delta_spread=spread,
        delta_std=float(deltas.std()),
        caustic_crossed=crossed[0],
        h_prime_fd_error=worst,
    )


__all__ = [
    "Bundle",
    "BundleMap",
    "BundleError",
    "CausticData",
    "DeltaNotConstant",
    "GeometryError",
    "ImagePiece",
    "InconsistentMap",
    "NonConstantIncidence",
    "associated_bundle",
    "build_map",
    "caustic_data",
    "caustic_distance",
    "escape_angle",
    "jacobian",
    "split_by_target",
]
