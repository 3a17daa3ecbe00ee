"""Billiard boundaries parametrized by arc length, ray shooting and mirror reflection.

Every boundary is traversed anticlockwise.  The starting point for each kind:

* circle: ``(R, 0)``, so ``s = R * polar angle``;
* rectangle ``a x b``: corner ``(0, 0)``, bottom side first;
* polygon: the first vertex given (vertex order is flipped if needed);
* stadium: ``(0, 0)``, the left end of the bottom flat;
* anti-stadium: ``(-1, 0)``, the left end of the bottom flat;
* broken rectangle: corner ``(0, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
GRAZING_TOL = 1e-12
CORNER_TOL = 1e-9
SELF_HIT_TOL = 1e-10


class GeometryError(Exception):
    pass


class MalformedCurve(GeometryError):
    pass


class GrazingHit(GeometryError):
    pass


class CornerAmbiguity(GeometryError):
    def __init__(self, message: str, s: float | None = None):
        super().__init__(message)
        self.s = s


class NoHit(GeometryError):
    pass


def wrap_angle(theta: float) -> float:
    """Reduce an angle to [0, 2pi)."""
    r = math.fmod(theta, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:
        r -= TWO_PI
    return r


def reflect(incidence: float) -> float:
    """Mirror rule for the incidence angle measured against the tangent."""
    if not 0.0 < incidence < math.pi:
        raise ValueError(f"incidence {incidence!r} outside (0, pi)")
    return math.pi - incidence


@dataclass(frozen=True)
class Segment:
    start: tuple[float, float]
    end: tuple[float, float]

    def __post_init__(self):
        if self.length <= 0.0:
            raise MalformedCurve("zero-length segment")

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    @property
    def heading(self) -> float:
        return math.atan2(self.end[1] - self.start[1], self.end[0] - self.start[0])

    curvature = 0.0

    def point(self, t: float) -> tuple[float, float]:
        f = t / self.length
        return (
            self.start[0] + f * (self.end[0] - self.start[0]),
            self.start[1] + f * (self.end[1] - self.start[1]),
        )

    def tangent_angle(self, t: float) -> float:
        return wrap_angle(self.heading)

    def ray_hits(self, origin, direction) -> list[tuple[float, float]]:
        """(distance along ray, arc parameter) for every crossing of the ray."""
        ex = self.end[0] - self.start[0]
        ey = self.end[1] - self.start[1]
        dx, dy = direction
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-300:
            return []
        wx = self.start[0] - origin[0]
        wy = self.start[1] - origin[1]
        dist = (wx * ey - wy * ex) / denom
        frac = (wx * dy - wy * dx) / denom
        length = self.length
        slack = CORNER_TOL / length
        if -slack <= frac <= 1.0 + slack:
            return [(dist, min(max(frac, 0.0), 1.0) * length)]
        return []


@dataclass(frozen=True)
class CircularArc:
    """Arc of a circle; ``sweep > 0`` runs anticlockwise about the center."""

    center: tuple[float, float]
    radius: float
    start_angle: float
    sweep: float

    def __post_init__(self):
        if self.radius <= 0.0 or self.sweep == 0.0 or abs(self.sweep) > TWO_PI + 1e-12:
            raise MalformedCurve("bad circular arc")

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    @property
    def orientation(self) -> float:
        return 1.0 if self.sweep > 0 else -1.0

    @property
    def curvature(self) -> float:
        return self.orientation / self.radius

    @property
    def is_full_circle(self) -> bool:
        return abs(abs(self.sweep) - TWO_PI) < 1e-12

    def _angle(self, t: float) -> float:
        return self.start_angle + self.orientation * t / self.radius

    def point(self, t: float) -> tuple[float, float]:
        th = self._angle(t)
        return (
            self.center[0] + self.radius * math.cos(th),
            self.center[1] + self.radius * math.sin(th),
        )

    def tangent_angle(self, t: float) -> float:
        return wrap_angle(self._angle(t) + self.orientation * 0.5 * math.pi)

    def ray_hits(self, origin, direction) -> list[tuple[float, float]]:
        ox = origin[0] - self.center[0]
        oy = origin[1] - self.center[1]
        dx, dy = direction
        half_b = ox * dx + oy * dy
        c = ox * ox + oy * oy - self.radius * self.radius
        disc = half_b * half_b - c
        if disc < 0.0:
            return []
        root = math.sqrt(disc)
        # cancellation-free pair of roots
        q = -(half_b + math.copysign(root, half_b)) if half_b != 0.0 else root
        roots = [q] if q == 0.0 else [q, c / q]
        out = []
        for dist in roots:
            px = ox + dist * dx
            py = oy + dist * dy
            rel = wrap_angle(self.orientation * (math.atan2(py, px) - self.start_angle))
            t = rel * self.radius
            if self.is_full_circle:
                out.append((dist, t))
            elif t <= self.length + CORNER_TOL:
                out.append((dist, min(t, self.length)))
            elif TWO_PI * self.radius - t <= CORNER_TOL:
                out.append((dist, 0.0))
        return out


Arc = Segment | CircularArc


@dataclass(frozen=True)
class RayHit:
    origin_s: float
    alpha: float
    gamma: float
    arrival_s: float
    chord: float
    arrival_incidence: float
    incoming_incidence: float
    arc_index: int
    origin: tuple[float, float]
    arrival: tuple[float, float]


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    arcs: tuple
    kind: str
    params: tuple = ()
    _contains: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.arcs:
            raise MalformedCurve("no arcs")
        offsets = [0.0]
        for arc in self.arcs:
            offsets.append(offsets[-1] + arc.length)
        object.__setattr__(self, "_offsets", np.array(offsets))
        scale = max(offsets[-1], 1.0)
        for i, arc in enumerate(self.arcs):
            nxt = self.arcs[(i + 1) % len(self.arcs)]
            a = arc.point(arc.length)
            b = nxt.point(0.0)
            if math.hypot(a[0] - b[0], a[1] - b[1]) > 1e-9 * scale:
                raise MalformedCurve(f"arc {i} does not join arc {(i + 1) % len(self.arcs)}")

    @property
    def total_length(self) -> float:
        return float(self._offsets[-1])

    @property
    def arc_starts(self) -> np.ndarray:
        return self._offsets[:-1].copy()

    def param(self, name: str):
        return dict(self.params)[name]

    def reduce(self, s: float) -> float:
        L = self.total_length
        r = math.fmod(s, L)
        if r < 0.0:
            r += L
        return 0.0 if r >= L else r

    def locate(self, s: float) -> tuple[int, float]:
        """Arc index and local parameter; a junction belongs to the arc ending there."""
        s = self.reduce(s)
        if s == 0.0:
            return len(self.arcs) - 1, self.arcs[-1].length
        i = int(np.searchsorted(self._offsets, s, side="left")) - 1
        i = min(max(i, 0), len(self.arcs) - 1)
        return i, s - self._offsets[i]

    def locate_forward(self, s: float) -> tuple[int, float]:
        """Like :meth:`locate` but a junction belongs to the arc starting there."""
        s = self.reduce(s)
        i = int(np.searchsorted(self._offsets, s, side="right")) - 1
        i = min(max(i, 0), len(self.arcs) - 1)
        return i, s - self._offsets[i]

    def position(self, s: float) -> tuple[float, float]:
        i, t = self.locate(s)
        return self.arcs[i].point(t)

    def tangent_angle(self, s: float) -> float:
        return self.tangent_info(s)[0]

    def tangent_info(self, s: float) -> tuple[float, bool]:
        """Tangent angle (limit from below) and whether s sits on a discontinuity."""
        i, t = self.locate(s)
        beta = self.arcs[i].tangent_angle(t)
        at_end = abs(t - self.arcs[i].length) < 1e-12
        if not at_end:
            return beta, False
        nxt = self.arcs[(i + 1) % len(self.arcs)]
        jump = abs(math.remainder(nxt.tangent_angle(0.0) - beta, TWO_PI))
        return beta, jump > 1e-12

    def curvature(self, s: float) -> float:
        i, _ = self.locate_forward(s)
        return self.arcs[i].curvature

    def arc_of(self, s: float) -> int:
        return self.locate_forward(s)[0]

    def is_corner(self, arc_index: int, at_end: bool) -> bool:
        """True when the junction at the end (or start) of an arc has a tangent jump."""
        n = len(self.arcs)
        i = arc_index if at_end else (arc_index - 1) % n
        a = self.arcs[i]
        b = self.arcs[(i + 1) % n]
        if isinstance(a, CircularArc) and a.is_full_circle:
            return False
        return abs(math.remainder(b.tangent_angle(0.0) - a.tangent_angle(a.length), TWO_PI)) > 1e-12

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self._contains(x, y)

    def bounding_box(self) -> tuple[float, float, float, float]:
        pts = np.array([self.position(s) for s in np.linspace(0.0, self.total_length, 2001)])
        return (pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())

    def shoot(self, origin_s: float, alpha: float) -> RayHit:
        return shoot(self, origin_s, alpha)

    def to_spec(self) -> dict:
        return curve_to_spec(self)


def shoot(curve: BoundaryCurve, origin_s: float, alpha: float, allow_corner: bool = False) -> RayHit:
    """First boundary point hit by the ray leaving ``origin_s`` at incidence ``alpha``.

    With ``allow_corner`` a hit within tolerance of a corner is returned as is instead
    of raising; callers use this to locate the corner ray itself.
    """
    if not 0.0 < alpha < math.pi:
        raise ValueError(f"incidence {alpha!r} outside (0, pi)")
    s0 = curve.reduce(origin_s)
    i0, t0 = curve.locate_forward(s0)
    beta0 = curve.arcs[i0].tangent_angle(t0)
    gamma = wrap_angle(beta0 + alpha)
    direction = (math.cos(gamma), math.sin(gamma))
    origin = curve.arcs[i0].point(t0)
    tol = SELF_HIT_TOL * curve.total_length

    candidates = []
    for j, arc in enumerate(curve.arcs):
        for dist, t in arc.ray_hits(origin, direction):
            if dist > tol:
                candidates.append((dist, j, t))
    if not candidates:
        raise NoHit(f"ray from s={s0} at alpha={alpha} never returns to the boundary")
    candidates.sort()
    dist, j, t = candidates[0]
    arc = curve.arcs[j]
    near_start = t < CORNER_TOL
    near_end = arc.length - t < CORNER_TOL
    at_corner = (near_start and curve.is_corner(j, at_end=False)) or (near_end and curve.is_corner(j, at_end=True))
    if at_corner and not allow_corner:
        raise CornerAmbiguity(f"ray from s={s0} at alpha={alpha} hits a corner", s=s0)
    if near_end and not at_corner and not (isinstance(arc, CircularArc) and arc.is_full_circle):
        j = (j + 1) % len(curve.arcs)
        t = 0.0
        arc = curve.arcs[j]

    arrival_s = curve.reduce(curve._offsets[j] + t)
    beta1 = arc.tangent_angle(t)
    # angle of the reversed ray against the tangent at arrival
    incoming = wrap_angle(gamma + math.pi - beta1)
    if abs(math.sin(incoming)) < GRAZING_TOL or not 0.0 < incoming < math.pi:
        raise GrazingHit(f"ray from s={s0} at alpha={alpha} grazes the boundary")
    return RayHit(
        origin_s=s0,
        alpha=alpha,
        gamma=gamma,
        arrival_s=arrival_s,
        chord=dist,
        arrival_incidence=reflect(incoming),
        incoming_incidence=incoming,
        arc_index=j,
        origin=origin,
        arrival=arc.point(t),
    )


# ---------------------------------------------------------------- factories


def _polygon_contains(vertices: np.ndarray):
    vx = vertices[:, 0]
    vy = vertices[:, 1]

    def contains(x, y):
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        n = len(vx)
        for k in range(n):
            x1, y1 = vx[k], vy[k]
            x2, y2 = vx[(k + 1) % n], vy[(k + 1) % n]
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < xi)
        return inside

    return contains


def circle(radius: float = 1.0) -> BoundaryCurve:
    arc = CircularArc((0.0, 0.0), float(radius), 0.0, TWO_PI)

    def contains(x, y):
        return x * x + y * y < radius * radius

    return BoundaryCurve((arc,), "circle", (("radius", float(radius)),), contains)


def polygon(vertices: Sequence[Sequence[float]], kind: str = "polygon", params=None) -> BoundaryCurve:
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise MalformedCurve("polygon needs at least three (x, y) vertices")
    area2 = float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
    if area2 == 0.0:
        raise MalformedCurve("degenerate polygon")
    if area2 < 0.0:
        v = np.vstack([v[:1], v[:0:-1]])
    arcs = tuple(
        Segment(tuple(map(float, v[k])), tuple(map(float, v[(k + 1) % len(v)]))) for k in range(len(v))
    )
    if params is None:
        params = (("vertices", tuple(tuple(map(float, p)) for p in v)),)
    return BoundaryCurve(arcs, kind, params, _polygon_contains(v))


def rectangle(a: float, b: float) -> BoundaryCurve:
    a = float(a)
    b = float(b)
    verts = [(0.0, 0.0), (a, 0.0), (a, b), (0.0, b)]
    return polygon(verts, "rectangle", (("a", a), ("b", b)))


def broken_rectangle(b, a_prime, b_prime) -> BoundaryCurve:
    """Unit-width rectangle of height ``b`` with the top-right corner cut away.

    The bay occupies ``a' < x < 1``, ``b' < y < b``; the seam is ``x = a'``, ``0 <= y <= b'``.
    """
    b, ap, bp = Fraction(b), Fraction(a_prime), Fraction(b_prime)
    if not (0 < ap <= 1 and 0 < bp <= b):
        raise MalformedCurve("broken rectangle needs 0 < a' <= 1 and 0 < b' <= b")
    params = (("b", b), ("a_prime", ap), ("b_prime", bp))
    if ap == 1 or bp == b:
        verts = [(0, 0), (1, 0), (1, b), (0, b)]
    else:
        verts = [(0, 0), (1, 0), (1, bp), (ap, bp), (ap, b), (0, b)]
    return polygon([(float(x), float(y)) for x, y in verts], "broken_rectangle", params)


def stadium(a: float) -> BoundaryCurve:
    """Flat length ``a``, unit caps centered at (0, 1) and (a, 1)."""
    a = float(a)
    arcs = (
        Segment((0.0, 0.0), (a, 0.0)),
        CircularArc((a, 1.0), 1.0, -0.5 * math.pi, math.pi),
        Segment((a, 2.0), (0.0, 2.0)),
        CircularArc((0.0, 1.0), 1.0, 0.5 * math.pi, math.pi),
    )

    def contains(x, y):
        core = (x >= 0.0) & (x <= a) & (y > 0.0) & (y < 2.0)
        left = (x - 0.0) ** 2 + (y - 1.0) ** 2 < 1.0
        right = (x - a) ** 2 + (y - 1.0) ** 2 < 1.0
        return core | left | right

    return BoundaryCurve(arcs, "stadium", (("a", a),), contains)


def anti_stadium(a: float) -> BoundaryCurve:
    """Flats from x=-1 to x=a+1 at y=0 and y=2 closed by inward unit caps.

    The caps are centered at (-1, 1) and (a+1, 1) and bulge into the table, so the
    bouncing core between the flats is ``[0, a] x [0, 2]`` and the horizontal orbit
    at y = 1 runs from (0, 1) to (a, 1).
    """
    a = float(a)
    arcs = (
        Segment((-1.0, 0.0), (a + 1.0, 0.0)),
        CircularArc((a + 1.0, 1.0), 1.0, -0.5 * math.pi, -math.pi),
        Segment((a + 1.0, 2.0), (-1.0, 2.0)),
        CircularArc((-1.0, 1.0), 1.0, 0.5 * math.pi, -math.pi),
    )

    def contains(x, y):
        box = (x > -1.0) & (x < a + 1.0) & (y > 0.0) & (y < 2.0)
        left = (x + 1.0) ** 2 + (y - 1.0) ** 2 <= 1.0
        right = (x - a - 1.0) ** 2 + (y - 1.0) ** 2 <= 1.0
        return box & ~left & ~right

    return BoundaryCurve(arcs, "anti_stadium", (("a", a),), contains)


# ------------------------------------------------------------- JSON specs


def _as_fraction(value) -> Fraction:
    if isinstance(value, dict):
        return Fraction(int(value["num"]), int(value["den"]))
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise MalformedCurve(f"expected an exact rational, got {value!r}")


def _fraction_json(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator}


def curve_from_spec(spec: dict) -> BoundaryCurve:
    kind = spec.get("kind")
    if kind == "circle":
        return circle(spec.get("radius", 1.0))
    if kind == "rectangle":
        return rectangle(spec["a"], spec["b"])
    if kind == "polygon":
        return polygon(spec["vertices"])
    if kind == "stadium":
        return stadium(spec["a"])
    if kind == "anti_stadium":
        return anti_stadium(spec["a"])
    if kind == "broken_rectangle":
        return broken_rectangle(
            _as_fraction(spec.get("b", 1)), _as_fraction(spec["a_prime"]), _as_fraction(spec["b_prime"])
        )
    raise MalformedCurve(f"unknown billiard kind {kind!r}")


def curve_to_spec(curve: BoundaryCurve) -> dict:
    p = dict(curve.params)
    if curve.kind == "broken_rectangle":
        return {"kind": curve.kind, **{k: _fraction_json(v) for k, v in p.items()}}
    if curve.kind == "polygon":
        return {"kind": "polygon", "vertices": [list(v) for v in p["vertices"]]}
    return {"kind": curve.kind, **p}
