"""Reflection-closed families of bundles and orbit tracing through them."""

from __future__ import annotations

import cmath
import math
from collections import deque
from dataclasses import dataclass, field

from .bundles import (
    ALPHA_TOL,
    Bundle,
    BundleError,
    BundleMap,
    associated_bundle,
    build_map,
    split_by_target,
)
from .geometry import BoundaryCurve, CircularArc, CornerAmbiguity, GeometryError, shoot
from .transport import transition_eta


class SkeletonError(Exception):
    pass


class ClosureNotReached(SkeletonError):
    pass


class TraceNotClosed(SkeletonError):
    pass


@dataclass(frozen=True)
class Transition:
    source: int
    target: int
    source_lo: float
    source_hi: float
    map: BundleMap

    @property
    def caustic_crossed(self) -> bool:
        return self.map.caustic_crossed

    def eta(self, sigma: int = 1) -> complex:
        return transition_eta(sigma, self.map.caustic_crossed)


@dataclass(eq=False)
class Skeleton:
    curve: BoundaryCurve
    bundles: list
    transitions: list = field(default_factory=list)
    closed: bool = True
    reason: str | None = None

    def __len__(self):
        return len(self.bundles)

    def require_closed(self) -> "Skeleton":
        if not self.closed:
            raise ClosureNotReached(self.reason or "skeleton is not closed under reflection")
        return self

    def index_of(self, bundle: Bundle) -> int:
        for i, b in enumerate(self.bundles):
            if b.same_family(bundle, 1e-9 * self.curve.total_length):
                return i
        raise KeyError("bundle is not part of the skeleton")

    def transition_at(self, index: int, s: float) -> Transition:
        L = self.curve.total_length
        best, gap = None, math.inf
        for tr in self.transitions[index]:
            x = tr.source_lo + ((s - tr.source_lo) % L)
            if tr.source_lo <= x <= tr.source_hi:
                return tr
            g = min(abs(math.remainder(s - tr.source_lo, L)), abs(math.remainder(s - tr.source_hi, L)))
            if g < gap:
                best, gap = tr, g
        if best is not None and gap < 1e-9 * L:
            return best
        raise SkeletonError(f"s={s} is not covered by bundle {index}")

    def same_bundles(self, other: "Skeleton") -> bool:
        if len(self) != len(other):
            return False
        tol = 1e-9 * self.curve.total_length
        return all(any(b.same_family(c, tol) for c in other.bundles) for b in self.bundles)

    def associated(self) -> "Skeleton":
        return associated_skeleton(self)

    @property
    def self_associated(self) -> bool:
        return self.same_bundles(self.associated())

    def strongly_connected(self) -> bool:
        n = len(self.bundles)
        if n == 0:
            return False
        fwd = {i: {t.target for t in self.transitions[i]} for i in range(n)}
        back = {i: set() for i in range(n)}
        for i, ts in fwd.items():
            for j in ts:
                back[j].add(i)

        def reach(graph):
            seen, todo = {0}, [0]
            while todo:
                for j in graph[todo.pop()]:
                    if j not in seen:
                        seen.add(j)
                        todo.append(j)
            return seen

        return len(reach(fwd)) == n and len(reach(back)) == n


def _is_closed_arc(curve: BoundaryCurve, arc_index: int) -> bool:
    arc = curve.arcs[arc_index]
    return isinstance(arc, CircularArc) and arc.is_full_circle


def _intervals_on_arc(curve, arc_index, lo, hi):
    """Image interval clipped to its arc, split in two if it wraps a full circle."""
    start = float(curve.arc_starts[arc_index])
    length = curve.arcs[arc_index].length
    tol = 1e-9 * curve.total_length
    if _is_closed_arc(curve, arc_index):
        if hi - lo >= length - tol:
            return [(start, start + length)]
        a = start + (lo - start) % length
        b = a + (hi - lo)
        if b <= start + length + tol:
            return [(a, min(b, start + length))]
        return [(a, start + length), (start, b - length)]
    a = min(max(lo, start), start + length)
    b = min(max(hi, start), start + length)
    if a - start < tol:
        a = start
    if start + length - b < tol:
        b = start + length
    return [(a, b)] if b - a > tol else []


def _add_interval(curve, bundles, arc_index, alpha, lo, hi, tag):
    """Merge an image interval into the bundle list; return (changed, new bundle)."""
    tol = 1e-9 * curve.total_length
    same = [
        b for b in bundles
        if b.arc_index == arc_index and abs(b.alpha - alpha) < ALPHA_TOL
        and b.start <= hi + tol and lo <= b.end + tol
    ]
    if len(same) == 1 and same[0].start <= lo + tol and hi <= same[0].end + tol:
        return False, same[0]
    new_lo = min([lo] + [b.start for b in same])
    new_hi = max([hi] + [b.end for b in same])
    alpha_keep = same[0].alpha if same else alpha
    fresh = Bundle.on_curve(curve, new_lo, new_hi - new_lo, alpha_keep, same[0].tag if same else tag)
    for b in same:
        bundles.remove(b)
    bundles.append(fresh)
    return True, fresh


def build_skeleton(curve: BoundaryCurve, seed: Bundle, max_bundles: int = 64) -> Skeleton:
    """Reflect the seed bundle until the family is closed, then tabulate transitions.

    A family that keeps producing new bundles, or whose images stop being
    constant-incidence families, comes back with ``closed=False`` and the partial list.
    """
    bundles = [seed]
    queue = deque([seed])
    reason = None
    while queue:
        current = queue.popleft()
        if current not in bundles:
            continue
        try:
            pieces = split_by_target(curve, current)
        except (BundleError, GeometryError) as exc:
            reason = f"{type(exc).__name__}: {exc}"
            break
        for piece in pieces:
            for lo, hi in _intervals_on_arc(curve, piece.target_arc, piece.target_lo, piece.target_hi):
                changed, fresh = _add_interval(curve, bundles, piece.target_arc, piece.target_alpha, lo, hi, current.tag)
                if changed:
                    queue.append(fresh)
        if len(bundles) > max_bundles:
            reason = f"ClosureNotReached: more than {max_bundles} bundles"
            break
    # keep the seed (or the bundle that absorbed it) first
    tol = 1e-9 * curve.total_length
    bundles.sort(key=lambda b: 0 if (b.arc_index == seed.arc_index and abs(b.alpha - seed.alpha) < ALPHA_TOL
                                     and b.start <= seed.start + tol and seed.end <= b.end + tol) else 1)
    sk = Skeleton(curve, bundles, [], reason is None, reason)
    if not sk.closed:
        return sk
    try:
        sk.transitions = _tabulate(curve, bundles)
    except (BundleError, GeometryError, SkeletonError) as exc:
        sk.closed = False
        sk.reason = f"{type(exc).__name__}: {exc}"
    return sk


def _find_target(curve, bundles, arc_index, alpha, lo, hi):
    L = curve.total_length
    tol = 1e-7 * L
    for j, b in enumerate(bundles):
        if b.arc_index != arc_index or abs(b.alpha - alpha) > ALPHA_TOL:
            continue
        if _is_closed_arc(curve, arc_index) and b.length >= curve.arcs[arc_index].length - tol:
            return j
        if b.start - tol <= lo and hi <= b.end + tol:
            return j
    raise SkeletonError(f"image ({lo}, {hi}) on arc {arc_index} is not covered by any bundle")


def _tabulate(curve, bundles):
    table = []
    for i, b in enumerate(bundles):
        rows = []
        for piece in split_by_target(curve, b):
            ivs = _intervals_on_arc(curve, piece.target_arc, piece.target_lo, piece.target_hi)
            j = _find_target(curve, bundles, piece.target_arc, piece.target_alpha, ivs[0][0], ivs[0][1])
            bmap = build_map(curve, b, bundles[j].start, (piece.source_lo, piece.source_hi))
            rows.append(Transition(i, j, piece.source_lo, piece.source_hi, bmap))
        table.append(rows)
    return table


def associated_skeleton(sk: Skeleton) -> Skeleton:
    """Time-reversed skeleton: every bundle's incidence alpha becomes pi - alpha."""
    bundles = [associated_bundle(b) for b in sk.bundles]
    out = Skeleton(sk.curve, bundles, [], sk.closed, sk.reason)
    if sk.closed:
        out.transitions = _tabulate(sk.curve, bundles)
    return out


# ------------------------------------------------------------------ traces


@dataclass(frozen=True)
class HitRecord:
    bundle: int
    s: float
    chord: float
    cum_length: float

    def to_json(self) -> dict:
        return {"bundle": self.bundle, "s": self.s, "D": self.chord, "cumLength": self.cum_length}


@dataclass
class OrbitTrace:
    start_bundle: int
    start_s: float
    hits: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    caustic_flags: list = field(default_factory=list)
    bundle_returns: list = field(default_factory=list)
    closed: bool = False
    min_return_distance: float = math.inf
    aborted: str | None = None

    @property
    def bounce_count(self) -> int:
        return len(self.hits)

    @property
    def total_length(self) -> float:
        return self.hits[-1].cum_length if self.hits else 0.0

    @property
    def delta_sum(self) -> float:
        return math.fsum(self.deltas)

    def phase_sum(self, lambda_p: float) -> float:
        return lambda_p * self.delta_sum

    def prefix(self, n: int) -> "OrbitTrace":
        cut = OrbitTrace(self.start_bundle, self.start_s, self.hits[:n], self.deltas[:n], self.caustic_flags[:n])
        cut.bundle_returns = [k for k in self.bundle_returns if k <= n]
        cut.closed = self.closed and n == len(self.hits)
        cut.min_return_distance = self.min_return_distance
        return cut


def trace_orbit(
    sk: Skeleton,
    start_bundle: int,
    start_s: float,
    max_bounces: int = 1000,
    return_tol: float | None = None,
) -> OrbitTrace:
    """Follow one ray through the skeleton's transitions.

    Stops after ``max_bounces`` or when the ray re-enters the start bundle within
    ``return_tol`` (default ``1e-9 L``) of the starting point.  Every re-entry into the
    start bundle is listed in ``bundle_returns`` by bounce count.
    """
    sk.require_closed()
    curve = sk.curve
    L = curve.total_length
    tol = 1e-9 * L if return_tol is None else return_tol
    start = sk.bundles[start_bundle]
    if not start.contains(start_s, L if _is_closed_arc(curve, start.arc_index) else None):
        raise SkeletonError("start point is not inside the start bundle")
    trace = OrbitTrace(start_bundle, start_s)
    b, s, cum = start_bundle, start_s, 0.0
    for _ in range(max_bounces):
        try:
            tr = sk.transition_at(b, s)
            hit = shoot(curve, s, sk.bundles[b].alpha)
        except (CornerAmbiguity, SkeletonError) as exc:
            trace.aborted = f"{type(exc).__name__}: {exc}"
            break
        cum += hit.chord
        trace.hits.append(HitRecord(b, s, hit.chord, cum))
        trace.deltas.append(tr.map.delta)
        trace.caustic_flags.append(tr.caustic_crossed)
        b, s = tr.target, hit.arrival_s
        if b == start_bundle:
            trace.bundle_returns.append(len(trace.hits))
            gap = abs(math.remainder(s - start_s, L))
            trace.min_return_distance = min(trace.min_return_distance, gap)
            if gap < tol:
                trace.closed = True
                break
    return trace


def last_quantization_residual(trace: OrbitTrace, lambda_p: float, sigma: int = 1) -> complex:
    """(-1)^n (prod eta) exp(sigma i k sum delta) - 1 up to the last return to the start bundle."""
    if not trace.bundle_returns:
        raise TraceNotClosed("the trace never returns to its start bundle")
    n = trace.bundle_returns[-1]
    eta = 1.0 + 0j
    for crossed in trace.caustic_flags[:n]:
        eta *= transition_eta(sigma, crossed)
    phase = sigma * lambda_p * math.fsum(trace.deltas[:n])
    return (-1) ** n * eta * cmath.exp(1j * phase) - 1.0
