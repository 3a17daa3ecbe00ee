"""Level solvers for the circle, the rectangle, bouncing-ball families and broken rectangles."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import geometry
from .bundles import Bundle
from .skeleton import build_skeleton, trace_orbit
from .transport import circle_first_correction, transition_eta

QUARTER_PI = 0.25 * math.pi


class QuantizeError(Exception):
    pass


class RootNotBracketed(QuantizeError):
    pass


class IncommensurateSides(QuantizeError):
    pass


def fmt(x) -> str:
    """Locale-free float text with 17 significant digits."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


@dataclass(frozen=True)
class SpectrumEntry:
    family: str
    labels: tuple
    quantum_numbers: tuple
    alpha: float
    E0: float
    E1: float
    lam: float = 1.0
    degenerate: bool = False
    extra: tuple = ()

    @property
    def E(self) -> float:
        return self.E0 + self.E1 / self.lam**2

    @property
    def wavenumber(self) -> float:
        """k = lambda p with p = sqrt(2 E0)."""
        return self.lam * math.sqrt(2.0 * self.E0)

    @property
    def momentum(self) -> float:
        return math.sqrt(2.0 * self.E0)

    def qn(self, label: str) -> int:
        return self.quantum_numbers[self.labels.index(label)]

    def info(self, key: str, default=None):
        return dict(self.extra).get(key, default)

    def to_dict(self) -> dict:
        d = {
            "family": self.family,
            **{k: v for k, v in zip(self.labels, self.quantum_numbers)},
            "alpha": self.alpha,
            "E0": self.E0,
            "E1": self.E1,
            "E": self.E,
            "lambda": self.lam,
            "degenerate": self.degenerate,
            "labels": list(self.labels),
        }
        if self.extra:
            d["extra"] = dict(self.extra)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumEntry":
        labels = tuple(d["labels"])
        return cls(
            d["family"],
            labels,
            tuple(int(d[k]) for k in labels),
            float(d["alpha"]),
            float(d["E0"]),
            float(d["E1"]),
            float(d.get("lambda", 1.0)),
            bool(d["degenerate"]),
            tuple(sorted(d.get("extra", {}).items())),
        )


# ------------------------------------------------------------------ circle


def circle_phase_function(x: float) -> float:
    """(sqrt(1 - x^2) - x arccos x) / x, decreasing from +inf at 0 to 0 at 1."""
    return (math.sqrt(max(0.0, 1.0 - x * x)) - x * math.acos(min(1.0, x))) / x


def _check_monotone(samples: int = 200) -> None:
    xs = [(k + 1) / (samples + 1) for k in range(samples)]
    vals = [circle_phase_function(x) for x in xs]
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise QuantizeError("phase function is not monotone on (0, 1]")


_check_monotone()


def circle_condition_residual(k: float, m: int, r: int) -> float:
    """sqrt(k^2 - m^2) - m arccos(m/k) - (r - 1/4) pi."""
    return math.sqrt(k * k - m * m) - m * math.acos(m / k) - (r - 0.25) * math.pi


def solve_circle_cosine(m: int, r: int, width: float = 1e-15) -> float:
    """cos(alpha) = m / k for the level (m, r) by bisection on the phase function.

    ``width`` is relative: k = m / x inherits the relative error of x, which matters for
    large r where x is small.
    """
    target = (r - 0.25) * math.pi / m
    lo, hi = 1e-15, 1.0
    if not circle_phase_function(lo) > target > circle_phase_function(hi):
        raise RootNotBracketed(f"(r - 1/4) pi / m = {target} is outside the phase function range")
    while hi - lo > width * hi:
        mid = 0.5 * (lo + hi)
        if circle_phase_function(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def circle_spectrum(lam: float = 1.0, m_max: int = 3, r_max: int = 10, order: int = 1,
                    check_residual: float = 1e-10) -> list[SpectrumEntry]:
    """Levels of the unit disk for 0 <= m <= m_max, 1 <= r <= r_max."""
    if lam <= 0 or m_max < 0 or r_max < 1:
        raise ValueError("need lambda > 0, m_max >= 0, r_max >= 1")
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    out = []
    for m in range(m_max + 1):
        for r in range(1, r_max + 1):
            if m == 0:
                k = (r - 0.25) * math.pi
                alpha = 0.5 * math.pi
            else:
                x = solve_circle_cosine(m, r)
                k = m / x
                alpha = math.acos(x)
                res = circle_condition_residual(k, m, r)
                if abs(res) > check_residual:
                    raise QuantizeError(f"level (m={m}, r={r}) residual {res:.3e}")
            e0 = k * k / (2.0 * lam * lam)
            e1 = circle_first_correction(alpha) if order == 1 else 0.0
            out.append(SpectrumEntry("circle", ("m", "r"), (m, r), alpha, e0, e1, lam, m >= 1))
    return out


# --------------------------------------------------------------- rectangle


def rectangle_spectrum(a: float, b: float, lam: float = 1.0, n_max: int = 10, m_max: int = 10) -> list[SpectrumEntry]:
    """lambda p a cos(alpha) = n pi, lambda p b sin(alpha) = m pi."""
    out = []
    for n in range(1, n_max + 1):
        for m in range(1, m_max + 1):
            e0 = math.pi**2 / (2.0 * lam**2) * (n * n / (a * a) + m * m / (b * b))
            alpha = math.atan2(m * a, n * b)
            out.append(SpectrumEntry("rectangle", ("n", "m"), (n, m), alpha, e0, 0.0, lam, False,
                                     (("a", a), ("b", b))))
    return out


# ---------------------------------------------------------- bouncing modes


def _normal_skeleton(width: float, height: float):
    curve = geometry.rectangle(width, height)
    seed = Bundle.whole_arc(curve, 0, 0.5 * math.pi)
    return build_skeleton(curve, seed).require_closed()


def bouncing_longitudinal_wavenumbers(height: float, n_max: int, width: float = 1.0) -> list[float]:
    """Roots of the two-bounce closure between parallel walls ``height`` apart."""
    sk = _normal_skeleton(width, height)
    trace = trace_orbit(sk, 0, 0.5 * width, max_bounces=4)
    if not trace.closed:
        raise QuantizeError("normal-incidence orbit did not close")
    # roots of (-1)^n (prod eta) exp(i k sum delta) = 1
    unit = (-1) ** trace.bounce_count + 0j
    for crossed in trace.caustic_flags:
        unit *= transition_eta(1, crossed)
    offset = math.atan2(unit.imag, unit.real)
    period = trace.delta_sum
    roots = []
    N = 0
    while len(roots) < n_max:
        N += 1
        k = (2.0 * math.pi * N - offset) / period
        if k > 0:
            roots.append(k)
    return roots


def bouncing_transverse_e1(width: float, m: int) -> float:
    """E1 with chi(s) = sin(sqrt(2 E1) s) vanishing at s = 0 and s = width."""
    return 0.5 * (m * math.pi / width) ** 2


def bouncing_second_correction(width: float, m: int) -> float:
    """E2 from the order-2 transverse problem; the end conditions force it to zero.

    chi_11 = A sin(q s) + B cos(q s) + E2 s cos(q s) / q with q = sqrt(2 E1); requiring
    chi_11(0) = chi_11(width) = 0 is a 2x2 linear system in (B, E2).
    """
    q = math.sqrt(2.0 * bouncing_transverse_e1(width, m))
    c = math.cos(q * width)
    mat = np.array([[1.0, 0.0], [c, width * c / q]])
    rhs = np.zeros(2)
    _, e2 = np.linalg.solve(mat, rhs)
    return float(e2)


def bouncing_mode_spectrum(a: float, b: float, lam: float = 1.0, n_max: int = 8, m_max: int = 8,
                           axis: str = "vertical") -> list[SpectrumEntry]:
    """Levels on the normal-incidence two-bundle skeleton of an ``a x b`` core.

    ``axis="vertical"`` bounces between the horizontal walls (length ``b`` along the ray,
    transverse width ``a``); ``"horizontal"`` swaps the roles.
    """
    if axis == "vertical":
        along, across = b, a
    elif axis == "horizontal":
        along, across = a, b
    else:
        raise ValueError("axis must be 'vertical' or 'horizontal'")
    ks = bouncing_longitudinal_wavenumbers(along, n_max, across)
    out = []
    for n, k in enumerate(ks, start=1):
        p = k / lam
        for m in range(1, m_max + 1):
            e1 = bouncing_transverse_e1(across, m)
            out.append(SpectrumEntry("bouncing", ("n", "m"), (n, m), 0.5 * math.pi, 0.5 * p * p, e1, lam, False,
                                     (("a", a), ("axis", axis), ("b", b))))
    return out


# --------------------------------------------------------- broken rectangle


@dataclass(frozen=True)
class CommensurateSpec:
    """Unit-width rectangle of height b with a bay of width 1 - a' and depth b - b'."""

    b: Fraction
    a_prime: Fraction
    b_prime: Fraction
    max_denominator: int = 10**6

    def __post_init__(self):
        for name in ("b", "a_prime", "b_prime"):
            v = getattr(self, name)
            if isinstance(v, float) or not isinstance(v, (int, Fraction)):
                raise IncommensurateSides(f"{name} must be an exact rational, got {v!r}")
            object.__setattr__(self, name, Fraction(v))
        if not (0 < self.a_prime <= 1 and 0 < self.b_prime <= self.b):
            raise IncommensurateSides("need 0 < a' <= 1 and 0 < b' <= b")

    @property
    def zero_bay(self) -> bool:
        return self.a_prime == 1 or self.b_prime == self.b

    @property
    def n0(self) -> int:
        """Smallest n0 > 0 with n0 a' an integer (1 when there is no bay)."""
        if self.zero_bay:
            return 1
        n0 = self.a_prime.denominator
        if n0 > self.max_denominator:
            raise IncommensurateSides("a' denominator too large to treat as commensurate")
        return n0

    @property
    def m0(self) -> int:
        """Smallest m0 > 0 with m0 b'/b an integer (1 when there is no bay)."""
        if self.zero_bay:
            return 1
        m0 = (self.b_prime / self.b).denominator
        if m0 > self.max_denominator:
            raise IncommensurateSides("b'/b denominator too large to treat as commensurate")
        return m0

    def curve(self):
        return geometry.broken_rectangle(self.b, self.a_prime, self.b_prime)


def seam_amplitude_ratio(l: int) -> int:
    """A2 / A1 = (-1)^(l+1) across the seam."""
    return -1 if l % 2 == 0 else 1


def broken_rectangle_spectrum(spec: CommensurateSpec, lam: float = 1.0, n_max: int = 8, m_max: int = 8) -> list[SpectrumEntry]:
    """Modes with sqrt(2 E1) = l pi, l = n n0, and lambda p = M pi / b, M = m m0."""
    b = float(spec.b)
    out = []
    for n in range(1, n_max + 1):
        l = n * spec.n0
        for m in range(1, m_max + 1):
            big_m = m * spec.m0
            p = big_m * math.pi / (lam * b)
            e1 = 0.5 * (l * math.pi) ** 2
            out.append(
                SpectrumEntry(
                    "broken_rectangle",
                    ("n", "m"),
                    (n, m),
                    0.5 * math.pi,
                    0.5 * p * p,
                    e1,
                    lam,
                    False,
                    (("M", big_m), ("amplitude_ratio", seam_amplitude_ratio(l)), ("l", l),
                     ("m0", spec.m0), ("n0", spec.n0)),
                )
            )
    return out


# -------------------------------------------------------------------- output

COLUMNS_TAIL = ("alpha", "E0", "E1", "E", "degenerate")


def spectrum_to_csv(entries: list[SpectrumEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    labels = entries[0].labels if entries else ()
    w.writerow(("family",) + tuple(labels) + COLUMNS_TAIL)
    for e in entries:
        w.writerow((e.family,) + tuple(str(q) for q in e.quantum_numbers)
                   + (fmt(e.alpha), fmt(e.E0), fmt(e.E1), fmt(e.E), fmt(e.degenerate)))
    return buf.getvalue()


def spectrum_to_json(entries: list[SpectrumEntry]) -> str:
    return json.dumps([e.to_dict() for e in entries], indent=1, sort_keys=True)


def spectrum_from_json(text: str) -> list[SpectrumEntry]:
    return [SpectrumEntry.from_dict(d) for d in json.loads(text)]
