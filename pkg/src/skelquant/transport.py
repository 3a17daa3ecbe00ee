"""Semiclassical amplitude recursion, the ray-coordinate Laplacian, and chi transport.

Along a bundle the amplitude is written ``|J|^(-1/2) exp(sigma i k phase) chi`` with
``chi = sum_j chi_j lambda^(-j)``.  The recursion in the ray distance ``d`` reads

    chi_{j+1}(d) = chi_{j+1}(0) + (sigma i / 2p) int_0^d (D chi_j + 2 sum_l E_{j-l+1} chi_l) da

where ``D = |J|^(1/2) Laplacian |J|^(-1/2)`` restricted to s-independent functions.
Coefficients are kept in closed form as finite sums ``c w^n log(w)^k`` of an affine
variable ``w`` of ``d``: ``w = sin(alpha) - d`` on the circle (so ``w = -J``) and
``w = d`` for straight walls.
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .bundles import Bundle, BundleMap


class TransportError(Exception):
    pass


class UnsupportedBundleFamily(TransportError):
    pass


class ContourSignatureMismatch(TransportError):
    pass


# ------------------------------------------------------------------ phases


def caustic_continuation_factor(sigma: int) -> complex:
    """Factor picked up by the chi coefficients of signature ``sigma`` past a caustic.

    This is the quarter-turn ``exp(-i sigma pi/2)``; it is the value for which the
    circle's closed-chord condition reproduces the Bessel-zero spectrum.
    """
    _check_sigma(sigma)
    return -1j * sigma


def transition_eta(sigma: int, caustic_crossed: bool) -> complex:
    return caustic_continuation_factor(sigma) if caustic_crossed else 1.0 + 0j


def reflection_factor(bundle_map: BundleMap, lambda_p: float, sigma: int, s: float) -> complex:
    """-eta exp(sigma i k delta) |dh/ds|^(-1/2) for the ray leaving at ``s``."""
    eta = transition_eta(sigma, bundle_map.caustic_crossed)
    hp = abs(bundle_map.h_prime(s))
    return -eta * cmath.exp(1j * sigma * lambda_p * bundle_map.delta) / math.sqrt(hp)


def reflect_chi(chi_values, s_values, bundle_map: BundleMap, lambda_p: float, sigma: int):
    """Carry chi values from the end of the flight onto the target bundle at d = 0.

    Returns ``(target_s, values)`` with the arrival arc-lengths as the new s labels.
    """
    _check_sigma(sigma)
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    chi_values = np.broadcast_to(np.asarray(chi_values, dtype=complex), s_values.shape)
    out = np.empty(s_values.shape, dtype=complex)
    target = np.empty(s_values.shape)
    for k, s in enumerate(s_values):
        hit = bundle_map.hit(s)
        eta = transition_eta(sigma, bundle_map.caustic_crossed)
        hp = abs(bundle_map.h_prime(s, hit.chord))
        out[k] = -eta * cmath.exp(1j * sigma * lambda_p * bundle_map.delta) * chi_values[k] / math.sqrt(hp)
        target[k] = hit.arrival_s
    return target, out


def _check_sigma(sigma):
    if sigma not in (1, -1):
        raise ValueError("signature must be +1 or -1")


# ------------------------------------------------------------ closed forms


@dataclass(frozen=True)
class LogLaurent:
    """Finite sum of ``c * w**n * log(w)**k`` with integer n and k >= 0."""

    terms: tuple = ()

    @staticmethod
    def from_dict(d: dict) -> "LogLaurent":
        return LogLaurent(tuple(sorted((key, complex(c)) for key, c in d.items() if c != 0)))

    @staticmethod
    def constant(c) -> "LogLaurent":
        return LogLaurent.from_dict({(0, 0): c})

    @staticmethod
    def power(n: int, c=1.0) -> "LogLaurent":
        return LogLaurent.from_dict({(n, 0): c})

    def as_dict(self) -> dict:
        return dict(self.terms)

    def __add__(self, other: "LogLaurent") -> "LogLaurent":
        acc = defaultdict(complex, self.as_dict())
        for key, c in other.terms:
            acc[key] += c
        return LogLaurent.from_dict(acc)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c) -> "LogLaurent":
        return LogLaurent.from_dict({key: c * v for key, v in self.terms})

    def __mul__(self, other: "LogLaurent") -> "LogLaurent":
        acc = defaultdict(complex)
        for (n1, k1), c1 in self.terms:
            for (n2, k2), c2 in other.terms:
                acc[(n1 + n2, k1 + k2)] += c1 * c2
        return LogLaurent.from_dict(acc)

    def derivative(self) -> "LogLaurent":
        acc = defaultdict(complex)
        for (n, k), c in self.terms:
            if n:
                acc[(n - 1, k)] += n * c
            if k:
                acc[(n - 1, k - 1)] += k * c
        return LogLaurent.from_dict(acc)

    def antiderivative(self) -> "LogLaurent":
        acc = defaultdict(complex)
        for (n, k), c in self.terms:
            for key, v in _integrate_monomial(n, k).items():
                acc[key] += c * v
        return LogLaurent.from_dict(acc)

    @property
    def has_logs(self) -> bool:
        return any(k for (_, k), _ in self.terms)

    def evaluate(self, w, log_w=None):
        """Value at ``w``; ``log_w`` overrides the logarithm (branch choice)."""
        w = np.asarray(w, dtype=complex)
        if log_w is None and self.has_logs:
            log_w = np.log(w)
        total = np.zeros(w.shape, dtype=complex)
        for (n, k), c in self.terms:
            term = c * w**n
            if k:
                term = term * log_w**k
            total = total + term
        return total if total.ndim else complex(total)


def _integrate_monomial(n: int, k: int) -> dict:
    """Antiderivative of w^n log(w)^k as a coefficient dict."""
    if n == -1:
        return {(0, k + 1): 1.0 / (k + 1)}
    out = {(n + 1, k): 1.0 / (n + 1)}
    if k:
        for key, v in _integrate_monomial(n, k - 1).items():
            out[key] = out.get(key, 0.0) - k / (n + 1) * v
    return out


# ----------------------------------------------------------- operators


@dataclass(frozen=True)
class LaplacianForm:
    """Coefficients of the Laplacian in ray coordinates (d, s) as functions of d."""

    family: str
    alpha: float
    dd: Callable
    ss: Callable
    sd: Callable
    d: Callable
    s: Callable

    def apply(self, f: Callable, d: float, s: float, h: float = 1e-4) -> float:
        """Apply to a smooth function f(d, s) with central differences."""
        f0 = f(d, s)
        fdd = (f(d + h, s) - 2 * f0 + f(d - h, s)) / h**2
        fss = (f(d, s + h) - 2 * f0 + f(d, s - h)) / h**2
        fsd = (f(d + h, s + h) - f(d + h, s - h) - f(d - h, s + h) + f(d - h, s - h)) / (4 * h * h)
        fd = (f(d + h, s) - f(d - h, s)) / (2 * h)
        fs = (f(d, s + h) - f(d, s - h)) / (2 * h)
        return (
            self.dd(d) * fdd + self.ss(d) * fss + self.sd(d) * fsd + self.d(d) * fd + self.s(d) * fs
        )


def laplacian_ds(family: str, bundle: Bundle | float) -> LaplacianForm:
    """Laplacian in the (d, s) coordinates of a constant-incidence bundle.

    ``family`` is ``"circle"`` (unit circle) or ``"wall"`` (any straight side, which is
    the rectangle case).  Derived from the metric of the map
    ``(d, s) -> r0(s) + d (cos gamma, sin gamma)``.
    """
    alpha = bundle.alpha if isinstance(bundle, Bundle) else float(bundle)
    sa, ca = math.sin(alpha), math.cos(alpha)
    if family == "circle":
        return LaplacianForm(
            "circle",
            alpha,
            dd=lambda d: (d * d - 2 * d * sa + 1) / (sa - d) ** 2,
            ss=lambda d: 1 / (sa - d) ** 2,
            sd=lambda d: -2 * ca / (sa - d) ** 2,
            d=lambda d: ca * ca / (sa - d) ** 3 - 1 / (sa - d),
            s=lambda d: -ca / (sa - d) ** 3,
        )
    if family in ("wall", "rectangle", "segment"):
        inv = 1.0 / (sa * sa)
        return LaplacianForm(
            "wall",
            alpha,
            dd=lambda d: inv,
            ss=lambda d: inv,
            sd=lambda d: -2 * ca * inv,
            d=lambda d: 0.0,
            s=lambda d: 0.0,
        )
    raise UnsupportedBundleFamily(f"no Laplacian form for bundle family {family!r}")


@dataclass(frozen=True)
class ReducedOperator:
    """``D = a2 d^2/dd^2 + a1 d/dd + a0`` on s-independent functions, coefficients in w.

    ``w = w0 + dw_dd * d``.
    """

    family: str
    alpha: float
    a2: LogLaurent
    a1: LogLaurent
    a0: LogLaurent
    w0: float
    dw_dd: float

    def w_of(self, d):
        return self.w0 + self.dw_dd * np.asarray(d, dtype=complex)

    def apply(self, f: LogLaurent) -> LogLaurent:
        fw = f.derivative()
        fww = fw.derivative()
        return (
            self.a2 * fww.scale(self.dw_dd**2)
            + self.a1 * fw.scale(self.dw_dd)
            + self.a0 * f
        )

    def apply_to_one(self, d):
        return self.a0.evaluate(self.w_of(d))


def reduced_operator(alpha: float, family: str = "circle", negative_potential: bool = False) -> ReducedOperator:
    """Reduced operator for the circle (default) or a straight wall.

    The circle potential is ``(5/4) cos^2/J^4 + 1/(4 J^2)``.  ``negative_potential``
    switches the sign of the ``1/(4 J^2)`` term, which is kept only to report what that
    variant would predict.
    """
    sa, ca = math.sin(alpha), math.cos(alpha)
    if family == "circle":
        c2 = ca * ca
        a2 = LogLaurent.from_dict({(0, 0): 1.0, (-2, 0): c2})
        a1 = LogLaurent.from_dict({(-3, 0): 2 * c2})
        a0 = LogLaurent.from_dict({(-4, 0): 1.25 * c2, (-2, 0): -0.25 if negative_potential else 0.25})
        return ReducedOperator("circle", alpha, a2, a1, a0, w0=sa, dw_dd=-1.0)
    if family in ("wall", "rectangle", "segment"):
        return ReducedOperator(
            "wall", alpha, LogLaurent.constant(1.0 / (sa * sa)), LogLaurent(), LogLaurent(), w0=0.0, dw_dd=1.0
        )
    raise UnsupportedBundleFamily(f"no reduced operator for family {family!r}")


# ------------------------------------------------------------- series


@dataclass(frozen=True)
class EnergySeries:
    E0: float
    corrections: tuple = ()

    def assembled(self, lam: float) -> float:
        return self.E0 + sum(e * lam ** (-(k + 2)) for k, e in enumerate(self.corrections))

    @property
    def momentum(self) -> float:
        return math.sqrt(2.0 * self.E0)


def _log_branch(op: ReducedOperator, w, contour: str):
    """log(w) continued along d from 0, passing w = 0 above or below in the d-plane."""
    w = np.asarray(w, dtype=complex)
    above = contour == "above"
    # Im d > 0 maps to Im w with the sign of dw_dd
    side = (1.0 if above else -1.0) * math.copysign(1.0, op.dw_dd)
    principal = np.log(w)
    neg_real = (w.real < 0) & (w.imag == 0)
    return np.where(neg_real, np.log(np.abs(w)) + 1j * math.pi * side, principal)


def contour_for(sigma: int) -> str:
    return "above" if sigma == 1 else "below"


@dataclass(frozen=True)
class ChiSeries:
    """Closed-form chi coefficients of one bundle family."""

    operator: ReducedOperator
    sigma: int
    momentum: float
    energies: EnergySeries
    coefficients: tuple = field(default_factory=tuple)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def values_at(self, d, contour: str | None = None) -> list:
        contour = contour or contour_for(self.sigma)
        w = self.operator.w_of(d)
        logw = _log_branch(self.operator, w, contour) if any(c.has_logs for c in self.coefficients) else None
        return [c.evaluate(w, logw) for c in self.coefficients]

    def evaluate(self, d, lam: float, contour: str | None = None):
        vals = self.values_at(d, contour)
        return sum(v * lam ** (-j) for j, v in enumerate(vals))

    def conjugate(self) -> "ChiSeries":
        coeffs = tuple(LogLaurent.from_dict({k: np.conj(c) for k, c in co.terms}) for co in self.coefficients)
        return ChiSeries(self.operator, -self.sigma, self.momentum, self.energies, coeffs)


def _definite(op: ReducedOperator, f: LogLaurent, d_end, contour: str):
    """int_0^{d_end} f(w(a)) da along the contour's branch."""
    F = f.antiderivative()
    w_end = op.w_of(d_end)
    w0 = op.w_of(0.0)
    if not F.has_logs:
        return (F.evaluate(w_end) - F.evaluate(w0)) / op.dw_dd
    val_end = F.evaluate(w_end, _log_branch(op, w_end, contour))
    val_0 = F.evaluate(w0, _log_branch(op, w0, contour))
    return (val_end - val_0) / op.dw_dd


def _integral_as_function(op: ReducedOperator, f: LogLaurent, contour: str) -> LogLaurent:
    """G with G(w(d)) = int_0^d f da; the w-dependence of the log branch is in G."""
    F = f.antiderivative().scale(1.0 / op.dw_dd)
    w0 = op.w_of(0.0)
    const = F.evaluate(w0, _log_branch(op, w0, contour) if F.has_logs else None)
    return F - LogLaurent.constant(const)


def build_chi_series(
    op: ReducedOperator,
    sigma: int,
    momentum: float,
    order: int = 1,
    energies: Iterable[float] | None = None,
    chord: float | None = None,
    E0: float | None = None,
) -> ChiSeries:
    """Run the recursion from chi_0 = 1 up to ``order``.

    Either give the corrections ``energies`` (E_1, E_2, ...) or a ``chord`` length over
    which every chi_j must return to its d = 0 value; each E_j is then fixed by that
    closure.  Boundary values chi_j(0) are 0 for j >= 1.
    """
    _check_sigma(sigma)
    contour = contour_for(sigma)
    given = list(energies) if energies is not None else None
    if given is None and chord is None:
        raise ValueError("need either energy corrections or a closure chord")
    pref = sigma * 1j / (2.0 * momentum)
    chis = [LogLaurent.constant(1.0)]
    corrections: list[float] = []
    for j in range(order):
        # source_j = D chi_j + 2 sum_{l=1..j} E_{j-l+1} chi_l ; E_{j+1} multiplies chi_0 = 1
        source = op.apply(chis[j])
        for l in range(1, j + 1):
            source = source + chis[l].scale(2.0 * corrections[j - l])
        if given is not None:
            e_next = given[j] if j < len(given) else 0.0
        else:
            total = _definite(op, source, chord, contour)
            e_next = -total / (2.0 * chord)
            if abs(np.imag(e_next)) < 1e-14 * max(1.0, abs(e_next)):
                e_next = float(np.real(e_next))
        corrections.append(e_next)
        integrand = source + LogLaurent.constant(2.0 * e_next)
        chis.append(_integral_as_function(op, integrand, contour).scale(pref))
    e0 = 0.5 * momentum**2 if E0 is None else E0
    return ChiSeries(op, sigma, momentum, EnergySeries(e0, tuple(corrections)), tuple(chis))


def advance_chi(chi: ChiSeries, d, contour: str) -> list:
    """Values of every chi_j at distance ``d`` along the requested contour side."""
    if contour not in ("above", "below"):
        raise ValueError("contour must be 'above' or 'below'")
    if contour != contour_for(chi.sigma):
        raise ContourSignatureMismatch(
            f"signature {chi.sigma:+d} must pass the caustic {contour_for(chi.sigma)}, not {contour}"
        )
    return chi.values_at(d, contour)


def circle_chi_series(alpha: float, momentum: float, sigma: int = 1, order: int = 1,
                      negative_potential: bool = False) -> ChiSeries:
    """Chi stack of the circle bundle with energies fixed by closure over the chord."""
    op = reduced_operator(alpha, "circle", negative_potential)
    return build_chi_series(op, sigma, momentum, order, chord=2.0 * math.sin(alpha))


def circle_first_correction(alpha: float, negative_potential: bool = False) -> float:
    """E_1 of the circle bundle at incidence alpha, from the closed-chord condition."""
    return circle_chi_series(alpha, 1.0, 1, 1, negative_potential).energies.corrections[0]


def circle_first_correction_formula(alpha: float) -> float:
    """((5/3) cot^2 + 1) / (8 sin^2), the integrated form of the closure condition."""
    sa = math.sin(alpha)
    cot = math.cos(alpha) / sa
    return (5.0 / 3.0 * cot * cot + 1.0) / (8.0 * sa * sa)


def circle_first_correction_alternative(alpha: float) -> float:
    """(1/(8 sin)) ((5/6) cot^2 - 1), a competing closed form; it misses the contour quadrature and is only reported."""
    sa = math.sin(alpha)
    cot = math.cos(alpha) / sa
    return (5.0 / 6.0 * cot * cot - 1.0) / (8.0 * sa)


def wall_chi_series(alpha: float, momentum: float, sigma: int = 1, energies=(0.0,)) -> ChiSeries:
    op = reduced_operator(alpha, "wall")
    return build_chi_series(op, sigma, momentum, len(energies), energies=energies)


def semicircle_quadrature(f: Callable, center: float, radius: float, a: float, b: float,
                          contour: str = "above", nodes: int = 64, panels: int = 16) -> complex:
    """int_a^b f(x) dx with the point ``center`` bypassed on a half circle.

    Composite Gauss-Legendre; used to validate the closed-form antiderivatives.
    """
    xg, wg = np.polynomial.legendre.leggauss(nodes)

    def line(lo, hi):
        total = 0.0 + 0.0j
        edges = np.linspace(lo, hi, panels + 1)
        for p, q in zip(edges[:-1], edges[1:]):
            x = 0.5 * (q - p) * xg + 0.5 * (q + p)
            total += 0.5 * (q - p) * np.sum(wg * f(x.astype(complex)))
        return total

    sign = 1.0 if contour == "above" else -1.0
    total = line(a, center - radius) + line(center + radius, b)
    # half circle from angle pi to 0 (above) or -pi to 0 (below)
    edges = np.linspace(math.pi * sign, 0.0, panels + 1)
    for p, q in zip(edges[:-1], edges[1:]):
        phi = 0.5 * (q - p) * xg + 0.5 * (q + p)
        z = center + radius * np.exp(1j * phi)
        total += 0.5 * (q - p) * np.sum(wg * f(z) * 1j * radius * np.exp(1j * phi))
    return complex(total)
