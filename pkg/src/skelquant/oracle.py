"""Independent reference computations.

Nothing here touches the quantization or transport code: Bessel functions come from
their series and Hankel asymptotics, the contour integrand is rebuilt from the metric of
the ray coordinates with sympy, and rays are bounced with plain vector reflection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate


class OracleError(Exception):
    pass


class ScanExhausted(OracleError):
    pass


class QuadratureNotConverged(OracleError):
    pass


class SeamMismatch(OracleError):
    pass


# ------------------------------------------------------------------ Bessel


def _series_j(m: int, x: float) -> float:
    half = 0.5 * x
    term = half**m / math.factorial(m)
    total = term
    k = 0
    q = -half * half
    while True:
        k += 1
        term *= q / (k * (k + m))
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300) or k > 500:
            break
    return total


def _hankel_j(m: int, x: float, min_terms: int = 4) -> float:
    mu = 4.0 * m * m
    p_sum, q_sum = 0.0, 0.0
    coef = 1.0
    prev = math.inf
    k = 0
    while True:
        if k > 0:
            coef *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        size = abs(coef)
        if k >= min_terms and (size < 1e-17 or size > prev):
            break
        if k % 2 == 0:
            p_sum += (-1) ** (k // 2) * coef
        else:
            q_sum += (-1) ** (k // 2) * coef
        prev = size if k > 0 else math.inf
        k += 1
        if k > 200:
            break
    chi = x - (0.5 * m + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * math.cos(chi) - q_sum * math.sin(chi))


def series_switch_point(m: int) -> float:
    return max(12.0, 2.0 * m)


_seam_checked: dict = {}


def seam_error(m: int) -> float:
    x = series_switch_point(m)
    return abs(_series_j(m, x) - _hankel_j(m, x))


def _ensure_seam(m: int) -> None:
    if m not in _seam_checked:
        err = seam_error(m)
        _seam_checked[m] = err
        if err > 1e-10:
            raise SeamMismatch(f"series and asymptotic J_{m} differ by {err:.2e} at the switch point")


def bessel_j(m: int, x: float) -> float:
    """J_m(x) for integer m >= 0 and x >= 0."""
    if m < 0 or x < 0:
        raise ValueError("need m >= 0 and x >= 0")
    _ensure_seam(m)
    if x > series_switch_point(m):
        return _hankel_j(m, x)
    return _series_j(m, x)


for _m in range(4):
    _ensure_seam(_m)


@dataclass(frozen=True)
class BesselZeroTable:
    m: int
    zeros: tuple

    def __getitem__(self, r: int) -> float:
        """r-th positive zero, counting from 1."""
        return self.zeros[r - 1]


def bessel_zeros(m: int, r_max: int, tol: float = 1e-12) -> BesselZeroTable:
    """First ``r_max`` positive zeros of J_m by a pi/4 sign-change scan and bisection."""
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    step = 0.25 * math.pi
    window = (r_max + 0.5 * m + 1.0) * math.pi
    for attempt in range(2):
        zeros = []
        x = max(float(m), 0.5) if m else 0.5
        fx = bessel_j(m, x)
        while x < window and len(zeros) < r_max:
            y = x + step
            fy = bessel_j(m, y)
            if fx == 0.0:
                zeros.append(x)
            elif fx * fy < 0.0:
                lo, hi, flo = x, y, fx
                while hi - lo > tol:
                    mid = 0.5 * (lo + hi)
                    fm = bessel_j(m, mid)
                    if fm * flo > 0.0:
                        lo, flo = mid, fm
                    else:
                        hi = mid
                zeros.append(0.5 * (lo + hi))
            x, fx = y, fy
        if len(zeros) >= r_max:
            break
        window *= 2.0
    else:
        raise ScanExhausted(f"found only {len(zeros)} zeros of J_{m} below {window}")
    for j in zeros[:r_max]:
        if bessel_j(m, j - 1e-9) * bessel_j(m, j + 1e-9) >= 0.0:
            raise OracleError(f"no sign change of J_{m} around {j}")
    return BesselZeroTable(m, tuple(zeros[:r_max]))


def check_interlacing(tables: list[BesselZeroTable]) -> bool:
    """j_{m,r} < j_{m+1,r} < j_{m,r+1} for consecutive orders."""
    by_m = {t.m: t.zeros for t in tables}
    for m in sorted(by_m):
        z = by_m[m]
        if any(b <= a for a, b in zip(z, z[1:])):
            return False
        if m + 1 in by_m:
            z1 = by_m[m + 1]
            for r in range(min(len(z), len(z1)) - 1):
                if not (z[r] < z1[r] < z[r + 1]):
                    return False
    return True


def mcmahon_envelope(m: int, j: float, factor: float = 1.5) -> float:
    """factor * |4 m^2 - 1| / (8 j), the size of the first asymptotic zero correction."""
    return factor * abs(4 * m * m - 1) / (8.0 * j)


# ------------------------------------------------------ contour integrand


@lru_cache(maxsize=1)
def _reduced_potential_symbolic():
    """|J|^(1/2) Laplacian |J|^(-1/2) applied to 1, from the metric of the ray map."""
    import sympy as sp

    d, s, a = sp.symbols("d s alpha", real=True)
    x = sp.cos(s) - d * sp.sin(s + a)
    y = sp.sin(s) + d * sp.cos(s + a)
    jac = sp.Matrix([[sp.diff(x, d), sp.diff(x, s)], [sp.diff(y, d), sp.diff(y, s)]])
    g = sp.simplify(jac.T * jac)
    ginv = sp.simplify(g.inv())
    root_det = sp.sin(a) - d
    f = root_det ** sp.Rational(-1, 2)
    coords = (d, s)
    lap = sum(
        sp.diff(root_det * ginv[i, j] * sp.diff(f, coords[j]), coords[i]) for i in range(2) for j in range(2)
    ) / root_det
    expr = sp.simplify(sp.expand(lap * root_det ** sp.Rational(1, 2)))
    return sp.lambdify((d, a), expr, "numpy"), expr


def reduced_potential(d, alpha):
    fn, _ = _reduced_potential_symbolic()
    return fn(np.asarray(d, dtype=complex), alpha)


def contour_integral_e1(alpha: float, radius_factor: float = 0.1, tol: float = 1e-13) -> complex:
    """int_0^{2 sin a} (D 1) dx with the caustic x = sin a bypassed on the upper half circle."""
    if not 0.0 < alpha <= 0.5 * math.pi:
        raise ValueError("need 0 < alpha <= pi/2")
    sa = math.sin(alpha)
    rho = radius_factor * sa
    errs = []

    def real_piece(lo, hi):
        val, err = integrate.quad(lambda t: reduced_potential(t, alpha).real, lo, hi,
                                  epsabs=tol, epsrel=tol, limit=400)
        errs.append(err)
        return val

    def arc(part):
        def g(phi):
            z = sa + rho * np.exp(1j * phi)
            return complex(reduced_potential(z, alpha) * 1j * rho * np.exp(1j * phi))

        val, err = integrate.quad(lambda p: getattr(g(p), part), math.pi, 0.0, epsabs=tol, epsrel=tol, limit=400)
        errs.append(err)
        return val

    with warnings.catch_warnings():
        # roundoff warnings near the requested tolerance; the error estimate is checked below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        pieces = [real_piece(0.0, sa - rho), real_piece(sa + rho, 2 * sa), arc("real"), 1j * arc("imag")]
    total = sum(pieces)
    # the pieces grow like rho^-3 and cancel, so the error gate scales with them
    scale = max(1.0, max(abs(p) for p in pieces))
    if max(errs) > 1e-10 * scale:
        raise QuadratureNotConverged(f"quadrature error estimate {max(errs):.2e}")
    return complex(total)


def e1_from_contour(alpha: float, radius_factor: float = 0.1) -> float:
    """E1 = -(contour integral) / (4 sin a)."""
    val = contour_integral_e1(alpha, radius_factor)
    return -val.real / (4.0 * math.sin(alpha))


# ------------------------------------------------------- rectangle ground truth


def exact_rectangle_spectrum(a: float, b: float, lam: float = 1.0, n_max: int = 10, m_max: int = 10) -> list:
    """(n, m, E) of the Dirichlet rectangle from separation of variables."""
    return [
        (n, m, math.pi**2 / (2.0 * lam * lam) * ((n / a) ** 2 + (m / b) ** 2))
        for n in range(1, n_max + 1)
        for m in range(1, m_max + 1)
    ]


def rectangle_level_count(a: float, b: float, energy: float, lam: float = 1.0) -> int:
    count = 0
    n = 1
    while math.pi**2 / (2 * lam * lam) * (n / a) ** 2 < energy:
        m = 1
        while True:
            e = math.pi**2 / (2 * lam * lam) * ((n / a) ** 2 + (m / b) ** 2)
            if e >= energy:
                break
            count += 1
            m += 1
        n += 1
    return count


def weyl_slope_check(a: float = math.pi, b: float = math.pi, e_max: float = 200.0, samples: int = 200):
    """Fit N(E) = c1 E + c2 sqrt(E); return (c1, area / (2 pi))."""
    es = np.linspace(e_max / samples, e_max, samples)
    counts = np.array([rectangle_level_count(a, b, e) for e in es], dtype=float)
    design = np.column_stack([es, np.sqrt(es)])
    (c1, _), *_ = np.linalg.lstsq(design, counts, rcond=None)
    return float(c1), a * b / (2.0 * math.pi)


# ------------------------------------------------------- direct simulation


def simulate_rectangle(a: float, b: float, x0: float, angle: float, bounces: int) -> list:
    """Wall hits of a ray from (x0, 0) with direction angle ``angle`` in the a x b box."""
    p = np.array([x0, 0.0])
    v = np.array([math.cos(angle), math.sin(angle)])
    hits = []
    for _ in range(bounces):
        ts = []
        if v[0] > 0:
            ts.append(((a - p[0]) / v[0], 0))
        elif v[0] < 0:
            ts.append((-p[0] / v[0], 0))
        if v[1] > 0:
            ts.append(((b - p[1]) / v[1], 1))
        elif v[1] < 0:
            ts.append((-p[1] / v[1], 1))
        t, axis = min(ts)
        p = p + t * v
        hits.append((float(p[0]), float(p[1]), float(t)))
        v[axis] = -v[axis]
    return hits


def simulate_circle(angle0: float, alpha: float, bounces: int) -> list:
    """Hits on the unit circle of a ray leaving polar angle ``angle0`` at incidence alpha."""
    p = np.array([math.cos(angle0), math.sin(angle0)])
    tangent = angle0 + 0.5 * math.pi
    v = np.array([math.cos(tangent + alpha), math.sin(tangent + alpha)])
    hits = []
    for _ in range(bounces):
        t = -2.0 * float(p @ v)
        p = p + t * v
        normal = p / np.linalg.norm(p)
        v = v - 2.0 * float(v @ normal) * normal
        hits.append((float(p[0]), float(p[1]), t))
    return hits
