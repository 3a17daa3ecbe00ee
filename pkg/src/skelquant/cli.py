"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import geometry, oracle, quantize, validation, wavefield
from .bundles import Bundle
from .skeleton import build_skeleton, trace_orbit
from .transport import circle_chi_series

DEFAULTS = {
    "lambda": 1.0,
    "m_max": 3,
    "r_max": 10,
    "n_max": 8,
    "order": 1,
    "grid": 101,
    "axis": "vertical",
    "b": 1,
    "sign": 1,
    "samples": 50,
    "chi0": 1.0,
    "max_bounces": 100,
    "arc": 0,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Flag values layered over an optional billiard JSON file."""

    command: str
    target: str | None
    values: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str | None = None

    def get(self, key, required: bool = True):
        if key in self.values and self.values[key] is not None:
            return self.values[key]
        if key in DEFAULTS:
            return DEFAULTS[key]
        if required:
            raise UsageError(f"missing --{key.replace('_', '-')}")
        return None


def _read_billiard(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read billiard file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("billiard file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _config(args, target=None) -> RunConfig:
    values = _read_billiard(getattr(args, "billiard", None))
    for key, val in vars(args).items():
        if key in ("command", "target", "billiard", "out", "format", "func") or val is None:
            continue
        values[key] = val
    return RunConfig(args.command, target, values, getattr(args, "out", None), getattr(args, "format", None))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fraction(text) -> Fraction:
    try:
        if isinstance(text, dict):
            return Fraction(int(text["num"]), int(text["den"]))
        if isinstance(text, float):
            raise ValueError("floats are not exact; write the value as p/q")
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError, KeyError) as exc:
        raise UsageError(f"not an exact rational: {text!r}") from exc


def _curve(cfg: RunConfig):
    kind = cfg.values.get("kind")
    if kind is None:
        return None
    spec = {k: v for k, v in cfg.values.items() if k in ("kind", "a", "b", "radius", "vertices", "a_prime", "b_prime")}
    return geometry.curve_from_spec(spec)


# -------------------------------------------------------------- spectrum


def _spectrum_entries(cfg: RunConfig):
    lam = float(cfg.get("lambda"))
    family = cfg.target
    if family == "circle":
        return quantize.circle_spectrum(lam, int(cfg.get("m_max")), int(cfg.get("r_max")), int(cfg.get("order")))
    if family == "rectangle":
        return quantize.rectangle_spectrum(float(cfg.get("a")), float(cfg.get("b")), lam,
                                           int(cfg.get("n_max")), int(cfg.get("m_max")))
    if family == "bouncing":
        a, b = _bouncing_sides(cfg)
        return quantize.bouncing_mode_spectrum(a, b, lam, int(cfg.get("n_max")), int(cfg.get("m_max")),
                                               cfg.get("axis"))
    if family == "broken":
        spec = _broken_spec(cfg)
        return quantize.broken_rectangle_spectrum(spec, lam, int(cfg.get("n_max")), int(cfg.get("m_max")))
    raise UsageError(f"unknown spectrum family {family!r}")


def _bouncing_sides(cfg: RunConfig):
    if cfg.values.get("kind") in ("stadium", "anti_stadium"):
        return float(cfg.get("a")), 2.0
    return float(cfg.get("a")), float(cfg.get("b"))


def _broken_spec(cfg: RunConfig):
    return quantize.CommensurateSpec(_fraction(cfg.get("b")), _fraction(cfg.get("a_prime")),
                                     _fraction(cfg.get("b_prime")))


def cmd_spectrum(args) -> int:
    cfg = _config(args, args.target)
    entries = _spectrum_entries(cfg)
    fmt = cfg.fmt or "csv"
    if fmt == "csv":
        _emit(quantize.spectrum_to_csv(entries), cfg.out)
    elif fmt == "json":
        _emit(quantize.spectrum_to_json(entries) + "\n", cfg.out)
    else:
        raise UsageError("spectra are written as csv or json")
    return 0


# ----------------------------------------------------------------- field


def _pick(entries, qn):
    for e in entries:
        if e.quantum_numbers == qn:
            return e
    raise UsageError(f"no level with quantum numbers {qn}")


def _field(cfg: RunConfig):
    lam = float(cfg.get("lambda"))
    n_grid = int(cfg.get("grid"))
    family = cfg.target
    if family == "circle":
        m, r = int(cfg.get("m")), int(cfg.get("r"))
        entry = _pick(quantize.circle_spectrum(lam, m, r, int(cfg.get("order"))), (m, r))
        chi = None
        if int(cfg.get("order")) == 1 and m > 0:
            chi = circle_chi_series(entry.alpha, entry.momentum, int(cfg.get("sign")), 1)
        spec = wavefield.GridSpec.square(n_grid, (-1.0, 1.0, -1.0, 1.0))
        return wavefield.circle_field(entry, spec, chi, int(cfg.get("sign")))
    if family == "rectangle":
        a, b = float(cfg.get("a")), float(cfg.get("b"))
        n, m = int(cfg.get("n")), int(cfg.get("m"))
        entry = _pick(quantize.rectangle_spectrum(a, b, lam, n, m), (n, m))
        return wavefield.rectangle_field(entry, wavefield.GridSpec.square(n_grid, (0.0, a, 0.0, b)))
    if family == "bouncing":
        a, b = _bouncing_sides(cfg)
        n, m = int(cfg.get("n")), int(cfg.get("m"))
        entry = _pick(quantize.bouncing_mode_spectrum(a, b, lam, n, m, cfg.get("axis")), (n, m))
        curve = _curve(cfg) or geometry.rectangle(a, b)
        box = curve.bounding_box()
        return wavefield.bouncing_field(entry, curve, wavefield.GridSpec.square(n_grid, box))
    if family == "broken":
        spec = _broken_spec(cfg)
        n, m = int(cfg.get("n")), int(cfg.get("m"))
        entry = _pick(quantize.broken_rectangle_spectrum(spec, lam, n, m), (n, m))
        curve = spec.curve()
        return wavefield.bouncing_field(entry, curve, wavefield.GridSpec.square(n_grid, curve.bounding_box()))
    raise UsageError(f"unknown field family {family!r}")


def cmd_field(args) -> int:
    cfg = _config(args, args.target)
    grid = _field(cfg)
    stem = cfg.out or f"field_{cfg.target}"
    stem = stem[:-4] if stem.endswith((".bin", ".csv")) else stem
    fmt = cfg.fmt or "bin"
    if fmt == "bin":
        Path(stem + ".bin").write_bytes(grid.to_binary())
        Path(stem + ".csv").write_text(grid.to_csv())
    elif fmt == "csv":
        Path(stem + ".csv").write_text(grid.to_csv())
    else:
        raise UsageError("fields are written as bin (with a csv sidecar) or csv")
    for key, val in sorted(grid.diagnostics.items()):
        print(f"{key}: {quantize.fmt(val) if isinstance(val, float) else val}", file=sys.stderr)
    return 0


# ------------------------------------------------------------------ scar


def cmd_scar(args) -> int:
    cfg = _config(args)
    a = float(cfg.get("a"))
    lam_p = float(cfg.get("lambda_p"))
    chi0 = complex(cfg.get("chi0"))
    q = cfg.get("q", required=False)
    try:
        profile = wavefield.scar_profile(a, lam_p, chi0, q=None if q is None else float(q),
                                         samples=int(cfg.get("samples")))
    except wavefield.SampleAtFocalPoint as exc:
        raise UsageError(str(exc)) from exc
    _emit(profile.to_csv(), cfg.out)
    f = quantize.fmt
    print(f"q: {f(profile.q)}", file=sys.stderr)
    print(f"resonance_factor: {f(profile.resonance_factor)}", file=sys.stderr)
    for label, v in zip(("x=-1", "x=a+1"), profile.endpoint_values):
        print(f"endpoint {label}: {f(abs(v))} (nonzero, reported)", file=sys.stderr)
    return 0


# -------------------------------------------------------------- skeleton


def _skeleton(cfg: RunConfig):
    curve = _curve(cfg)
    if curve is None:
        raise UsageError("skeleton needs a billiard (--billiard FILE or --kind ...)")
    alpha = float(cfg.get("alpha"))
    arc = int(cfg.get("arc"))
    if not 0 <= arc < len(curve.arcs):
        raise UsageError(f"arc index {arc} out of range")
    return curve, build_skeleton(curve, Bundle.whole_arc(curve, arc, alpha))


def cmd_skeleton(args) -> int:
    cfg = _config(args, args.target)
    curve, sk = _skeleton(cfg)
    if cfg.target == "build":
        doc = {
            "billiard": geometry.curve_to_spec(curve),
            "closed": sk.closed,
            "reason": sk.reason,
            "bundles": [
                {"arc": b.arc_index, "start": b.start, "length": b.length, "alpha": b.alpha, "curvature": b.curvature}
                for b in sk.bundles
            ],
            "transitions": [
                {"source": t.source, "target": t.target, **t.map.to_json()}
                for rows in sk.transitions for t in rows
            ],
        }
        _emit(json.dumps(doc, indent=1, sort_keys=True, default=_json_default) + "\n", cfg.out)
        return 0
    sk.require_closed()
    start = cfg.get("start_s", required=False)
    if start is None:
        b0 = sk.bundles[0]
        start = b0.start + validation.GOLDEN_START * b0.length
    trace = trace_orbit(sk, 0, float(start), int(cfg.get("max_bounces")))
    lines = [json.dumps(h.to_json(), sort_keys=True) for h in trace.hits]
    _emit("\n".join(lines) + "\n", cfg.out)
    print(f"closed: {trace.closed}", file=sys.stderr)
    return 0


def _json_default(obj):
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj).__name__)


# ---------------------------------------------------------------- oracle


def cmd_oracle(args) -> int:
    cfg = _config(args, args.target)
    f = quantize.fmt
    if cfg.target == "bessel":
        rows = ["m,r,zero"]
        for m in range(int(cfg.get("m_max")) + 1):
            for r, z in enumerate(oracle.bessel_zeros(m, int(cfg.get("r_max"))).zeros, start=1):
                rows.append(f"{m},{r},{f(z)}")
        _emit("\n".join(rows) + "\n", cfg.out)
    elif cfg.target == "circle":
        rows = ["m,r,alpha,wavenumber,bessel_zero,error,envelope,E1,E1_alternative,bessel_shift"]
        for row, e in zip(validation.circle_first_order_report(int(cfg.get("m_max")), int(cfg.get("r_max"))),
                          quantize.circle_spectrum(1.0, int(cfg.get("m_max")), int(cfg.get("r_max")))):
            j = oracle.bessel_zeros(row["m"], row["r"])[row["r"]]
            rows.append(",".join([
                str(row["m"]), str(row["r"]), f(row["alpha"]), f(e.wavenumber), f(j), f(e.wavenumber - j),
                f(oracle.mcmahon_envelope(row["m"], j)), f(row["E1"]), f(row["E1_alternative"]), f(row["bessel_shift"]),
            ]))
        _emit("\n".join(rows) + "\n", cfg.out)
    elif cfg.target == "e1":
        rows = ["alpha,E1_quadrature"]
        for alpha in cfg.get("alpha"):
            rows.append(f"{f(alpha)},{f(oracle.e1_from_contour(alpha))}")
        _emit("\n".join(rows) + "\n", cfg.out)
    else:
        raise UsageError(f"unknown oracle report {cfg.target!r}")
    return 0


# -------------------------------------------------------------- validate


def cmd_validate(args) -> int:
    results = validation.run_suite(args.suite)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 2 if failed else 0


# ---------------------------------------------------------------- parser


def _add_common(p, *, billiard=True, lam=True):
    if billiard:
        p.add_argument("--billiard", help="JSON file with billiard parameters; flags override it")
    if lam:
        p.add_argument("--lambda", dest="lambda", type=float, help="semiclassical parameter (default 1)")
    p.add_argument("--out", help="output path (default: stdout, or field_<family> for fields)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skelquant", description="Skeleton quantization of billiards.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="quantized levels of a billiard family")
    sp.add_argument("target", choices=["circle", "rectangle", "bouncing", "broken"])
    _add_common(sp)
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--m-max", type=int)
    sp.add_argument("--r-max", type=int)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--order", type=int, choices=[0, 1])
    sp.add_argument("--a", type=float)
    sp.add_argument("--b")
    sp.add_argument("--a-prime")
    sp.add_argument("--b-prime")
    sp.add_argument("--axis", choices=["vertical", "horizontal"])
    sp.set_defaults(func=cmd_spectrum)

    fp = sub.add_parser("field", help="wave function of one level on a grid")
    fp.add_argument("target", choices=["circle", "rectangle", "bouncing", "broken"])
    _add_common(fp)
    fp.add_argument("--format", choices=["bin", "csv"])
    fp.add_argument("--grid", type=int, help="nodes per axis")
    fp.add_argument("--n", type=int)
    fp.add_argument("--m", type=int)
    fp.add_argument("--r", type=int)
    fp.add_argument("--sign", type=int, choices=[1, -1])
    fp.add_argument("--order", type=int, choices=[0, 1])
    fp.add_argument("--a", type=float)
    fp.add_argument("--b")
    fp.add_argument("--a-prime")
    fp.add_argument("--b-prime")
    fp.add_argument("--axis", choices=["vertical", "horizontal"])
    fp.set_defaults(func=cmd_field)

    cp = sub.add_parser("scar", help="resummed scar profile on the stadium's horizontal orbit")
    _add_common(cp, lam=False)
    cp.add_argument("--a", type=float)
    cp.add_argument("--lambda-p", type=float, help="wavenumber lambda * p")
    cp.add_argument("--chi0", type=complex)
    cp.add_argument("--q", type=float, help="override the reflection weight")
    cp.add_argument("--samples", type=int)
    cp.set_defaults(func=cmd_scar)

    kp = sub.add_parser("skeleton", help="build a skeleton or trace an orbit through it")
    kp.add_argument("target", choices=["build", "trace"])
    _add_common(kp, lam=False)
    kp.add_argument("--kind", choices=["circle", "rectangle", "stadium", "anti_stadium", "broken_rectangle"])
    kp.add_argument("--a", type=float)
    kp.add_argument("--b", type=float)
    kp.add_argument("--a-prime")
    kp.add_argument("--b-prime")
    kp.add_argument("--alpha", type=float, help="incidence of the seed bundle")
    kp.add_argument("--arc", type=int, help="arc carrying the seed bundle")
    kp.add_argument("--start-s", type=float)
    kp.add_argument("--max-bounces", type=int)
    kp.set_defaults(func=cmd_skeleton)

    op = sub.add_parser("oracle", help="reference tables")
    op.add_argument("target", choices=["bessel", "circle", "e1"])
    _add_common(op, billiard=False, lam=False)
    op.add_argument("--m-max", type=int)
    op.add_argument("--r-max", type=int)
    op.add_argument("--alpha", type=float, nargs="+", default=None)
    op.set_defaults(func=cmd_oracle)

    vp = sub.add_parser("validate", help="run acceptance checks")
    vp.add_argument("--suite", choices=list(validation.SUITES), default="all")
    vp.set_defaults(func=cmd_validate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (UsageError, geometry.GeometryError, quantize.QuantizeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except Exception as exc:
        if type(exc).__module__.startswith("skelquant"):
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
        raise


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
