"""Build the skeleton of a rectangle level, follow one orbit, and check the closure.

Prints the bundles, the orbit's bounces until it closes, and the quantization residual
at the level and slightly off it.
"""

import argparse
import math

from skelquant import geometry, quantize
from skelquant.bundles import Bundle
from skelquant.skeleton import build_skeleton, last_quantization_residual, trace_orbit


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=2.0)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--detune", type=float, default=1e-3)
    args = ap.parse_args(argv)

    entry = next(e for e in quantize.rectangle_spectrum(args.a, args.b, 1.0, args.n, args.m)
                 if e.quantum_numbers == (args.n, args.m))
    curve = geometry.rectangle(args.a, args.b)
    sk = build_skeleton(curve, Bundle.whole_arc(curve, 0, entry.alpha)).require_closed()
    print(f"level (n={args.n}, m={args.m}): E = {entry.E:.12g}, alpha = {entry.alpha:.12g}")
    print(f"{len(sk)} bundles:")
    for i, b in enumerate(sk.bundles):
        print(f"  [{i}] arc {b.arc_index} s in ({b.start:.4f}, {b.end:.4f}) alpha = {b.alpha:.6f}")

    start = 0.3819660112501051 * args.a
    trace = trace_orbit(sk, 0, start, max_bounces=400)
    print(f"orbit from s = {start:.6f}: closed = {trace.closed} after {trace.bounce_count} bounces, "
          f"length {trace.total_length:.6f}")
    for h in trace.hits:
        print(f"  bundle {h.bundle} s = {h.s:.6f} D = {h.chord:.6f}")
    k = entry.wavenumber
    print(f"residual at the level: {abs(last_quantization_residual(trace, k)):.3e}")
    print(f"residual at k(1 + {args.detune:g}): {abs(last_quantization_residual(trace, k * (1 + args.detune))):.3e}")
    print(f"sum of phase constants / pi = {trace.delta_sum * k / math.pi:.9f}")


if __name__ == "__main__":
    main()
