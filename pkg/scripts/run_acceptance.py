"""Run the acceptance criteria and write a JSON report next to the PASS/FAIL lines."""

import argparse
import json
import sys

from skelquant import validation


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--suite", choices=validation.SUITES, default="all")
    ap.add_argument("--json", help="write the measured values here")
    args = ap.parse_args(argv)

    results = validation.run_suite(args.suite)
    for r in results:
        print(r.line())
    if args.json:
        report = [{"number": r.number, "name": r.name, "passed": r.passed, "seconds": r.seconds,
                   "details": {k: (v if isinstance(v, (int, float, str, bool)) else str(v))
                               for k, v in r.details.items()}}
                  for r in results]
        with open(args.json, "w") as fh:
            json.dump(report, fh, indent=1)
    return 0 if all(r.passed for r in results) else 2


if __name__ == "__main__":
    sys.exit(main())
