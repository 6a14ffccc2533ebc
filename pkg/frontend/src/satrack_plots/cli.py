"""satrack-plot <figure-kind> <trace.csv> -o <out.png>"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, TraceError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="satrack-plot", description=__doc__)
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("trace")
    parser.add_argument("-o", "--out", required=True)
    args = parser.parse_args(argv)
    try:
        out = render(FigureSpec(trace=args.trace, kind=args.kind, out=args.out))
    except TraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
