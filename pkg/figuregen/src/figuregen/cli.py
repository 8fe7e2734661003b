"""figuregen command line: one figure per invocation.

    figuregen KIND --out fig.png [--diagnostics d.csv] [--envelope e.csv]
              [--markers m.csv] [--spectrum s.csv] [--fit-window a b]

Exit codes: 0 success, 1 figure error (missing column, empty series,
missing input), 2 usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .plots import FIGURE_KINDS, FigureError, FigureSpec, plot


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="figuregen",
                                 description="figures from pulse-cns CSV output")
    ap.add_argument("kind", choices=FIGURE_KINDS)
    ap.add_argument("--out", required=True, help="output image path (png/svg/pdf)")
    ap.add_argument("--diagnostics", default=None)
    ap.add_argument("--envelope", default=None)
    ap.add_argument("--markers", default=None)
    ap.add_argument("--spectrum", default=None)
    ap.add_argument("--fit-window", nargs=2, type=float, default=None,
                    metavar=("T0", "T1"))
    ap.add_argument("--title", default="")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        output=Path(args.out),
        diagnostics=Path(args.diagnostics) if args.diagnostics else None,
        envelope=Path(args.envelope) if args.envelope else None,
        markers=Path(args.markers) if args.markers else None,
        spectrum=Path(args.spectrum) if args.spectrum else None,
        fit_window=tuple(args.fit_window) if args.fit_window else None,
        title=args.title,
    )
    try:
        info = plot(spec)
    except (FigureError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for key, value in info.items():
        if isinstance(value, dict):
            for k2, v2 in value.items():
                print(f"{key}.{k2} = {v2:.6g}")
        else:
            print(f"{key} = {value}")
    print(f"wrote {spec.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
