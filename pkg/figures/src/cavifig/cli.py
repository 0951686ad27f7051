"""Command line entry points, one per figure kind."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FigureSpec, render
from .tables import TableError

EXIT_OK = 0
EXIT_INPUT = 2


def _parser(kind: str, default_obs: str | None) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=f"Render a {kind} from a "
                                "simulator CSV table.")
    p.add_argument("--input", required=True, type=Path,
                   help="CSV table to read")
    p.add_argument("--output", required=True, type=Path,
                   help="image file to write (extension picks the format)")
    if default_obs is not None:
        p.add_argument("--observable", default=None,
                       help=f"column to plot (default: {default_obs})")
    p.add_argument("--clip", type=float, default=None,
                   help="saturate the color/energy scale at this value; "
                   "display only, data are not modified")
    p.add_argument("--xlabel", default=None)
    p.add_argument("--ylabel", default=None)
    return p


def _main(kind: str, default_obs: str | None, argv) -> int:
    args = _parser(kind, default_obs).parse_args(argv)
    try:
        spec = FigureSpec(kind=kind, input=args.input, output=args.output,
                          observable=getattr(args, "observable", None),
                          clip=args.clip, xlabel=args.xlabel,
                          ylabel=args.ylabel)
        out = render(spec)
    except (TableError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(out)
    return EXIT_OK


def heatmap_main(argv=None) -> int:
    return _main("heatmap", "e_kin", argv)


def timeseries_main(argv=None) -> int:
    return _main("timeseries", "e_kin", argv)


def hist_main(argv=None) -> int:
    return _main("histogram", None, argv)


if __name__ == "__main__":
    sys.exit(heatmap_main())
