"""``vkplot`` command line: render one figure from snapshot directories.

Exit codes: 0 success, 1 unreadable or inconsistent snapshot data,
2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .render import RENDERERS
from .snapshots import SnapshotError

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vkplot",
        description="Render figures from simulation snapshot directories.")
    parser.add_argument("kind", choices=sorted(RENDERERS),
                        help="figure type to render")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="DIR", help="snapshot director(ies)")
    parser.add_argument("--out", required=True, metavar="FILE",
                        help="output image path")
    parser.add_argument("--labels", nargs="+", default=None,
                        help="per-panel labels (mosaic / order_timeseries)")
    parser.add_argument("--frames", type=int, default=5,
                        help="maximum panels for 'sequence' (default 5)")
    parser.add_argument("--fps", type=int, default=5,
                        help="frame rate for 'animation' (default 5)")
    parser.add_argument("--dpi", type=int, default=120,
                        help="output resolution (default 120)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kwargs = {"dpi": args.dpi}
    if args.kind in ("mosaic", "order_timeseries"):
        kwargs["labels"] = args.labels
    elif args.kind == "sequence":
        kwargs["max_frames"] = args.frames
    elif args.kind == "animation":
        kwargs = {"fps": args.fps, "dpi": args.dpi}
    try:
        out = RENDERERS[args.kind](args.inputs, args.out, **kwargs)
    except SnapshotError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
