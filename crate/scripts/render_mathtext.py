#!/usr/bin/env python3
"""Render a span with matplotlib mathtext; a stand-in for a TeX toolchain.

Usage: render_mathtext.py INPUT_TXT OUTPUT_PNG [MATH_FONT_SIZE]

Intended as a lomo LaTeX command template:

    LOMO_LATEX_CMD='python3 scripts/render_mathtext.py {input_txt} {output_png} {math_font_size}'
"""

import re
import sys

import matplotlib

matplotlib.use("Agg")
from matplotlib import mathtext  # noqa: E402
from matplotlib.font_manager import FontProperties  # noqa: E402

DISPLAY = re.compile(r"\$\$(.+?)\$\$|\\\[(.+?)\\\]|\\\((.+?)\\\)", re.S)


def normalize(span: str) -> str:
    """Rewrite every math delimiter to the single-dollar form mathtext parses."""
    return DISPLAY.sub(lambda m: "$" + next(g for g in m.groups() if g is not None) + "$", span)


def main(argv):
    if len(argv) < 3:
        print(__doc__, file=sys.stderr)
        return 2
    with open(argv[1], encoding="utf-8") as f:
        span = " ".join(f.read().split())
    size = float(argv[3]) if len(argv) > 3 else 26.0
    mathtext.math_to_image(normalize(span), argv[2], prop=FontProperties(size=size), dpi=72, format="png")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
