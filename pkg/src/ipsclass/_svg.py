"""Minimal deterministic SVG writer.

Numbers are formatted with a fixed precision so identical inputs give
identical bytes.
"""

import math
from xml.sax.saxutils import escape, quoteattr


def num(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


class Svg:
    def __init__(self, width: float, height: float, title: str = ""):
        self.width = width
        self.height = height
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{num(width)}" height="{num(height)}" viewBox="0 0 {num(width)} {num(height)}">',
        ]
        if title:
            self.parts.append(f"<title>{escape(title)}</title>")
        self.parts.append(f'<rect class="background" x="0" y="0" width="{num(width)}" height="{num(height)}" fill="#ffffff"/>')

    def rect(self, x, y, w, h, fill, cls=None, stroke=None):
        attrs = f'x="{num(x)}" y="{num(y)}" width="{num(w)}" height="{num(h)}" fill="{fill}"'
        if cls:
            attrs = f'class="{cls}" ' + attrs
        if stroke:
            attrs += f' stroke="{stroke}" stroke-width="0.5"'
        self.parts.append(f"<rect {attrs}/>")

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0, cls=None, dash=None):
        attrs = f'x1="{num(x1)}" y1="{num(y1)}" x2="{num(x2)}" y2="{num(y2)}" stroke="{stroke}" stroke-width="{num(width)}"'
        if cls:
            attrs = f'class="{cls}" ' + attrs
        if dash:
            attrs += f' stroke-dasharray="{dash}"'
        self.parts.append(f"<line {attrs}/>")

    def text(self, x, y, content, size=10, anchor="start", cls=None, rotate=None):
        attrs = f'x="{num(x)}" y="{num(y)}" font-family="sans-serif" font-size="{num(size)}" text-anchor="{anchor}"'
        if cls:
            attrs = f"class={quoteattr(cls)} " + attrs
        if rotate is not None:
            attrs += f' transform="rotate({num(rotate)} {num(x)} {num(y)})"'
        self.parts.append(f"<text {attrs}>{escape(str(content))}</text>")

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def nice_step(span: float, target: int = 8) -> float:
    """Round tick spacing (1, 2 or 5 times a power of ten) giving about ``target`` ticks."""
    if span <= 0:
        return 1.0
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag
