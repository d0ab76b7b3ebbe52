"""Minimal deterministic SVG writer.

Numbers are emitted with fixed precision so identical inputs give identical
bytes on every platform.
"""

from xml.sax.saxutils import escape


def num(v):
    s = f"{float(v):.2f}"
    return "0.00" if s == "-0.00" else s


class Canvas:
    def __init__(self, width, height):
        self.width = width
        self.height = height
        self.items = []

    def rect(self, x, y, w, h, fill, stroke=None):
        extra = f' stroke="{stroke}" stroke-width="0.5"' if stroke else ""
        self.items.append(
            f'<rect x="{num(x)}" y="{num(y)}" width="{num(w)}" height="{num(h)}" fill="{fill}"{extra}/>'
        )

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0, dash=None, marker=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        if marker:
            extra += f' marker-end="url(#{marker})"'
        self.items.append(
            f'<line x1="{num(x1)}" y1="{num(y1)}" x2="{num(x2)}" y2="{num(y2)}" '
            f'stroke="{stroke}" stroke-width="{num(width)}"{extra}/>'
        )

    def circle(self, cx, cy, r, fill):
        self.items.append(f'<circle cx="{num(cx)}" cy="{num(cy)}" r="{num(r)}" fill="{fill}"/>')

    def polyline(self, points, stroke, width=1.5):
        pts = " ".join(f"{num(x)},{num(y)}" for x, y in points)
        self.items.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{num(width)}"/>'
        )

    def text(self, x, y, s, size=10, anchor="start", fill="#000000", rotate=None):
        extra = f' transform="rotate({num(rotate)} {num(x)} {num(y)})"' if rotate is not None else ""
        self.items.append(
            f'<text x="{num(x)}" y="{num(y)}" font-family="sans-serif" font-size="{num(size)}" '
            f'text-anchor="{anchor}" fill="{fill}"{extra}>{escape(str(s))}</text>'
        )

    def render(self, defs=""):
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{num(self.width)}" '
            f'height="{num(self.height)}" viewBox="0 0 {num(self.width)} {num(self.height)}">\n'
        )
        body = "\n".join(self.items)
        defs = f"<defs>{defs}</defs>\n" if defs else ""
        return head + defs + body + "\n</svg>\n"


ARROW_DEFS = (
    '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" '
    'markerHeight="6" orient="auto"><path d="M 0 0 L 10 5 L 0 10 z" fill="#B22222"/></marker>'
)
