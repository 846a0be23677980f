"""Tiny deterministic SVG writer (no plotting dependency).

Coordinates are emitted with 9 significant digits and the y-axis is flipped
so mathematical orientation matches the screen.  Output depends only on the
drawing calls, never on wall time.
"""

from __future__ import annotations

import math


def _f(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("refusing to emit non-finite coordinate")
    return f"{x:.9g}"


class SvgCanvas:
    """Fixed-viewport canvas mapping a world window onto a pixel box."""

    def __init__(self, x0: float, x1: float, y0: float, y1: float,
                 width: int = 640, margin: float = 16.0):
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        span_x = x1 - x0
        span_y = y1 - y0
        self.scale = (width - 2 * margin) / span_x
        self.width = width
        self.height = int(round(span_y * self.scale + 2 * margin))
        self.margin = margin
        self.elements: list[str] = []

    def _px(self, x: float, y: float) -> tuple[float, float]:
        return (self.margin + (x - self.x0) * self.scale,
                self.margin + (self.y1 - y) * self.scale)

    def comment(self, text: str):
        self.elements.append(f"<!-- {text} -->")

    def polyline(self, points, stroke: str = "black", width: float = 1.0, dash: str | None = None):
        coords = " ".join(f"{_f(px)},{_f(py)}" for px, py in (self._px(p.real, p.imag) for p in points))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.elements.append(
            f'<polyline fill="none" stroke="{stroke}" stroke-width="{_f(width)}"{dash_attr} points="{coords}"/>'
        )

    def circle(self, center: complex, radius: float, stroke: str = "black", width: float = 1.0):
        cx, cy = self._px(center.real, center.imag)
        self.elements.append(
            f'<circle fill="none" stroke="{stroke}" stroke-width="{_f(width)}" '
            f'cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(radius * self.scale)}"/>'
        )

    def rect(self, x0: float, x1: float, y0: float, y1: float, stroke: str = "black", width: float = 1.0):
        px, py = self._px(x0, y1)
        self.elements.append(
            f'<rect fill="none" stroke="{stroke}" stroke-width="{_f(width)}" '
            f'x="{_f(px)}" y="{_f(py)}" width="{_f((x1 - x0) * self.scale)}" height="{_f((y1 - y0) * self.scale)}"/>'
        )

    def text(self, pos: complex, content: str, size: int = 12):
        px, py = self._px(pos.real, pos.imag)
        self.elements.append(f'<text x="{_f(px)}" y="{_f(py)}" font-size="{size}">{content}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">')
        return "\n".join([head, *self.elements, "</svg>"]) + "\n"


def draw_domain(canvas: SvgCanvas, domain) -> None:
    if domain.kind == "disk":
        canvas.circle(0j, domain.radius, stroke="#333333")
    elif domain.kind == "annulus":
        canvas.circle(0j, domain.r_inner, stroke="#333333")
        canvas.circle(0j, domain.r_outer, stroke="#333333")
    else:
        canvas.rect(domain.x0, domain.x1, domain.y0, domain.y1, stroke="#333333")
