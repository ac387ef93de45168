"""SVG panels of compositions by covariate level.

Two styles. ``data`` shows each observation as grey points joined by a line
across components plus the black sample-mean profile. ``fit`` adds the
estimated expected values and dashed point-wise interval bounds. Output is
plain SVG 1.1 text with fixed number formatting, so identical input gives
identical bytes.
"""
import math
import re
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 520, 380
LEFT, RIGHT, TOP, BOTTOM = 60, 20, 40, 70
OBS_COLOR = "#a0a0a0"
MEAN_COLOR = "#000000"
FIT_COLOR = "#c0392b"
# exact plotted numbers ride along in attributes of this namespace
VALUES_NS = "urn:dirreg:values"


@dataclass
class Panel:
    title: str
    component_names: list
    observations: np.ndarray
    expected: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None
    level: float = None

    @property
    def sample_mean(self):
        return self.observations.mean(axis=0)


def _fmt(v):
    return f"{v:.2f}"


def _y_max(panel):
    vals = [panel.observations.max()]
    for arr in (panel.expected, panel.upper):
        if arr is not None:
            vals.append(np.nanmax(arr))
    return min(1.0, math.ceil(max(vals) * 10.0 - 1e-9) / 10.0) or 0.1


def _polyline(xs, ys, color, width, cls, dash=None, values=None):
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    if values is not None:
        extra += ' dr:values="' + " ".join(repr(float(v)) for v in values) + '"'
    return (f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{extra}/>')


def _points(xs, ys, color, r, cls):
    return [f'<circle class="{cls}" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r}" fill="{color}"/>'
            for x, y in zip(xs, ys)]


def render_panel(panel):
    """SVG document text for one panel."""
    C = len(panel.component_names)
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    ymax = _y_max(panel)
    xs = [LEFT + plot_w * (c + 0.5) / C for c in range(C)]

    def ypix(v):
        return TOP + plot_h * (1.0 - np.asarray(v, dtype=float) / ymax)

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" xmlns:dr="{VALUES_NS}" version="1.1" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f"<title>{escape(panel.title)}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="13">{escape(panel.title)}</text>',
    ]
    n_ticks = int(round(ymax * 10))
    for k in range(n_ticks + 1):
        v = k / 10.0
        y = float(ypix(v))
        out.append(f'<line class="grid" x1="{LEFT}" y1="{_fmt(y)}" x2="{WIDTH - RIGHT}" '
                   f'y2="{_fmt(y)}" stroke="#e0e0e0" stroke-width="1"/>')
        out.append(f'<text class="ytick" x="{LEFT - 6}" y="{_fmt(y + 4)}" '
                   f'text-anchor="end">{v:.1f}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" '
               f'stroke="#000000" stroke-width="1"/>')
    for x, name in zip(xs, panel.component_names):
        y = HEIGHT - BOTTOM + 16
        out.append(f'<text class="xtick" x="{_fmt(x)}" y="{y}" text-anchor="middle">'
                   f"{escape(str(name))}</text>")
    out.append(f'<text x="18" y="{TOP + plot_h / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + plot_h / 2:.2f})">proportion</text>')

    out.append('<g class="observations">')
    for row in panel.observations:
        ys = ypix(row)
        out.append(_polyline(xs, ys, OBS_COLOR, 0.8, "obs"))
        out.extend(_points(xs, ys, OBS_COLOR, 2, "obs-point"))
    out.append("</g>")

    m = panel.sample_mean
    out.append(_polyline(xs, ypix(m), MEAN_COLOR, 2, "sample-mean", values=m))
    out.extend(_points(xs, ypix(m), MEAN_COLOR, 3, "sample-mean-point"))

    if panel.expected is not None:
        out.append(_polyline(xs, ypix(panel.expected), FIT_COLOR, 2, "expected",
                             values=panel.expected))
        out.extend(_points(xs, ypix(panel.expected), FIT_COLOR, 3, "expected-point"))
    if panel.lower is not None and panel.upper is not None:
        out.append(_polyline(xs, ypix(panel.lower), FIT_COLOR, 1.2, "interval-lower",
                             dash="5 3", values=panel.lower))
        out.append(_polyline(xs, ypix(panel.upper), FIT_COLOR, 1.2, "interval-upper",
                             dash="5 3", values=panel.upper))

    legend = [("observations", OBS_COLOR, None), ("sample mean", MEAN_COLOR, None)]
    if panel.expected is not None:
        legend.append(("expected value", FIT_COLOR, None))
    if panel.lower is not None:
        legend.append((f"{panel.level:.0%} interval" if panel.level else "interval",
                       FIT_COLOR, "5 3"))
    lx, ly = LEFT, HEIGHT - 22
    for label, color, dash in legend:
        d = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"{d}/>')
        out.append(f'<text x="{lx + 22}" y="{ly + 4}">{escape(label)}</text>')
        lx += 22 + 6 * len(label) + 12
    out.append("</svg>")
    return "\n".join(out) + "\n"


def panel_filename(style, by, level):
    slug = re.sub(r"[^A-Za-z0-9_.-]+", "_", f"{by}_{level}" if by else "all")
    return f"{'panel' if style == 'fit' else 'data'}_{slug}.svg"


def write_panel(path, panel):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_panel(panel))
