"""Standalone SVG snapshots of a deployment: field, obstacles, sensors,
sensing ranges, trajectories, and optional priority contours."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Optional, Sequence

import numpy as np

from .coverage import grid_axis
from .field import priority_field
from .geometry import Point2
from .scenario import Scenario

_STYLE = (
    ".roi{fill:none;stroke:#222;stroke-width:0.06}"
    ".obstacle{fill:#7a7a7a;stroke:#444;stroke-width:0.03}"
    ".contour{fill:none;stroke:#c08030;stroke-width:0.03;stroke-dasharray:0.15 0.1}"
    ".range{fill:none;stroke:#9ec5e8;stroke-width:0.03}"
    ".sensor-mobile{fill:#d03030;stroke:#400000;stroke-width:0.02}"
    ".sensor-stationary{fill:#208020;stroke:#003000;stroke-width:0.02}"
    ".trajectory{fill:none;stroke:#3060d0;stroke-width:0.04;opacity:0.8}"
)


def render_svg(
    scenario: Scenario,
    positions: Sequence[Point2],
    trajectories: Optional[Sequence[Sequence[Point2]]] = None,
    priority_contours: bool = False,
) -> str:
    """Build the SVG document as a string."""
    x0, y0, x1, y1 = scenario.roi.bounds
    margin = 0.05 * max(x1 - x0, y1 - y0)
    vb = (x0 - margin, y0 - margin, (x1 - x0) + 2 * margin, (y1 - y0) + 2 * margin)
    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "viewBox": f"{vb[0]:g} {vb[1]:g} {vb[2]:g} {vb[3]:g}",
            "width": "800",
            "height": "800",
        },
    )
    style = ET.SubElement(svg, "style")
    style.text = _STYLE
    # flip the y axis so world coordinates read the usual way up
    world = ET.SubElement(svg, "g", {"transform": f"matrix(1 0 0 -1 0 {y0 + y1:g})"})

    ET.SubElement(world, "polygon", {"class": "roi", "points": _pts(scenario.roi.vertices)})
    for ob in scenario.obstacles:
        ET.SubElement(world, "polygon", {"class": "obstacle", "points": _pts(ob.vertices)})

    if priority_contours:
        for line in _contours(scenario):
            ET.SubElement(world, "polyline", {"class": "contour", "points": _pts_xy(line)})

    for pos in positions:
        ET.SubElement(
            world,
            "circle",
            {
                "class": "range",
                "cx": f"{pos.x:g}",
                "cy": f"{pos.y:g}",
                "r": f"{scenario.sensing.r_max:g}",
            },
        )

    if trajectories:
        for path in trajectories:
            if path is None or len(path) < 2:
                continue
            ET.SubElement(
                world,
                "polyline",
                {"class": "trajectory", "points": _pts(path)},
            )

    marker = 0.12
    for spec, pos in zip(scenario.sensors, positions):
        if spec.mobile:
            ET.SubElement(
                world,
                "circle",
                {
                    "class": "sensor sensor-mobile",
                    "cx": f"{pos.x:g}",
                    "cy": f"{pos.y:g}",
                    "r": f"{marker:g}",
                },
            )
        else:
            ET.SubElement(
                world,
                "rect",
                {
                    "class": "sensor sensor-stationary",
                    "x": f"{pos.x - marker:g}",
                    "y": f"{pos.y - marker:g}",
                    "width": f"{2 * marker:g}",
                    "height": f"{2 * marker:g}",
                },
            )

    return ET.tostring(svg, encoding="unicode")


def _pts(points) -> str:
    return " ".join(f"{p.x:g},{p.y:g}" for p in points)


def _pts_xy(arr: np.ndarray) -> str:
    return " ".join(f"{x:g},{y:g}" for x, y in arr)


def _contours(scenario: Scenario, n_levels: int = 4) -> list[np.ndarray]:
    from contourpy import contour_generator

    x0, y0, x1, y1 = scenario.roi.bounds
    h = max((x1 - x0), (y1 - y0)) / 200.0
    xs = grid_axis(x0, h, x0, x1)
    ys = grid_axis(y0, h, y0, y1)
    X, Y = np.meshgrid(xs, ys)
    Z = priority_field(scenario.priority, X, Y)
    lo, hi = float(Z.min()), float(Z.max())
    if hi - lo < 1e-12:
        return []
    gen = contour_generator(x=X, y=Y, z=Z)
    lines: list[np.ndarray] = []
    for frac in np.linspace(0.2, 0.8, n_levels):
        for line in gen.lines(lo + frac * (hi - lo)):
            if len(line) >= 2:
                lines.append(np.asarray(line))
    return lines
