#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Deployment Map Renderer
Draws the street grid, sites, hotspots, routed flows and fixed placements to a PNG
"""

import logging
import math
from typing import Optional, Tuple

from PIL import Image, ImageDraw, ImageFont

from .baseline import FscPlan
from .scenario import DEPOT_ID, Scenario
from .solver import Solution

logger = logging.getLogger(__name__)

BACKGROUND = (250, 250, 250)
BUILDING = (170, 170, 175)
LAMPPOST = (40, 40, 40)
DEPOT = (30, 90, 200)
HOTSPOT = (245, 200, 20)
RASC = (20, 160, 60)
FSC = (230, 120, 20)
FLOW_COLORS = [
    (220, 40, 40),   # Red
    (30, 160, 60),   # Green
    (40, 80, 220),   # Blue
    (160, 60, 200),  # Purple
    (0, 170, 170),   # Cyan
]


class _Canvas:
    """World (meters, y up) to pixel (y down) mapping"""

    def __init__(self, scenario: Scenario, scale: float, margin: int):
        self.scale = scale
        self.margin = margin
        self.height_m = scenario.area[1]
        self.size = (int(scenario.area[0] * scale) + 2 * margin, int(scenario.area[1] * scale) + 2 * margin)

    def px(self, x: float, y: float) -> Tuple[float, float]:
        return (self.margin + x * self.scale, self.margin + (self.height_m - y) * self.scale)


def _arrow(draw: ImageDraw.ImageDraw, start, end, color, width: int):
    draw.line([start, end], fill=color, width=width)
    angle = math.atan2(end[1] - start[1], end[0] - start[0])
    head = 4 * width
    left = (end[0] - head * math.cos(angle - 0.4), end[1] - head * math.sin(angle - 0.4))
    right = (end[0] - head * math.cos(angle + 0.4), end[1] - head * math.sin(angle + 0.4))
    draw.polygon([end, left, right], fill=color)


def render_map(scenario: Scenario, path: str, solution: Optional[Solution] = None,
               plan: Optional[FscPlan] = None, scale: float = 4.0, margin: int = 20) -> str:
    """Render the deployment map and save it as PNG; returns the path"""
    canvas = _Canvas(scenario, scale, margin)
    image = Image.new("RGB", canvas.size, BACKGROUND)
    draw = ImageDraw.Draw(image)
    font = ImageFont.load_default()

    for b in scenario.buildings:
        x0, y1 = canvas.px(b.min_corner.x, b.min_corner.y)
        x1, y0 = canvas.px(b.max_corner.x, b.max_corner.y)
        draw.rectangle([x0, y0, x1, y1], fill=BUILDING)

    dot = max(2.0, scale * 1.2)
    if plan is not None:
        for site in plan.placements:
            cx, cy = canvas.px(*scenario.sites[site].position.as_tuple())
            r = dot * 2.5
            draw.polygon([(cx, cy - r), (cx - r, cy + r * 0.8), (cx + r, cy + r * 0.8)], outline=FSC)

    if solution is not None:
        for flow, route in enumerate(solution.paths):
            color = FLOW_COLORS[flow % len(FLOW_COLORS)]
            # Parallel flows are offset so shared links stay readable
            shift = (flow - (len(solution.paths) - 1) / 2.0) * 1.5 * scale / 4.0
            points = [canvas.px(*scenario.node_position(n).as_tuple()) for n in route]
            for a, b in zip(points, points[1:]):
                _arrow(draw, (a[0] + shift, a[1] + shift), (b[0] + shift, b[1] + shift), color, 2)
        for site in solution.placements:
            cx, cy = canvas.px(*scenario.sites[site].position.as_tuple())
            r = dot * 2
            draw.ellipse([cx - r, cy - r, cx + r, cy + r], outline=RASC, width=3)

    for site in scenario.sites:
        cx, cy = canvas.px(*site.position.as_tuple())
        if site.id == DEPOT_ID:
            draw.rectangle([cx - dot * 1.5, cy - dot * 1.5, cx + dot * 1.5, cy + dot * 1.5], fill=DEPOT)
        else:
            draw.ellipse([cx - dot, cy - dot, cx + dot, cy + dot], fill=LAMPPOST)
        draw.text((cx + dot + 2, cy - dot - 10), scenario.node_label(site.id), fill=LAMPPOST, font=font)

    for flow, hotspot in enumerate(scenario.hotspots):
        cx, cy = canvas.px(*hotspot.position.as_tuple())
        r = dot * 1.3
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=HOTSPOT, outline=LAMPPOST)
        draw.text((cx + r + 2, cy + 2), f"H{flow}", fill=LAMPPOST, font=font)

    image.save(path, "PNG")
    logger.info("map written to %s", path)
    return path
