#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Manhattan Grid Scenario
Buildings, lampposts, the macro-BS depot and traffic hotspots on a street grid,
plus the geometric queries (distance, line-of-sight) the planners rely on
"""

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import ScenarioParams
from .exceptions import ScenarioError

DEPOT_ID = 0


class SiteKind(Enum):
    DEPOT = "depot"
    LAMPPOST = "lamppost"


@dataclass(frozen=True)
class Point2D:
    """Point on the horizontal plane, in meters"""
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ScenarioError("coordinates must be finite", f"({self.x}, {self.y})")

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Building:
    """Axis-aligned block, modeled taller than every node"""
    min_corner: Point2D
    max_corner: Point2D

    def __post_init__(self):
        if not (self.min_corner.x < self.max_corner.x and self.min_corner.y < self.max_corner.y):
            raise ScenarioError("building corners must be strictly ordered",
                                f"{self.min_corner} / {self.max_corner}")

    def contains(self, p: Point2D) -> bool:
        """True if the point lies strictly inside the block"""
        return (self.min_corner.x < p.x < self.max_corner.x
                and self.min_corner.y < p.y < self.max_corner.y)

    def overlaps(self, other: "Building") -> bool:
        """True if the interiors of two blocks intersect"""
        return (self.min_corner.x < other.max_corner.x and other.min_corner.x < self.max_corner.x
                and self.min_corner.y < other.max_corner.y and other.min_corner.y < self.max_corner.y)


@dataclass(frozen=True)
class NodeSite:
    """Lamppost or depot that can host a small cell"""
    id: int
    position: Point2D
    kind: SiteKind
    height: float


@dataclass(frozen=True)
class Hotspot:
    """Cluster of ground users generating one flow"""
    id: int
    position: Point2D
    demand: float
    anchor: int = -1

    def __post_init__(self):
        if not self.demand > 0:
            raise ScenarioError("hotspot demand must be positive", f"hotspot {self.id}: {self.demand}")


@dataclass(frozen=True)
class Scenario:
    """Immutable urban scenario"""
    area: Tuple[float, float]
    buildings: Tuple[Building, ...]
    sites: Tuple[NodeSite, ...]
    hotspots: Tuple[Hotspot, ...] = ()
    rng_seed: int = 0
    params: ScenarioParams = field(default_factory=ScenarioParams, compare=False)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_hotspots(self) -> int:
        return len(self.hotspots)

    @property
    def n_nodes(self) -> int:
        """Sites followed by hotspots share one node index space"""
        return len(self.sites) + len(self.hotspots)

    @property
    def depot(self) -> NodeSite:
        return self.sites[DEPOT_ID]

    @property
    def lampposts(self) -> List[NodeSite]:
        return [s for s in self.sites if s.kind is SiteKind.LAMPPOST]

    def hotspot_node(self, flow: int) -> int:
        """Node index of the hotspot generating the given flow"""
        return len(self.sites) + flow

    def node_position(self, node: int) -> Point2D:
        """Position of a site or hotspot node"""
        if node < len(self.sites):
            return self.sites[node].position
        return self.hotspots[node - len(self.sites)].position

    def node_label(self, node: int) -> str:
        if node == DEPOT_ID:
            return "depot"
        if node < len(self.sites):
            return f"L{node}"
        return f"H{node - len(self.sites)}"

    def with_hotspots(self, hotspots: Sequence[Hotspot], rng_seed: Optional[int] = None) -> "Scenario":
        """Copy of the scenario carrying the given hotspots"""
        seed = self.rng_seed if rng_seed is None else rng_seed
        return replace(self, hotspots=tuple(hotspots), rng_seed=seed)

    def building_array(self) -> np.ndarray:
        """Buildings as an (n, 4) array of min_x, min_y, max_x, max_y"""
        if not self.buildings:
            return np.zeros((0, 4))
        return np.array([[b.min_corner.x, b.min_corner.y, b.max_corner.x, b.max_corner.y]
                         for b in self.buildings], dtype=float)

    def inside_area(self, p: Point2D) -> bool:
        return 0.0 <= p.x <= self.area[0] and 0.0 <= p.y <= self.area[1]

    def inside_building(self, p: Point2D) -> bool:
        return any(b.contains(p) for b in self.buildings)


def axis_coordinates(n_blocks: int, edge: float, inner: float, block: float) -> List[float]:
    """Street-centerline coordinates of the intersections along one axis"""
    coords = [edge / 2.0]
    for m in range(1, n_blocks):
        coords.append(edge + m * block + (m - 1) * inner + inner / 2.0)
    coords.append(edge + n_blocks * block + (n_blocks - 1) * inner + edge / 2.0)
    return coords


def generate_manhattan(params: Optional[ScenarioParams] = None) -> Scenario:
    """Generate the grid scenario; the depot sits on the top-right intersection"""
    if params is None:
        params = ScenarioParams()

    width = 2 * params.edge_street + params.blocks_x * params.block_size + (params.blocks_x - 1) * params.inner_street
    height = 2 * params.edge_street + params.blocks_y * params.block_size + (params.blocks_y - 1) * params.inner_street
    pitch = params.block_size + params.inner_street

    buildings = []
    for i in range(params.blocks_x):
        for j in range(params.blocks_y):
            x0 = params.edge_street + i * pitch
            y0 = params.edge_street + j * pitch
            buildings.append(Building(Point2D(x0, y0), Point2D(x0 + params.block_size, y0 + params.block_size)))

    xs = axis_coordinates(params.blocks_x, params.edge_street, params.inner_street, params.block_size)
    ys = axis_coordinates(params.blocks_y, params.edge_street, params.inner_street, params.block_size)
    depot_pos = Point2D(xs[-1], ys[-1])

    sites = [NodeSite(DEPOT_ID, depot_pos, SiteKind.DEPOT, params.node_height)]
    for y in ys:
        for x in xs:
            if (x, y) == depot_pos.as_tuple():
                continue
            sites.append(NodeSite(len(sites), Point2D(x, y), SiteKind.LAMPPOST, params.node_height))

    scenario = Scenario(area=(width, height), buildings=tuple(buildings), sites=tuple(sites),
                        hotspots=(), rng_seed=0, params=params)
    validate_scenario(scenario)
    return scenario


def validate_scenario(scenario: Scenario):
    """Check the structural invariants; raises ScenarioError"""
    if not scenario.sites or scenario.sites[0].kind is not SiteKind.DEPOT:
        raise ScenarioError("site 0 must be the depot")
    if sum(1 for s in scenario.sites if s.kind is SiteKind.DEPOT) != 1:
        raise ScenarioError("exactly one depot is required")
    for idx, site in enumerate(scenario.sites):
        if site.id != idx:
            raise ScenarioError("site ids must match their index", f"site {site.id} at {idx}")
    for a, first in enumerate(scenario.buildings):
        for second in scenario.buildings[a + 1:]:
            if first.overlaps(second):
                raise ScenarioError("buildings overlap", f"{first} / {second}")
    seen = set()
    for site in scenario.sites:
        if scenario.inside_building(site.position):
            raise ScenarioError("site lies inside a building", f"site {site.id} at {site.position}")
        key = site.position.as_tuple()
        if key in seen:
            raise ScenarioError("two sites share a position", str(site.position))
        seen.add(key)
    for hotspot in scenario.hotspots:
        if scenario.inside_building(hotspot.position):
            raise ScenarioError("hotspot lies inside a building", f"hotspot {hotspot.id}")


def distance(a: Point2D, b: Point2D) -> float:
    """Euclidean distance in meters"""
    return math.hypot(a.x - b.x, a.y - b.y)


def segments_clear(starts: np.ndarray, ends: np.ndarray, rects: np.ndarray) -> np.ndarray:
    """Vectorized LoS test: True where the open segment misses every block interior.

    starts, ends: (n, 2) arrays; rects: (m, 4) arrays of min_x, min_y, max_x, max_y.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    ends = np.atleast_2d(np.asarray(ends, dtype=float))
    if rects.shape[0] == 0:
        return np.ones(starts.shape[0], dtype=bool)

    t_enter = np.zeros((starts.shape[0], rects.shape[0]))
    t_exit = np.ones((starts.shape[0], rects.shape[0]))
    for k in (0, 1):
        p0 = starts[:, k][:, None]
        dk = (ends[:, k] - starts[:, k])[:, None]
        lo = rects[:, k][None, :]
        hi = rects[:, k + 2][None, :]
        moving = np.abs(dk) > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(moving, (lo - p0) / np.where(moving, dk, 1.0), 0.0)
            t2 = np.where(moving, (hi - p0) / np.where(moving, dk, 1.0), 0.0)
        inside = (lo < p0) & (p0 < hi)
        enter_k = np.where(moving, np.minimum(t1, t2), np.where(inside, -np.inf, np.inf))
        exit_k = np.where(moving, np.maximum(t1, t2), np.where(inside, np.inf, -np.inf))
        t_enter = np.maximum(t_enter, enter_k)
        t_exit = np.minimum(t_exit, exit_k)
    blocked = (t_exit - t_enter) > 1e-12
    return ~blocked.any(axis=1)


def has_los(scenario: Scenario, a: Point2D, b: Point2D) -> bool:
    """True iff the open segment a-b crosses no building interior"""
    clear = segments_clear(np.array([a.as_tuple()]), np.array([b.as_tuple()]), scenario.building_array())
    return bool(clear[0])


def place_hotspots(scenario: Scenario, n: int, demand: float,
                   rng: Union[int, np.random.Generator],
                   radius: Optional[float] = None) -> Scenario:
    """Draw n hotspots uniformly in the vicinity disks of random lampposts

    With distinct_anchors each lamppost anchors at most one hotspot.
    """
    if n < 1:
        raise ScenarioError("at least one hotspot is required", f"n={n}")
    if not demand > 0:
        raise ScenarioError("demand must be positive", str(demand))

    seed = scenario.rng_seed
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    if radius is None:
        radius = scenario.params.vicinity_radius

    lampposts = list(scenario.lampposts)
    if not lampposts:
        raise ScenarioError("scenario has no lampposts to anchor hotspots")
    distinct = scenario.params.distinct_anchors
    if distinct and n > len(lampposts):
        raise ScenarioError("more hotspots than lampposts to anchor them",
                            f"n={n}, {len(lampposts)} lampposts")

    hotspots = []
    for flow in range(n):
        for _ in range(scenario.params.max_placement_attempts):
            anchor = lampposts[int(rng.integers(len(lampposts)))]
            r = radius * math.sqrt(float(rng.random()))
            theta = 2.0 * math.pi * float(rng.random())
            p = Point2D(anchor.position.x + r * math.cos(theta), anchor.position.y + r * math.sin(theta))
            if scenario.inside_area(p) and not scenario.inside_building(p):
                hotspots.append(Hotspot(flow, p, float(demand), anchor.id))
                if distinct:
                    lampposts.remove(anchor)
                break
        else:
            raise ScenarioError("could not place hotspot outside buildings",
                                f"flow {flow} after {scenario.params.max_placement_attempts} attempts")

    return scenario.with_hotspots(hotspots, rng_seed=seed)


def nearest_lamppost(scenario: Scenario, p: Point2D) -> int:
    """Id of the closest non-depot site"""
    return min(scenario.lampposts, key=lambda s: (distance(s.position, p), s.id)).id


def scenario_to_dict(scenario: Scenario) -> Dict:
    """Serialize to the documented JSON layout"""
    return {
        "area": [scenario.area[0], scenario.area[1]],
        "buildings": [[[b.min_corner.x, b.min_corner.y], [b.max_corner.x, b.max_corner.y]]
                      for b in scenario.buildings],
        "sites": [{"id": s.id, "x": s.position.x, "y": s.position.y,
                   "kind": s.kind.value, "height": s.height} for s in scenario.sites],
        "hotspots": [{"id": h.id, "x": h.position.x, "y": h.position.y,
                      "demand": h.demand, "anchor": h.anchor} for h in scenario.hotspots],
        "seed": scenario.rng_seed,
    }


def scenario_from_dict(data: Dict, params: Optional[ScenarioParams] = None) -> Scenario:
    """Rebuild a scenario from its JSON layout"""
    try:
        buildings = tuple(Building(Point2D(*lo), Point2D(*hi)) for lo, hi in data["buildings"])
        sites = tuple(NodeSite(int(s["id"]), Point2D(float(s["x"]), float(s["y"])),
                               SiteKind(s["kind"]), float(s["height"])) for s in data["sites"])
        area = (float(data["area"][0]), float(data["area"][1]))
        seed = int(data.get("seed", 0))
        raw_hotspots = data.get("hotspots", [])
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        raise ScenarioError("malformed scenario data", str(e))
    if not isinstance(raw_hotspots, list):
        raise ScenarioError("malformed scenario data", "hotspots must be a list")

    scenario = Scenario(area=area, buildings=buildings, sites=sites, hotspots=(),
                        rng_seed=seed, params=params or ScenarioParams())
    hotspots = []
    for n, h in enumerate(raw_hotspots):
        try:
            p = Point2D(float(h["x"]), float(h["y"]))
            anchor = int(h["anchor"]) if h.get("anchor", -1) not in (None, -1) else None
            hotspot_id, demand = int(h["id"]), float(h["demand"])
        except (AttributeError, KeyError, TypeError, ValueError) as e:
            raise ScenarioError("malformed hotspot entry", f"hotspot {n}: {e!r}")
        if anchor is None:
            anchor = nearest_lamppost(scenario, p)
        hotspots.append(Hotspot(hotspot_id, p, demand, anchor))
    scenario = scenario.with_hotspots(hotspots)
    validate_scenario(scenario)
    return scenario


def save_scenario(scenario: Scenario, path: str):
    """Write the scenario as JSON"""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario_to_dict(scenario), f, indent=2)
        f.write("\n")


def load_scenario(path: str, params: Optional[ScenarioParams] = None) -> Scenario:
    """Read a scenario JSON file"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ScenarioError("cannot read scenario file", f"{path}: {e}")
    except json.JSONDecodeError as e:
        raise ScenarioError("scenario file is not valid JSON", f"{path}: {e}")
    return scenario_from_dict(data, params)
