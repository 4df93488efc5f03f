"""Scenario construction: hexagonal site layout, sector cells, obstacles, UE clusters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from holab.config import ScenarioConfig
from holab.errors import ConfigError

SECTOR_AZIMUTHS = (0.0, 120.0, 240.0)

# Obstacle footprints are drawn uniformly from these side-length bounds (m);
# sized so a handful of obstacles carve real coverage holes at 500 m ISD.
OBSTACLE_MIN_SIDE = 150.0
OBSTACLE_MAX_SIDE = 300.0
# No obstacle center may fall within this distance of a site.
SITE_EXCLUSION_RADIUS = 50.0
# Obstacle centers are drawn from a disc of this radius times the ISD.
DEPLOYMENT_RADIUS_FACTOR = 1.5


@dataclass(frozen=True)
class Cell:
    """One sector of a three-sector site."""

    cell_id: int
    site_position: tuple[float, float]
    azimuth: float  # boresight, degrees counterclockwise from +x
    tx_power: float  # dBm


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned rectangular blocker, footprint in the ground plane."""

    center: tuple[float, float]
    width: float  # extent along x
    depth: float  # extent along y
    height: float

    def bounds(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        return (cx - self.width / 2.0, cx + self.width / 2.0,
                cy - self.depth / 2.0, cy + self.depth / 2.0)


@dataclass
class Scenario:
    """Built scenario: immutable after construction, safe to share across threads."""

    config: ScenarioConfig
    sites: list[tuple[float, float]]
    cells: list[Cell]
    obstacles: list[Obstacle]
    # cluster_centers[i] belongs to cells[i] (one UE cluster per sector)
    cluster_centers: list[tuple[float, float]]
    # cached arrays for vectorized radio computation
    cell_xy: np.ndarray = field(repr=False, default=None)
    cell_azimuth: np.ndarray = field(repr=False, default=None)
    cell_power: np.ndarray = field(repr=False, default=None)
    obstacle_bounds: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self.cell_xy = np.array([c.site_position for c in self.cells], dtype=float)
        self.cell_azimuth = np.array([c.azimuth for c in self.cells], dtype=float)
        self.cell_power = np.array([c.tx_power for c in self.cells], dtype=float)
        if self.obstacles:
            self.obstacle_bounds = np.array([o.bounds() for o in self.obstacles], dtype=float)
        else:
            self.obstacle_bounds = np.zeros((0, 4), dtype=float)

    @property
    def cell_ids(self) -> list[int]:
        return [c.cell_id for c in self.cells]


def hex_site_positions(num_sites: int, inter_site_distance: float) -> list[tuple[float, float]]:
    """Center site plus concentric hexagonal rings, nearest-neighbor spacing = ISD."""
    positions = [(0.0, 0.0)]
    if num_sites == 1:
        return positions
    # cube-coordinate ring walk on a triangular lattice
    directions = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]
    ring = 1
    while len(positions) < num_sites:
        q, r = ring * directions[4][0], ring * directions[4][1]
        for d in range(6):
            for _ in range(ring):
                x = inter_site_distance * (q + r / 2.0)
                y = inter_site_distance * (math.sqrt(3.0) / 2.0) * r
                positions.append((x, y))
                if len(positions) == num_sites:
                    return positions
                q += directions[d][0]
                r += directions[d][1]
        ring += 1
    return positions


def _draw_obstacles(config: ScenarioConfig, sites: list[tuple[float, float]],
                    obstacle_seed: int) -> list[Obstacle]:
    rng = np.random.default_rng(obstacle_seed)
    radius = DEPLOYMENT_RADIUS_FACTOR * config.inter_site_distance
    site_arr = np.array(sites, dtype=float)
    obstacles: list[Obstacle] = []
    while len(obstacles) < config.num_obstacles:
        x = rng.uniform(-radius, radius)
        y = rng.uniform(-radius, radius)
        if math.hypot(x, y) > radius:
            continue
        d2 = np.min(np.sum((site_arr - np.array([x, y])) ** 2, axis=1))
        if d2 < SITE_EXCLUSION_RADIUS ** 2:
            continue
        width = rng.uniform(OBSTACLE_MIN_SIDE, OBSTACLE_MAX_SIDE)
        depth = rng.uniform(OBSTACLE_MIN_SIDE, OBSTACLE_MAX_SIDE)
        obstacles.append(Obstacle((x, y), width, depth, config.obstacle_height))
    return obstacles


def build_scenario(config: ScenarioConfig, obstacle_seed: int | None = None) -> Scenario:
    """Build the multi-site scenario; obstacle placement is reproducible from the seed.

    Raises ConfigError naming the offending field when config invariants fail.
    """
    config.validate()
    seed = config.obstacle_seed if obstacle_seed is None else obstacle_seed
    sites = hex_site_positions(config.num_sites, config.inter_site_distance)
    cells: list[Cell] = []
    clusters: list[tuple[float, float]] = []
    for s_idx, site in enumerate(sites):
        for az in SECTOR_AZIMUTHS:
            cell_id = len(cells) + 1
            cells.append(Cell(cell_id, site, az, config.enb_tx_power))
            rad = math.radians(az)
            clusters.append((site[0] + config.cluster_distance * math.cos(rad),
                             site[1] + config.cluster_distance * math.sin(rad)))
    obstacles = _draw_obstacles(config, sites, seed)
    scenario = Scenario(config=config, sites=sites, cells=cells,
                        obstacles=obstacles, cluster_centers=clusters)
    _check_scenario(scenario)
    return scenario


def _check_scenario(scenario: Scenario) -> None:
    ids = scenario.cell_ids
    if len(set(ids)) != len(ids):
        raise ConfigError("cell_ids must be unique")
    for site in scenario.sites:
        azs = sorted(c.azimuth for c in scenario.cells if c.site_position == site)
        if len(azs) != 3 or any(abs(b - a - 120.0) > 1e-9 for a, b in zip(azs, azs[1:])):
            raise ConfigError("each site must carry 3 sectors 120 degrees apart")
