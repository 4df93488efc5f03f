import math

import numpy as np
import pytest

from holab.config import ScenarioConfig
from holab.errors import ConfigError
from holab.scenario import (
    SITE_EXCLUSION_RADIUS,
    build_scenario,
    hex_site_positions,
)


def test_default_scenario_shape():
    sc = build_scenario(ScenarioConfig())
    assert len(sc.cells) == 21
    assert len(sc.sites) == 7
    assert len(sc.cluster_centers) == 21
    assert len(sc.obstacles) == 10
    assert sorted(sc.cell_ids) == list(range(1, 22))


def test_single_site_scenario():
    sc = build_scenario(ScenarioConfig(num_sites=1, num_obstacles=0))
    assert len(sc.cells) == 3
    assert len(sc.cluster_centers) == 3


def test_hex_ring_distances():
    pos = hex_site_positions(7, 500.0)
    assert pos[0] == (0.0, 0.0)
    for p in pos[1:]:
        assert math.hypot(*p) == pytest.approx(500.0)
    # ring sites are pairwise >= ISD apart
    for i in range(1, 7):
        for j in range(i + 1, 7):
            d = math.dist(pos[i], pos[j])
            assert d >= 500.0 - 1e-6


def test_obstacles_reproducible_by_seed():
    a = build_scenario(ScenarioConfig(), obstacle_seed=7)
    b = build_scenario(ScenarioConfig(), obstacle_seed=7)
    c = build_scenario(ScenarioConfig(), obstacle_seed=8)
    assert a.obstacles == b.obstacles
    assert a.obstacles != c.obstacles


def test_obstacles_respect_site_exclusion():
    sc = build_scenario(ScenarioConfig(num_obstacles=40), obstacle_seed=3)
    for obs in sc.obstacles:
        for site in sc.sites:
            assert math.dist(obs.center, site) >= SITE_EXCLUSION_RADIUS


def test_cluster_centers_on_sector_boresight():
    cfg = ScenarioConfig()
    sc = build_scenario(cfg)
    for cell, cluster in zip(sc.cells, sc.cluster_centers):
        dx = cluster[0] - cell.site_position[0]
        dy = cluster[1] - cell.site_position[1]
        assert math.hypot(dx, dy) == pytest.approx(cfg.cluster_distance)
        ang = math.degrees(math.atan2(dy, dx)) % 360.0
        assert ang == pytest.approx(cell.azimuth % 360.0, abs=1e-6)


def test_sector_azimuths_within_site():
    sc = build_scenario(ScenarioConfig())
    by_site = {}
    for cell in sc.cells:
        by_site.setdefault(cell.site_position, []).append(cell.azimuth)
    for azs in by_site.values():
        assert sorted(azs) == [0.0, 120.0, 240.0]


def test_invalid_config_rejected_with_field_name():
    with pytest.raises(ConfigError) as err:
        build_scenario(ScenarioConfig(cluster_diameter=700.0))
    assert "cluster_diameter" in str(err.value)
