"""UE placement and straight-line mobility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from holab.radio import radio_arrays
from holab.scenario import Scenario

RAMP_MIN = 1.0 / 64.0


@dataclass
class UEState:
    """Mutable per-UE simulation state."""

    ue_id: int
    position: np.ndarray  # (2,) meters
    heading: float  # degrees, fixed for the whole run
    moving: bool
    serving_cell: int
    dl_bytes_remaining: float
    ul_bytes_remaining: float
    ramp_factor: float = RAMP_MIN
    connected: bool = True
    download_complete_time: float | None = None
    home_cluster: int = field(default=0)  # index of the spawning cluster/sector


def init_ues(scenario: Scenario, run_seed: int) -> list[UEState]:
    """Drop ues_per_sector UEs uniformly inside every cluster disc.

    Headings are uniform in [0, 360); UEs start stationary and serve the
    argmax-RSRP cell. Fully reproducible from run_seed.
    """
    cfg = scenario.config
    rng = np.random.default_rng(run_seed)
    radius = cfg.cluster_diameter / 2.0
    ids = np.array(scenario.cell_ids)
    ues: list[UEState] = []
    for c_idx, center in enumerate(scenario.cluster_centers):
        for _ in range(cfg.ues_per_sector):
            r = radius * math.sqrt(rng.uniform())
            ang = rng.uniform(0.0, 2.0 * math.pi)
            pos = np.array([center[0] + r * math.cos(ang),
                            center[1] + r * math.sin(ang)])
            heading = rng.uniform(0.0, 360.0)
            rsrp, _, _ = radio_arrays(scenario, pos)
            serving = int(ids[int(np.argmax(rsrp))])
            ues.append(UEState(
                ue_id=len(ues) + 1,
                position=pos,
                heading=heading,
                moving=False,
                serving_cell=serving,
                dl_bytes_remaining=float(cfg.file_size),
                ul_bytes_remaining=float(cfg.file_size),
                home_cluster=c_idx,
            ))
    return ues


def step_mobility(ue: UEState, dt: float, speed: float) -> UEState:
    """Advance speed*dt along the fixed heading when moving; no-op otherwise."""
    if ue.moving and speed > 0.0:
        rad = math.radians(ue.heading)
        ue.position = ue.position + speed * dt * np.array([math.cos(rad), math.sin(rad)])
    return ue
