"""Radio quantities: pathloss, antenna pattern, obstacle blockage, RSRP/RSRQ/SINR, REM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from holab.config import ScenarioConfig
from holab.errors import UsageError
from holab.scenario import Scenario

MIN_DISTANCE_M = 1.0
RE_PER_PRB = 12
PRB_BANDWIDTH_HZ = 180e3
THERMAL_NOISE_DBM_HZ = -174.0


@dataclass(frozen=True)
class RadioSample:
    """Per-cell downlink measurements at one UE position."""

    cell_id: int
    rsrp: float  # dBm per resource element
    rsrq: float  # dB
    sinr: float  # dB, wideband, full-load interference


def _mobile_antenna_correction(ue_height: float) -> float:
    # large-city correction term for f >= 400 MHz
    return 3.2 * math.log10(11.75 * ue_height) ** 2 - 4.97


def pathloss_db(tx_pos, rx_pos, config: ScenarioConfig) -> float:
    """Cost231-Hata urban (large city, C = 3) pathloss; distance clamped at 1 m."""
    d_m = max(math.dist(tuple(tx_pos), tuple(rx_pos)), MIN_DISTANCE_M)
    return _pathloss_from_distance(np.asarray(d_m), config).item()


def _pathloss_from_distance(d_m: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    d_km = np.maximum(d_m, MIN_DISTANCE_M) / 1000.0
    f = config.carrier_freq
    hb = config.enb_height
    a_hm = _mobile_antenna_correction(config.ue_height)
    return (46.3 + 33.9 * math.log10(f) - 13.82 * math.log10(hb) - a_hm
            + (44.9 - 6.55 * math.log10(hb)) * np.log10(d_km) + 3.0)


def antenna_attenuation_db(cell, ue_pos, config: ScenarioConfig | None = None) -> float:
    """Parabolic pattern: 12*(theta/beamwidth)^2 clamped at the max attenuation."""
    beamwidth = config.antenna_beamwidth if config else 70.0
    max_atten = config.antenna_max_atten if config else 20.0
    theta = math.degrees(math.atan2(ue_pos[1] - cell.site_position[1],
                                    ue_pos[0] - cell.site_position[0])) - cell.azimuth
    theta = (theta + 180.0) % 360.0 - 180.0
    return min(12.0 * (theta / beamwidth) ** 2, max_atten)


def _antenna_attenuation(scenario: Scenario, pos: np.ndarray) -> np.ndarray:
    cfg = scenario.config
    delta = pos[None, :] - scenario.cell_xy
    theta = np.degrees(np.arctan2(delta[:, 1], delta[:, 0])) - scenario.cell_azimuth
    theta = (theta + 180.0) % 360.0 - 180.0
    return np.minimum(12.0 * (theta / cfg.antenna_beamwidth) ** 2, cfg.antenna_max_atten)


def _segment_hits_rects(p0: np.ndarray, p1: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Boolean per rectangle: does the 2-D segment p0->p1 intersect it (slab method)."""
    if bounds.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    d = p1 - p0
    tmin = np.zeros(bounds.shape[0])
    tmax = np.ones(bounds.shape[0])
    ok = np.ones(bounds.shape[0], dtype=bool)
    for axis, (lo_i, hi_i) in enumerate(((0, 1), (2, 3))):
        lo = bounds[:, lo_i]
        hi = bounds[:, hi_i]
        if d[axis] == 0.0:
            ok &= (p0[axis] >= lo) & (p0[axis] <= hi)
        else:
            t0 = (lo - p0[axis]) / d[axis]
            t1 = (hi - p0[axis]) / d[axis]
            swap = t0 > t1
            t0s = np.where(swap, t1, t0)
            t1s = np.where(swap, t0, t1)
            tmin = np.maximum(tmin, t0s)
            tmax = np.minimum(tmax, t1s)
    return ok & (tmin <= tmax)


def blockage_loss_db(tx_pos, rx_pos, obstacles, loss_per_obstacle: float = 30.0) -> float:
    """Fixed loss per distinct obstacle footprint crossed by the tx->rx segment."""
    if not obstacles:
        return 0.0
    bounds = np.array([o.bounds() for o in obstacles], dtype=float)
    hits = _segment_hits_rects(np.asarray(tx_pos, dtype=float),
                               np.asarray(rx_pos, dtype=float), bounds)
    return float(loss_per_obstacle * np.count_nonzero(hits))


def _segments_hit_rects(p0: np.ndarray, p1: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """(N, R) boolean: segment i (p0[i]->p1[i]) intersects rectangle r."""
    n = p0.shape[0]
    r = bounds.shape[0]
    if r == 0:
        return np.zeros((n, 0), dtype=bool)
    d = p1 - p0  # (N, 2)
    tmin = np.zeros((n, r))
    tmax = np.ones((n, r))
    ok = np.ones((n, r), dtype=bool)
    for axis, (lo_i, hi_i) in enumerate(((0, 1), (2, 3))):
        lo = bounds[None, :, lo_i]
        hi = bounds[None, :, hi_i]
        p = p0[:, axis][:, None]
        dax = d[:, axis][:, None]
        zero = dax == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = (lo - p) / dax
            t1 = (hi - p) / dax
        t0s = np.where(t0 <= t1, t0, t1)
        t1s = np.where(t0 <= t1, t1, t0)
        inside = (p >= lo) & (p <= hi)
        ok &= np.where(zero, inside, True)
        tmin = np.where(zero, tmin, np.maximum(tmin, t0s))
        tmax = np.where(zero, tmax, np.minimum(tmax, t1s))
    return ok & (tmin <= tmax)


def _blockage_per_cell(scenario: Scenario, pos: np.ndarray) -> np.ndarray:
    cfg = scenario.config
    bounds = scenario.obstacle_bounds
    n_cells = scenario.cell_xy.shape[0]
    if bounds.shape[0] == 0:
        return np.zeros(n_cells)
    hits = _segments_hit_rects(scenario.cell_xy,
                               np.broadcast_to(pos, scenario.cell_xy.shape), bounds)
    return cfg.obstacle_loss * hits.sum(axis=1)


def noise_dbm_total(config: ScenarioConfig) -> float:
    """Thermal noise plus noise figure over the occupied bandwidth (N_PRB x 180 kHz)."""
    bw = config.bandwidth_prb * PRB_BANDWIDTH_HZ
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bw) + config.noise_figure


def noise_dbm_per_prb(config: ScenarioConfig) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(PRB_BANDWIDTH_HZ) + config.noise_figure


def radio_arrays(scenario: Scenario, ue_pos) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (rsrp_dbm, rsrq_db, sinr_db) arrays, one entry per cell.

    rsrp is per resource element; RSSI for RSRQ carries all cells at full load
    plus per-PRB noise; SINR is wideband own power over other-cell power plus
    total thermal noise.
    """
    cfg = scenario.config
    pos = np.asarray(ue_pos, dtype=float)
    d = np.hypot(*(pos[None, :] - scenario.cell_xy).T)
    pl = _pathloss_from_distance(d, cfg)
    att = _antenna_attenuation(scenario, pos)
    blk = _blockage_per_cell(scenario, pos)
    n_re_total = RE_PER_PRB * cfg.bandwidth_prb
    rsrp_dbm = scenario.cell_power - 10.0 * math.log10(n_re_total) - pl - att - blk
    rsrp_lin = 10.0 ** (rsrp_dbm / 10.0)  # mW per RE

    rssi_per_prb = RE_PER_PRB * np.sum(rsrp_lin) + 10.0 ** (noise_dbm_per_prb(cfg) / 10.0)
    rssi_total = cfg.bandwidth_prb * rssi_per_prb
    rsrq_db = 10.0 * np.log10(cfg.bandwidth_prb * rsrp_lin / rssi_total)

    wideband = rsrp_lin * n_re_total
    noise = 10.0 ** (noise_dbm_total(cfg) / 10.0)
    interference = np.sum(wideband) - wideband
    sinr_db = 10.0 * np.log10(wideband / (interference + noise))
    return rsrp_dbm, rsrq_db, sinr_db


def compute_radio(scenario: Scenario, ue_pos) -> list[RadioSample]:
    """Per-cell RadioSample list; pure function of (scenario, position)."""
    rsrp, rsrq, sinr = radio_arrays(scenario, ue_pos)
    return [RadioSample(cell.cell_id, float(rsrp[i]), float(rsrq[i]), float(sinr[i]))
            for i, cell in enumerate(scenario.cells)]


@dataclass
class RemGrid:
    """Row-major radio environment map of (argmax-SINR cell, its SINR) per pixel."""

    x0: float
    y0: float
    resolution: float
    nx: int
    ny: int
    best_cell: np.ndarray  # (ny, nx) int
    best_sinr: np.ndarray  # (ny, nx) float


def render_rem(scenario: Scenario, bounds: tuple[float, float, float, float],
               resolution: float) -> RemGrid:
    """Evaluate the best cell and SINR at every pixel center of the bounds grid."""
    x0, y0, width, height = bounds
    if resolution <= 0:
        raise UsageError("resolution must be > 0")
    if width <= 0 or height <= 0:
        raise UsageError("bounds must span a positive area")
    nx = int(round(width / resolution))
    ny = int(round(height / resolution))
    if nx < 1 or ny < 1:
        raise UsageError("bounds smaller than one pixel")
    best_cell = np.zeros((ny, nx), dtype=np.int64)
    best_sinr = np.zeros((ny, nx), dtype=float)
    ids = np.array(scenario.cell_ids)
    for iy in range(ny):
        cy = y0 + (iy + 0.5) * resolution
        for ix in range(nx):
            cx = x0 + (ix + 0.5) * resolution
            _, _, sinr = radio_arrays(scenario, (cx, cy))
            j = int(np.argmax(sinr))
            best_cell[iy, ix] = ids[j]
            best_sinr[iy, ix] = sinr[j]
    return RemGrid(x0, y0, resolution, nx, ny, best_cell, best_sinr)


def write_rem(grid: RemGrid, path: str) -> None:
    """Plain-text export: header line, then one `x y cell_id sinr_db` line per pixel."""
    lines = [f"rem {grid.nx} {grid.ny} {grid.x0:.3f} {grid.y0:.3f} {grid.resolution:.3f}"]
    for iy in range(grid.ny):
        cy = grid.y0 + (iy + 0.5) * grid.resolution
        for ix in range(grid.nx):
            cx = grid.x0 + (ix + 0.5) * grid.resolution
            lines.append(f"{cx:.3f} {cy:.3f} {int(grid.best_cell[iy, ix])} "
                         f"{grid.best_sinr[iy, ix]:.6f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
