"""Measurement reports, handover policies, and radio link failure rules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from holab.errors import DataError
from holab.mobility import UEState
from holab.traffic import reset_ramp

DETECTION_FLOOR_DBM = -140.0
SENTINEL_CELL_ID = 0
SENTINEL_RSRP = -140.0
SENTINEL_RSRQ = -30.0
RLF_SINR_THRESHOLD_DB = -6.0
RLF_WINDOWS = 5
REESTABLISH_WINDOWS = 2


@dataclass(frozen=True)
class CellMeasurement:
    cell_id: int
    rsrp: float
    rsrq: float


@dataclass(frozen=True)
class MeasurementReport:
    """Serving measurement plus up to max_neighbors neighbors, strongest first."""

    serving: CellMeasurement
    neighbors: tuple[CellMeasurement, ...]

    def real_neighbors(self) -> list[CellMeasurement]:
        return [n for n in self.neighbors if n.cell_id != SENTINEL_CELL_ID]


def build_report_arrays(cell_ids: np.ndarray, rsrp: np.ndarray, rsrq: np.ndarray,
                        serving: int, max_neighbors: int) -> MeasurementReport:
    """Array-based report builder used by the simulation loop."""
    serving_pos = np.nonzero(cell_ids == serving)[0]
    if serving_pos.size == 0:
        raise DataError(f"serving cell {serving} not present in radio list")
    s = int(serving_pos[0])
    serving_meas = CellMeasurement(int(cell_ids[s]), float(rsrp[s]), float(rsrq[s]))
    mask = (cell_ids != serving) & (rsrp > DETECTION_FLOOR_DBM)
    idx = np.nonzero(mask)[0]
    # strongest first, ties broken by lower cell_id (lexsort: last key is primary)
    order = idx[np.lexsort((cell_ids[idx], -rsrp[idx]))]
    neighbors = [CellMeasurement(int(cell_ids[i]), float(rsrp[i]), float(rsrq[i]))
                 for i in order[:max_neighbors]]
    while len(neighbors) < max_neighbors:
        neighbors.append(CellMeasurement(SENTINEL_CELL_ID, SENTINEL_RSRP, SENTINEL_RSRQ))
    return MeasurementReport(serving_meas, tuple(neighbors))


def build_report(radio, serving: int, max_neighbors: int = 8) -> MeasurementReport:
    """Report from a list of RadioSample; serving must be present."""
    ids = np.array([r.cell_id for r in radio])
    rsrp = np.array([r.rsrp for r in radio])
    rsrq = np.array([r.rsrq for r in radio])
    return build_report_arrays(ids, rsrp, rsrq, serving, max_neighbors)


@dataclass(frozen=True)
class BenchmarkPolicy:
    """A2-RSRP event policy: strongest neighbor when serving drops below threshold."""

    a2_threshold: float = -110.0

    @property
    def label(self) -> str:
        return "benchmark"


@dataclass(frozen=True)
class ForcedPolicy:
    """Deterministic campaign policy: one handover to the k-th best neighbor."""

    neighbor_rank: int
    a2_threshold: float = -110.0

    @property
    def label(self) -> str:
        return f"forced{self.neighbor_rank}"


@dataclass(frozen=True)
class LearnedPolicy:
    """Handle for model-driven selection; applied offline, never inside a run."""

    name: str = "learned"

    @property
    def label(self) -> str:
        return self.name


def a2_condition(report: MeasurementReport, a2_threshold: float) -> bool:
    return report.serving.rsrp < a2_threshold


def a2_fires(report: MeasurementReport, a2_threshold: float, held_previous: bool) -> bool:
    """Shared handover trigger for the benchmark and the forced campaigns.

    The serving RSRP must sit below threshold in two consecutive reports
    (one-window time-to-trigger) and a real neighbor must measure stronger
    than the serving cell; without the latter guard the benchmark would
    ping-pong between cells whenever coverage is uniformly poor.
    """
    if not (a2_condition(report, a2_threshold) and held_previous):
        return False
    reals = report.real_neighbors()
    return bool(reals) and reals[0].rsrp > report.serving.rsrp


def a2_rsrp_decide(report: MeasurementReport, a2_threshold: float,
                   held_previous: bool = True) -> int | None:
    """Benchmark decision: strongest real neighbor when the A2 trigger fires."""
    if not a2_fires(report, a2_threshold, held_previous):
        return None
    return report.real_neighbors()[0].cell_id


def forced_decide(report: MeasurementReport, k: int, already_fired: bool,
                  a2_threshold: float = -110.0, held_previous: bool = True) -> int | None:
    """Forced-campaign decision: k-th best neighbor at the first A2 firing.

    Falls back to the best real neighbor when fewer than k exist; never fires
    twice. When the trigger does not fire the one-shot is not consumed.
    """
    if already_fired:
        return None
    if not a2_fires(report, a2_threshold, held_previous):
        return None
    reals = report.real_neighbors()
    return reals[k - 1].cell_id if k <= len(reals) else reals[0].cell_id


def rlf_step(consecutive_low: int, sinr_db: float) -> tuple[int, bool]:
    """Update the consecutive-deep-outage counter; True when RLF is declared."""
    count = consecutive_low + 1 if sinr_db < RLF_SINR_THRESHOLD_DB else 0
    if count >= RLF_WINDOWS:
        return 0, True
    return count, False


def execute_handover(ue: UEState, target: int) -> UEState:
    """Switch serving cell and reset the ramp; the caller blanks the window."""
    ue.serving_cell = target
    reset_ramp(ue)
    return ue
