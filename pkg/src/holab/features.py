"""Mapping from per-window counters and measurement reports to the 84-feature vector.

Feature indices are 1-based and fixed; the module self-checks at import time
that every index is produced by exactly one rule.
"""

from __future__ import annotations

import numpy as np

from holab.errors import DataError
from holab.handover import MeasurementReport
from holab.traffic import StackCounters

NUM_FEATURES = 84
NUM_NEIGHBOR_SLOTS = 8

_APP_NAMES = [
    (1, "app_ul_throughput"),
    (2, "app_ul_rx_packets"),
    (3, "app_ul_rx_bytes"),
    (4, "app_dl_throughput"),
    (5, "app_dl_rx_packets"),
    (6, "app_dl_rx_bytes"),
]
_RRC_HEAD = [
    (7, "serving_cell_id"),
    (8, "rsrp_serving"),
    (9, "rsrq_serving"),
]
_RRC_TAIL = [
    (34, "rlf_total"),
    (35, "handover_total"),
    (36, "first_ho_target"),
]
_PDCP_RLC_MAC_PHY = [
    (37, "pdcp_tx_pdus_dl"), (38, "pdcp_rx_pdus_dl"), (39, "pdcp_tx_bytes_dl"),
    (40, "pdcp_delay_avg_dl"), (41, "pdcp_delay_min_dl"), (42, "pdcp_delay_max_dl"),
    (43, "pdcp_size_min_dl"), (44, "pdcp_size_max_dl"),
    (45, "pdcp_tx_pdus_ul"), (46, "pdcp_rx_pdus_ul"), (47, "pdcp_tx_bytes_ul"),
    (48, "pdcp_delay_avg_ul"), (49, "pdcp_delay_min_ul"), (50, "pdcp_delay_max_ul"),
    (51, "pdcp_size_min_ul"), (52, "pdcp_size_max_ul"),
    (53, "rlc_tx_pdus_dl"), (54, "rlc_rx_pdus_dl"), (55, "rlc_tx_bytes_dl"),
    (56, "rlc_rx_bytes_dl"), (57, "rlc_delay_avg_dl"), (58, "rlc_delay_min_dl"),
    (59, "rlc_delay_max_dl"), (60, "rlc_size_min_dl"), (61, "rlc_size_max_dl"),
    (62, "rlc_tx_pdus_ul"), (63, "rlc_rx_pdus_ul"), (64, "rlc_tx_bytes_ul"),
    (65, "rlc_rx_bytes_ul"), (66, "rlc_delay_avg_ul"), (67, "rlc_delay_min_ul"),
    (68, "rlc_delay_max_ul"), (69, "rlc_size_min_ul"), (70, "rlc_size_max_ul"),
    (71, "mac_initial_mcs"), (72, "mac_tb_size_ul"), (73, "mac_tb_size_dl"),
    (74, "mac_mcs_ul"), (75, "mac_mcs_dl"), (76, "mac_rb_occupied_ul"),
    (77, "mac_rb_occupied_dl"), (78, "mac_dl_cqi_inband"), (79, "mac_dl_cqi_wideband"),
    (80, "mac_ul_cqi"),
    (81, "phy_sinr_dl"), (82, "phy_sinr_ul"),
    (83, "phy_dl_harq_nacks"), (84, "phy_ul_harq_nacks"),
]


def _build_name_table() -> list[str]:
    entries = dict(_APP_NAMES + _RRC_HEAD + _RRC_TAIL + _PDCP_RLC_MAC_PHY)
    for n in range(1, NUM_NEIGHBOR_SLOTS + 1):
        base = 10 + 3 * (n - 1)
        for offset, what in enumerate(("cell_id", "rsrp", "rsrq")):
            entries[base + offset] = f"neigh{n}_{what}"
    if sorted(entries) != list(range(1, NUM_FEATURES + 1)):
        missing = sorted(set(range(1, NUM_FEATURES + 1)) - set(entries))
        raise AssertionError(f"feature index coverage broken; missing {missing}")
    return [entries[i] for i in range(1, NUM_FEATURES + 1)]


#: names for indices 1..84, position i holds the name of feature i+1
FEATURE_NAMES: list[str] = _build_name_table()

# counter attribute feeding each non-neighbor feature index
_COUNTER_SOURCES = {
    1: "app_ul_throughput", 2: "app_ul_packets", 3: "app_ul_bytes",
    4: "app_dl_throughput", 5: "app_dl_packets", 6: "app_dl_bytes",
    34: "rlf_total", 35: "handover_total", 36: "first_ho_target",
    37: "pdcp_tx_pdus_dl", 38: "pdcp_rx_pdus_dl", 39: "pdcp_tx_bytes_dl",
    40: "pdcp_delay_avg_dl", 41: "pdcp_delay_min_dl", 42: "pdcp_delay_max_dl",
    43: "pdcp_size_min_dl", 44: "pdcp_size_max_dl",
    45: "pdcp_tx_pdus_ul", 46: "pdcp_rx_pdus_ul", 47: "pdcp_tx_bytes_ul",
    48: "pdcp_delay_avg_ul", 49: "pdcp_delay_min_ul", 50: "pdcp_delay_max_ul",
    51: "pdcp_size_min_ul", 52: "pdcp_size_max_ul",
    53: "rlc_tx_pdus_dl", 54: "rlc_rx_pdus_dl", 55: "rlc_tx_bytes_dl",
    56: "rlc_rx_bytes_dl", 57: "rlc_delay_avg_dl", 58: "rlc_delay_min_dl",
    59: "rlc_delay_max_dl", 60: "rlc_size_min_dl", 61: "rlc_size_max_dl",
    62: "rlc_tx_pdus_ul", 63: "rlc_rx_pdus_ul", 64: "rlc_tx_bytes_ul",
    65: "rlc_rx_bytes_ul", 66: "rlc_delay_avg_ul", 67: "rlc_delay_min_ul",
    68: "rlc_delay_max_ul", 69: "rlc_size_min_ul", 70: "rlc_size_max_ul",
    71: "initial_mcs", 72: "tb_size_ul", 73: "tb_size_dl",
    74: "mcs_ul", 75: "mcs_dl", 76: "rb_occupied_ul", 77: "rb_occupied_dl",
    78: "cqi_dl_inband", 79: "cqi_dl_wideband", 80: "cqi_ul",
    81: "sinr_dl", 82: "sinr_ul", 83: "harq_nacks_dl", 84: "harq_nacks_ul",
}

_REPORT_INDICES = set(range(7, 34))
if sorted(set(_COUNTER_SOURCES) | _REPORT_INDICES) != list(range(1, NUM_FEATURES + 1)):
    raise AssertionError("extractor rules do not cover indices 1..84 exactly once")
if set(_COUNTER_SOURCES) & _REPORT_INDICES:
    raise AssertionError("feature index written by two extractor rules")


def extract_features(counters: StackCounters, report: MeasurementReport) -> np.ndarray:
    """84-slot feature vector for one completed sampling window.

    Report fields reflect start-of-window measurements; totals (RLF, handover,
    latched values) reflect end-of-window state.
    """
    out = np.empty(NUM_FEATURES, dtype=float)
    for idx, attr in _COUNTER_SOURCES.items():
        out[idx - 1] = getattr(counters, attr)
    out[6] = float(report.serving.cell_id)
    out[7] = report.serving.rsrp
    out[8] = report.serving.rsrq
    for n in range(NUM_NEIGHBOR_SLOTS):
        base = 9 + 3 * n
        if n < len(report.neighbors):
            meas = report.neighbors[n]
            out[base] = float(meas.cell_id)
            out[base + 1] = meas.rsrp
            out[base + 2] = meas.rsrq
        else:
            # reports built with max_neighbors < 8 still fill fixed-width rows
            out[base] = 0.0
            out[base + 1] = -140.0
            out[base + 2] = -30.0
    if not np.all(np.isfinite(out)):
        bad = [FEATURE_NAMES[i] for i in np.nonzero(~np.isfinite(out))[0]]
        raise DataError(f"non-finite feature values for {bad}")
    return out
