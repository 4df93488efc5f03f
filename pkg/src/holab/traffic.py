"""Link adaptation and the abstracted bidirectional TCP bulk-transfer flow.

TCP is reduced to a rate-ramp model: each window delivers the link rate
scaled by a slow-start ramp that doubles after every window with delivered
bytes (1/64 up to 1) and resets on handover or radio link failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from holab.config import ScenarioConfig
from holab.mobility import RAMP_MIN, UEState
from holab.radio import RE_PER_PRB, RadioSample, noise_dbm_total

# 15 CQI thresholds, evenly spaced from -6.7 dB (CQI 1) to 19.8 dB (CQI 15).
CQI_MIN_SINR_DB = -6.7
CQI_MAX_SINR_DB = 19.8
CQI_THRESHOLDS = [CQI_MIN_SINR_DB + i * (CQI_MAX_SINR_DB - CQI_MIN_SINR_DB) / 14.0
                  for i in range(15)]
# standard CQI spectral efficiency column, bits/symbol
CQI_SPECTRAL_EFF = [0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766,
                    1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547]
SYMBOLS_PER_RE_MS = 14  # OFDM symbols per subframe
CONTROL_OVERHEAD = 0.75  # 25% control/reference overhead
PDU_SIZE_BYTES = 1500.0
NACK_RATE = 0.10
# delay proxies are capped at the simulation horizon to keep features finite
DELAY_CAP_S = 40.0


def link_adaptation(sinr_db: float, n_prb: int = 25) -> tuple[int, float, float]:
    """Map SINR to (cqi, spectral efficiency, transport-block bits per ms).

    CQI 0 (no transmission) below the first threshold; above the last
    threshold the table saturates at CQI 15.
    """
    cqi = 0
    for i, thr in enumerate(CQI_THRESHOLDS):
        if sinr_db >= thr:
            cqi = i + 1
    if cqi == 0:
        return 0, 0.0, 0.0
    se = CQI_SPECTRAL_EFF[cqi - 1]
    tb_bits = n_prb * RE_PER_PRB * SYMBOLS_PER_RE_MS * se * CONTROL_OVERHEAD
    return cqi, se, tb_bits


def mcs_from_cqi(cqi: int) -> int:
    return int(round(cqi * 28.0 / 15.0))


@dataclass
class StackCounters:
    """Per-window synthesized protocol-stack measurements.

    Traffic statistics are zero in idle windows; measurement quantities
    (CQI, SINR) are recorded every window. rlf/handover totals and the
    latched initial MCS / first handover target are stamped by the
    simulation loop.
    """

    app_dl_bytes: float = 0.0
    app_ul_bytes: float = 0.0
    app_dl_throughput: float = 0.0  # bit/s
    app_ul_throughput: float = 0.0
    app_dl_packets: float = 0.0
    app_ul_packets: float = 0.0

    pdcp_tx_pdus_dl: float = 0.0
    pdcp_rx_pdus_dl: float = 0.0
    pdcp_tx_bytes_dl: float = 0.0
    pdcp_delay_avg_dl: float = 0.0  # ms
    pdcp_delay_min_dl: float = 0.0
    pdcp_delay_max_dl: float = 0.0
    pdcp_size_min_dl: float = 0.0  # bytes
    pdcp_size_max_dl: float = 0.0
    pdcp_tx_pdus_ul: float = 0.0
    pdcp_rx_pdus_ul: float = 0.0
    pdcp_tx_bytes_ul: float = 0.0
    pdcp_delay_avg_ul: float = 0.0
    pdcp_delay_min_ul: float = 0.0
    pdcp_delay_max_ul: float = 0.0
    pdcp_size_min_ul: float = 0.0
    pdcp_size_max_ul: float = 0.0

    rlc_tx_pdus_dl: float = 0.0
    rlc_rx_pdus_dl: float = 0.0
    rlc_tx_bytes_dl: float = 0.0
    rlc_rx_bytes_dl: float = 0.0
    rlc_delay_avg_dl: float = 0.0
    rlc_delay_min_dl: float = 0.0
    rlc_delay_max_dl: float = 0.0
    rlc_size_min_dl: float = 0.0
    rlc_size_max_dl: float = 0.0
    rlc_tx_pdus_ul: float = 0.0
    rlc_rx_pdus_ul: float = 0.0
    rlc_tx_bytes_ul: float = 0.0
    rlc_rx_bytes_ul: float = 0.0
    rlc_delay_avg_ul: float = 0.0
    rlc_delay_min_ul: float = 0.0
    rlc_delay_max_ul: float = 0.0
    rlc_size_min_ul: float = 0.0
    rlc_size_max_ul: float = 0.0

    initial_mcs: float = 0.0
    tb_size_ul: float = 0.0  # bytes
    tb_size_dl: float = 0.0
    mcs_ul: float = 0.0
    mcs_dl: float = 0.0
    rb_occupied_ul: float = 0.0
    rb_occupied_dl: float = 0.0
    cqi_dl_inband: float = 0.0
    cqi_dl_wideband: float = 0.0
    cqi_ul: float = 0.0

    sinr_dl: float = 0.0  # dB
    sinr_ul: float = 0.0
    harq_nacks_dl: float = 0.0
    harq_nacks_ul: float = 0.0

    rlf_total: float = 0.0
    handover_total: float = 0.0
    first_ho_target: float = 0.0


def uplink_sinr_db(radio: RadioSample, cfg: ScenarioConfig) -> float:
    """Uplink budget mirrors the downlink link loss at UE transmit power.

    Noise-limited: scheduler contention and uplink interference are out of
    scope, so the only impairment is thermal noise at the eNB.
    """
    link_loss = cfg.enb_tx_power - (radio.rsrp + 10.0 * math.log10(RE_PER_PRB * cfg.bandwidth_prb))
    return cfg.ue_tx_power - link_loss - noise_dbm_total(cfg)


def _delay_stats(backlog_bytes: float, rate_bps: float, scale: float) -> tuple[float, float, float]:
    """(avg, min, max) queueing-delay proxies in ms: backlog/rate plus 1 ms base."""
    queue_s = min(backlog_bytes * 8.0 / rate_bps, DELAY_CAP_S) * scale
    d_max = queue_s * 1000.0 + 1.0
    d_avg = queue_s * 500.0 + 1.0
    return d_avg, 1.0, d_max


def _pdu_sizes(total_bytes: float, pdu_bytes: float) -> tuple[float, float, float]:
    """(count, min_size, max_size) when total_bytes are cut into pdu_bytes units."""
    if total_bytes <= 0.0:
        return 0.0, 0.0, 0.0
    count = math.ceil(total_bytes / pdu_bytes)
    remainder = total_bytes - pdu_bytes * (count - 1)
    if count == 1:
        return 1.0, total_bytes, total_bytes
    return float(count), min(remainder, pdu_bytes), pdu_bytes


def measurement_counters(radio: RadioSample, cfg: ScenarioConfig) -> StackCounters:
    """Counters for a window without traffic: only measurements are recorded."""
    c = StackCounters()
    cqi_dl, _, _ = link_adaptation(radio.sinr, cfg.bandwidth_prb)
    ul_sinr = uplink_sinr_db(radio, cfg)
    cqi_ul, _, _ = link_adaptation(ul_sinr, cfg.bandwidth_prb)
    c.cqi_dl_wideband = float(cqi_dl)
    c.cqi_dl_inband = float(cqi_dl)  # flat channel: inband equals wideband
    c.cqi_ul = float(cqi_ul)
    c.sinr_dl = radio.sinr
    c.sinr_ul = ul_sinr
    return c


def _fill_direction(c: StackCounters, prefix: str, delivered: float, backlog: float,
                    rate_bps: float, tb_bits: float, cqi: int, ttis: int,
                    n_prb: int, dt: float) -> None:
    pending = backlog > 0.0
    nacks = 0.0
    if pending:
        if cqi == 0:
            nacks = float(ttis)
        else:
            active = math.ceil(delivered * 8.0 / tb_bits) if delivered > 0 else 0
            nacks = round(NACK_RATE * active)
    pkts, p_min, p_max = _pdu_sizes(delivered, PDU_SIZE_BYTES)
    if delivered > 0.0:
        p_avg, p_lo, p_hi = _delay_stats(backlog, rate_bps, 1.0)
        r_avg, r_lo, r_hi = _delay_stats(backlog, rate_bps, 0.5)
        tb_bytes = tb_bits / 8.0
        rpdus, r_min, r_max = _pdu_sizes(delivered, tb_bytes)
        active = math.ceil(delivered * 8.0 / tb_bits)
        rb = n_prb * active / ttis
        mcs = float(mcs_from_cqi(cqi))
        tb_sz = tb_bytes
    else:
        p_avg = p_lo = p_hi = r_avg = r_lo = r_hi = 0.0
        rpdus = r_min = r_max = 0.0
        rb = 0.0
        mcs = 0.0
        tb_sz = 0.0
    d = prefix
    setattr(c, f"app_{d}_bytes", delivered)
    setattr(c, f"app_{d}_throughput", delivered * 8.0 / dt)
    setattr(c, f"app_{d}_packets", pkts)
    setattr(c, f"pdcp_tx_pdus_{d}", pkts)
    setattr(c, f"pdcp_rx_pdus_{d}", pkts)
    setattr(c, f"pdcp_tx_bytes_{d}", delivered)
    setattr(c, f"pdcp_delay_avg_{d}", p_avg)
    setattr(c, f"pdcp_delay_min_{d}", p_lo)
    setattr(c, f"pdcp_delay_max_{d}", p_hi)
    setattr(c, f"pdcp_size_min_{d}", p_min)
    setattr(c, f"pdcp_size_max_{d}", p_max)
    setattr(c, f"rlc_tx_pdus_{d}", rpdus)
    setattr(c, f"rlc_rx_pdus_{d}", rpdus)
    setattr(c, f"rlc_tx_bytes_{d}", delivered)
    setattr(c, f"rlc_rx_bytes_{d}", delivered)
    setattr(c, f"rlc_delay_avg_{d}", r_avg)
    setattr(c, f"rlc_delay_min_{d}", r_lo)
    setattr(c, f"rlc_delay_max_{d}", r_hi)
    setattr(c, f"rlc_size_min_{d}", r_min)
    setattr(c, f"rlc_size_max_{d}", r_max)
    setattr(c, f"tb_size_{d}", tb_sz)
    setattr(c, f"mcs_{d}", mcs)
    setattr(c, f"rb_occupied_{d}", rb)
    setattr(c, f"harq_nacks_{d}", nacks)


def step_flow(ue: UEState, radio: RadioSample, dt: float, cfg: ScenarioConfig,
              window_start_s: float) -> StackCounters:
    """Deliver one window of the DL and UL transfers; mutates ue, returns counters.

    Sets ue.download_complete_time (with sub-window interpolation) the moment
    the DL backlog empties; doubles the ramp after any window with delivery.
    """
    ttis = int(round(dt * 1000.0))
    c = measurement_counters(radio, cfg)
    ramp = ue.ramp_factor

    cqi_dl = int(c.cqi_dl_wideband)
    _, _, tb_dl = link_adaptation(radio.sinr, cfg.bandwidth_prb)
    dl_backlog = ue.dl_bytes_remaining
    capacity_dl = tb_dl * ttis * ramp / 8.0  # bytes deliverable this window
    delivered_dl = min(capacity_dl, dl_backlog)
    if delivered_dl > 0.0:
        ue.dl_bytes_remaining -= delivered_dl
        if ue.dl_bytes_remaining <= 1e-9:
            ue.dl_bytes_remaining = 0.0
            fraction = dl_backlog / capacity_dl
            ue.download_complete_time = window_start_s + fraction * dt
    rate_dl = tb_dl * 1000.0 * ramp
    _fill_direction(c, "dl", delivered_dl, dl_backlog, max(rate_dl, 1e-12),
                    tb_dl, cqi_dl, ttis, cfg.bandwidth_prb, dt)

    cqi_ul = int(c.cqi_ul)
    _, _, tb_ul = link_adaptation(c.sinr_ul, cfg.bandwidth_prb)
    ul_backlog = ue.ul_bytes_remaining
    capacity_ul = tb_ul * ttis * ramp / 8.0
    delivered_ul = min(capacity_ul, ul_backlog)
    if delivered_ul > 0.0:
        ue.ul_bytes_remaining -= delivered_ul
        if ue.ul_bytes_remaining <= 1e-9:
            ue.ul_bytes_remaining = 0.0
    rate_ul = tb_ul * 1000.0 * ramp
    _fill_direction(c, "ul", delivered_ul, ul_backlog, max(rate_ul, 1e-12),
                    tb_ul, cqi_ul, ttis, cfg.bandwidth_prb, dt)

    if delivered_dl > 0.0 or delivered_ul > 0.0:
        ue.ramp_factor = min(1.0, ue.ramp_factor * 2.0)
    return c


def reset_ramp(ue: UEState) -> None:
    ue.ramp_factor = RAMP_MIN
