"""Top-level simulation loop: per-UE stepping of mobility, radio, policy, and flow."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from holab.config import ScenarioConfig
from holab.errors import UsageError
from holab.features import extract_features
from holab.handover import (
    REESTABLISH_WINDOWS,
    BenchmarkPolicy,
    ForcedPolicy,
    LearnedPolicy,
    a2_condition,
    a2_fires,
    build_report_arrays,
    execute_handover,
    rlf_step,
)
from holab.mobility import UEState, init_ues, step_mobility
from holab.radio import RadioSample, radio_arrays
from holab.scenario import Scenario
from holab.traffic import StackCounters, measurement_counters, mcs_from_cqi, reset_ramp, step_flow


@dataclass
class TraceLog:
    """Complete per-UE trace of one simulation run."""

    run_id: int
    ue_id: int
    policy: str
    neighbor_rank: int  # 0 for benchmark
    target_cell: int  # first forced/benchmark handover target, 0 if none
    download_time: float  # seconds, censored at the simulation horizon
    features: np.ndarray  # (num_windows, 84)


@dataclass
class _LoopState:
    below_count: int = 0
    forced_fired: bool = False
    low_sinr_count: int = 0
    reestablish_timer: int = 0
    rlf_total: int = 0
    handover_total: int = 0
    first_ho_target: int = 0
    initial_mcs: int = 0
    initial_mcs_pending: bool = True


def _decide(policy, report, state: _LoopState) -> int | None:
    below_now = a2_condition(report, policy.a2_threshold)
    target = None
    if a2_fires(report, policy.a2_threshold, state.below_count >= 1):
        reals = report.real_neighbors()
        if isinstance(policy, BenchmarkPolicy):
            target = reals[0].cell_id
        elif not state.forced_fired:
            k = policy.neighbor_rank
            target = reals[k - 1].cell_id if k <= len(reals) else reals[0].cell_id
            state.forced_fired = True
    state.below_count = state.below_count + 1 if below_now else 0
    return target


def _simulate_ue(scenario: Scenario, ue: UEState, policy, run_id: int) -> TraceLog:
    cfg = scenario.config
    dt = cfg.sample_period
    n_windows = cfg.num_windows
    ids = np.array(scenario.cell_ids)
    id_to_idx = {cid: i for i, cid in enumerate(ids)}
    state = _LoopState()
    rows = np.empty((n_windows, 84), dtype=float)

    for w in range(n_windows):
        rsrp, rsrq, sinr = radio_arrays(scenario, ue.position)
        report = build_report_arrays(ids, rsrp, rsrq, ue.serving_cell, cfg.max_neighbors)
        interrupted = False
        if ue.connected:
            s_idx = id_to_idx[ue.serving_cell]
            state.low_sinr_count, rlf = rlf_step(state.low_sinr_count, float(sinr[s_idx]))
            if rlf:
                ue.connected = False
                state.reestablish_timer = REESTABLISH_WINDOWS
                state.rlf_total += 1
                state.below_count = 0
                reset_ramp(ue)
            else:
                target = _decide(policy, report, state)
                if target is not None:
                    execute_handover(ue, target)
                    state.handover_total += 1
                    if state.first_ho_target == 0:
                        state.first_ho_target = target
                    state.below_count = 0
                    state.low_sinr_count = 0
                    state.initial_mcs_pending = True
                    interrupted = True
        else:
            state.reestablish_timer -= 1
            if state.reestablish_timer <= 0:
                ue.serving_cell = int(ids[int(np.argmax(rsrp))])
                ue.connected = True
                state.initial_mcs_pending = True
                state.below_count = 0
                state.low_sinr_count = 0
                reset_ramp(ue)
                interrupted = True  # re-establishment consumes the window

        s_idx = id_to_idx[ue.serving_cell]
        sample = RadioSample(ue.serving_cell, float(rsrp[s_idx]),
                             float(rsrq[s_idx]), float(sinr[s_idx]))
        delivered_dl = 0.0
        if ue.connected and not interrupted:
            counters = step_flow(ue, sample, dt, cfg, window_start_s=w * dt)
            delivered_dl = counters.app_dl_bytes
        else:
            counters = measurement_counters(sample, cfg)
        if state.initial_mcs_pending and ue.connected:
            state.initial_mcs = mcs_from_cqi(int(counters.cqi_dl_wideband))
            state.initial_mcs_pending = False
        counters.rlf_total = float(state.rlf_total)
        counters.handover_total = float(state.handover_total)
        counters.first_ho_target = float(state.first_ho_target)
        counters.initial_mcs = float(state.initial_mcs)
        rows[w] = extract_features(counters, report)

        if not ue.moving and delivered_dl > 0.0:
            ue.moving = True
        step_mobility(ue, dt, cfg.ue_speed)

    if ue.download_complete_time is not None:
        download_time = float(ue.download_complete_time)
    else:
        download_time = float(cfg.sim_duration)
    rank = policy.neighbor_rank if isinstance(policy, ForcedPolicy) else 0
    return TraceLog(
        run_id=run_id,
        ue_id=ue.ue_id,
        policy=policy.label,
        neighbor_rank=rank,
        target_cell=state.first_ho_target,
        download_time=download_time,
        features=rows,
    )


def run_simulation(scenario: Scenario, policy, run_seed: int,
                   run_id: int | None = None) -> list[TraceLog]:
    """Step every UE through the whole run; deterministic in all inputs.

    Learned policies are applied offline on forced-campaign traces and cannot
    drive a live run.
    """
    if isinstance(policy, LearnedPolicy):
        raise UsageError("learned policies are evaluated offline; run a forced campaign")
    if not isinstance(policy, (BenchmarkPolicy, ForcedPolicy)):
        raise UsageError(f"unsupported policy {policy!r}")
    if isinstance(policy, ForcedPolicy):
        if not 1 <= policy.neighbor_rank <= scenario.config.max_neighbors:
            raise UsageError("neighbor_rank must lie in 1..max_neighbors")
    rid = run_seed if run_id is None else run_id
    ues = init_ues(scenario, run_seed)
    return [_simulate_ue(scenario, ue, policy, rid) for ue in ues]


def run_forced_campaign(scenario: Scenario, run_seed: int,
                        run_id: int | None = None) -> list[TraceLog]:
    """All max_neighbors forced runs for one seed, concatenated in rank order."""
    traces: list[TraceLog] = []
    for k in range(1, scenario.config.max_neighbors + 1):
        policy = ForcedPolicy(neighbor_rank=k, a2_threshold=scenario.config.a2_threshold)
        traces.extend(run_simulation(scenario, policy, run_seed, run_id))
    return traces
