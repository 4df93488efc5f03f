"""Offline policy evaluation: learned target selection vs the A2-RSRP benchmark.

The evaluation seed drives one benchmark campaign and one full forced
campaign. Each predictor scores the forced trace of every neighbor rank and
the rank with the minimum predicted download time is selected; realized
times come from the matching forced trace. The exhaustive campaign also
yields an oracle (best realized rank), defining per-UE regret.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from holab.dataset import NormalizationSpec, normalize_features
from holab.errors import DataError, UsageError
from holab.handover import BenchmarkPolicy
from holab.models import predict_download_time
from holab.scenario import Scenario, build_scenario
from holab.sim import TraceLog, run_forced_campaign, run_simulation


def select_target(predictions) -> int:
    """1-based neighbor rank with the minimum predicted time; ties to smaller rank."""
    preds = np.asarray(predictions, dtype=float)
    if preds.size == 0:
        raise UsageError("cannot select a target from no predictions")
    return int(np.argmin(preds)) + 1


def oracle_select(realized) -> tuple[int, float]:
    """Best neighbor rank by realized download time, with that time."""
    times = np.asarray(realized, dtype=float)
    if times.size == 0:
        raise UsageError("cannot select a target from no realized times")
    k = int(np.argmin(times))
    return k + 1, float(times[k])


@dataclass
class EcdfSeries:
    """Empirical CDF: sorted sample values with F(x_i) = i/n."""

    x: np.ndarray
    f: np.ndarray

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,F\n")
            for xi, fi in zip(self.x, self.f):
                fh.write(f"{xi:.10g},{fi:.10g}\n")


def ecdf(values) -> EcdfSeries:
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise UsageError("ecdf of an empty sample")
    x = np.sort(vals)
    f = np.arange(1, x.size + 1, dtype=float) / x.size
    return EcdfSeries(x, f)


class TrainedPredictor:
    """A trained model plus the normalization fitted on its training data."""

    def __init__(self, name: str, model, norm: NormalizationSpec):
        self.name = name
        self.model = model
        self.norm = norm

    def predict_times(self, raw_sequences: np.ndarray) -> np.ndarray:
        """Seconds for a batch of raw (unnormalized) (m, 84) sequences."""
        if self.norm is None:
            raise DataError(f"predictor {self.name} carries no normalization spec")
        normalized = normalize_features(raw_sequences, self.norm)
        return predict_download_time(self.model, normalized)


class PerfectPredictor:
    """Test hook: predictions equal the realized times (ideal selector)."""

    is_perfect_hook = True

    def __init__(self, name: str = "perfect"):
        self.name = name


@dataclass
class PolicyOutcome:
    """Per-policy realized results on the evaluation run."""

    finishing_count: int
    times: dict[int, float]  # ue_id -> realized seconds
    picks: dict[int, int] = field(default_factory=dict)  # ue_id -> chosen rank
    regret: dict[int, float] = field(default_factory=dict)  # ue_id -> seconds


@dataclass
class EvalReport:
    total_ues: int
    horizon: float
    benchmark: PolicyOutcome
    oracle: PolicyOutcome
    policies: dict[str, PolicyOutcome]
    benchmark_selector_regret: dict[int, float]
    common_finishers: set[int]
    # per learned policy: benchmark_time - learned_time over common finishers
    differences: dict[str, dict[int, float]]

    def finishing_counts(self) -> dict[str, int]:
        out = {"benchmark": self.benchmark.finishing_count,
               "oracle": self.oracle.finishing_count}
        for name, outcome in self.policies.items():
            out[name] = outcome.finishing_count
        return out

    def difference_ecdf(self, name: str) -> EcdfSeries:
        return ecdf(list(self.differences[name].values()))

    def median_regret(self, name: str) -> float:
        return float(np.median(list(self.policies[name].regret.values())))

    def median_benchmark_selector_regret(self) -> float:
        return float(np.median(list(self.benchmark_selector_regret.values())))

    def to_text(self) -> str:
        lines = [f"evaluation over {self.total_ues} UEs, horizon {self.horizon:g} s"]
        lines.append(f"  benchmark finishers: {self.benchmark.finishing_count}")
        for name, outcome in self.policies.items():
            b = self.benchmark.finishing_count
            l = outcome.finishing_count
            rel_b = 100.0 * (l - b) / b if b else float("nan")
            rel_l = 100.0 * (l - b) / l if l else float("nan")
            lines.append(
                f"  {name} finishers: {l} "
                f"(vs benchmark {l - b:+d}; {rel_b:+.1f}% of benchmark, {rel_l:+.1f}% of itself)"
            )
            lines.append(f"    median regret vs oracle: {self.median_regret(name):.3f} s")
        lines.append(f"  oracle finishers: {self.oracle.finishing_count}")
        lines.append("  benchmark-as-selector median regret: "
                     f"{self.median_benchmark_selector_regret():.3f} s")
        lines.append(f"  common finishers across policies: {len(self.common_finishers)}")
        for name, diffs in self.differences.items():
            if diffs:
                vals = np.array(list(diffs.values()))
                share = float(np.mean(vals >= 0.0))
                lines.append(f"  {name}: download time reduced or equal for "
                             f"{int(np.sum(vals >= 0))}/{vals.size} common UEs "
                             f"({100 * share:.0f}%)")
        return "\n".join(lines)

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("policy,finishing_count,total_ues,median_regret_s\n")
            fh.write(f"benchmark,{self.benchmark.finishing_count},{self.total_ues},\n")
            fh.write(f"oracle,{self.oracle.finishing_count},{self.total_ues},0\n")
            for name in self.policies:
                fh.write(f"{name},{self.policies[name].finishing_count},"
                         f"{self.total_ues},{self.median_regret(name):.10g}\n")

    def write_per_ue_csv(self, path: str) -> None:
        names = list(self.policies)
        with open(path, "w", encoding="utf-8") as fh:
            header = ["ue_id", "benchmark_time", "oracle_time", "oracle_rank"]
            for n in names:
                header += [f"{n}_time", f"{n}_rank", f"{n}_regret"]
            fh.write(",".join(header) + "\n")
            for ue in sorted(self.benchmark.times):
                row = [str(ue), f"{self.benchmark.times[ue]:.10g}",
                       f"{self.oracle.times[ue]:.10g}", str(self.oracle.picks[ue])]
                for n in names:
                    o = self.policies[n]
                    row += [f"{o.times[ue]:.10g}", str(o.picks[ue]), f"{o.regret[ue]:.10g}"]
                fh.write(",".join(row) + "\n")


def _campaign_tables(traces: list[TraceLog], max_rank: int):
    """(ue_ids, realized (n_ue, k) seconds, raw_features (n_ue, k, m, 84))."""
    by_ue: dict[int, dict[int, TraceLog]] = {}
    for t in traces:
        by_ue.setdefault(t.ue_id, {})[t.neighbor_rank] = t
    ue_ids = sorted(by_ue)
    m = traces[0].features.shape[0]
    realized = np.empty((len(ue_ids), max_rank))
    raw = np.empty((len(ue_ids), max_rank, m, traces[0].features.shape[1]))
    for i, ue in enumerate(ue_ids):
        ranks = by_ue[ue]
        if sorted(ranks) != list(range(1, max_rank + 1)):
            raise DataError(f"forced campaign incomplete for UE {ue}")
        for k in range(1, max_rank + 1):
            realized[i, k - 1] = ranks[k].download_time
            raw[i, k - 1] = ranks[k].features
    return ue_ids, realized, raw


def evaluate(scenario: Scenario, predictors: dict[str, object],
             eval_run_seed: int) -> EvalReport:
    """Run benchmark + forced campaigns on the eval seed and compare selections."""
    cfg = scenario.config
    horizon = cfg.sim_duration
    if not predictors:
        raise UsageError("no predictors supplied")

    bench_traces = run_simulation(
        scenario, BenchmarkPolicy(a2_threshold=cfg.a2_threshold), eval_run_seed)
    bench_times = {t.ue_id: t.download_time for t in bench_traces}
    benchmark = PolicyOutcome(
        finishing_count=sum(1 for v in bench_times.values() if v < horizon),
        times=bench_times,
    )

    forced = run_forced_campaign(scenario, eval_run_seed)
    ue_ids, realized, raw = _campaign_tables(forced, cfg.max_neighbors)
    if set(ue_ids) != set(bench_times):
        raise DataError("benchmark and forced campaigns disagree on UE population")

    oracle = PolicyOutcome(finishing_count=0, times={})
    for i, ue in enumerate(ue_ids):
        k, t = oracle_select(realized[i])
        oracle.picks[ue] = k
        oracle.times[ue] = t
        oracle.regret[ue] = 0.0
    oracle.finishing_count = sum(1 for v in oracle.times.values() if v < horizon)

    # the benchmark maps onto the selector framework as the rank-1 selector
    benchmark_selector_regret = {ue: float(realized[i, 0] - oracle.times[ue])
                                 for i, ue in enumerate(ue_ids)}

    policies: dict[str, PolicyOutcome] = {}
    for name, predictor in predictors.items():
        outcome = PolicyOutcome(finishing_count=0, times={})
        for i, ue in enumerate(ue_ids):
            if getattr(predictor, "is_perfect_hook", False):
                preds = realized[i]
            else:
                preds = predictor.predict_times(raw[i])
            k = select_target(preds)
            outcome.picks[ue] = k
            outcome.times[ue] = float(realized[i, k - 1])
            outcome.regret[ue] = float(realized[i, k - 1] - oracle.times[ue])
        outcome.finishing_count = sum(1 for v in outcome.times.values() if v < horizon)
        policies[name] = outcome

    common = {ue for ue in ue_ids
              if bench_times[ue] < horizon
              and all(p.times[ue] < horizon for p in policies.values())}
    differences = {
        name: {ue: float(bench_times[ue] - p.times[ue]) for ue in sorted(common)}
        for name, p in policies.items()
    }
    return EvalReport(
        total_ues=len(ue_ids),
        horizon=horizon,
        benchmark=benchmark,
        oracle=oracle,
        policies=policies,
        benchmark_selector_regret=benchmark_selector_regret,
        common_finishers=common,
        differences=differences,
    )


def cross_scenario_eval(config, predictors: dict[str, object], eval_run_seed: int,
                        alternate_obstacle_seed: int) -> EvalReport:
    """Rebuild the scenario with a different obstacle deployment; no retraining."""
    scenario = build_scenario(config, obstacle_seed=alternate_obstacle_seed)
    return evaluate(scenario, predictors, eval_run_seed)
