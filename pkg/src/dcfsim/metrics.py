"""Per-run observables and the three reported metrics.

Throughput is credited per 1 s interval at TXOP end (a Block Ack confirms
the whole burst), access delay is sampled per successful access, and the
RTS/CTS loss percentage aggregates attempt/loss counters.  Export formats
are pinned: dot-decimal CSV with LF newlines, sorted-key JSON, so a rerun
of the same seed reproduces files byte for byte.
"""

import csv
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .mac import Outcome, TxAttempt, access_delay_ns

INTERVALS_HEADER = ["run_id", "scenario", "policy", "bss_id", "interval_index",
                    "throughput_bps", "rts_attempts", "rts_losses"]
DELAYS_HEADER = ["run_id", "scenario", "policy", "bss_id", "delay_s"]


@dataclass(frozen=True)
class MetricRecord:
    run_id: str
    scenario: str
    policy: str
    bss_id: int
    interval_index: int
    throughput_bps: float
    rts_attempts: int
    rts_losses: int
    access_delay_samples: Tuple[int, ...] = ()   # ns, successes ending in this interval

    def __post_init__(self):
        assert 0 <= self.rts_losses <= self.rts_attempts
        assert self.throughput_bps >= 0


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    min: float
    max: float
    median: float
    q1: float
    q3: float
    cdf_points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        assert self.min <= self.q1 <= self.median <= self.q3 <= self.max
        probs = [p for _, p in self.cdf_points]
        assert all(b >= a for a, b in zip(probs, probs[1:]))
        assert abs(probs[-1] - 1.0) < 1e-12

    def to_jsonable(self) -> dict:
        return {"mean": self.mean, "min": self.min, "max": self.max,
                "median": self.median, "q1": self.q1, "q3": self.q3,
                "cdf_points": [list(p) for p in self.cdf_points]}


class MetricsCollector:
    """Accumulates one run's attempts into interval buckets and delay samples.

    Interval i covers (i*delta, (i+1)*delta]; a TXOP ending exactly on a
    boundary belongs to the interval it closes, so bits always land in a
    flushable bucket regardless of event dispatch order at the boundary.
    """

    def __init__(self, interval_ns: int, n_intervals: int, bss_ids: Sequence[int]):
        self.interval_ns = interval_ns
        self.n_intervals = n_intervals
        self.bss_ids = list(bss_ids)
        self._bits: Dict[Tuple[int, int], int] = {}
        self._attempts: Dict[Tuple[int, int], int] = {}
        self._losses: Dict[Tuple[int, int], int] = {}
        self._delays: Dict[Tuple[int, int], List[int]] = {}
        self.delays_ns: Dict[int, List[int]] = {b: [] for b in bss_ids}
        self.total_bits: Dict[int, int] = {b: 0 for b in bss_ids}

    def record_txop(self, attempt: TxAttempt) -> None:
        assert attempt.outcome is not None and attempt.end_ns is not None
        idx = min((attempt.end_ns - 1) // self.interval_ns, self.n_intervals - 1)
        key = (attempt.bss_id, idx)
        self._attempts[key] = self._attempts.get(key, 0) + 1
        if attempt.outcome is Outcome.RTS_LOSS:
            self._losses[key] = self._losses.get(key, 0) + 1
        elif attempt.outcome is Outcome.SUCCESS:
            self._bits[key] = self._bits.get(key, 0) + attempt.payload_bits
            self.total_bits[attempt.bss_id] += attempt.payload_bits
            delay = access_delay_ns(attempt)
            self.delays_ns[attempt.bss_id].append(delay)
            self._delays.setdefault(key, []).append(delay)

    def interval_records(self, run_id: str, scenario: str,
                         policy_by_bss: Dict[int, str]) -> List[MetricRecord]:
        records = []
        interval_s = self.interval_ns / 1e9
        for bss_id in self.bss_ids:
            for idx in range(self.n_intervals):
                key = (bss_id, idx)
                records.append(MetricRecord(
                    run_id=run_id, scenario=scenario, policy=policy_by_bss[bss_id],
                    bss_id=bss_id, interval_index=idx,
                    throughput_bps=self._bits.get(key, 0) / interval_s,
                    rts_attempts=self._attempts.get(key, 0),
                    rts_losses=self._losses.get(key, 0),
                    access_delay_samples=tuple(self._delays.get(key, ()))))
        return records


def loss_percentage(records: Sequence[MetricRecord]) -> Optional[float]:
    """100 * total losses / total attempts; None (absent) when nothing was attempted."""
    attempts = sum(r.rts_attempts for r in records)
    losses = sum(r.rts_losses for r in records)
    if attempts == 0:
        return None
    return 100.0 * losses / attempts


def summarize(samples: Sequence[float]) -> SummaryStats:
    """Order statistics with linear-interpolation quartiles plus the ECDF."""
    if len(samples) == 0:
        raise ValueError("no samples")
    arr = np.asarray(samples, dtype=float)
    q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
    values, counts = np.unique(arr, return_counts=True)
    cum = np.cumsum(counts) / arr.size
    cdf = tuple((float(v), float(p)) for v, p in zip(values, cum))
    return SummaryStats(mean=float(arr.mean()), min=float(arr.min()),
                        max=float(arr.max()), median=float(med),
                        q1=float(q1), q3=float(q3), cdf_points=cdf)


def _fmt(value) -> str:
    # repr of a float is its shortest round-trip form, locale-free
    return repr(value) if isinstance(value, float) else str(value)


def write_intervals_csv(path, records: Sequence[MetricRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(INTERVALS_HEADER)
        for r in records:
            writer.writerow([r.run_id, r.scenario, r.policy, r.bss_id,
                             r.interval_index, _fmt(r.throughput_bps),
                             r.rts_attempts, r.rts_losses])


def write_delays_csv(path, run_id: str, scenario: str,
                     policy_by_bss: Dict[int, str],
                     delays_ns: Dict[int, List[int]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DELAYS_HEADER)
        for bss_id in sorted(delays_ns):
            for d in delays_ns[bss_id]:
                writer.writerow([run_id, scenario, policy_by_bss[bss_id],
                                 bss_id, f"{d / 1e9:.9f}"])


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _stats_or_none(samples) -> Optional[dict]:
    return summarize(samples).to_jsonable() if len(samples) else None


def build_run_summary(run_id: str, scenario: str, seed: int, resolved_config: dict,
                      records: Sequence[MetricRecord], delays_ns: Dict[int, List[int]],
                      counters: Dict[int, dict], policy_by_bss: Dict[int, str],
                      diagnostics: Sequence[str], final_clock_ns: int) -> dict:
    per_bss = {}
    for bss_id in sorted(policy_by_bss):
        rows = [r for r in records if r.bss_id == bss_id]
        attempts = sum(r.rts_attempts for r in rows)
        losses = sum(r.rts_losses for r in rows)
        per_bss[str(bss_id)] = {
            "policy": policy_by_bss[bss_id],
            "rts_attempts": attempts,
            "rts_losses": losses,
            "loss_pct": loss_percentage(rows),
            "throughput_bps": _stats_or_none([r.throughput_bps for r in rows]),
            "access_delay_s": _stats_or_none([d / 1e9 for d in delays_ns[bss_id]]),
            "counters": counters[bss_id],
        }
    all_delays = [d / 1e9 for ds in delays_ns.values() for d in ds]
    return {
        "schema_version": 1,
        "run_id": run_id,
        "scenario": scenario,
        "seed": seed,
        "config": resolved_config,
        "final_clock_ns": final_clock_ns,
        "diagnostics": list(diagnostics),
        "per_bss": per_bss,
        "aggregate": {
            "rts_attempts": sum(r.rts_attempts for r in records),
            "rts_losses": sum(r.rts_losses for r in records),
            "loss_pct": loss_percentage(records),
            "throughput_bps": _stats_or_none([r.throughput_bps for r in records]),
            "access_delay_s": _stats_or_none(all_delays),
        },
    }


def build_aggregate_summary(scenario: str, resolved_config: dict,
                            runs: Sequence[dict]) -> dict:
    """Pool runs (immutable per-run outputs) into per-policy and per-BSS stats.

    Each entry of `runs` carries records, delays_s keyed by bss, counters and
    policy_by_bss, as produced by the CLI worker.
    """
    def pool(key_of):
        throughput: Dict[str, List[float]] = {}
        delays: Dict[str, List[float]] = {}
        attempts: Dict[str, int] = {}
        losses: Dict[str, int] = {}
        loss_runs: Dict[str, List[float]] = {}
        for run in runs:
            per_key_rows: Dict[str, List[MetricRecord]] = {}
            for r in run["records"]:
                key = key_of(run, r.bss_id)
                throughput.setdefault(key, []).append(r.throughput_bps)
                per_key_rows.setdefault(key, []).append(r)
            for bss_id, ds in run["delays_s"].items():
                key = key_of(run, bss_id)
                delays.setdefault(key, []).extend(ds)
            for key, rows in per_key_rows.items():
                attempts[key] = attempts.get(key, 0) + sum(r.rts_attempts for r in rows)
                losses[key] = losses.get(key, 0) + sum(r.rts_losses for r in rows)
                pct = loss_percentage(rows)
                if pct is not None:
                    loss_runs.setdefault(key, []).append(pct)
        out = {}
        for key in sorted(throughput):
            att = attempts.get(key, 0)
            out[key] = {
                "throughput_bps": _stats_or_none(throughput[key]),
                "access_delay_s": _stats_or_none(delays.get(key, [])),
                "rts_attempts": att,
                "rts_losses": losses.get(key, 0),
                "loss_pct": (100.0 * losses.get(key, 0) / att) if att else None,
                "loss_pct_runs": _stats_or_none(loss_runs.get(key, [])),
            }
        return out

    return {
        "schema_version": 1,
        "scenario": scenario,
        "config": resolved_config,
        "n_runs": len(runs),
        "per_policy": pool(lambda run, bss: run["policy_by_bss"][bss]),
        "per_bss": pool(lambda run, bss: str(bss)),
    }
