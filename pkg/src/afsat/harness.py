"""Batch execution harness: single runs, design sweeps, and reports.

Results are persisted as plain CSV (one `customers.csv` row per customer
per run, one `runs.csv` summary row per run) next to a JSON manifest that
records the design mode, master seed, and design fingerprint. Reports are
derived purely from the persisted rows, so they can be regenerated without
re-simulating.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .anova import AnovaReport, ResponseTable, allocate_variation, report_lines, term_label
from .config import GREEN, RED, YELLOW, ScenarioConfig
from .factorial import (RunSpec, build_scenario, design_factors, design_hash,
                        design_ids, enumerate_design, MODES)
from .metrics import (MetricError, excess_throughput, fairness_index,
                      reserved_rate_utilization)
from .topology import build_topology

MASTER_SEED_ENV = "AFSAT_SEED"

CUSTOMER_FIELDS = [
    "simulation_id", "customer_id", "kind", "green_rate_bps",
    "yellow_rate_bps", "green_bucket_packets", "yellow_bucket_packets",
    "delivered_green_bytes", "delivered_yellow_bytes", "delivered_red_bytes",
    "utilization", "excess_bps",
]
RUN_FIELDS = [
    "simulation_id", "seed", "fairness", "tcp_mean_utilization",
    "udp_utilization", "total_excess_bps",
    "red_early_green", "red_early_yellow", "red_early_red",
    "red_overflow_green", "red_overflow_yellow", "red_overflow_red",
    "events_dispatched", "final_clock_us",
]
RESPONSES = {
    "fairness": "fairness",
    "tcp-utilization": "tcp_mean_utilization",
    "udp-utilization": "udp_utilization",
}


class RunFailureError(RuntimeError):
    """One or more simulations of a design failed."""

    def __init__(self, failures: list[tuple[int, str]]):
        detail = "; ".join(f"run {sid}: {msg}" for sid, msg in failures[:5])
        super().__init__(f"{len(failures)} run(s) failed: {detail}")
        self.failures = failures


class IncompleteResultsError(RuntimeError):
    def __init__(self, missing_ids: list[int]):
        shown = ", ".join(map(str, missing_ids[:20]))
        more = "" if len(missing_ids) <= 20 else f" (+{len(missing_ids) - 20} more)"
        super().__init__(f"missing results for simulation ids: {shown}{more}")
        self.missing_ids = missing_ids


class ReportError(ValueError):
    pass


@dataclass
class CustomerRow:
    simulation_id: int
    customer_id: int
    kind: str
    green_rate_bps: float
    yellow_rate_bps: float
    green_bucket_packets: int
    yellow_bucket_packets: int
    delivered_green_bytes: int
    delivered_yellow_bytes: int
    delivered_red_bytes: int
    utilization: float
    excess_bps: float


@dataclass
class RunRow:
    simulation_id: int
    seed: int
    fairness: float
    tcp_mean_utilization: float
    udp_utilization: float
    total_excess_bps: float
    red_early_green: int
    red_early_yellow: int
    red_early_red: int
    red_overflow_green: int
    red_overflow_yellow: int
    red_overflow_red: int
    events_dispatched: int
    final_clock_us: int


@dataclass
class RunResult:
    run: RunRow
    customers: list[CustomerRow]


def execute_scenario(scenario: ScenarioConfig,
                     simulation_id: int = 0) -> RunResult:
    """Build, run, audit, and summarize one simulation."""
    topo = build_topology(scenario)
    summary = topo.run()
    bad = topo.conservation_violations()
    if bad:
        raise RuntimeError(f"packet conservation violated on links: {bad}")

    customers: list[CustomerRow] = []
    tcp_utils: list[float] = []
    udp_utils: list[float] = []
    excesses: list[float] = []
    for cust in scenario.customers:
        stats = topo.stats[cust.customer_id]
        try:
            util = reserved_rate_utilization(stats, cust.green_rate_bps)
        except MetricError:
            util = math.nan
        try:
            excess = excess_throughput(stats)
        except MetricError:
            excess = math.nan
        customers.append(CustomerRow(
            simulation_id=simulation_id,
            customer_id=cust.customer_id,
            kind=cust.kind,
            green_rate_bps=cust.green_rate_bps,
            yellow_rate_bps=cust.yellow_rate_bps,
            green_bucket_packets=cust.green_bucket_packets,
            yellow_bucket_packets=cust.yellow_bucket_packets,
            delivered_green_bytes=stats.delivered_bytes[GREEN],
            delivered_yellow_bytes=stats.delivered_bytes[YELLOW],
            delivered_red_bytes=stats.delivered_bytes[RED],
            utilization=util,
            excess_bps=excess))
        excesses.append(excess)
        (tcp_utils if cust.kind == "tcp" else udp_utils).append(util)

    if any(math.isnan(x) for x in excesses):
        fairness = math.nan
    else:
        fairness = fairness_index(excesses)
    red_q = topo.red_queue
    run = RunRow(
        simulation_id=simulation_id,
        seed=scenario.seed,
        fairness=fairness,
        tcp_mean_utilization=_mean(tcp_utils),
        udp_utilization=udp_utils[0] if udp_utils else math.nan,
        total_excess_bps=math.fsum(excesses),
        red_early_green=red_q.early_drops[GREEN],
        red_early_yellow=red_q.early_drops[YELLOW],
        red_early_red=red_q.early_drops[RED],
        red_overflow_green=red_q.overflow_drops[GREEN],
        red_overflow_yellow=red_q.overflow_drops[YELLOW],
        red_overflow_red=red_q.overflow_drops[RED],
        events_dispatched=summary.events_dispatched,
        final_clock_us=summary.final_clock_us)
    return RunResult(run=run, customers=customers)


def _mean(xs: list[float]) -> float:
    return math.fsum(xs) / len(xs) if xs else math.nan


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(out_dir: Path, results: list[RunResult],
                  manifest: dict | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    results = sorted(results, key=lambda r: r.run.simulation_id)
    with open(out_dir / "customers.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CUSTOMER_FIELDS)
        for res in results:
            for row in res.customers:
                writer.writerow([_fmt(getattr(row, f)) for f in CUSTOMER_FIELDS])
    with open(out_dir / "runs.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_FIELDS)
        for res in results:
            writer.writerow([_fmt(getattr(res.run, f)) for f in RUN_FIELDS])
    if manifest is not None:
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_single(scenario: ScenarioConfig, out_dir: str | Path) -> RunResult:
    """Execute one scenario and persist its rows under `out_dir`."""
    scenario.validate()
    result = execute_scenario(scenario)
    write_results(Path(out_dir), [result],
                  manifest={"mode": "single", "master_seed": scenario.seed,
                            "tool_version": __version__, "runs": 1,
                            "failed": []})
    return result


def _design_worker(spec: RunSpec) -> tuple[int, RunResult | None, str]:
    try:
        result = execute_scenario(build_scenario(spec), spec.simulation_id)
        return spec.simulation_id, result, ""
    except Exception as exc:  # keep the pool alive; record per-run failure
        return spec.simulation_id, None, f"{type(exc).__name__}: {exc}"


def write_design_csv(out_dir: Path, mode: str, master_seed: int) -> None:
    specs = enumerate_design(mode, master_seed)
    names = [f.name for f in design_factors(mode)]
    with open(out_dir / "design.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["simulation_id", *names, "seed"])
        for spec in specs:
            levels = spec.factor_levels()
            writer.writerow([spec.simulation_id,
                             *[_fmt(levels[n]) for n in names], spec.seed])


def run_design(mode: str, out_dir: str | Path, jobs: int | None = None,
               master_seed: int = 1, design_only: bool = False) -> list[RunResult]:
    """Execute a full design; results are keyed and sorted by simulation id.

    Execution order and parallelism never affect the output: every run's
    seed derives from (master seed, simulation id) alone.
    """
    if mode not in MODES:
        raise ReportError(f"unknown design mode {mode!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_design_csv(out, mode, master_seed)
    if design_only:
        return []

    specs = enumerate_design(mode, master_seed)
    jobs = jobs or os.cpu_count() or 1
    results: list[RunResult] = []
    failures: list[tuple[int, str]] = []
    if jobs <= 1:
        outcomes = map(_design_worker, specs)
        for sid, result, err in outcomes:
            (results.append(result) if result is not None
             else failures.append((sid, err)))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for sid, result, err in pool.map(_design_worker, specs,
                                             chunksize=4):
                (results.append(result) if result is not None
                 else failures.append((sid, err)))

    manifest = {
        "mode": mode,
        "master_seed": master_seed,
        "design_hash": design_hash(mode),
        "tool_version": __version__,
        "runs": len(results),
        "failed": [{"simulation_id": sid, "error": err}
                   for sid, err in sorted(failures)],
    }
    write_results(out, results, manifest)
    if failures:
        raise RunFailureError(sorted(failures))
    return sorted(results, key=lambda r: r.run.simulation_id)


# ---------------------------------------------------------------------------
# reading results back and reporting

def read_manifest(result_dir: Path) -> dict:
    path = result_dir / "manifest.json"
    if not path.exists():
        raise ReportError(f"no manifest.json under {result_dir}")
    return json.loads(path.read_text())


def read_runs(result_dir: Path) -> dict[int, dict]:
    path = Path(result_dir) / "runs.csv"
    if not path.exists():
        raise ReportError(f"no runs.csv under {result_dir}")
    rows: dict[int, dict] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            sid = int(row["simulation_id"])
            rows[sid] = {
                "simulation_id": sid,
                "seed": int(row["seed"]),
                "fairness": float(row["fairness"]),
                "tcp_mean_utilization": float(row["tcp_mean_utilization"]),
                "udp_utilization": float(row["udp_utilization"]),
                "total_excess_bps": float(row["total_excess_bps"]),
            }
    return rows


def read_customers(result_dir: Path) -> list[dict]:
    path = Path(result_dir) / "customers.csv"
    if not path.exists():
        raise ReportError(f"no customers.csv under {result_dir}")
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "simulation_id": int(row["simulation_id"]),
                "customer_id": int(row["customer_id"]),
                "kind": row["kind"],
                "green_rate_bps": float(row["green_rate_bps"]),
                "yellow_rate_bps": float(row["yellow_rate_bps"]),
                "green_bucket_packets": int(row["green_bucket_packets"]),
                "yellow_bucket_packets": int(row["yellow_bucket_packets"]),
                "delivered_green_bytes": int(row["delivered_green_bytes"]),
                "delivered_yellow_bytes": int(row["delivered_yellow_bytes"]),
                "delivered_red_bytes": int(row["delivered_red_bytes"]),
                "utilization": float(row["utilization"]),
                "excess_bps": float(row["excess_bps"]),
            })
    return out


def response_table(result_dir: str | Path, response: str) -> ResponseTable:
    """Assemble the full-factorial response table for one response metric."""
    result_dir = Path(result_dir)
    if response not in RESPONSES:
        raise ReportError(f"unknown response {response!r}; "
                          f"choose from {sorted(RESPONSES)}")
    manifest = read_manifest(result_dir)
    mode = manifest.get("mode")
    if mode not in MODES:
        raise ReportError(f"manifest mode {mode!r} is not a design mode")
    runs = read_runs(result_dir)
    expected = design_ids(mode)
    missing = [sid for sid in expected if sid not in runs]
    if missing:
        raise IncompleteResultsError(missing)

    factors = design_factors(mode)
    table = ResponseTable(factors)
    column = RESPONSES[response]
    for spec in enumerate_design(mode, manifest.get("master_seed", 1)):
        levels = spec.factor_levels()
        key = tuple(levels[f.name] for f in factors)
        table.add(key, runs[spec.simulation_id][column])
    return table


def write_report(result_dir: str | Path, response: str,
                 out_dir: str | Path | None = None) -> AnovaReport:
    """Emit figure-ready CSVs plus the allocation-of-variation report."""
    result_dir = Path(result_dir)
    out = Path(out_dir) if out_dir is not None else result_dir
    out.mkdir(parents=True, exist_ok=True)
    runs = read_runs(result_dir)
    ordered = [runs[sid] for sid in sorted(runs)]

    def figure_csv(name: str, column: str) -> None:
        with open(out / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["simulation_id", column])
            for row in ordered:
                writer.writerow([row["simulation_id"], _fmt(row[column])])

    figure_csv("fairness_vs_id.csv", "fairness")
    figure_csv("tcp_utilization_vs_id.csv", "tcp_mean_utilization")
    figure_csv("udp_utilization_vs_id.csv", "udp_utilization")

    table = response_table(result_dir, response)
    report = allocate_variation(table, response=response)
    pct = report.allocation_pct()
    with open(out / f"anova_{response}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term", "kind", "variation", "allocation_pct"])
        for term, p in report.ranked_terms():
            kind = "interaction" if isinstance(term, tuple) else "main"
            writer.writerow([term_label(term), kind,
                             _fmt(report.variation[term]), _fmt(p)])
        writer.writerow(["residual", "residual",
                         _fmt(report.residual_variation),
                         _fmt(report.residual_pct())])
    (out / f"anova_{response}.txt").write_text(
        "\n".join(report_lines(report)) + "\n")
    return report
