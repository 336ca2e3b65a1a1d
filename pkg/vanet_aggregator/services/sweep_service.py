#!/usr/bin/env python3
"""
Sweep service.
Runs batches of seeded simulations, aggregates them per node count, runs the
verification bench and archives runs in the database.
"""

import logging
import math
import uuid
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime
from typing import Any, Dict, List, TextIO

import numpy as np
from sqlmodel import Session

from vanet_aggregator.config import CSV_SCHEMA_VERSION
from vanet_aggregator.database import Scheme, SweepRun
from vanet_aggregator.packets import sizing_table
from vanet_aggregator.settings import SimConfig
from vanet_aggregator.simulation.bench import verification_bench
from vanet_aggregator.simulation.engine import World
from vanet_aggregator.simulation.metrics import Metrics

logger = logging.getLogger(__name__)


def run_row(config: SimConfig, scheme: Scheme, metrics: Metrics) -> Dict[str, Any]:
    """One CSV row describing a single run."""
    values = metrics.as_row()
    values.pop("schema_version")
    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "node_count": config.node_count,
        "seed": config.seed,
        "scheme": scheme.value,
        **values,
    }


def simulate(config: SimConfig, baseline: bool = False, trace: TextIO | None = None) -> tuple[Dict[str, Any], Metrics]:
    """Run one simulation and describe it as a row."""
    scheme = Scheme.BASELINE if baseline else Scheme.AGGREGATED
    metrics = World(config, aggregation=not baseline, trace=trace).run()
    return run_row(config, scheme, metrics), metrics


def _run_pair(config: SimConfig) -> List[Dict[str, Any]]:
    aggregated, _ = simulate(config)
    baseline, _ = simulate(config, baseline=True)
    return [aggregated, baseline]


def sweep(
    config: SimConfig,
    node_counts: List[int],
    runs: int,
    seed: int,
    workers: int = 1,
) -> List[Dict[str, Any]]:
    """
    Run every (node count, seed) pair with and without aggregation.

    Seeds are seed .. seed + runs - 1. Rows come back sorted by
    (node_count, seed, scheme) whatever order the runs finish in.
    """
    if runs < 1:
        raise ValueError("runs must be positive")
    configs = [
        config.with_overrides(node_count=count, seed=seed + offset)
        for count in node_counts
        for offset in range(runs)
    ]
    logger.info("sweep: %d configurations, %d worker(s)", len(configs), workers)

    rows: List[Dict[str, Any]] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for pair in pool.map(_run_pair, configs):
                rows.extend(pair)
    else:
        for done, cfg in enumerate(configs, start=1):
            rows.extend(_run_pair(cfg))
            logger.debug("sweep progress %d/%d", done, len(configs))

    rows.sort(key=lambda row: (row["node_count"], row["seed"], row["scheme"]))
    return rows


def _number(value: Any) -> float:
    if value == "" or value is None:
        return math.nan
    return float(value)


def _stats(values: List[float]) -> tuple[float, float]:
    finite = [v for v in values if not math.isnan(v)]
    if not finite:
        return math.nan, math.nan
    return float(np.mean(finite)), float(np.std(finite))


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.6g}"


def summarize(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Means and standard deviations per node count."""
    summary = []
    for count in sorted({row["node_count"] for row in rows}):
        aggregated = [r for r in rows if r["node_count"] == count and r["scheme"] == Scheme.AGGREGATED.value]
        baseline = [r for r in rows if r["node_count"] == count and r["scheme"] == Scheme.BASELINE.value]

        def column(selection, name):
            return _stats([_number(r[name]) for r in selection])

        packets_agg = column(aggregated, "packets_total")
        packets_base = column(baseline, "packets_total")
        coverage_agg = column(aggregated, "coverage_time_s")
        coverage_base = column(baseline, "coverage_time_s")
        verified = column(aggregated, "mean_verified")
        detection = column(aggregated, "detection_rate")
        ratio = packets_agg[0] / packets_base[0] if packets_base[0] else math.nan
        summary.append(
            {
                "schema_version": CSV_SCHEMA_VERSION,
                "node_count": count,
                "runs": len(aggregated),
                "packets_aggregated_mean": _fmt(packets_agg[0]),
                "packets_aggregated_std": _fmt(packets_agg[1]),
                "packets_baseline_mean": _fmt(packets_base[0]),
                "packets_baseline_std": _fmt(packets_base[1]),
                "packet_ratio": _fmt(ratio),
                "coverage_aggregated_mean": _fmt(coverage_agg[0]),
                "coverage_aggregated_std": _fmt(coverage_agg[1]),
                "coverage_baseline_mean": _fmt(coverage_base[0]),
                "coverage_baseline_std": _fmt(coverage_base[1]),
                "mean_verified_mean": _fmt(verified[0]),
                "mean_verified_std": _fmt(verified[1]),
                "detection_rate_mean": _fmt(detection[0]),
                "detection_rate_std": _fmt(detection[1]),
                "false_reliable_total": sum(int(r["false_reliable"]) for r in aggregated),
            }
        )
    return summary


def bench_rows(config: SimConfig, runs: int | None = None) -> List[Dict[str, Any]]:
    """Checked-signature counts for every row of the sizing table."""
    runs = config.bench_runs if runs is None else runs
    rows = []
    for sizing in sizing_table():
        result = verification_bench(sizing.algo, sizing.packet_size, runs, config.seed, config.k)
        rows.append(
            {
                "schema_version": CSV_SCHEMA_VERSION,
                "hash": result.algo.label,
                "packet_size": result.packet_size,
                "n": result.n,
                "runs": result.runs,
                "mean_verified": f"{result.mean_verified:.6g}",
                "std_verified": f"{result.std_verified:.6g}",
            }
        )
    return rows


def archive_runs(session: Session, config: SimConfig, rows: List[Dict[str, Any]]) -> str:
    """
    Store the per-run rows of one sweep.

    Returns:
        The id given to the sweep
    """
    sweep_id = uuid.uuid4().hex
    created = datetime.now()
    config_json = config.model_dump_json()
    for row in rows:
        session.add(
            SweepRun(
                sweep_id=sweep_id,
                created_at=created,
                config_json=config_json,
                node_count=row["node_count"],
                seed=row["seed"],
                scheme=Scheme(row["scheme"]),
                packets_total=row["packets_total"],
                packets_w=row["packets_w"],
                packets_r=row["packets_r"],
                packets_s=row["packets_s"],
                packets_a=row["packets_a"],
                groups_formed=row["groups_formed"],
                coverage_time_s=_none_if_nan(_number(row["coverage_time_s"])),
                coverage_fraction=_none_if_nan(_number(row["coverage_fraction"])),
                mean_verified=_none_if_nan(_number(row["mean_verified"])),
                detection_rate=_none_if_nan(_number(row["detection_rate"])),
                false_reliable=row["false_reliable"],
            )
        )
    session.commit()
    logger.info("archived %d runs as sweep %s", len(rows), sweep_id)
    return sweep_id


def _none_if_nan(value: float) -> float | None:
    return None if math.isnan(value) else value

