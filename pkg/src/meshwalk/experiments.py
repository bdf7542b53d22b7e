"""Experiment presets: parameter grids and comparison deltas."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from meshwalk.config import RunConfig, static_lod_mode
from meshwalk.engine import METRICS, MetricsReport, run

CLIENT_COUNTS = (10, 20, 30, 40)


@dataclass(frozen=True)
class Cell:
    name: str
    overrides: tuple


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    cells: tuple
    # (label, baseline cell, candidate cell)
    comparisons: tuple = ()

    def configs(self, base: RunConfig):
        for cell in self.cells:
            cfg = base
            for key, value in cell.overrides:
                cfg = static_lod_mode(cfg, value) if key == "static" else cfg.set(key, value)
            yield cell.name, cfg.validate()


def _exp1():
    common = (("clients.count", 20), ("clients.device_type", "TypeI"), ("clients.cache_bytes", 2 * 1024 * 1024))
    cells = (Cell("progressive", common), Cell("static_50", common + (("static", 50),)),
             Cell("static_100", common + (("static", 100),)))
    return ExperimentPreset("exp1_pm_vs_static", "progressive vs static 50% / 100% delivery", cells,
                            (("progressive_vs_static_100", "static_100", "progressive"),
                             ("progressive_vs_static_50", "static_50", "progressive")))


def _exp2():
    common = (("clients.count", 20), ("clients.device_type", "TypeII"), ("clients.cache_bytes", 0))
    cells = (Cell("constrained", common + (("run.constrained", True),)),
             Cell("unconstrained", common + (("run.constrained", False),)))
    return ExperimentPreset("exp2_constrained", "device-constrained vs unconstrained resolution", cells,
                            (("constrained_vs_unconstrained", "unconstrained", "constrained"),))


def _exp3():
    common = (("clients.count", 20), ("clients.device_type", "TypeII"))
    cells = (Cell("cache_2MB", common + (("clients.cache_bytes", 2 * 1024 * 1024),)),
             Cell("cache_0MB", common + (("clients.cache_bytes", 0),)))
    return ExperimentPreset("exp3_cache", "2 MB client cache vs none", cells,
                            (("cache_vs_no_cache", "cache_0MB", "cache_2MB"),))


def _exp4():
    cells = []
    for dev in ("TypeI", "TypeII"):
        for pat in ("CP", "CCP", "RW"):
            for n in CLIENT_COUNTS:
                cells.append(Cell(f"{dev}_{pat}_{n}", (("clients.count", n), ("clients.device_type", dev),
                                                       ("clients.pattern", pat))))
    comps = tuple((f"{dev}_{p}_vs_RW_{n}", f"{dev}_RW_{n}", f"{dev}_{p}_{n}")
                  for dev in ("TypeI", "TypeII") for p in ("CP", "CCP") for n in CLIENT_COUNTS)
    return ExperimentPreset("exp4_patterns", "movement patterns across client counts and device types",
                            tuple(cells), comps)


def _exp5():
    cells = tuple(Cell(f"{dev}_{n}", (("clients.count", n), ("clients.device_type", dev)))
                  for dev in ("TypeI", "TypeII") for n in CLIENT_COUNTS)
    comps = tuple((f"{dev}_{n}_vs_10", f"{dev}_10", f"{dev}_{n}") for dev in ("TypeI", "TypeII")
                  for n in CLIENT_COUNTS[1:])
    return ExperimentPreset("exp5_combined", "client count sweep for both device types", cells, comps)


PRESETS = {p.name: p for p in (_exp1(), _exp2(), _exp3(), _exp4(), _exp5())}


def _run_cell(args):
    name, cfg, trace = args
    return name, run(cfg, trace=trace)


def run_experiment(preset, base: RunConfig | None = None, jobs: int = 1, trace: bool = False):
    """Run every cell of ``preset``; returns ``{cell name: MetricsReport}`` in grid order."""
    if isinstance(preset, str):
        preset = PRESETS[preset]
    base = RunConfig() if base is None else base
    work = [(name, cfg, trace) for name, cfg in preset.configs(base)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, work))
    else:
        results = [_run_cell(w) for w in work]
    return dict(results)


def improvement(baseline: float, candidate: float) -> float:
    """Relative reduction of ``candidate`` against ``baseline`` in percent."""
    if baseline == 0 or math.isnan(baseline) or math.isnan(candidate):
        return math.nan
    return 100.0 * (baseline - candidate) / baseline


def comparison_rows(preset, reports: dict[str, MetricsReport]):
    """Long-format rows: post-warm-up value per cell, then deltas per comparison."""
    rows = []
    for name, rep in reports.items():
        for m in METRICS:
            rows.append(("cell", name, m, rep.summary_post[m]))
    for label, base, cand in preset.comparisons:
        for m in METRICS:
            b, c = reports[base].summary_post[m], reports[cand].summary_post[m]
            rows.append(("delta_pct", label, m, improvement(b, c)))
    return rows


def write_experiment(preset, reports, out_dir, trace: bool = False) -> Path:
    out = Path(out_dir)
    for name, rep in reports.items():
        rep.write(out / name, trace=trace)
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "name", "metric", "value"])
        for kind, name, m, v in comparison_rows(preset, reports):
            w.writerow([kind, name, m, repr(float(v))])
    return out
