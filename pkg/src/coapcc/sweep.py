"""Sweep execution and CSV output for carried-vs-offered-load curves."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from coapcc.cc_policies import PolicyKind
from coapcc.config import ScenarioConfig
from coapcc.engine import SimulationError, run
from coapcc.topology import TOPOLOGIES

log = logging.getLogger(__name__)

COLUMNS = ["policy", "topology", "ldr", "offered_kbps", "seed", "pdr", "carried_kbps",
           "mean_delay_s", "p95_delay_s", "mac_overflows", "retransmissions",
           "failed_exchanges", "status"]
METRIC_COLUMNS = COLUMNS[5:12]
MEAN_SEED = "mean"

# figure id -> (topology, ldr)
FIGURES = {
    "fig8": ("grid6", 1.0), "fig9": ("grid6", 0.5), "fig10": ("grid6", 0.25),
    "fig11": ("chain", 1.0), "fig12": ("chain", 0.5), "fig13": ("chain", 0.25),
    "fig14": ("dumbbell", 1.0), "fig15": ("dumbbell", 0.5), "fig16": ("dumbbell", 0.25),
    "fig17": ("grid7", 1.0), "fig18": ("grid7", 0.5), "fig19": ("grid7", 0.25),
}

_POLICY_ORDER = {p.value: i for i, p in enumerate(PolicyKind)}
_TOPOLOGY_ORDER = {t: i for i, t in enumerate(TOPOLOGIES)}


def fmt(value) -> str:
    """Lossless text form: ``repr`` for floats, ``str`` otherwise."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def row_key(row: dict) -> tuple:
    seed = row["seed"]
    return (_POLICY_ORDER[row["policy"]], _TOPOLOGY_ORDER[row["topology"]], -float(row["ldr"]),
            float(row["offered_kbps"]), 1 if seed == MEAN_SEED else 0,
            0 if seed == MEAN_SEED else int(seed))


def run_cell(config: ScenarioConfig, cell: tuple) -> dict:
    """Simulate one (policy, topology, ldr, load, seed) cell into a CSV row dict."""
    policy, topology, ldr, load, seed = cell
    row = {"policy": policy.value, "topology": topology, "ldr": float(ldr),
           "offered_kbps": float(load), "seed": seed}
    try:
        result = run(config.scenario(policy, topology, ldr, load, seed))
        m = result.metrics
        if not m.conservation_ok:
            raise SimulationError("frame conservation violated")
        if m.requests_received > m.requests_sent:
            raise SimulationError("received more requests than were sent")
    except (SimulationError, ValueError, RuntimeError) as exc:
        log.error("cell %s failed: %s", cell, exc)
        row.update({c: "" for c in METRIC_COLUMNS})
        row["status"] = f"error: {exc}"
        return row
    row.update({
        "pdr": m.pdr,
        "carried_kbps": m.carried_load_kbps,
        "mean_delay_s": m.mean_delay_s,
        "p95_delay_s": m.p95_delay_s,
        "mac_overflows": m.mac_overflows,
        "retransmissions": m.retransmissions,
        "failed_exchanges": m.failed_exchanges,
        "status": "ok",
    })
    return row


def _run_cell_star(args: tuple) -> dict:
    return run_cell(*args)


def summarize(rows: list[dict]) -> list[dict]:
    """One mean-over-seeds row per (policy, topology, ldr, load) group of ok rows."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        if r["seed"] == MEAN_SEED:
            continue
        groups.setdefault((r["policy"], r["topology"], r["ldr"], r["offered_kbps"]), []).append(r)
    out = []
    for (policy, topology, ldr, load), members in groups.items():
        ok = [r for r in members if r["status"] == "ok"]
        summary = {"policy": policy, "topology": topology, "ldr": ldr, "offered_kbps": load,
                   "seed": MEAN_SEED}
        if ok:
            for c in METRIC_COLUMNS:
                summary[c] = mean([float(r[c]) for r in ok])
            summary["status"] = "ok" if len(ok) == len(members) else f"partial {len(ok)}/{len(members)}"
        else:
            summary.update({c: "" for c in METRIC_COLUMNS})
            summary["status"] = "error: no successful seeds"
        out.append(summary)
    return out


def mean(values: list[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def run_sweep(config: ScenarioConfig, parallel: int = 1) -> list[dict]:
    """All cell rows plus summary rows, in deterministic sorted order."""
    cells = config.cells
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            rows = list(pool.map(_run_cell_star, [(config, c) for c in cells], chunksize=4))
    else:
        rows = [run_cell(config, c) for c in cells]
    rows.extend(summarize(rows))
    rows.sort(key=row_key)
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def write_csv(rows: list[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(rows_to_csv(rows))
    return path


def read_csv(path: str | Path) -> list[dict]:
    """Parse a sweep CSV back into row dicts with numeric fields restored."""
    out = []
    with open(path, encoding="utf-8", newline="") as f:
        for rec in csv.DictReader(f):
            row = dict(rec)
            row["ldr"] = float(row["ldr"])
            row["offered_kbps"] = float(row["offered_kbps"])
            if row["seed"] != MEAN_SEED:
                row["seed"] = int(row["seed"])
            for c in METRIC_COLUMNS:
                if row[c] != "":
                    row[c] = _number(row[c])
            out.append(row)
    return out


def _number(text: str) -> int | float:
    try:
        return int(text)
    except ValueError:
        return float(text)


def figure_table(rows: list[dict], figure_id: str) -> list[dict]:
    """Offered load on x, mean carried load of each policy as y-series."""
    if figure_id not in FIGURES:
        raise KeyError(f"unknown figure id {figure_id!r}; valid ids: {', '.join(FIGURES)}")
    topology, ldr = FIGURES[figure_id]
    wanted = [r for r in rows if r["topology"] == topology and float(r["ldr"]) == ldr]
    per_seed: dict[tuple[float, str], list[float]] = {}
    loads = set()
    for r in wanted:
        loads.add(float(r["offered_kbps"]))
        if r["seed"] == MEAN_SEED or r["status"] != "ok":
            continue
        per_seed.setdefault((float(r["offered_kbps"]), r["policy"]), []).append(float(r["carried_kbps"]))
    table = []
    for load in sorted(loads):
        entry = {"offered_kbps": load}
        missing = []
        for p in PolicyKind:
            vals = per_seed.get((load, p.value))
            if vals:
                entry[p.value] = mean(vals)
            else:
                entry[p.value] = ""
                missing.append(p.value)
        entry["missing"] = ";".join(missing)
        table.append(entry)
    return table


def emit_figure_data(rows: list[dict], figure_id: str, out_dir: str | Path) -> Path:
    table = figure_table(rows, figure_id)
    topology, ldr = FIGURES[figure_id]
    cols = ["offered_kbps"] + [p.value for p in PolicyKind] + ["missing"]
    path = Path(out_dir) / f"{figure_id}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\r\n")
        w.writerow(cols)
        for entry in table:
            w.writerow([fmt(entry[c]) for c in cols])
    if not table or any(e["missing"] for e in table):
        log.warning("%s (%s, ldr %s): cells missing, gaps flagged", figure_id, topology, ldr)
    return path


def covered_figures(rows: list[dict]) -> list[str]:
    present = {(r["topology"], float(r["ldr"])) for r in rows}
    return [fid for fid, key in FIGURES.items() if key in present]
