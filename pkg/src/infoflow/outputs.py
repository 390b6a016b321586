"""Result files: rendering, parsing back, and schema checks.

CSV floats are written with 12 significant digits; JSON floats are full
doubles (NaN becomes ``null``).  Rendering is pure, so a run can build every
file in memory before touching the output directory.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from infoflow.pipeline import FlowResult
from infoflow.surrogates import SurrogateStats

OUTPUT_FILES = (
    "state_probs.csv",
    "sweep.csv",
    "flows.csv",
    "histograms.csv",
    "summary.json",
    "manifest.json",
)

CSV_COLUMNS = {
    "state_probs.csv": {"instrument": str, "role": str, "d": float, "p0": float, "p1": float, "p2": float},
    "sweep.csv": {
        "d": float,
        "mean_te_i_to_s": float,
        "mean_te_s_to_i": float,
        "mean_shuffle_i_to_s": float,
        "mean_shuffle_s_to_i": float,
        "n_stocks": int,
    },
    "flows.csv": {
        "stock_id": str,
        "d": float,
        "te_index_to_stock": float,
        "te_stock_to_index": float,
        "shuffle_i_to_s_mean": float,
        "shuffle_i_to_s_std": float,
        "shuffle_s_to_i_mean": float,
        "shuffle_s_to_i_std": float,
        "n_surrogates": int,
        "seed": int,
        "sample_count": int,
    },
    "histograms.csv": {"table": str, "bin_left": float, "bin_right": float, "count": int},
}

_ranked = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["stock_id", "te"],
        "properties": {"stock_id": {"type": "string"}, "te": {"type": "number"}},
        "additionalProperties": False,
    },
}
_nullable_number = {"type": ["number", "null"]}

JSON_SCHEMAS = {
    "summary.json": {
        "type": "object",
        "required": [
            "d", "n_pairs", "pearson_r", "pearson_r_stderr", "fraction_reverse_dominant",
            "mean_te_i_to_s", "mean_te_s_to_i", "top_k_i_to_s", "top_k_s_to_i",
        ],
        "properties": {
            "d": {"type": ["number", "string"]},
            "n_pairs": {"type": "integer", "minimum": 0},
            "pearson_r": {"type": ["number", "null"], "minimum": -1, "maximum": 1},
            "pearson_r_stderr": _nullable_number,
            "fraction_reverse_dominant": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
            "mean_te_i_to_s": _nullable_number,
            "mean_te_s_to_i": _nullable_number,
            "top_k_i_to_s": _ranked,
            "top_k_s_to_i": _ranked,
        },
    },
    "manifest.json": {
        "type": "object",
        "required": ["tool", "version", "backend", "versions", "command", "seed", "config",
                     "index_id", "stocks", "n_returns", "dropped_instruments", "dropped_dates", "files"],
        "properties": {
            "tool": {"const": "infoflow"},
            "version": {"type": "string"},
            "backend": {"enum": ["cython", "python"]},
            "versions": {"type": "object", "additionalProperties": {"type": "string"}},
            "command": {"type": "string"},
            "seed": {"type": "integer"},
            "config": {"type": "object"},
            "index_id": {"type": "string"},
            "stocks": {"type": "array", "items": {"type": "string"}},
            "n_returns": {"type": "integer", "minimum": 0},
            "dropped_instruments": {"type": "array", "items": {"type": "string"}},
            "dropped_dates": {"type": "array", "items": {"type": "string"}},
            "files": {"type": "array", "items": {"type": "string"}},
        },
    },
}


def fmt(x):
    """Twelve significant digits; the CSV float format."""
    return format(float(x), ".12g")


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def json_text(obj):
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def render_state_probs(probs_by_id, d_grid, index_id):
    header = list(CSV_COLUMNS["state_probs.csv"])
    rows = []
    stock_tables = []
    for inst, table in probs_by_id.items():
        role = "index" if inst == index_id else "stock"
        if role == "stock":
            stock_tables.append(table)
        rows.extend([inst, role, d, *p] for d, p in zip(d_grid, table.tolist()))
    if stock_tables:
        mean = np.mean(stock_tables, axis=0)
        rows.extend(["stocks_mean", "stocks_mean", d, *p] for d, p in zip(d_grid, mean.tolist()))
    return _csv_text(header, rows)


def render_sweep(sweep, n_stocks):
    return _csv_text(list(CSV_COLUMNS["sweep.csv"]), ([*row, n_stocks] for row in sweep.rows()))


def render_flows(flows):
    rows = (
        [
            f.stock_id, float("nan") if f.d is None else float(f.d), f.te_index_to_stock, f.te_stock_to_index,
            f.surrogate_i_to_s.mean, f.surrogate_i_to_s.std_dev,
            f.surrogate_s_to_i.mean, f.surrogate_s_to_i.std_dev,
            f.surrogate_i_to_s.n_surrogates, f.surrogate_i_to_s.seed, f.sample_count,
        ]
        for f in flows
    )
    return _csv_text(list(CSV_COLUMNS["flows.csv"]), rows)


def render_histograms(hists):
    rows = []
    for name, h in hists.items():
        rows.extend([name, lo, hi, c] for lo, hi, c in h.rows())
    return _csv_text(list(CSV_COLUMNS["histograms.csv"]), rows)


def summary_dict(summary, d):
    return {
        "d": d,
        "n_pairs": summary.n_pairs,
        "pearson_r": summary.pearson_r,
        "pearson_r_stderr": summary.pearson_r_stderr,
        "fraction_reverse_dominant": summary.fraction_reverse_dominant,
        "mean_te_i_to_s": summary.mean_te_i_to_s,
        "mean_te_s_to_i": summary.mean_te_s_to_i,
        "top_k_i_to_s": [{"stock_id": s, "te": v} for s, v in summary.top_k_i_to_s],
        "top_k_s_to_i": [{"stock_id": s, "te": v} for s, v in summary.top_k_s_to_i],
    }


def read_csv(path):
    """Rows of a result CSV as dicts with typed values."""
    path = Path(path)
    types = CSV_COLUMNS[path.name]
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(types):
            raise ValueError(f"{path.name}: columns {reader.fieldnames} != {list(types)}")
        return [{k: types[k](v) for k, v in row.items()} for row in reader]


def read_flows_csv(path) -> list[FlowResult]:
    flows = []
    for r in read_csv(path):
        flows.append(
            FlowResult(
                r["stock_id"], r["d"], r["te_index_to_stock"], r["te_stock_to_index"],
                SurrogateStats(r["shuffle_i_to_s_mean"], r["shuffle_i_to_s_std"], r["n_surrogates"], r["seed"]),
                SurrogateStats(r["shuffle_s_to_i_mean"], r["shuffle_s_to_i_std"], r["n_surrogates"], r["seed"]),
                r["sample_count"],
            )
        )
    return flows


def validate_file(path):
    """Raise if ``path`` does not match the schema for its file name."""
    path = Path(path)
    if path.name in CSV_COLUMNS:
        rows = read_csv(path)
        if path.name == "state_probs.csv":
            for r in rows:
                if abs(r["p0"] + r["p1"] + r["p2"] - 1.0) > 1e-9:
                    raise ValueError(f"{path.name}: probabilities of {r['instrument']} at d={r['d']} do not sum to 1")
        if path.name == "histograms.csv" and any(r["count"] < 0 for r in rows):
            raise ValueError(f"{path.name}: negative count")
    elif path.name in JSON_SCHEMAS:
        jsonschema.validate(json.loads(path.read_text()), JSON_SCHEMAS[path.name])
    else:
        raise ValueError(f"no schema for {path.name}")


def validate_output_dir(path, names=OUTPUT_FILES):
    for name in names:
        validate_file(Path(path) / name)
