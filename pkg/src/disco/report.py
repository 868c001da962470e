"""Aggregate ``results.csv`` across seeds and draw learning curves."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path

from .errors import DataFormatError

METRICS = ("test_mse", "hit_ratio")
_REQUIRED = {"acquisition", "model", "batch_size", "seed", "cycle", "n_acquired", *METRICS}


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def read_results(path) -> list[dict]:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = _REQUIRED - set(reader.fieldnames or ())
            if missing:
                raise DataFormatError(f"missing column(s) {', '.join(sorted(missing))}", path, 1)
            rows = list(reader)
    except FileNotFoundError:
        raise DataFormatError("file not found", path) from None
    if not rows:
        raise DataFormatError("results file has no rows", path)
    return rows


def summarize(rows: list[dict]) -> list[dict]:
    """Mean and sample standard deviation per (acquisition, model, batch_size, cycle)."""
    groups = defaultdict(list)
    for r in rows:
        key = (r["acquisition"], r["model"], int(r["batch_size"]), int(r["cycle"]))
        groups[key].append(r)
    out = []
    for (a, m, b, c), rs in sorted(groups.items()):
        entry = {
            "acquisition": a,
            "model": m,
            "batch_size": b,
            "cycle": c,
            "n_acquired": int(round(_mean_std([float(r["n_acquired"]) for r in rs])[0])),
            "n_seeds": len(rs),
        }
        for metric in METRICS:
            mean, std = _mean_std([float(r[metric]) for r in rs])
            entry[f"{metric}_mean"] = mean
            entry[f"{metric}_std"] = std
        out.append(entry)
    return out


def plot_summary(summary: list[dict], out_dir) -> list[Path]:
    """One SVG per (model, batch size, metric); x = units acquired, one line per acquisition."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    panels = defaultdict(lambda: defaultdict(list))
    for e in summary:
        panels[(e["model"], e["batch_size"])][e["acquisition"]].append(e)
    written = []
    for (model, b), series in sorted(panels.items()):
        for metric in METRICS:
            fig, ax = plt.subplots(figsize=(5, 3.5))
            for acq_name, pts in sorted(series.items()):
                pts = sorted(pts, key=lambda e: e["cycle"])
                x = [e["n_acquired"] for e in pts]
                mu = [e[f"{metric}_mean"] for e in pts]
                sd = [e[f"{metric}_std"] for e in pts]
                ax.plot(x, mu, label=acq_name, marker="o", ms=2.5)
                ax.fill_between(x, [m - s for m, s in zip(mu, sd)],
                                [m + s for m, s in zip(mu, sd)], alpha=0.15)
            ax.set_xlabel("units acquired (cycle x batch size)")
            ax.set_ylabel("test MSE" if metric == "test_mse" else "hit ratio")
            ax.set_title(f"{model}, b={b}")
            ax.legend(fontsize=7)
            fig.tight_layout()
            path = out_dir / f"{metric}_{model}_b{b}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    return written


def write_report(results_path, out_path=None, plots: bool = False) -> Path:
    results_path = Path(results_path)
    summary = summarize(read_results(results_path))
    out_path = Path(out_path) if out_path else results_path.with_name("summary.json")
    out_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if plots:
        plot_summary(summary, out_path.parent)
    return out_path
