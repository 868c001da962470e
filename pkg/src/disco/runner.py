"""Execute every (experiment, seed) task of a config and stream rows to CSV."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import kernels
from .config import ExperimentConfig
from .core import AlignedDataset, CycleRecord
from .data import align, generate_synthetic, load_descriptor_table, load_outcome_table, zscore_outcomes
from .loop import RunSpec, run_active_learning

log = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "experiment_id", "acquisition", "model", "batch_size", "seed",
    "cycle", "n_acquired", "test_mse", "hit_ratio", "wall_time_s",
)


def load_dataset(cfg: ExperimentConfig) -> AlignedDataset:
    if cfg.synthetic is not None:
        data = generate_synthetic(cfg.synthetic)
    else:
        data = align(load_descriptor_table(cfg.descriptors), load_outcome_table(cfg.outcomes))
    if cfg.zscore_outcomes:
        data = zscore_outcomes(data)
    return data


def _row(experiment_id: str, spec: RunSpec, rec: CycleRecord) -> list:
    return [
        experiment_id, spec.acquisition_kind, spec.model_kind, spec.batch_size, spec.seed,
        rec.cycle, rec.n_acquired_total, repr(rec.test_mse), repr(rec.hit_ratio),
        f"{rec.wall_time_s:.6f}",
    ]


def _run_task(data: AlignedDataset, spec: RunSpec):
    """Worker entry point; returns the completed records and an error message or None."""
    records: list[CycleRecord] = []
    try:
        run_active_learning(data, spec, on_record=records.append)
    except Exception as exc:  # reported per run; the sweep continues
        return records, f"{type(exc).__name__}: {exc}"
    return records, None


class ResultsWriter:
    """Single writer that keeps ``results.csv`` ordered by (task, cycle)."""

    def __init__(self, path: Path):
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(RESULT_COLUMNS)
        self._fh.flush()

    def write(self, rows) -> None:
        self._w.writerows(rows)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def execute(cfg: ExperimentConfig, data: AlignedDataset, jobs: int = 1) -> int:
    """Run all tasks; return the number of failed runs."""
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "config": str(cfg.source) if cfg.source else None,
        "provenance": list(data.provenance),
        "n_units": data.n,
        "q": data.q,
        "zscore_outcomes": cfg.zscore_outcomes,
        "seeds": list(cfg.seeds),
        "experiments": [e.experiment_id for e in cfg.experiments],
        "kernel_backend": kernels.BACKEND,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    tasks = list(cfg.tasks())
    writer = ResultsWriter(out / "results.csv")
    errors = []
    try:
        if jobs <= 1:
            for exp, spec in tasks:
                def emit(rec, exp=exp, spec=spec):
                    writer.write([_row(exp.experiment_id, spec, rec)])

                try:
                    run_active_learning(data, spec, on_record=emit)
                except Exception as exc:
                    errors.append((exp.experiment_id, spec.seed, f"{type(exc).__name__}: {exc}"))
                    log.error("%s seed %d failed: %s", exp.experiment_id, spec.seed, exc)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_task, data, spec) for _, spec in tasks]
                for (exp, spec), fut in zip(tasks, futures):
                    records, err = fut.result()
                    if err is not None:
                        errors.append((exp.experiment_id, spec.seed, err))
                        log.error("%s seed %d failed: %s", exp.experiment_id, spec.seed, err)
                    writer.write([_row(exp.experiment_id, spec, r) for r in records])
    finally:
        writer.close()

    err_path = out / "errors.log"
    if errors:
        with open(err_path, "w", encoding="utf-8") as fh:
            for eid, seed, msg in errors:
                fh.write(f"{eid}\tseed={seed}\t{msg}\n")
    elif err_path.exists():
        err_path.unlink()
    return len(errors)

