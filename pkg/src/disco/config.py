"""Experiment configuration files.

A config is plain ``key = value`` text with an ``[experiment]`` section and
one or more ``[run.N]`` sections::

    [experiment]
    descriptors = string.tsv      ; or: synthetic = linear
    outcomes = assay.tsv
    seeds = 0, 1, 2, 3, 4
    output = results

    [run.1]
    model = ensemble_mlp
    acquisition = random, topuncertain, badge
    batch_size = 16, 64
    cycles = auto

List-valued ``acquisition`` and ``batch_size`` expand to their cross
product.  Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .data import SyntheticSpec
from .errors import ConfigurationError
from .loop import RunSpec

_RUN_SECTION = re.compile(r"^run\.(\d+)$")

_EXPERIMENT_KEYS = {
    "descriptors", "outcomes", "synthetic", "seeds", "output", "plots", "zscore_outcomes",
    "jobs", "synthetic_n", "synthetic_q", "synthetic_noise_sd", "synthetic_seed",
    "synthetic_n_clusters", "synthetic_hit_fraction",
}
_RUN_KEYS = {
    "model", "acquisition", "batch_size", "cycles", "temperature", "gamma", "adv_steps",
    "m", "hidden_grid", "max_epochs", "hit_quantile", "test_fraction",
}


@dataclass(frozen=True)
class Experiment:
    """One (run section, acquisition, batch size) combination, before seeding."""

    experiment_id: str
    run_id: int
    spec: RunSpec


@dataclass(frozen=True)
class ExperimentConfig:
    experiments: tuple[Experiment, ...]
    seeds: tuple[int, ...]
    output_dir: Path
    descriptors: Path | None = None
    outcomes: Path | None = None
    synthetic: SyntheticSpec | None = None
    plots: bool = False
    zscore_outcomes: bool = False
    jobs: int | None = None
    source: Path | None = field(default=None, compare=False)

    def tasks(self):
        """(experiment, seeded RunSpec) pairs in output order."""
        for exp in self.experiments:
            for s in self.seeds:
                yield exp, replace(exp.spec, seed=s)


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"{key}: expected an integer, got {value!r}") from None


def _float(value: str, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigurationError(f"{key}: expected a number, got {value!r}") from None


def _bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"{key}: expected a boolean, got {value!r}")


def _check_keys(section: str, keys, allowed) -> None:
    unknown = sorted(set(keys) - allowed)
    if unknown:
        raise ConfigurationError(f"[{section}]: unknown key(s) {', '.join(unknown)}")


def _parse_run(section: str, run_id: int, items: dict) -> list[Experiment]:
    _check_keys(section, items, _RUN_KEYS)
    model = items.get("model", "ensemble_mlp").strip()
    acquisitions = _split_list(items.get("acquisition", "random"))
    batch_sizes = [_int(b, f"{section}.batch_size") for b in _split_list(items.get("batch_size", "16"))]
    if not acquisitions or not batch_sizes:
        raise ConfigurationError(f"[{section}]: acquisition and batch_size must be non-empty")
    kw = {}
    cycles = items.get("cycles", "auto").strip()
    kw["num_cycles"] = None if cycles == "auto" else _int(cycles, f"{section}.cycles")
    for key, conv in (("temperature", _float), ("gamma", _float), ("adv_steps", _int),
                      ("m", _int), ("max_epochs", _int), ("hit_quantile", _float),
                      ("test_fraction", _float)):
        if key in items:
            kw[key] = conv(items[key], f"{section}.{key}")
    if "hidden_grid" in items:
        kw["hidden_grid"] = tuple(
            _int(h, f"{section}.hidden_grid") for h in _split_list(items["hidden_grid"])
        )
    out = []
    for a in acquisitions:
        for b in batch_sizes:
            try:
                spec = RunSpec(model_kind=model, acquisition_kind=a, batch_size=b, **kw)
            except ConfigurationError as exc:
                raise ConfigurationError(f"[{section}]: {exc}") from None
            out.append(Experiment(f"run{run_id}_{model}_{a}_b{b}", run_id, spec))
    return out


def parse_config_text(text: str, base_dir: Path = Path(".")) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None
    if "experiment" not in cp:
        raise ConfigurationError("missing [experiment] section")
    ex = dict(cp["experiment"])
    _check_keys("experiment", ex, _EXPERIMENT_KEYS)

    run_sections = []
    for name in cp.sections():
        if name == "experiment":
            continue
        m = _RUN_SECTION.match(name)
        if not m:
            raise ConfigurationError(f"unexpected section [{name}]")
        run_sections.append((int(m.group(1)), name))
    if not run_sections:
        raise ConfigurationError("config defines no [run.N] sections")
    experiments = []
    for run_id, name in sorted(run_sections):
        experiments.extend(_parse_run(name, run_id, dict(cp[name])))
    ids = [e.experiment_id for e in experiments]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("duplicate (run, acquisition, batch_size) combinations")

    seeds = tuple(_int(s, "experiment.seeds") for s in _split_list(ex.get("seeds", "0")))
    if not seeds:
        raise ConfigurationError("at least one seed is required")

    def path(key):
        return (base_dir / ex[key]).resolve() if key in ex else None

    synthetic = None
    if "synthetic" in ex:
        if "descriptors" in ex or "outcomes" in ex:
            raise ConfigurationError("give either synthetic or descriptors/outcomes, not both")
        skw = {"kind": ex["synthetic"].strip()}
        for key, field_name, conv in (
            ("synthetic_n", "n", _int), ("synthetic_q", "q", _int),
            ("synthetic_noise_sd", "noise_sd", _float), ("synthetic_seed", "seed", _int),
            ("synthetic_n_clusters", "n_clusters", _int),
            ("synthetic_hit_fraction", "hit_cluster_fraction", _float),
        ):
            if key in ex:
                skw[field_name] = conv(ex[key], f"experiment.{key}")
        synthetic = SyntheticSpec(**skw)
    elif "descriptors" not in ex or "outcomes" not in ex:
        raise ConfigurationError("[experiment] needs descriptors and outcomes, or synthetic")

    return ExperimentConfig(
        experiments=tuple(experiments),
        seeds=seeds,
        output_dir=(base_dir / ex.get("output", "results")).resolve(),
        descriptors=path("descriptors"),
        outcomes=path("outcomes"),
        synthetic=synthetic,
        plots=_bool(ex.get("plots", "false"), "experiment.plots"),
        zscore_outcomes=_bool(ex.get("zscore_outcomes", "false"), "experiment.zscore_outcomes"),
        jobs=_int(ex["jobs"], "experiment.jobs") if "jobs" in ex else None,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    cfg = parse_config_text(text, path.parent)
    return replace(cfg, source=path.resolve())
