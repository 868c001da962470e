"""Descriptor/outcome table I/O, unit alignment and synthetic datasets.

File format (UTF-8, tab separated, one header line)::

    unit<TAB>f0<TAB>f1 ...     descriptor table
    unit<TAB>score             outcome table
    unit<TAB>is_hit<TAB>y_clean   synthetic ground truth (<name>.truth.tsv)

Rows whose values do not parse as finite reals are dropped and counted;
repeated unit identifiers keep their first occurrence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import AlignedDataset, DescriptorTable, OutcomeTable
from .errors import ConfigurationError, DataFormatError

log = logging.getLogger(__name__)

FLOAT_FMT = "{:.17g}"


def _read_rows(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataFormatError("file not found", path) from None
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"not valid UTF-8 ({exc.reason})", path) from None
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DataFormatError("empty file or missing header", path, 1)
    header = lines[0].rstrip("\r").split("\t")
    if header[0].strip() != "unit" or len(header) < 2 or any(not h.strip() for h in header):
        raise DataFormatError(
            "header must start with 'unit' followed by named columns, tab separated", path, 1
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.rstrip("\r").split("\t")
        if len(fields) != len(header):
            raise DataFormatError(
                f"expected {len(header)} columns, found {len(fields)}", path, lineno
            )
        rows.append((lineno, fields))
    return path, header, rows


def _parse_table(path, expect_cols: int | None):
    path, header, rows = _read_rows(path)
    if expect_cols is not None and len(header) != expect_cols:
        raise DataFormatError(
            f"expected {expect_cols} columns in header, found {len(header)}", path, 1
        )
    units, values, seen = [], [], set()
    n_dup = n_bad = 0
    for lineno, fields in rows:
        unit = fields[0].strip()
        try:
            vals = [float(v) for v in fields[1:]]
        except ValueError:
            vals = None
        if not unit or vals is None or not all(np.isfinite(vals)):
            n_bad += 1
            log.debug("%s:%d: dropping row with missing or non-numeric values", path, lineno)
            continue
        if unit in seen:
            n_dup += 1
            continue
        seen.add(unit)
        units.append(unit)
        values.append(vals)
    if n_bad:
        log.warning("%s: dropped %d row(s) with non-finite or non-numeric values", path, n_bad)
    if n_dup:
        log.warning("%s: ignored %d duplicated unit identifier(s)", path, n_dup)
    if not units:
        raise DataFormatError("no usable rows", path)
    return path, header, units, np.array(values, dtype=np.float64), n_dup, n_bad


def load_descriptor_table(path) -> DescriptorTable:
    path, _, units, values, n_dup, n_bad = _parse_table(path, None)
    return DescriptorTable(units, values, n_duplicates=n_dup, n_dropped=n_bad, source=str(path))


def load_outcome_table(path) -> OutcomeTable:
    path, _, units, values, n_dup, n_bad = _parse_table(path, 2)
    return OutcomeTable(units, values[:, 0], n_duplicates=n_dup, n_dropped=n_bad, source=str(path))


def align(desc: DescriptorTable, out: OutcomeTable) -> AlignedDataset:
    """Inner join on unit identifier, ordered by identifier."""
    d_pos = {u: i for i, u in enumerate(desc.units)}
    o_pos = {u: i for i, u in enumerate(out.units)}
    common = sorted(set(d_pos) & set(o_pos))
    if not common:
        raise DataFormatError("descriptor and outcome tables share no unit identifiers")
    n_ud = len(d_pos) - len(common)
    n_uo = len(o_pos) - len(common)
    if n_ud or n_uo:
        log.info("alignment dropped %d descriptor-only and %d outcome-only units", n_ud, n_uo)
    return AlignedDataset(
        units=tuple(common),
        features=desc.features[[d_pos[u] for u in common]],
        outcomes=out.outcomes[[o_pos[u] for u in common]],
        provenance=tuple(p for p in (desc.source, out.source) if p),
        n_unmatched_descriptors=n_ud,
        n_unmatched_outcomes=n_uo,
    )


def zscore_outcomes(data: AlignedDataset) -> AlignedDataset:
    y = data.outcomes
    sd = y.std()
    y = (y - y.mean()) / (sd if sd > 0 else 1.0)
    return AlignedDataset(
        data.units, data.features, y, data.provenance, data.truth,
        data.n_unmatched_descriptors, data.n_unmatched_outcomes,
    )


def write_descriptor_table(path, units, features) -> None:
    features = np.asarray(features, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(["unit"] + [f"f{j}" for j in range(features.shape[1])]) + "\n")
        for u, row in zip(units, features):
            fh.write(u + "\t" + "\t".join(FLOAT_FMT.format(v) for v in row) + "\n")


def write_outcome_table(path, units, outcomes) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("unit\tscore\n")
        for u, v in zip(units, np.asarray(outcomes, dtype=np.float64)):
            fh.write(f"{u}\t{FLOAT_FMT.format(v)}\n")


def write_truth_table(path, units, is_hit, y_clean) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("unit\tis_hit\ty_clean\n")
        for u, h, v in zip(units, is_hit, y_clean):
            fh.write(f"{u}\t{int(bool(h))}\t{FLOAT_FMT.format(v)}\n")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for a desk-scale synthetic pool.

    ``linear``: standard-normal features, ``y = w . t + noise`` with
    ``w ~ N(0, I / q)`` so the signal has roughly unit variance.

    ``cluster_hits``: features from ``n_clusters`` Gaussian blobs; one blob
    holding ``round(hit_cluster_fraction * n)`` units gets outcomes whose
    magnitude exceeds every other unit's, with signs that flip across a
    random hyperplane through the blob.  Its members are exactly the top of
    the ``|y|`` ranking.
    """

    kind: str = "linear"
    n: int = 2000
    q: int = 20
    noise_sd: float = 0.1
    seed: int = 0
    n_clusters: int = 10
    hit_cluster_fraction: float = 0.05
    cluster_separation: float = 3.0

    def __post_init__(self):
        if self.kind not in ("linear", "cluster_hits"):
            raise ConfigurationError(f"unknown synthetic kind {self.kind!r}")
        if self.n < 10:
            raise ConfigurationError(f"synthetic n must be >= 10, got {self.n}")
        if self.q < 1:
            raise ConfigurationError(f"synthetic q must be >= 1, got {self.q}")
        if self.noise_sd < 0:
            raise ConfigurationError("noise_sd must be non-negative")
        if self.kind == "cluster_hits":
            if self.n_clusters < 2:
                raise ConfigurationError("cluster_hits needs at least 2 clusters")
            if not 0.0 < self.hit_cluster_fraction < 0.5:
                raise ConfigurationError("hit_cluster_fraction must lie in (0, 0.5)")


def _unit_names(n: int) -> tuple[str, ...]:
    width = len(str(n - 1))
    return tuple(f"u{i:0{width}d}" for i in range(n))


def generate_synthetic(spec: SyntheticSpec) -> AlignedDataset:
    rng = np.random.default_rng(spec.seed)
    n, q = spec.n, spec.q
    w = rng.normal(0.0, 1.0 / np.sqrt(q), size=q)
    if spec.kind == "linear":
        X = rng.standard_normal((n, q))
        y_clean = X @ w
        y = y_clean + spec.noise_sd * rng.standard_normal(n)
        k = max(1, int(round(0.05 * n)))
        is_hit = np.zeros(n, dtype=bool)
        is_hit[np.lexsort((np.arange(n), -np.abs(y)))[:k]] = True
        truth = {"w": w, "is_hit": is_hit, "y_clean": y_clean}
    else:
        n_hit = max(1, int(round(spec.hit_cluster_fraction * n)))
        rest = n - n_hit
        sizes = np.full(spec.n_clusters - 1, rest // (spec.n_clusters - 1))
        sizes[: rest % (spec.n_clusters - 1)] += 1
        label = np.concatenate([np.zeros(n_hit, dtype=np.int64)] +
                               [np.full(s, c + 1) for c, s in enumerate(sizes)])
        label = label[rng.permutation(n)]
        centers = spec.cluster_separation * rng.standard_normal((spec.n_clusters, q))
        X = centers[label] + rng.standard_normal((n, q))
        hit = label == 0
        y_clean = X @ w
        y = y_clean + spec.noise_sd * rng.standard_normal(n)
        u = rng.standard_normal(q)
        v = rng.standard_normal(q) / np.sqrt(q)
        local = X[hit] - centers[0]
        sign = np.where(local @ u >= 0, 1.0, -1.0)
        floor = np.abs(y[~hit]).max() + 1.0
        y_clean = y_clean.copy()
        y_clean[hit] = sign * (floor + 2.0 * np.abs(local @ v))
        y[hit] = sign * (floor + 2.0 * np.abs(local @ v) + spec.noise_sd * np.abs(rng.standard_normal(n_hit)))
        truth = {"w": w, "is_hit": hit, "y_clean": y_clean, "cluster": label}
    return AlignedDataset(
        units=_unit_names(n), features=X, outcomes=y,
        provenance=(f"synthetic:{spec.kind}:seed={spec.seed}",), truth=truth,
    )


def write_dataset(data: AlignedDataset, out_dir, name: str) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "descriptors": out_dir / f"{name}.descriptors.tsv",
        "outcomes": out_dir / f"{name}.outcomes.tsv",
    }
    write_descriptor_table(paths["descriptors"], data.units, data.features)
    write_outcome_table(paths["outcomes"], data.units, data.outcomes)
    if data.truth is not None:
        paths["truth"] = out_dir / f"{name}.truth.tsv"
        write_truth_table(paths["truth"], data.units, data.truth["is_hit"], data.truth["y_clean"])
    return paths
