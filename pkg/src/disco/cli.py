"""Command-line entry point: ``disco run|report|synth|list``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 run failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import acquisition as acq
from .errors import ConfigurationError, DataFormatError, DiscoError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

log = logging.getLogger("disco")


def _default_jobs() -> int | None:
    env = os.environ.get("DISCO_JOBS")
    if env is None:
        return None
    try:
        return max(1, int(env))
    except ValueError:
        raise ConfigurationError(f"DISCO_JOBS must be an integer, got {env!r}") from None


def cmd_run(args) -> int:
    from .config import load_config
    from .report import write_report
    from .runner import execute, load_dataset

    try:
        cfg = load_config(args.config)
        jobs = args.jobs or _default_jobs() or cfg.jobs or 1
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        data = load_dataset(cfg)
    except (DataFormatError, DiscoError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    log.info("%d units, q=%d, %d task(s), %d job(s)", data.n, data.q,
             len(cfg.experiments) * len(cfg.seeds), jobs)
    n_failed = execute(cfg, data, jobs=jobs)
    results = cfg.output_dir / "results.csv"
    print(f"wrote {results}")
    if cfg.plots and results.stat().st_size > 0:
        try:
            write_report(results, plots=True)
        except DataFormatError:
            pass  # every run failed before its first cycle
    if n_failed:
        print(f"{n_failed} run(s) failed; see {cfg.output_dir / 'errors.log'}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import write_report

    try:
        path = write_report(args.results, args.out, plots=args.plots)
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {path}")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .data import SyntheticSpec, generate_synthetic, write_dataset

    try:
        spec = SyntheticSpec(
            kind=args.kind, n=args.n, q=args.q, noise_sd=args.noise_sd, seed=args.seed,
            n_clusters=args.n_clusters, hit_cluster_fraction=args.hit_fraction,
        )
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    paths = write_dataset(generate_synthetic(spec), args.out_dir, args.name)
    for kind, p in paths.items():
        print(f"{kind}\t{p}")
    return EXIT_OK


def format_compatibility() -> str:
    lines = [(f"{'acquisition':<14}" + "".join(f"{m:<16}" for m in acq.MODEL_KINDS)).rstrip()]
    for a in acq.ACQUISITIONS:
        cells = "".join(f"{'yes' if acq.compatibility(m, a) else 'no':<16}" for m in acq.MODEL_KINDS)
        lines.append(f"{a:<14}{cells}".rstrip())
    lines.append("")
    for m in acq.MODEL_KINDS:
        allowed = [a for a in acq.ACQUISITIONS if acq.compatibility(m, a)]
        lines.append(f"model {m}: {len(allowed)} acquisitions: {', '.join(allowed)}")
    return "\n".join(lines)


def cmd_list(args) -> int:
    print(format_compatibility())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="disco", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute every run x seed in a config file")
    r.add_argument("config")
    r.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: $DISCO_JOBS, the config, or 1)")
    r.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="aggregate results.csv across seeds")
    rep.add_argument("results")
    rep.add_argument("--out", default=None, help="summary path (default: summary.json beside results)")
    rep.add_argument("--plots", action="store_true", help="also write SVG learning curves")
    rep.set_defaults(func=cmd_report)

    s = sub.add_parser("synth", help="write a synthetic dataset in the table formats")
    s.add_argument("--kind", choices=("linear", "cluster_hits"), default="linear")
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--q", type=int, default=20)
    s.add_argument("--noise-sd", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-clusters", type=int, default=10)
    s.add_argument("--hit-fraction", type=float, default=0.05)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--name", default="synthetic")
    s.set_defaults(func=cmd_synth)

    ls = sub.add_parser("list", help="show acquisition functions and model compatibility")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
