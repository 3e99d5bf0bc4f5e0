"""Command line entry point: fblab <experiment> --config <path> [--out <dir>] [--verbose]."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import EXPERIMENT_FUNCS, format_row
from .snapshot import atomic_write, save_snapshot

log = logging.getLogger("fblab")


def thread_count() -> int:
    raw = os.environ.get("FBLAB_THREADS")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value >= 1:
            return value
        log.warning("ignoring FBLAB_THREADS=%r (expected a positive integer)", raw)
    return os.cpu_count() or 1


def render_csv(columns, rows, sha256: str) -> bytes:
    lines = [f"# config_sha256={sha256}", ",".join(columns)] + [format_row(r) for r in rows]
    return ("\n".join(lines) + "\n").encode("utf-8")


def resolve_io(cfg, out_dir: str) -> None:
    """Relative io paths are taken relative to the output directory."""
    for key, path in cfg.io.items():
        if not os.path.isabs(path):
            cfg.io[key] = os.path.join(out_dir, path)


def run(cfg, out_dir: str = ".", executor=None) -> int:
    """Execute one experiment, write its CSV (and snapshot), print the summary line."""
    resolve_io(cfg, out_dir)
    outcome = EXPERIMENT_FUNCS[cfg.experiment](cfg, executor)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = cfg.io.get("output", os.path.join(out_dir, f"{cfg.experiment}.csv"))
    atomic_write(csv_path, render_csv(outcome.columns, outcome.rows, cfg.sha256))
    field = getattr(outcome, "field", None)
    if field is not None and "snapshot" in cfg.io:
        save_snapshot(field, cfg.io["snapshot"])
    verdict = "PASS" if outcome.ok else "FAIL"
    print(f"{cfg.experiment}: {outcome.summary} [{verdict}]")
    if not outcome.ok:
        print(f"{cfg.experiment}: assertion failed: {outcome.failure}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fblab", description="Run a named free-boundary experiment.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="experiment configuration file")
    ap.add_argument("--out", default=".", help="output directory (default: current directory)")
    ap.add_argument("--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.experiment)
    except ConfigError as exc:
        print(f"{args.config}: invalid config: {exc}", file=sys.stderr)
        return 2
    log.debug("config %s sha256=%s", args.config, cfg.sha256)
    threads = thread_count()
    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return run(cfg, args.out, pool)
        return run(cfg, args.out)
    except ConfigError as exc:
        print(f"{args.config}: invalid config: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"{args.experiment}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
