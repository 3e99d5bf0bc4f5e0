"""Run every config in configs/ (or the ones named) into one output directory.

Configs that read a snapshot run after those that write one. Exit status is
the worst status seen.
"""
import argparse
import configparser
import sys
import time
from pathlib import Path

from fblab.cli.main import main as fblab_main

ROOT = Path(__file__).resolve().parent.parent


def experiment_of(path: Path) -> str:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",))
    cp.read(path, encoding="utf-8")
    return cp["experiment"]["name"]


def reads_snapshot(path: Path) -> bool:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",))
    cp.read(path, encoding="utf-8")
    return cp.has_option("io", "input")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", type=Path, help="config files (default: configs/*.ini)")
    ap.add_argument("--out", default=str(ROOT / "runs"), help="output directory (default: runs/)")
    args = ap.parse_args()
    paths = args.configs or sorted((ROOT / "configs").glob("*.ini"))
    paths = sorted(paths, key=reads_snapshot)
    worst = 0
    for path in paths:
        start = time.perf_counter()
        status = fblab_main([experiment_of(path), "--config", str(path), "--out", args.out])
        print(f"  {path.name}: exit {status} ({time.perf_counter() - start:.1f}s)")
        worst = max(worst, status)
    return worst


if __name__ == "__main__":
    sys.exit(main())
