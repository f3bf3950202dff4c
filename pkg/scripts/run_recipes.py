"""Run every recipe in recipes/ and write the CSVs to an output directory.

    python3 scripts/run_recipes.py --out results/ [--only fig1 table] [--workers 1]
"""
from __future__ import annotations

import argparse
import pathlib
import sys
import time

from eventqkd.cli import main as cli_main

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--recipes", default=str(ROOT / "recipes"))
    p.add_argument("--out", default="results")
    p.add_argument("--only", nargs="*", default=None, help="recipe name prefixes")
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for recipe in sorted(pathlib.Path(args.recipes).glob("*.json")):
        if args.only and not any(recipe.stem.startswith(o) for o in args.only):
            continue
        target = out / f"{recipe.stem}.csv"
        t0 = time.perf_counter()
        rc = cli_main(["--config", str(recipe), "--out", str(target),
                       "--workers", str(args.workers)])
        print(f"{recipe.stem:32s} exit={rc} {time.perf_counter() - t0:7.1f}s -> {target}")
        status = max(status, rc)
    return status


if __name__ == "__main__":
    sys.exit(main())
