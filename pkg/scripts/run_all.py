"""Synthesize the default suite, train the slow model, run every evaluation sweep and the benchmark.

    python scripts/run_all.py --work runs/default [--seed 0] [extra slowelm flags]

Outputs land in ``<work>/data``, ``<work>/model``, ``<work>/report`` and
``<work>/bench``. Existing suite data is reused.
"""

import argparse
import sys
import time
from pathlib import Path

from slowelm.cli import main as slowelm


def step(name, argv):
    t0 = time.perf_counter()
    rc = slowelm(argv)
    print(f"-- {name}: exit {rc} in {time.perf_counter() - t0:.0f}s", flush=True)
    if rc:
        sys.exit(rc)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--work", default="runs/default")
    ap.add_argument("--skip-bench", action="store_true")
    args, extra = ap.parse_known_args()
    work = Path(args.work)
    data, model = work / "data", work / "model" / "model.selm"
    if not (data / "manifest.jsonl").exists():
        step("synth", ["synth", "--out", str(data), *extra])
    step("train", ["train", "--data", str(data), "--model", str(model), *extra])
    step("eval", ["-v", "eval", "--data", str(data), "--model", str(model), "--out", str(work / "report"), *extra])
    if not args.skip_bench:
        step("bench", ["bench", "--data", str(data), "--model", str(model), "--out", str(work / "bench"), *extra])


if __name__ == "__main__":
    main()
