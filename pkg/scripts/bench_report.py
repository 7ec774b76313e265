"""Print a benchmark report written by ``slowelm bench``.

    python scripts/bench_report.py runs/default/bench
"""

import json
from pathlib import Path

from _tables import dir_arg


def main(bench_dir):
    rep = json.loads((Path(bench_dir) / "bench.json").read_text())
    print(rep["hardware"])
    for r in rep["results"]:
        print(f"{r['label']:>9} k={r['k']:<4} n={r['n']} workers={r['workers']} "
              f"mean={r['mean_ms']:.3f}ms p99={r['p99_ms']:.3f}ms {r['cls_per_s']:,.0f} cls/s over {r['seconds']:.1f}s")


if __name__ == "__main__":
    main(dir_arg("runs/default/bench", __doc__))
