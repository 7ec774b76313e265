"""Object accuracy per (angular velocity, distance) on the test elevation.

    python scripts/fig3_speed_distance.py runs/default/report
"""

from collections import defaultdict

from _tables import dir_arg, load, pyplot


def main(report_dir):
    rows = load(report_dir, "speed_distance.csv")
    grid = defaultdict(dict)
    for r in rows:
        grid[float(r["omega"])][r["distance"]] = float(r["accuracy"])
    dists = ["near", "mid", "far"]
    dists = [d for d in dists if any(d in g for g in grid.values())]
    print("omega(rad/s) " + " ".join(f"{d:>8}" for d in dists))
    for om in sorted(grid):
        print(f"{om:12.4f} " + " ".join(f"{grid[om].get(d, float('nan')):8.4f}" for d in dists))
    for d in dists:
        vals = [grid[om][d] for om in grid if d in grid[om]]
        print(f"spread across speeds at {d}: {100 * (max(vals) - min(vals)):.2f} pp")
    plt = pyplot()
    if plt:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for d in dists:
            oms = sorted(om for om in grid if d in grid[om])
            ax.plot(oms, [grid[om][d] for om in oms], "o-", label=d)
        ax.set_xlabel("omega (rad/s)")
        ax.set_ylabel("object accuracy")
        ax.legend()
        fig.tight_layout()
        fig.savefig(f"{report_dir}/speed_distance.png", dpi=120)


if __name__ == "__main__":
    main(dir_arg("runs/default/report", __doc__))
