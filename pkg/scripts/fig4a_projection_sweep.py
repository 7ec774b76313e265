"""Object accuracy against the number of kept projections, one column per mode.

    python scripts/fig4a_projection_sweep.py runs/default/report
"""

from collections import defaultdict

from _tables import dir_arg, load, pyplot


def main(report_dir):
    rows = load(report_dir, "projection_sweep.csv")
    table = defaultdict(dict)
    for r in rows:
        table[int(r["k"])][r["mode"]] = float(r["accuracy"])
    modes = list(dict.fromkeys(r["mode"] for r in rows))
    print("    k " + " ".join(f"{m:>9}" for m in modes))
    for k in sorted(table):
        print(f"{k:5d} " + " ".join(f"{table[k].get(m, float('nan')):9.4f}" for m in modes))
    plt = pyplot()
    if plt:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for m in modes:
            ks = sorted(k for k in table if m in table[k])
            ax.plot(ks, [table[k][m] for k in ks], "o-", label=m)
        ax.set_xscale("log")
        ax.set_xlabel("k")
        ax.set_ylabel("object accuracy")
        ax.legend()
        fig.tight_layout()
        fig.savefig(f"{report_dir}/projection_sweep.png", dpi=120)


if __name__ == "__main__":
    main(dir_arg("runs/default/report", __doc__))
