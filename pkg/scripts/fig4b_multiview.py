"""Voted accuracy against the pose span covered by successive views.

    python scripts/fig4b_multiview.py runs/default/report
"""

from collections import defaultdict

from _tables import dir_arg, load, pyplot


def main(report_dir):
    rows = load(report_dir, "multiview.csv")
    curves = defaultdict(list)
    for r in rows:
        curves[r["mode"]].append((float(r["span_deg"]), int(r["n_views"]), float(r["accuracy"])))
    for mode, pts in curves.items():
        print(f"{mode}:")
        for span, nv, acc in pts:
            print(f"  span {span:6.1f} deg  views {nv:4d}  accuracy {acc:.4f}  error {100 * (1 - acc):5.2f}%")
    plt = pyplot()
    if plt:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for mode, pts in curves.items():
            ax.plot([p[0] for p in pts], [1 - p[2] for p in pts], "o-", label=mode)
        ax.set_xlabel("pose span (deg)")
        ax.set_ylabel("error rate")
        ax.legend()
        fig.tight_layout()
        fig.savefig(f"{report_dir}/multiview.png", dpi=120)


if __name__ == "__main__":
    main(dir_arg("runs/default/report", __doc__))
