"""Plot fig3 output: solid lines lossless, dotted lines gamma = g."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def load(path):
    with open(path) as f:
        rows = list(csv.reader(f))
    header, data = rows[0], [[float(x) for x in r] for r in rows[1:]]
    return header, list(zip(*data))


def main(out_dir):
    out_dir = Path(out_dir)
    header, solid = load(out_dir / "fig3_lossless.csv")
    _, dotted = load(out_dir / "fig3_lossy.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in range(1, len(header)):
        (line,) = ax.plot(solid[0], solid[j], label=header[j])
        ax.plot(dotted[0], dotted[j], ":", color=line.get_color())
    ax.set_xlabel("gt")
    ax.set_ylabel("probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "fig3.png", dpi=150)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "out/fig3")
