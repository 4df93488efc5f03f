#!/usr/bin/env python3
"""Plot loss curves and download-time-difference ECDFs from a pipeline output dir.

Usage:
    python scripts/plot_results.py --dir desk_out [--rem rem.txt]
"""

import argparse
import csv
import os
import sys


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    cols = {name: [float(r[i]) for r in data] for i, name in enumerate(header)}
    return cols


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", default="desk_out")
    ap.add_argument("--rem", default=None, help="optional REM text export to render")
    args = ap.parse_args()
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for name, title in (("lstm_loss.csv", "LSTM regressor"),
                        ("ae_loss.csv", "Autoencoder (cw=100)"),
                        ("mlp_loss.csv", "MLP [80x40]")):
        path = os.path.join(args.dir, name)
        if not os.path.exists(path):
            continue
        cols = _read_csv(path)
        plt.figure(figsize=(5, 3.2))
        plt.plot(cols["epoch"], cols["train_mse"], label="train")
        plt.plot(cols["epoch"], cols["val_mse"], label="validation")
        plt.xlabel("epoch")
        plt.ylabel("MSE")
        plt.title(f"{title} loss")
        plt.legend()
        plt.tight_layout()
        out = path.replace(".csv", ".png")
        plt.savefig(out, dpi=130)
        print("wrote", out)

    for prefix in ("eval", "cross"):
        plt.figure(figsize=(5, 3.2))
        plotted = False
        for policy in ("lstm", "ae_mlp"):
            path = os.path.join(args.dir, f"{prefix}_ecdf_{policy}.csv")
            if not os.path.exists(path):
                continue
            cols = _read_csv(path)
            plt.step(cols["x"], cols["F"], where="post", label=policy)
            plotted = True
        if not plotted:
            plt.close()
            continue
        plt.axvline(0.0, color="gray", lw=0.8)
        plt.xlabel("benchmark minus learned download time [s]")
        plt.ylabel("ECDF")
        plt.legend()
        plt.tight_layout()
        out = os.path.join(args.dir, f"{prefix}_ecdf.png")
        plt.savefig(out, dpi=130)
        print("wrote", out)

    if args.rem:
        import numpy as np
        with open(args.rem) as fh:
            head = fh.readline().split()
            nx, ny = int(head[1]), int(head[2])
            sinr = np.array([float(line.split()[3]) for line in fh])
        plt.figure(figsize=(5.5, 4.5))
        plt.imshow(sinr.reshape(ny, nx), origin="lower", cmap="viridis")
        plt.colorbar(label="best SINR [dB]")
        plt.title("radio environment map")
        plt.tight_layout()
        out = args.rem + ".png"
        plt.savefig(out, dpi=130)
        print("wrote", out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
