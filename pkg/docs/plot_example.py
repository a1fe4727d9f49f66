"""Sample plots from an output directory (needs matplotlib, not a package dependency).

    nems-chaos all --out out
    python docs/plot_example.py out
"""

import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np


def load(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def main(out):
    out = Path(out)
    fig, axes = plt.subplots(2, 3, figsize=(14, 8))

    for K, ax in zip(("0.5", "5"), axes[0, :2]):
        d = load(out / f"phase-portrait_K{K}_ic.csv")
        ax.plot(d["theta"], d["I"], ",")
        ax.set(title=f"phase portrait K={K}", xlabel="theta", ylabel="I")

    for K in ("0.5", "5"):
        d = load(out / f"spin-dynamics_K{K}_ic.csv")
        axes[0, 2].plot(d["n"][:300], d["sx"][:300], label=f"K={K}")
    axes[0, 2].set(title="<sx>", xlabel="kick")
    axes[0, 2].legend()

    for K in ("0.5", "5"):
        d = load(out / f"psd_K{K}_ic.csv")
        half = d.size // 2
        axes[1, 0].semilogy(d["omega"][1:half], d["Iy"][1:half], label=f"K={K}")
        h = load(out / f"levels-histogram_K{K}_ic.csv")
        axes[1, 1].step(h["bin_lo"], h["density"], where="post", label=f"K={K}")
        r = load(out / f"recurrence_K{K}_ic.csv")
        axes[1, 2].plot(r["n"], r["recurrence"], label=f"K={K}")
    axes[1, 0].set(title="power spectrum of <sy>", xlabel="omega")
    axes[1, 1].set(title="level spacing density", xlabel="S")
    axes[1, 2].set(title="recurrence distance", xlabel="kick")
    for ax in axes[1]:
        ax.legend()

    fig.tight_layout()
    fig.savefig(out / "overview.png", dpi=120)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "nems_out")
