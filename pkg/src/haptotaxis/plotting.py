"""Static figures of a finished run (decay curves against their envelopes)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from haptotaxis import steady  # noqa: E402
from haptotaxis.config import ScenarioConfig  # noqa: E402


def plot_run(csv_path: str | Path, cfg: ScenarioConfig, out_dir: str | Path) -> Path:
    from haptotaxis.runner import read_csv

    data = read_csv(csv_path)
    t = data["t"]
    pred = steady.predict(cfg.initial_data(), cfg.params)

    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    ax = axes[0, 0]
    ax.semilogy(t, data["w_max"], label="max w")
    if pred.lam is not None:
        ax.semilogy(t, pred.w_bound(t), "--", label=f"envelope, lambda={pred.lam:.4g}")
    ax.set_xlabel("t")
    ax.legend()

    ax = axes[0, 1]
    ax.plot(t, data["F"], label="F")
    ax.plot(t, data["D"], label="D")
    ax.set_xlabel("t")
    ax.legend()

    ax = axes[1, 0]
    ax.plot(t, data["mass"], label="mass")
    ax.plot(t, data["u_min"], label="min u")
    if pred.lam is not None:
        ax.axhline(pred.lam, color="k", ls=":", label="floor")
    ax.set_xlabel("t")
    ax.legend()

    ax = axes[1, 1]
    dist = np.where(data["u_dist_l2"] > 0, data["u_dist_l2"], np.nan)
    ax.semilogy(t, dist, label=f"|u - u*|, u*={pred.u_star_value:.4g}")
    ax.semilogy(t, np.where(data["grad_w_l2"] > 0, data["grad_w_l2"], np.nan), label="|grad w|")
    ax.set_xlabel("t")
    ax.legend()

    fig.suptitle(f"{cfg.output.name}: delta={cfg.params.delta:g}, beta={cfg.params.beta:g}")
    fig.tight_layout()
    path = Path(out_dir) / f"{cfg.output.name}_decay.png"
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
