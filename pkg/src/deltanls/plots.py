"""Figure rendering for the CLI report paths.

Each function writes one PNG next to the delimited output it illustrates.
The CSV files remain the machine contract; figures are for eyes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_profile(path, r, u, phi, singular, title):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogx(r, u, "k-", lw=2, label="u")
    ax.semilogx(r, phi, "C0--", lw=1.5, label="regular part")
    ax.semilogx(r, singular, "C3:", lw=1.5, label="singular part")
    ax.set_xlabel("r")
    ax.set_ylabel("amplitude")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def render_nehari_scan(path, lam, action, admissible, omega, omega0):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    act = np.where(admissible > 0.5, action, np.nan)
    ax.loglog(lam, act, "C0-", lw=1.8, label="branch action")
    ax.axvline(omega0, color="C3", ls=":", lw=1.2, label="threshold")
    ax.set_xlabel("decomposition parameter")
    ax.set_ylabel("reduced action on the singular branch")
    ax.set_title(f"singular Nehari branch at omega = {omega:.4g}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def render_d_curve(path, omega, d, d0, branch_inf, omega0):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(omega, d, "C0o-", label="d (defect)")
    ax.plot(omega, d0, "C1s--", label="d0 (free NLS)")
    ax.plot(omega, branch_inf, "C2^:", label="singular-branch inf")
    ax.axvline(omega0, color="C3", ls=":", lw=1.2, label="threshold")
    ax.set_xlabel("omega")
    ax.set_ylabel("minimal action")
    ax.set_yscale("symlog", linthresh=1e-6)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def render_cells(path, before, after, title):
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.2))
    vmax = max(before.max(), after.max())
    for ax, vals, name in ((axes[0], before, "input"), (axes[1], after, "rearranged")):
        im = ax.imshow(vals, vmin=0.0, vmax=vmax, origin="lower", cmap="viridis")
        ax.set_title(name)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(im, ax=axes, shrink=0.85)
    fig.suptitle(title)
    fig.savefig(path, dpi=140)
    plt.close(fig)
