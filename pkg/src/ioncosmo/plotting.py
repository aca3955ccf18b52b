"""PNG figures written next to the CSV tables.

Uses the non-interactive Agg backend; every function takes the run data and
a target directory and returns the paths it wrote.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}


def _save(fig, directory, name):
    path = os.path.join(directory, name)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def _col(table, name):
    return np.array(table.column(name), dtype=float)


def plot_trap(result, directory) -> list:
    """Trap frequency and mode functions, populations, and the phonon spectrum."""
    paths = []
    with plt.rc_context(STYLE):
        evo = result.tables["evolution"]
        t_name = "t_us" if "t_us" in evo.header else "t"
        t = _col(evo, t_name)
        windows = [(t[0], t[-1])]
        ramp = result.data.get("ramp")
        if getattr(ramp, "segments", None) is not None:
            # zoom on the last transition, which the preparation would dwarf
            seg, off = ramp.segments[-1], ramp.offsets[-1]
            scale = t[-1] / _col(evo, "t")[-1] if t_name == "t_us" else 1.0
            start = off + seg.head_end - 0.5 * seg.transition_time
            windows.append((max(start, ramp.t_start) * scale, t[-1]))
        fig, axes = plt.subplots(2, len(windows), figsize=(6 * len(windows), 5), sharex="col",
                                 squeeze=False)
        for j, (lo, hi) in enumerate(windows):
            sel = (t >= lo) & (t <= hi)
            top, bottom = axes[0, j], axes[1, j]
            top.plot(t[sel], _col(evo, "omega_ax")[sel], lw=1.2, label="omega_ax")
            top.plot(t[sel], _col(evo, "b")[sel], lw=1.2, ls="--", label="b")
            for name in evo.header:
                if name.startswith("abs_chi_"):
                    bottom.plot(t[sel], _col(evo, name)[sel], lw=1.0, label=f"mode {name[8:]}")
            bottom.set_xlabel("t (us)" if t_name == "t_us" else "t")
        axes[0, 0].set_ylabel("trap frequency / scale")
        axes[0, 0].legend()
        axes[1, 0].set_ylabel("|chi|")
        axes[1, 0].legend()
        if len(windows) > 1:
            axes[0, 1].set_title("final transition")
        fig.tight_layout()
        paths.append(_save(fig, directory, "evolution.png"))

        pops = result.tables["populations"]
        n = _col(pops, "n")
        keep = n <= 8
        fig, ax = plt.subplots(1, 2, figsize=(7, 3), sharey=True)
        ax[0].bar(n[keep], _col(pops, "p_initial")[keep], color="0.55")
        ax[0].set_title("initial")
        ax[1].bar(n[keep], _col(pops, "p_final")[keep], color="C0")
        ax[1].set_title("final")
        for a in ax:
            a.set_xlabel("n")
            a.set_xticks(n[keep])
        ax[0].set_ylabel("P(n)")
        fig.tight_layout()
        paths.append(_save(fig, directory, "populations.png"))

        modes = result.tables["modes"]
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.plot(_col(modes, "kappa"), _col(modes, "omega_kappa_sq"), "o", ms=4)
        ax.set_xlabel("mode")
        ax.set_ylabel("omega_kappa^2")
        fig.tight_layout()
        paths.append(_save(fig, directory, "modes.png"))
    return paths


def plot_cosmology(result, directory) -> list:
    paths = []
    with plt.rc_context(STYLE):
        spec = result.tables["cosmo_spectrum"]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        k = _col(spec, "k")
        n = _col(spec, "n_created")
        ax.loglog(k, np.where(n > 0, n, np.nan), "o-", ms=3, lw=1)
        ax.set_xlabel("k")
        ax.set_ylabel("<n_k>")
        fig.tight_layout()
        paths.append(_save(fig, directory, "cosmo_spectrum.png"))

        evo = result.tables["evolution"]
        fig, axes = plt.subplots(2, 1, figsize=(5, 4), sharex=True)
        axes[0].plot(_col(evo, "t"), _col(evo, "a"), lw=1.2)
        axes[0].set_ylabel("a")
        axes[1].plot(_col(evo, "t"), _col(evo, "ricci"), lw=1.2, color="C3")
        axes[1].set_ylabel("R")
        axes[1].set_xlabel("t")
        fig.tight_layout()
        paths.append(_save(fig, directory, "scale_factor.png"))
    return paths


def plot_modes(table, directory) -> list:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        vecs = [h for h in table.header if h.startswith("v")]
        ions = np.arange(len(vecs))
        for row in table.rows:
            ax.plot(ions, row[3:], "o-", ms=3, lw=1, label=f"{row[0]}: {row[1]:.4g}")
        ax.set_xlabel("ion")
        ax.set_ylabel("eigenvector component")
        if len(table.rows) <= 10:
            ax.legend(title="mode: omega^2", fontsize=7)
        fig.tight_layout()
        return [_save(fig, directory, "modes.png")]


def plot_sweep(table, directory) -> list:
    with plt.rc_context(STYLE):
        name = table.header[0]
        x = _col(table, name)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if "k" in table.header:
            k = _col(table, "k")
            n = _col(table, "n_created")
            for kv in np.unique(k)[:: max(1, len(np.unique(k)) // 6)]:
                sel = k == kv
                ax.plot(x[sel], n[sel], "o-", ms=3, lw=1, label=f"k={kv:.3g}")
            ax.set_ylabel("<n_k>")
            ax.legend(fontsize=7)
        else:
            ax.plot(x, _col(table, "n_created"), "o-", ms=3, lw=1, label="<n>")
            ax.plot(x, _col(table, "p2"), "s-", ms=3, lw=1, label="P(2)")
            ax.plot(x, _col(table, "p1"), "^-", ms=3, lw=1, label="P(1)")
            ax.legend()
        ax.set_xlabel(name)
        ax.set_yscale("log")
        fig.tight_layout()
        return [_save(fig, directory, "sweep.png")]
