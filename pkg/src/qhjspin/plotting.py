"""Figures written next to the CSV outputs of each command.

Rendering uses the Agg backend and strips PNG metadata so identical runs give
identical files.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (7.0, 4.5),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def _log_abs(y):
    y = np.abs(np.asarray(y, dtype=float))
    return np.where(y > 0, y, np.nan)


def plot_spinors(table, path):
    with plt.rc_context(STYLE):
        fig, (ax, ax2) = plt.subplots(2, 1, sharex=True)
        for key in ("theta1", "chi1", "theta2", "chi2"):
            ax.plot(table["x"], table[key], label=key)
        ax.set_ylabel("component")
        ax.legend(ncol=4, fontsize=7)
        k = np.asarray(table["cross_current"])
        ax2.semilogy(table["x"], _log_abs(k - k[np.argmin(np.abs(table["x"] - table["x0"]))]) + 1e-300)
        ax2.set_ylabel("|K(x) - K(x0)|")
        ax2.set_xlabel("x")
        _save(fig, path)


def plot_residuals(table, f_table, path):
    with plt.rc_context(STYLE):
        fig, (ax, ax2) = plt.subplots(2, 1, sharex=True)
        ax.semilogy(table["x"], _log_abs(table["residual_norm"]), ".", ms=3)
        ax.set_ylabel("normalized residual")
        ax2.plot(f_table["x"], f_table["f_action"], label="f (Schwarzian route)")
        ax2.plot(f_table["x"], f_table["f_energy"], "--", label="f (energy route)")
        ax2.set_ylabel("f")
        ax2.set_xlabel("x")
        ax2.legend(fontsize=7)
        _save(fig, path)


def plot_momentum(table, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(table["x"], table["rhs_eq20"], label="S0 branch")
        ax.plot(table["x"], table["rhs_eq21"], "--", label="Z0 branch")
        ax.plot(table["x"], table["product_check"], ":", label="xdot * h'")
        ax.set_xlabel("x")
        ax.set_ylabel("momentum flux")
        ax.legend(fontsize=7)
        _save(fig, path)


def plot_trajectory(table, events, path):
    with plt.rc_context(STYLE):
        fig, (ax, ax2) = plt.subplots(2, 1, sharex=True)
        ax.plot(table["t"], table["x"])
        for ev in events:
            ax.axvline(ev["t"], color="0.5", lw=0.8, ls=":")
            ax.annotate(ev["kind"], (ev["t"], ev["x"]), fontsize=7)
        ax.set_ylabel("x")
        ax2.plot(table["t"], table["xdot"])
        ax2.set_ylabel("xdot")
        ax2.set_xlabel("t")
        _save(fig, path)


def plot_limits(table, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(table["x"], _log_abs(table["f_minus_1"]), label="|f - 1|")
        ax.semilogy(table["x"], _log_abs(table["eq8_deviation"]), "--", label="spinless momentum deviation")
        ax.semilogy(table["x"], _log_abs(table["T_over_mc2"]), ":", label="T / m0 c^2")
        ax.set_xlabel("x")
        ax.legend(fontsize=7)
        _save(fig, path)


def plot_sweep(rows, parameter, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        values = [float(r["value"]) for r in rows]
        for key in ("max_residual_norm", "max_f_route_rel_diff", "max_branch_gap"):
            ax.semilogy(values, _log_abs([r[key] for r in rows]), "o-", ms=3, label=key)
        ax.set_xlabel(parameter)
        ax.legend(fontsize=7)
        _save(fig, path)
