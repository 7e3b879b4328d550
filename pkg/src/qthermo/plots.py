"""Figure rendering for machine reports.

One PNG per report, next to its CSV: energy flows on top, the figure of
merit against its bounds (or the entropy productions, for scenarios
without one) below.  Rendering is presentation only; the CSV stays the
normative output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .machines import MachineReport

__all__ = ["render_report"]


def _flow_panel(ax, report: MachineReport) -> None:
    t = report.times
    a, b = report.labels
    ax.plot(t, [r.heat[a] for r in report.rows], label=f"Q_{a}")
    ax.plot(t, [r.heat[b] for r in report.rows], label=f"Q_{b}")
    ax.plot(t, [r.work[a] for r in report.rows], label=f"W_{a}")
    ax.plot(t, [r.work[b] for r in report.rows], label=f"W_{b}")
    ax.plot(t, [r.e_int - report.rows[0].e_int for r in report.rows],
            label="dE_int", linestyle="--", color="0.4")
    if report.rows[0].w_c is not None:
        ax.plot(t, [r.w_c for r in report.rows], label="W_C",
                linestyle=":", color="k")
    ax.set_ylabel("energy flow")
    ax.legend(loc="best", fontsize=8, ncol=3)
    ax.grid(alpha=0.3)


def _merit_panel(ax, report: MachineReport) -> None:
    t = report.times
    if report.fom_name is not None:
        ax.plot(t, report.fom, label=report.fom_name)
        if np.isfinite(report.carnot):
            ax.axhline(report.carnot, color="brown", linestyle="--",
                       label="carnot")
        if report.refined_carnot is not None:
            ax.plot(t, report.refined_carnot, color="purple", linestyle="-.",
                    label="refined bound")
        finite = report.fom[np.isfinite(report.fom)]
        if len(finite) and np.isfinite(report.carnot):
            top = min(float(report.carnot) * 1.1 + 1e-12,
                      max(float(np.max(finite)) * 3, float(report.carnot) * 1.1))
            ax.set_ylim(min(0.0, float(np.min(finite))), top)
        ax.set_ylabel(report.fom_name)
    else:
        for lab in report.labels:
            ax.plot(t, [r.sigma[lab] for r in report.rows],
                    label=f"sigma_{lab}")
        if "sigma_erg" in report.extras:
            ax.plot(t, report.extras["sigma_erg"], label="sigma_erg",
                    linestyle="--")
        ax.set_ylabel("entropy production")
    ax.set_xlabel("t (units of 1/omega_a)")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)


def render_report(report: MachineReport, png_path) -> None:
    """Write the two-panel summary figure for one report."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    _flow_panel(ax1, report)
    _merit_panel(ax2, report)
    ax1.set_title(report.scenario)
    fig.tight_layout()
    fig.savefig(png_path, dpi=140)
    plt.close(fig)
