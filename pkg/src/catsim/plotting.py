"""Optional matplotlib rendering of a report (``catsim run --figure``)."""

from __future__ import annotations

import math

from .report import ExperimentReport

# x axis and grouping column per scenario
AXES = {
    "readout": ("trial", "alpha"),
    "bell": ("alpha", "input"),
    "teleport": ("trial", None),
    "hr_resource": ("alpha", None),
    "gates": (None, "gate"),
    "purify": ("round", "F_in"),
    "decohere_sweep": ("gamma_tau", "alpha"),
    "amplify": ("step", "kind"),
    "fig4_scan": ("alpha", None),
    "kerr": ("N", None),
    "cross_kerr": ("theta", "sign"),
}


def _num(v):
    return float("nan") if v is None or isinstance(v, str) else float(v)


def render_figure(report: ExperimentReport, path: str) -> None:
    """Plot simulated values (markers) against closed forms (lines) and save to ``path``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xcol, gcol = AXES.get(report.scenario, (None, None))
    groups: dict = {}
    for i, row in enumerate(report.rows):
        groups.setdefault(row.get(gcol) if gcol else "", []).append((row[xcol] if xcol else i, row))

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ycol = "fidelity" if report.scenario == "amplify" else "simulated"
    for key, items in groups.items():
        label = f"{gcol}={key}" if gcol else "simulated"
        xs = [_num(x) for x, _ in items]
        line = ax.plot(xs, [_num(r.get(ycol)) for _, r in items], "o", ms=3, label=label)[0]
        closed = [_num(r.get("closed_form")) for _, r in items]
        if any(not math.isnan(c) for c in closed):
            ax.plot(xs, closed, "-", lw=1, color=line.get_color())
    ax.set_xlabel(xcol or "row")
    ax.set_ylabel(ycol)
    ax.set_title(report.scenario)
    if len(groups) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
