"""PNG figures rendered next to experiment CSVs.

Uses the Agg backend with fixed rc settings and no software/date metadata so
reruns produce identical bytes.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "grouprip",
}
_META = {"Software": None}


def _lines(ax, rows, x, y, key, dashed=lambda r: False):
    groups: dict = {}
    for r in rows:
        groups.setdefault(key(r), []).append(r)
    for label, rs in groups.items():
        rs = sorted(rs, key=lambda r: r[x])
        ls = "--" if dashed(rs[0]) else "-"
        ax.plot([r[x] for r in rs], [r[y] for r in rs], marker="o", linestyle=ls, label=label)
    ax.legend(fontsize=7)


def _phase(ax, rows):
    _lines(ax, rows, "m", "success_rate", lambda r: f"s={r['s']}")
    ax.set_xlabel("measurements per sensor m")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.02)


def _dcs(ax, rows):
    # per-sensor dashed: in the adversarial scenario it coincides with joint
    _lines(ax, rows, "m", "success_rate", lambda r: f"{r['scenario']} {r['method']} s={r['s']}",
           dashed=lambda r: r["method"] == "per_sensor")
    ax.set_xlabel("measurements per sensor m")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.02)


def _gric(ax, rows):
    groups: dict = {}
    for r in rows:
        groups.setdefault(f"{r['mode']} s={r['s']}", []).append(r)
    for label, rs in groups.items():
        rs = sorted(rs, key=lambda r: r["m"])
        ms = [r["m"] for r in rs]
        ax.plot(ms, [r["delta_median"] for r in rs], marker="o", label=label)
        ax.fill_between(ms, [r["delta_q1"] for r in rs], [r["delta_q3"] for r in rs], alpha=0.2)
    ax.legend(fontsize=7)
    ax.set_xlabel("measurements per sensor m")
    ax.set_ylabel("GRIC delta_s")


def _bounds(ax, rows):
    _lines(ax, rows, "s", "M_bound", lambda r: f"bound {r['basis']}/{r['mode']}")
    _lines(ax, rows, "s", "dense_lower_M", lambda r: "dense lower bound")
    observed = [r for r in rows if r["M_star"] is not None]
    if observed:
        _lines(ax, observed, "s", "M_star", lambda r: f"observed {r['basis']}/{r['mode']}")
    ax.set_yscale("log")
    ax.set_xlabel("group sparsity s")
    ax.set_ylabel("total measurements M")


_DRAW = {"phase_transition": _phase, "adversarial_dcs": _dcs, "gric_curve": _gric, "bounds_table": _bounds}


def render(result, path) -> Path:
    """Draw the figure for ``result`` and save it as PNG at ``path``."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        _DRAW[result.experiment](ax, result.rows)
        ax.set_title(result.experiment.replace("_", " "))
        fig.tight_layout()
        fig.savefig(path, format="png", metadata=_META)
        plt.close(fig)
    return path
