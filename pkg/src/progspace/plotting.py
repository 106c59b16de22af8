"""Static SVG figures of the progression space.

Every subject scatter is drawn as a single collection with gid
"subjects", so the marker count in the SVG equals the number of plotted
subjects. Output is byte-stable: the SVG hash salt is fixed and the date
stamp dropped.
"""

from __future__ import annotations

from pathlib import Path
from xml.etree import ElementTree

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.lines import Line2D

from .metrics import auc, roc_curve

DIAGNOSIS_COLORS = {"CN": "#4c72b0", "MCI": "#dd8452", "AD": "#c44e52"}
ZONE_COLORS = {"Control": "#9a9a9a", "Low": "#55a868", "Moderate": "#e0b040", "High": "#c44e52",
               "Unassigned": "#000000"}
APOE4_COLORS = {0: "#4c72b0", 2: "#c44e52"}
CLUSTER_COLORS = ("#8172b3", "#64b5cd")

_RC = {"svg.hashsalt": "progspace", "svg.fonttype": "none", "font.size": 9}


def _figure(title):
    fig = Figure(figsize=(5.5, 4.5))
    ax = fig.add_subplot(1, 1, 1)
    ax.set_title(title)
    return fig, ax


def _space_axes(ax):
    ax.set_xlabel("cognition axis (decline grows toward -x)")
    ax.set_ylabel("memory axis (decline grows toward +y)")


def _legend(ax, colors: dict, labels=None):
    handles = [Line2D([], [], marker="o", linestyle="", color=c, label=str(k)) for k, c in colors.items()
               if labels is None or k in labels]
    ax.legend(handles=handles, loc="best", frameon=False)


def save_svg(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _scatter(ax, xy, colors, s=14, gid="subjects", **kw):
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    return ax.scatter(xy[:, 0], xy[:, 1], c=list(colors), s=s, linewidths=0, gid=gid, **kw)


def plot_space(xy, diagnoses, path, title="Progression space"):
    """Subjects colored by diagnosis."""
    fig, ax = _figure(title)
    _scatter(ax, xy, [DIAGNOSIS_COLORS[d] for d in diagnoses], alpha=0.8)
    _space_axes(ax)
    _legend(ax, DIAGNOSIS_COLORS, set(diagnoses))
    return save_svg(fig, path)


def plot_zones(xy, zones, path, means=None, title="Progression zones"):
    """Subjects colored by zone; `means` maps zone name to a component mean."""
    fig, ax = _figure(title)
    _scatter(ax, xy, [ZONE_COLORS[z] for z in zones], alpha=0.8)
    for name, mu in (means or {}).items():
        ax.plot([mu[0]], [mu[1]], marker="X", markersize=10, color="black", linestyle="")
        ax.annotate(name, mu, xytext=(6, 6), textcoords="offset points")
    _space_axes(ax)
    _legend(ax, ZONE_COLORS, set(zones))
    return save_svg(fig, path)


def plot_roc(proba, y_true, classes, path, title="One-vs-rest ROC (out-of-fold)"):
    """Per-class ROC curves with the AUC in the legend; undefined classes are skipped."""
    proba = np.asarray(proba, dtype=float)
    y_true = np.asarray(list(y_true), dtype=object)
    fig, ax = _figure(title)
    for j, c in enumerate(classes):
        pos = y_true == c
        if pos.all() or not pos.any():
            continue
        pts = np.asarray(roc_curve(proba[:, j], pos))
        ax.plot(pts[:, 0], pts[:, 1], color=ZONE_COLORS.get(c), label=f"{c} (AUC = {auc(pts):.2f})")
    ax.plot([0, 1], [0, 1], color="#cccccc", linestyle="--", linewidth=0.8)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.legend(loc="lower right", frameon=False)
    return save_svg(fig, path)


def plot_apoe4(xy, apoe4, path, title="APOE4 carriers in the progression space"):
    """Subjects with 0 or 2 copies; single carriers and missing counts are left out."""
    apoe4 = list(apoe4)
    keep = [i for i, a in enumerate(apoe4) if a in APOE4_COLORS]
    xy = np.asarray(xy, dtype=float)[keep]
    fig, ax = _figure(title)
    _scatter(ax, xy, [APOE4_COLORS[apoe4[i]] for i in keep], alpha=0.8)
    _space_axes(ax)
    ax.legend(handles=[Line2D([], [], marker="o", linestyle="", color=c, label=f"APOE4 = {k}")
                       for k, c in APOE4_COLORS.items()], loc="best", frameon=False)
    return save_svg(fig, path)


def plot_reversion(xy, zones, reverted, path, title="Reverting subjects"):
    """All subjects by zone, reverters ringed on top."""
    xy = np.asarray(xy, dtype=float)
    reverted = np.asarray(reverted, dtype=bool)
    fig, ax = _figure(title)
    _scatter(ax, xy, [ZONE_COLORS[z] for z in zones], alpha=0.35)
    if reverted.any():
        ax.scatter(xy[reverted, 0], xy[reverted, 1], s=40, facecolors="none", edgecolors="black",
                   linewidths=1.0, gid="reverters")
    _space_axes(ax)
    handles = [Line2D([], [], marker="o", linestyle="", color=ZONE_COLORS[z], label=z)
               for z in ZONE_COLORS if z in set(zones)]
    handles.append(Line2D([], [], marker="o", linestyle="", markerfacecolor="none", color="black",
                          label=f"reverted ({int(reverted.sum())})"))
    ax.legend(handles=handles, loc="best", frameon=False)
    return save_svg(fig, path)


def plot_control_age(xy, cluster, ages, path, zone_means=None, title="Control clusters"):
    """Controls split in two clusters, each annotated with its mean age."""
    xy = np.asarray(xy, dtype=float)
    cluster = np.asarray(cluster, dtype=int)
    ages = np.asarray(ages, dtype=float)
    fig, ax = _figure(title)
    _scatter(ax, xy, [CLUSTER_COLORS[c] for c in cluster], alpha=0.8)
    for c in sorted(set(cluster.tolist())):
        mu = xy[cluster == c].mean(axis=0)
        ax.annotate(f"mean age {ages[cluster == c].mean():.1f}", mu, xytext=(0, 10),
                    textcoords="offset points", ha="center", gid=f"age-label-{c}")
    for name, mu in (zone_means or {}).items():
        ax.plot([mu[0]], [mu[1]], marker="X", markersize=9, color=ZONE_COLORS[name], linestyle="")
        ax.annotate(name, mu, xytext=(6, 6), textcoords="offset points")
    _space_axes(ax)
    return save_svg(fig, path)


def count_markers(svg_text: str, gid: str = "subjects") -> int:
    """Markers drawn inside the element `gid` of a saved SVG."""
    root = ElementTree.fromstring(svg_text)
    for el in root.iter():
        if el.get("id") == gid:
            return sum(1 for e in el.iter() if e.tag.endswith("}use"))
    return 0
