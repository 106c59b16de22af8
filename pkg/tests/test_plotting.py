import re
from xml.etree import ElementTree

import numpy as np

from progspace.plotting import (count_markers, plot_apoe4, plot_control_age, plot_reversion, plot_roc,
                                plot_space, plot_zones)


def points(n, seed=0):
    return np.random.default_rng(seed).normal(size=(n, 2))


def texts(svg):
    root = ElementTree.fromstring(svg)
    return ["".join(e.itertext()) for e in root.iter() if e.tag.endswith("}text")]


def group_text(svg, gid):
    root = ElementTree.fromstring(svg)
    for el in root.iter():
        if el.get("id") == gid:
            return "".join(el.itertext()).strip()
    return None


def test_space_one_marker_per_subject(tmp_path):
    xy = points(37)
    dx = ["CN", "MCI", "AD"] * 12 + ["CN"]
    svg = plot_space(xy, dx, tmp_path / "s.svg").read_text()
    assert count_markers(svg) == 37
    assert {"CN", "MCI", "AD"} <= set(texts(svg))


def test_output_is_byte_stable(tmp_path):
    xy = points(20)
    a = plot_zones(xy, ["Low", "Moderate"] * 10, tmp_path / "a.svg").read_bytes()
    b = plot_zones(xy, ["Low", "Moderate"] * 10, tmp_path / "b.svg").read_bytes()
    assert a == b
    assert b"<dc:date>" not in a


def test_perfect_classifier_legend(tmp_path):
    y = ["Control", "Low", "Moderate", "High"] * 5
    proba = np.eye(4)[[0, 1, 2, 3] * 5]
    svg = plot_roc(proba, y, ["Control", "Low", "Moderate", "High"], tmp_path / "r.svg").read_text()
    legend = [t for t in texts(svg) if "AUC" in t]
    assert len(legend) == 4
    assert all(t.endswith("(AUC = 1.00)") for t in legend)


def test_roc_skips_absent_class(tmp_path):
    y = ["Control", "Low"] * 4
    proba = np.tile([[0.6, 0.2, 0.1, 0.1], [0.2, 0.6, 0.1, 0.1]], (4, 1))
    svg = plot_roc(proba, y, ["Control", "Low", "Moderate", "High"], tmp_path / "r.svg").read_text()
    legend = [t for t in texts(svg) if "AUC" in t]
    assert len(legend) == 2


def test_apoe4_drops_single_carriers(tmp_path):
    xy = points(30)
    counts = [0, 1, 2] * 10
    svg = plot_apoe4(xy, counts, tmp_path / "a.svg").read_text()
    assert count_markers(svg) == 20


def test_reversion_marks_reverters(tmp_path):
    xy = points(25)
    rev = np.zeros(25, dtype=bool)
    rev[[3, 9, 11]] = True
    svg = plot_reversion(xy, ["Low"] * 25, rev, tmp_path / "v.svg").read_text()
    assert count_markers(svg) == 25
    assert count_markers(svg, "reverters") == 3


def test_control_age_labels(tmp_path):
    xy = np.vstack([points(10, 1) - 3, points(12, 2) + 3])
    cluster = [0] * 10 + [1] * 12
    ages = [70.0] * 10 + [80.0] * 12
    svg = plot_control_age(xy, cluster, ages, tmp_path / "c.svg",
                           zone_means={"Moderate": (3.0, 3.0)}).read_text()
    assert count_markers(svg) == 22
    labels = [group_text(svg, f"age-label-{c}") for c in (0, 1)]
    assert labels == ["mean age 70.0", "mean age 80.0"]
    assert re.search(r"Moderate", svg)
