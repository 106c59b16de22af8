"""Stage pipeline behind the CLI.

A run directory holds one subdirectory per stage:

    cohort/    cohort.csv, schema.txt, ground_truth.csv (synthetic runs)
    space/     preprocess.json, design_raw.csv, W.csv, H.csv, nmf_meta.txt,
               residuals.csv, axes.txt, coords.csv
    clusters/  bic.csv, gmm.txt, assignments.csv, controls_gmm.txt,
               controls.csv, planting.txt (when a truth sidecar exists)
    model/     folds.csv, grid.csv, forest.txt, train_predictions.csv
    report/    report.csv, report.txt, cv_folds.csv, oof_proba.csv
    plots/     <kind>.svg

Every stage reads its inputs from the files of earlier stages only, so
deleting a stage directory and re-running it reproduces the same bytes.
A stage is written to a scratch directory and moved into place when it
completes; a failing run removes whatever it created.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import shutil
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .cohort import (Diagnosis, MinMaxStats, Preprocessor, load_cohort, load_schema, write_cohort,
                     write_schema)
from .config import PLOT_KINDS, PipelineConfig
from .errors import ArtifactError, ConfigError, LabelingError, ProgspaceError, SchemaError
from .forest import (MajorityClassifier, cross_validate, cross_validate_estimator, forest_fit,
                     grid_search_cv, load_forest, save_forest, stratified_kfold)
from .gmm import Zone, assign_zones, fit_best, label_zones, load_gmm, save_gmm, select_k
from .metrics import (REPORT_CLASSES, confusion_matrix, cv_summary, one_vs_rest_auc, render_report,
                      write_report_csv)
from .nmf import (AxisInterpretation, AxisLabel, Orientation, interpret_axes, load_factorization,
                  nmf_fit, nmf_transform, orient_axes, save_factorization)
from .synth import CohortSpec, generate_cohort, load_ground_truth, verify_planting, write_ground_truth

STAGES = ("cohort", "space", "clusters", "model", "report", "plots")
PATIENT_DX = (Diagnosis.MCI.value, Diagnosis.DEMENTIA.value)


def _r(v) -> str:
    return repr(float(v))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path) -> list[dict]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise ArtifactError(f"missing artifact {path}: {exc}") from None


def _read_kv(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ArtifactError(f"missing artifact {path}: {exc}") from None
    out = {}
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def minmax_fold(train, test):
    """Scale a CV split with statistics of its training rows only."""
    st = MinMaxStats(train.min(axis=0), train.max(axis=0))
    return st.transform(train), st.transform(test)


@contextmanager
def _staging(root: Path, name: str):
    final = root / name
    tmp = root / f".{name}.partial"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if final.exists():
        shutil.rmtree(final)
    tmp.rename(final)


# ---------------------------------------------------------------- stage: cohort

def synth_spec(cfg: PipelineConfig) -> CohortSpec:
    s = cfg.synth
    kw = dict(seed=cfg.seed_for("synth"), reversion_fraction=s.reversion_fraction,
              missing_rate=s.missing_rate, noise_sd=s.noise_sd)
    if s.n_subjects is not None:
        kw["n_subjects"] = s.n_subjects
    spec = CohortSpec.for_horizon(cfg.run.horizon, **kw)
    spec.validate()
    return spec


def stage_cohort(cfg: PipelineConfig, root: Path, n_jobs: int = 1) -> None:
    with _staging(root, "cohort") as d:
        if cfg.cohort.input:
            src = Path(cfg.cohort.input)
            schema_path = Path(cfg.cohort.schema) if cfg.cohort.schema else src.with_name("schema.txt")
            if not schema_path.exists():
                raise ConfigError(f"no schema sidecar for {src}; set cohort.schema")
            schema = load_schema(schema_path)
            load_cohort(src, schema)  # validate before copying
            shutil.copyfile(src, d / "cohort.csv")
            write_schema(schema, d / "schema.txt")
            if cfg.cohort.truth:
                write_ground_truth(load_ground_truth(cfg.cohort.truth), d / "ground_truth.csv")
        else:
            cohort, truth = generate_cohort(synth_spec(cfg))
            write_cohort(cohort, d / "cohort.csv")
            write_schema(cohort.schema, d / "schema.txt")
            write_ground_truth(truth, d / "ground_truth.csv")


def read_cohort(root: Path):
    d = root / "cohort"
    if not (d / "cohort.csv").exists():
        raise ArtifactError(f"no cohort in {d}; run simulate or set cohort.input")
    return load_cohort(d / "cohort.csv", load_schema(d / "schema.txt"))


def read_truth(root: Path):
    p = root / "cohort" / "ground_truth.csv"
    return load_ground_truth(p) if p.exists() else None


# ---------------------------------------------------------------- stage: space

def _reverted(visit_dx: dict, horizon: int) -> bool:
    seq = [dx.severity for m, dx in sorted(visit_dx.items()) if m <= horizon]
    return any(b < a for a, b in zip(seq, seq[1:]))


def write_axes(interp: AxisInterpretation, path) -> None:
    o = interp.orientation
    lines = [f"memory_axis = {o.memory_axis}", f"cognition_axis = {o.cognition_axis}",
             f"memory_sign = {o.memory_sign!r}", f"cognition_sign = {o.cognition_sign!r}"]
    for i, (lab, load) in enumerate(zip(interp.axis_labels, interp.group_loadings)):
        lines.append(f"axis_{i}_label = {lab.value}")
        lines += [f"axis_{i}_mass_{g} = {v!r}" for g, v in sorted(load.items())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_axes(path) -> AxisInterpretation:
    kv = _read_kv(path)
    o = Orientation(int(kv["memory_axis"]), int(kv["cognition_axis"]), float(kv["memory_sign"]),
                    float(kv["cognition_sign"]))
    labels, loads = [], []
    for i in range(2):
        labels.append(AxisLabel(kv[f"axis_{i}_label"]))
        pre = f"axis_{i}_mass_"
        loads.append({k[len(pre):]: float(v) for k, v in kv.items() if k.startswith(pre)})
    return AxisInterpretation(labels, loads, o)


COORD_HEADER = ["subject_id", "x", "y", "score", "diagnosis", "dx_m0", "dx_m12", "apoe4", "age", "sex",
                "reverted"]


def stage_space(cfg: PipelineConfig, root: Path, n_jobs: int = 1) -> None:
    cohort = read_cohort(root)
    h = cfg.run.horizon
    pre, fm = Preprocessor.fit(cohort, h)
    fact = nmf_fit(fm.values, cfg.nmf.rank, cfg.seed_for("nmf"), cfg.nmf.tol, cfg.nmf.max_iter)
    severity = [r.diagnosis.severity for r in fm.row_meta]
    interp = orient_axes(interpret_axes(fact.H, fm.col_meta), fact.W, severity)
    xy = interp.orientation.project(fact.W)
    with _staging(root, "space") as d:
        save_factorization(fact, d)
        (d / "preprocess.json").write_text(pre.to_json() + "\n", encoding="utf-8")
        np.savetxt(d / "design_raw.csv", fm.raw, delimiter=",", fmt="%.17g",
                   header=",".join(c.name for c in fm.col_meta), comments="")
        write_axes(interp, d / "axes.txt")
        rows = []
        for r, (x, y) in zip(fm.row_meta, xy):
            vd = r.visit_diagnoses
            rows.append([r.subject_id, _r(x), _r(y), _r(y - x), r.diagnosis.value, vd[0].value,
                         vd[12].value, "" if r.apoe4_count is None else r.apoe4_count, _r(r.age), r.sex,
                         int(_reverted(vd, h))])
        _write_csv(d / "coords.csv", COORD_HEADER, rows)


def read_coords(root: Path) -> list[dict]:
    rows = _read_csv(root / "space" / "coords.csv")
    for r in rows:
        r["x"], r["y"], r["score"], r["age"] = float(r["x"]), float(r["y"]), float(r["score"]), float(r["age"])
        r["apoe4"] = None if r["apoe4"] == "" else int(r["apoe4"])
        r["reverted"] = r["reverted"] == "1"
    return rows


def read_design(root: Path) -> tuple[list[str], np.ndarray]:
    p = root / "space" / "design_raw.csv"
    if not p.exists():
        raise ArtifactError(f"missing artifact {p}")
    raw = np.loadtxt(p, delimiter=",", skiprows=1, ndmin=2)
    return [r["subject_id"] for r in read_coords(root)], raw


# ---------------------------------------------------------------- stage: clusters

def _xy(rows) -> np.ndarray:
    return np.array([[r["x"], r["y"]] for r in rows], dtype=float).reshape(-1, 2)


def stage_clusters(cfg: PipelineConfig, root: Path, n_jobs: int = 1) -> None:
    rows = read_coords(root)
    g = cfg.gmm
    seed = cfg.seed_for("gmm")
    patients = [r for r in rows if r["diagnosis"] in PATIENT_DX]
    controls = [r for r in rows if r["diagnosis"] not in PATIENT_DX]
    if len(patients) < g.zones_k:
        raise LabelingError(f"only {len(patients)} MCI/dementia subjects; cannot form {g.zones_k} zones")
    Xp = _xy(patients)
    k_hi = min(g.k_max, len(patients))
    scan = select_k(Xp, range(g.k_min, k_hi + 1), seed, g.restarts, g.reg, g.tol, g.max_iter)
    zm = scan.models.get(g.zones_k) or fit_best(Xp, g.zones_k, seed, g.restarts, g.reg, g.tol, g.max_iter)
    zm = label_zones(zm)
    if Zone.UNASSIGNED in zm.zone_labels:
        raise LabelingError("zone components tie on progression score")
    zones = assign_zones(zm, Xp)
    zone_of = {r["subject_id"]: z.value for r, z in zip(patients, zones)}

    with _staging(root, "clusters") as d:
        _write_csv(d / "bic.csv", ["k", "bic", "converged", "selected"],
                   [[k, _r(b), int(ok), int(k == scan.selected_k)] for k, b, ok in scan.candidates])
        save_gmm(zm, d / "gmm.txt")
        _write_csv(d / "assignments.csv", ["subject_id", "diagnosis", "zone", "target"],
                   [[r["subject_id"], r["diagnosis"], zone_of.get(r["subject_id"], ""),
                     zone_of.get(r["subject_id"], "Control")] for r in rows])
        if len(controls) >= 2:
            Xc = _xy(controls)
            cm = fit_best(Xc, 2, seed, g.restarts, g.reg, g.tol, g.max_iter)
            # cluster 0 is the one further from the patient zones
            order = np.argsort(cm.means[:, 1] - cm.means[:, 0], kind="stable")
            rank = np.empty(2, dtype=int)
            rank[order] = np.arange(2)
            save_gmm(type(cm)(cm.weights[order], cm.means[order], cm.covariances[order],
                              cm.log_likelihood, cm.history, cm.converged, reg=cm.reg), d / "controls_gmm.txt")
            _write_csv(d / "controls.csv", ["subject_id", "cluster", "age"],
                       [[r["subject_id"], int(rank[j]), _r(r["age"])] for r, j in zip(controls, cm.predict(Xc))])
        lines = [f"selected_k = {scan.selected_k}", f"zones_k = {g.zones_k}"]
        truth = read_truth(root)
        if truth is not None:
            ids = [r["subject_id"] for r in patients]
            pa = verify_planting(truth, ids, [zone_of[s] for s in ids], [r["score"] for r in patients])
            lines += [f"zone_agreement = {pa.zone_agreement!r}", f"high_top_tercile = {pa.high_top_tercile!r}",
                      f"n = {pa.n}"]
        (d / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_targets(root: Path, ids: list[str]) -> list[str]:
    rows = _read_csv(root / "clusters" / "assignments.csv")
    if [r["subject_id"] for r in rows] != ids:
        raise ArtifactError("cluster assignments do not match the design rows")
    return [r["target"] for r in rows]


# ---------------------------------------------------------------- stage: model

def _read_folds(root: Path, n: int) -> list[np.ndarray]:
    rows = _read_csv(root / "model" / "folds.csv")
    fold = np.array([int(r["fold"]) for r in rows])
    if len(fold) != n:
        raise ArtifactError("fold assignment does not match the design rows")
    return [np.flatnonzero(fold == f) for f in range(fold.max() + 1)]


def stage_model(cfg: PipelineConfig, root: Path, n_jobs: int = 1) -> None:
    ids, raw = read_design(root)
    y = read_targets(root, ids)
    classes = list(REPORT_CLASSES)
    folds = stratified_kfold(y, cfg.cv.folds, cfg.seed_for("cv"))
    seed = cfg.seed_for("forest")
    grid = grid_search_cv(raw, y, cfg.forest.grid(), cfg.cv.folds, seed, classes, minmax_fold, n_jobs, folds)
    values = MinMaxStats(raw.min(axis=0), raw.max(axis=0)).transform(raw)
    model = forest_fit(values, y, grid.best, seed, classes, n_jobs)
    with _staging(root, "model") as d:
        fold_of = np.empty(len(ids), dtype=int)
        for f, idx in enumerate(folds):
            fold_of[idx] = f
        _write_csv(d / "folds.csv", ["subject_id", "fold"], zip(ids, fold_of.tolist()))
        _write_csv(d / "grid.csv",
                   ["n_trees", "max_depth", "mtry", "min_samples_leaf", "mean_accuracy", "fold_accuracies",
                    "selected"],
                   [[p.n_trees, "none" if p.max_depth is None else p.max_depth, p.mtry, p.min_samples_leaf,
                     _r(m), " ".join(_r(a) for a in fa), int(p == grid.best)] for p, m, fa in grid.scores])
        save_forest(model, d / "forest.txt")
        proba = model.predict_proba(values)
        _write_csv(d / "train_predictions.csv", ["subject_id", "target", "predicted"] + [f"p_{c.lower()}" for c in classes],
                   [[s, t, classes[int(np.argmax(p))]] + [_r(v) for v in p] for s, t, p in zip(ids, y, proba)])


# ---------------------------------------------------------------- stage: report

def _fold_summary(results, codes, classes, horizon, model):
    accs, aucs = [], []
    conf = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for fr in results:
        truth = [classes[c] for c in codes[fr.test_index]]
        pred = [classes[i] for i in np.argmax(fr.proba, axis=1)]
        accs.append(fr.accuracy)
        aucs.append(one_vs_rest_auc(fr.proba, truth, classes))
        conf += confusion_matrix(truth, pred, classes)
    return cv_summary(accs, aucs, horizon, conf, model, classes), aucs


def stage_report(cfg: PipelineConfig, root: Path, n_jobs: int = 1) -> None:
    ids, raw = read_design(root)
    y = read_targets(root, ids)
    classes = list(REPORT_CLASSES)
    codes = np.array([classes.index(t) for t in y])
    folds = _read_folds(root, len(ids))
    forest = load_forest(root / "model" / "forest.txt")
    seed = cfg.seed_for("forest")
    h = cfg.run.horizon
    rf = cross_validate(raw, y, forest.params, folds, seed, classes, minmax_fold, n_jobs)
    base = cross_validate_estimator(MajorityClassifier, raw, y, folds, classes, minmax_fold)
    report, aucs = _fold_summary(rf, codes, classes, h, f"M{h}")
    baseline, _ = _fold_summary(base, codes, classes, h, f"Majority-M{h}")
    with _staging(root, "report") as d:
        write_report_csv([report, baseline], d / "report.csv")
        extra = [
            f"Selected forest: {forest.params.describe()} (grid search on the same folds; "
            "the accuracy above is the non-nested fold mean of the selected configuration).",
            f"Out-of-bag accuracy of the final forest: {forest.oob_accuracy * 100:.2f}%.",
            f"Majority-class baseline accuracy: {baseline.accuracy_text()}.",
            f"AUCs are one-vs-rest on the {len(classes)}-class target.",
        ]
        (d / "report.txt").write_text(render_report(report, extra), encoding="utf-8")
        _write_csv(d / "cv_folds.csv", ["fold", "n_test", "accuracy"] + [f"auc_{c.lower()}" for c in classes],
                   [[f, len(fr.test_index), _r(fr.accuracy)] + ["" if a[c] is None else _r(a[c]) for c in classes]
                    for f, (fr, a) in enumerate(zip(rf, aucs))])
        oof = np.zeros((len(ids), len(classes)))
        fold_of = np.zeros(len(ids), dtype=int)
        for f, fr in enumerate(rf):
            oof[fr.test_index] = fr.proba
            fold_of[fr.test_index] = f
        _write_csv(d / "oof_proba.csv", ["subject_id", "target", "fold"] + [f"p_{c.lower()}" for c in classes],
                   [[s, t, f] + [_r(v) for v in p] for s, t, f, p in zip(ids, y, fold_of.tolist(), oof)])


# ---------------------------------------------------------------- stage: plots

def render_plot(root: Path, kind: str, out_dir: Path) -> Path:
    if kind not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}; choose from {', '.join(PLOT_KINDS)}")
    rows = read_coords(root)
    xy = _xy(rows)
    path = out_dir / f"{kind}.svg"
    if kind == "space":
        return plotting.plot_space(xy, [r["diagnosis"] for r in rows], path)
    if kind == "apoe4":
        return plotting.plot_apoe4(xy, [r["apoe4"] for r in rows], path)
    if kind == "roc":
        oof = _read_csv(root / "report" / "oof_proba.csv")
        proba = np.array([[float(r[f"p_{c.lower()}"]) for c in REPORT_CLASSES] for r in oof])
        return plotting.plot_roc(proba, [r["target"] for r in oof], REPORT_CLASSES, path)
    assign = _read_csv(root / "clusters" / "assignments.csv")
    targets = [r["target"] for r in assign]
    gm = load_gmm(root / "clusters" / "gmm.txt")
    means = {z.value: mu for z, mu in zip(gm.zone_labels, gm.means)}
    if kind == "zones":
        return plotting.plot_zones(xy, targets, path, means)
    if kind == "reversion":
        return plotting.plot_reversion(xy, targets, [r["reverted"] for r in rows], path)
    ctrl = _read_csv(root / "clusters" / "controls.csv")
    pos = {r["subject_id"]: i for i, r in enumerate(rows)}
    idx = [pos[r["subject_id"]] for r in ctrl]
    return plotting.plot_control_age(xy[idx], [int(r["cluster"]) for r in ctrl], [float(r["age"]) for r in ctrl],
                                     path, means)


def stage_plots(cfg: PipelineConfig, root: Path, n_jobs: int = 1) -> None:
    with _staging(root, "plots") as d:
        for kind in cfg.plot.kinds:
            render_plot(root, kind, d)


STAGE_FUNCS = {"cohort": stage_cohort, "space": stage_space, "clusters": stage_clusters,
               "model": stage_model, "report": stage_report, "plots": stage_plots}


# ---------------------------------------------------------------- manifest and runs

def _versions() -> list[str]:
    import matplotlib
    import numba
    import scipy
    return [f"progspace = {__version__}", f"python = {platform.python_version()}",
            f"numpy = {np.__version__}", f"scipy = {scipy.__version__}", f"numba = {numba.__version__}",
            f"matplotlib = {matplotlib.__version__}"]


def artifact_hashes(root: Path) -> list[tuple[str, str]]:
    out = []
    for stage in STAGES:
        d = root / stage
        if d.is_dir():
            for p in sorted(d.rglob("*")):
                if p.is_file():
                    out.append((p.relative_to(root).as_posix(), hashlib.sha256(p.read_bytes()).hexdigest()))
    return out


def write_manifest(cfg: PipelineConfig, root: Path) -> str:
    """Seeds, versions, resolved config and artifact digests; returns the run hash."""
    hashes = artifact_hashes(root)
    run_hash = hashlib.sha256("".join(f"{h}  {p}\n" for p, h in hashes).encode()).hexdigest()
    seeds = [f"seed.{s} = {cfg.seed_for(s)}" for s in ("synth", "nmf", "gmm", "forest", "cv")]
    # the output location is not part of what was computed
    echo = [line for line in cfg.echo() if not line.startswith("run.out ")]
    lines = ["# progspace run manifest", "[versions]", *_versions(), "[seeds]", *seeds, "[config]", *echo,
             "[artifacts]", *(f"{h}  {p}" for p, h in hashes), f"run_hash = {run_hash}"]
    (root / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return run_hash


@dataclass
class RunResult:
    root: Path
    run_hash: str
    ran: list


def run_stages(cfg: PipelineConfig, stages, n_jobs: int = 1, resume: bool = False) -> RunResult:
    """Run `stages` in order; on failure remove everything this call created."""
    root = cfg.out
    root.mkdir(parents=True, exist_ok=True)
    created, ran = [], []
    for name in stages:
        if resume and (root / name).is_dir():
            continue
        existed = (root / name).exists()
        try:
            STAGE_FUNCS[name](cfg, root, n_jobs)
        except ProgspaceError as exc:
            exc.stage = name
            for c in created:
                shutil.rmtree(root / c, ignore_errors=True)
            raise
        if not existed:
            created.append(name)
        ran.append(name)
    return RunResult(root, write_manifest(cfg, root), ran)


def simulate(cfg: PipelineConfig) -> RunResult:
    return run_stages(cfg, ["cohort"])


def fit(cfg: PipelineConfig, n_jobs: int = 1, resume: bool = False) -> RunResult:
    return run_stages(cfg, STAGES, n_jobs, resume)


def evaluate(cfg: PipelineConfig, n_jobs: int = 1) -> RunResult:
    return run_stages(cfg, ["report"], n_jobs)


def plot(cfg: PipelineConfig, kinds=None) -> list[Path]:
    root = cfg.out
    d = root / "plots"
    d.mkdir(parents=True, exist_ok=True)
    try:
        paths = [render_plot(root, k, d) for k in (kinds or cfg.plot.kinds)]
    except ProgspaceError as exc:
        exc.stage = "plots"
        raise
    write_manifest(cfg, root)
    return paths


PREDICT_HEADER = ["subject_id", "x", "y", "score"] + [f"p_{c.lower()}" for c in REPORT_CLASSES] + ["predicted"]


def predict(cfg: PipelineConfig, input_path, output_path=None, schema_path=None) -> Path:
    """Place new subjects in the trained space and predict their horizon class."""
    root = cfg.out
    try:
        pre = Preprocessor.from_json((root / "space" / "preprocess.json").read_text(encoding="utf-8"))
    except OSError as exc:
        raise ArtifactError(f"no trained run in {root}: {exc}") from None
    schema = pre.schema
    if schema_path is not None:
        given = load_schema(schema_path)
        if [(c.name, c.kind, c.group) for c in given] != [(c.name, c.kind, c.group) for c in schema]:
            raise SchemaError("schema mismatch with the training manifest")
    cohort = load_cohort(input_path, schema)
    fm = pre.transform(cohort, require_horizon=False)
    fact = load_factorization(root / "space")
    interp = read_axes(root / "space" / "axes.txt")
    W = nmf_transform(fm.values, fact.H, cfg.seed_for("nmf"), cfg.nmf.tol, cfg.nmf.max_iter)
    xy = interp.orientation.project(W)
    forest = load_forest(root / "model" / "forest.txt")
    proba = forest.predict_proba(fm.values)
    out = Path(output_path) if output_path else root / "predictions" / "predictions.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, PREDICT_HEADER,
               [[s, _r(x), _r(y), _r(y - x)] + [_r(v) for v in p] + [forest.classes[int(np.argmax(p))]]
                for s, (x, y), p in zip(fm.subject_ids, xy, proba)])
    return out


def read_summary(root: Path) -> dict:
    return _read_kv(Path(root) / "clusters" / "summary.txt")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
