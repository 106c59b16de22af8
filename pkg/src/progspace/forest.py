"""CART trees, bootstrap random forests and grid-searched cross-validation.

Split search and prediction run in numba kernels over flat node arrays.
All randomness flows from explicit seeds: tree `t` of a forest seeded `s`
draws its bootstrap and feature subsets from a stream derived from
(s, t) alone, so trees can be built in any order or process and a
forest of 100 trees is exactly the first 100 trees of one of 300.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numba
import numpy as np

from .errors import ArtifactError, DegenerateTargetError, FitError, ShapeError, StratificationError

MIN_GAIN = 1e-12


def gini(class_counts) -> float:
    c = np.asarray(class_counts, dtype=float)
    total = c.sum()
    if total <= 0:
        raise ValueError("gini impurity of an empty node is undefined")
    p = c / total
    return float(1.0 - np.sum(p * p))


# ---------------------------------------------------------------- kernels

@numba.njit(cache=True)
def _gini_from(counts, total):
    s = 0.0
    for c in counts:
        s += c * c
    return 1.0 - s / (total * total)


@numba.njit(cache=True)
def _grow(X, y, sample, n_classes, max_depth, min_leaf, mtry, seed):
    np.random.seed(seed)
    m = sample.shape[0]
    d = X.shape[1]
    cap = 2 * m - 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, n_classes), dtype=np.int64)
    depth_of = np.zeros(cap, dtype=np.int64)
    start_of = np.zeros(cap, dtype=np.int64)
    end_of = np.zeros(cap, dtype=np.int64)

    work = sample.copy()
    buf = np.empty(m, dtype=np.int64)
    feats = np.arange(d)
    vals = np.empty(m)
    lc = np.zeros(n_classes)
    tc = np.zeros(n_classes)

    stack = np.empty(cap, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    end_of[0] = m
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack[top]
        lo = start_of[node]
        hi = end_of[node]
        nn = hi - lo
        for i in range(lo, hi):
            counts[node, y[work[i]]] += 1
        n_present = 0
        for c in range(n_classes):
            if counts[node, c] > 0:
                n_present += 1
        if n_present <= 1 or (max_depth >= 0 and depth_of[node] >= max_depth) or nn < 2 * min_leaf:
            continue
        for c in range(n_classes):
            tc[c] = counts[node, c]
        parent = _gini_from(tc, nn)

        best_gain = MIN_GAIN
        best_f = -1
        best_thr = 0.0
        # partial Fisher-Yates: feats[:mtry] becomes this node's sample
        for a in range(mtry):
            b = a + np.random.randint(d - a)
            tmp = feats[a]
            feats[a] = feats[b]
            feats[b] = tmp
        for a in range(mtry):
            f = feats[a]
            for i in range(nn):
                vals[i] = X[work[lo + i], f]
            order = np.argsort(vals[:nn])
            for c in range(n_classes):
                lc[c] = 0.0
            for i in range(nn - 1):
                lc[y[work[lo + order[i]]]] += 1.0
                v0 = vals[order[i]]
                v1 = vals[order[i + 1]]
                nl = i + 1
                nr = nn - nl
                if v0 == v1 or nl < min_leaf or nr < min_leaf:
                    continue
                gl = _gini_from(lc, nl)
                s = 0.0
                for c in range(n_classes):
                    r = tc[c] - lc[c]
                    s += r * r
                gr = 1.0 - s / (nr * nr)
                gain = parent - (nl * gl + nr * gr) / nn
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    thr = 0.5 * (v0 + v1)
                    if thr >= v1:
                        thr = v0
                    best_thr = thr
        if best_f < 0:
            continue
        nl = 0
        nr = 0
        for i in range(lo, hi):
            s_ = work[i]
            if X[s_, best_f] <= best_thr:
                work[lo + nl] = s_
                nl += 1
            else:
                buf[nr] = s_
                nr += 1
        for i in range(nr):
            work[lo + nl + i] = buf[i]
        feature[node] = best_f
        threshold[node] = best_thr
        li = n_nodes
        ri = n_nodes + 1
        n_nodes += 2
        left[node] = li
        right[node] = ri
        start_of[li] = lo
        end_of[li] = lo + nl
        start_of[ri] = lo + nl
        end_of[ri] = hi
        depth_of[li] = depth_of[node] + 1
        depth_of[ri] = depth_of[node] + 1
        stack[top] = ri
        top += 1
        stack[top] = li
        top += 1
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), counts[:n_nodes].copy())


@numba.njit(cache=True)
def _apply(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


# ---------------------------------------------------------------- trees

@dataclass
class TreeParams:
    max_depth: int | None = None
    min_samples_leaf: int = 1
    mtry: int | str | None = None

    def resolve_mtry(self, d: int) -> int:
        return resolve_mtry(self.mtry, d)


def resolve_mtry(mtry, d: int) -> int:
    if mtry is None or mtry == "all":
        k = d
    elif mtry == "sqrt":
        k = math.ceil(math.sqrt(d))
    elif mtry == "third":
        k = math.ceil(d / 3)
    else:
        k = int(mtry)
    return max(1, min(d, k))


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    max_depth: int | None
    min_samples_leaf: int
    sample: np.ndarray | None = field(default=None, repr=False)
    classes: list | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def apply(self, X) -> np.ndarray:
        return _apply(np.ascontiguousarray(X, dtype=float), self.feature, self.threshold, self.left, self.right)

    def leaf_votes(self) -> np.ndarray:
        """Majority class per node; ties go to the earlier class."""
        return np.argmax(self.counts, axis=1)

    def predict_index(self, X) -> np.ndarray:
        return self.leaf_votes()[self.apply(X)]


def _encode(y, classes=None):
    y = list(y)
    if classes is None:
        classes = sorted(set(y))
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        codes = np.array([lookup[v] for v in y], dtype=np.int64)
    except KeyError as exc:
        raise FitError(f"label {exc.args[0]!r} not in class set {list(classes)}") from None
    return codes, list(classes)


def _check_X(X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("X must be a 2-D matrix")
    if X.shape[0] == 0:
        raise FitError("cannot grow a tree on empty data")
    return X


def _grow_tree(X, codes, n_classes, sample, params: TreeParams, seed: int) -> DecisionTree:
    max_depth = -1 if params.max_depth is None else int(params.max_depth)
    mtry = params.resolve_mtry(X.shape[1])
    f, t, l, r, c = _grow(X, codes, np.asarray(sample, dtype=np.int64), n_classes, max_depth,
                          int(params.min_samples_leaf), mtry, np.uint32(seed))
    return DecisionTree(f, t, l, r, c, params.max_depth, params.min_samples_leaf, sample=np.asarray(sample))


def tree_fit(X, y, params: TreeParams | None = None, rng: np.random.Generator | None = None,
             classes=None) -> DecisionTree:
    """Greedy CART growth on all rows of X.

    Each node tries `mtry` features drawn without replacement, every
    midpoint between adjacent distinct values, and keeps the split with
    the largest Gini decrease.
    """
    params = params or TreeParams()
    rng = rng if rng is not None else np.random.default_rng(0)
    X = _check_X(X)
    codes, classes = _encode(y, classes)
    if len(codes) != X.shape[0]:
        raise ShapeError("X and y lengths differ")
    tree = _grow_tree(X, codes, len(classes), np.arange(X.shape[0]), params, int(rng.integers(2**32)))
    tree.classes = classes
    return tree


# ---------------------------------------------------------------- forests

@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    mtry: int | str | None = "sqrt"
    min_samples_leaf: int = 1

    def tree_params(self) -> TreeParams:
        return TreeParams(self.max_depth, self.min_samples_leaf, self.mtry)

    def describe(self) -> str:
        depth = "none" if self.max_depth is None else self.max_depth
        return f"n_trees={self.n_trees} max_depth={depth} mtry={self.mtry} min_samples_leaf={self.min_samples_leaf}"


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    params: ForestParams
    classes: list
    n_features: int
    seed: int
    oob_accuracy: float = float("nan")

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def mtry(self) -> int:
        return resolve_mtry(self.params.mtry, self.n_features)

    def predict_proba(self, X) -> np.ndarray:
        return forest_predict_proba(self, X)

    def predict(self, X) -> list:
        return [self.classes[i] for i in np.argmax(self.predict_proba(X), axis=1)]


def _tree_task(args):
    X, codes, n_classes, params, seed, t = args
    rng = np.random.default_rng([seed, t])
    n = X.shape[0]
    sample = rng.integers(0, n, size=n)
    return _grow_tree(X, codes, n_classes, sample, params, int(rng.integers(2**32)))


def bootstrap_indices(n: int, seed: int, t: int) -> np.ndarray:
    """The bootstrap drawn for tree `t` of a forest seeded `seed`."""
    return np.random.default_rng([seed, t]).integers(0, n, size=n)


def _votes(model: ForestModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} columns, got {X.shape[-1] if X.ndim else 0}")
    votes = np.zeros((X.shape[0], len(model.classes)))
    rows = np.arange(X.shape[0])
    for tree in model.trees:
        votes[rows, tree.predict_index(X)] += 1.0
    return votes


def _oob_accuracy(model: ForestModel, X, codes) -> float:
    n = X.shape[0]
    votes = np.zeros((n, len(model.classes)))
    for tree in model.trees:
        oob = np.ones(n, dtype=bool)
        oob[tree.sample] = False
        idx = np.flatnonzero(oob)
        if idx.size:
            votes[idx, tree.predict_index(X[idx])] += 1.0
    has = votes.sum(axis=1) > 0
    if not has.any():
        return float("nan")
    return float(np.mean(np.argmax(votes[has], axis=1) == codes[has]))


def forest_fit(X, y, params: ForestParams | None = None, seed: int = 0, classes=None,
               n_jobs: int = 1) -> ForestModel:
    params = params or ForestParams()
    X = _check_X(X)
    codes, classes = _encode(y, classes)
    if X.shape[0] < 2 or len(codes) != X.shape[0]:
        raise ShapeError("forest needs at least two rows and one label per row")
    if len(np.unique(codes)) < 2:
        raise DegenerateTargetError("training labels contain a single class")
    if params.n_trees < 1:
        raise FitError("a forest needs at least one tree")
    tp = params.tree_params()
    tasks = [(X, codes, len(classes), tp, seed, t) for t in range(params.n_trees)]
    trees = parallel_map(_tree_task, tasks, n_jobs)
    model = ForestModel(trees, params, classes, X.shape[1], seed)
    model.oob_accuracy = _oob_accuracy(model, X, codes)
    return model


def forest_predict_proba(model: ForestModel, X_new) -> np.ndarray:
    """Fraction of trees voting for each class."""
    votes = _votes(model, X_new)
    return votes / model.n_trees


def parallel_map(fn: Callable, tasks: Sequence, n_jobs: int = 1) -> list:
    """Ordered map; results never depend on `n_jobs`."""
    if n_jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * n_jobs))))


class MajorityClassifier:
    """Baseline that always predicts the most frequent training class."""

    def __init__(self, classes=None):
        self.classes = classes

    def fit(self, X, y):
        codes, self.classes = _encode(y, self.classes)
        counts = np.bincount(codes, minlength=len(self.classes))
        self.proba_ = np.zeros(len(self.classes))
        self.proba_[int(np.argmax(counts))] = 1.0
        return self

    def predict_proba(self, X):
        return np.tile(self.proba_, (len(X), 1))


class ForestClassifier:
    """Estimator-style wrapper so forests and baselines share one CV loop."""

    def __init__(self, params: ForestParams, seed: int = 0, classes=None, n_jobs: int = 1):
        self.params, self.seed, self.classes, self.n_jobs = params, seed, classes, n_jobs

    def fit(self, X, y):
        self.model_ = forest_fit(X, y, self.params, self.seed, self.classes, self.n_jobs)
        self.classes = self.model_.classes
        return self

    def predict_proba(self, X):
        return forest_predict_proba(self.model_, X)


# ---------------------------------------------------------------- CV

def stratified_kfold(labels, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Shuffle each class, then deal its members round-robin into k folds.

    Dealing continues from where the previous class stopped, which keeps
    fold sizes within one of each other as well.
    """
    labels = list(labels)
    if k < 2:
        raise StratificationError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for cls in sorted(set(labels), key=str):
        idx = np.array([i for i, v in enumerate(labels) if v == cls])
        if len(idx) < k:
            raise StratificationError(f"class {cls!r} has {len(idx)} members, fewer than {k} folds")
        rng.shuffle(idx)
        for i in idx:
            buckets[pos % k].append(int(i))
            pos += 1
    return [np.array(sorted(b), dtype=np.int64) for b in buckets]


def identity_transform(train, test):
    return train, test


@dataclass
class HyperGrid:
    n_trees: list = field(default_factory=lambda: [100, 300])
    max_depth: list = field(default_factory=lambda: [8, 16, None])
    mtry: list = field(default_factory=lambda: ["sqrt", "third"])
    min_samples_leaf: list = field(default_factory=lambda: [1, 5])

    def __post_init__(self):
        for name in ("n_trees", "max_depth", "mtry", "min_samples_leaf"):
            if not list(getattr(self, name)):
                raise ValueError(f"grid option list {name!r} is empty")

    def points(self) -> list[ForestParams]:
        return [ForestParams(t, dpt, m, leaf) for t, dpt, m, leaf in
                itertools.product(self.n_trees, self.max_depth, self.mtry, self.min_samples_leaf)]


@dataclass
class FoldResult:
    test_index: np.ndarray
    proba: np.ndarray
    accuracy: float


def _fold_task(args):
    X, codes, n_classes, train, test, transform, params, seed = args
    Xtr, Xte = transform(X[train], X[test])
    Xtr = np.ascontiguousarray(Xtr)
    tp = params.tree_params()
    trees = [_tree_task((Xtr, codes[train], n_classes, tp, seed, t)) for t in range(params.n_trees)]
    model = ForestModel(trees, params, list(range(n_classes)), X.shape[1], seed)
    return _votes(model, Xte)


def cross_validate(X, y, params: ForestParams, folds, seed: int = 0, classes=None,
                   transform: Callable = identity_transform, n_jobs: int = 1) -> list[FoldResult]:
    X = np.ascontiguousarray(X, dtype=float)
    codes, classes = _encode(y, classes)
    all_idx = np.arange(len(codes))
    tasks = []
    for test in folds:
        train = np.setdiff1d(all_idx, test)
        tasks.append((X, codes, len(classes), train, test, transform, params, seed))
    votes = parallel_map(_fold_task, tasks, n_jobs)
    out = []
    for test, v in zip(folds, votes):
        proba = v / params.n_trees
        acc = float(np.mean(np.argmax(proba, axis=1) == codes[test]))
        out.append(FoldResult(np.asarray(test), proba, acc))
    return out


def cross_validate_estimator(make, X, y, folds, classes=None,
                             transform: Callable = identity_transform) -> list[FoldResult]:
    """CV for any object with fit(X, y) and predict_proba(X)."""
    X = np.asarray(X, dtype=float)
    codes, classes = _encode(y, classes)
    all_idx = np.arange(len(codes))
    out = []
    for test in folds:
        train = np.setdiff1d(all_idx, test)
        Xtr, Xte = transform(X[train], X[test])
        est = make(classes).fit(Xtr, [classes[c] for c in codes[train]])
        proba = est.predict_proba(Xte)
        acc = float(np.mean(np.argmax(proba, axis=1) == codes[test]))
        out.append(FoldResult(np.asarray(test), proba, acc))
    return out


@dataclass
class GridResult:
    best: ForestParams
    scores: list[tuple[ForestParams, float, list[float]]]

    def __iter__(self):
        # unpacks as (best params, [(params, mean accuracy), ...])
        yield self.best
        yield [(p, m) for p, m, _ in self.scores]


def _depth_key(d):
    return math.inf if d is None else d


def grid_search_cv(X, y, grid: HyperGrid, k: int = 5, seed: int = 0, classes=None,
                   transform: Callable = identity_transform, n_jobs: int = 1, folds=None) -> GridResult:
    """Mean k-fold accuracy for every grid point, on one shared set of folds.

    Grid points that differ only in n_trees are scored from one forest of
    the largest size: with per-tree seeding its leading trees are exactly
    the smaller forests. Ties go to fewer trees, then shallower trees,
    then grid order. `folds` overrides the stratified folds drawn from
    `seed`.
    """
    X = np.ascontiguousarray(X, dtype=float)
    codes, classes = _encode(y, classes)
    if folds is None:
        folds = stratified_kfold(codes, k, seed)
    all_idx = np.arange(len(codes))
    sizes = sorted(set(int(t) for t in grid.n_trees))
    shapes = list(dict.fromkeys((p.max_depth, p.mtry, p.min_samples_leaf) for p in grid.points()))
    tasks = []
    for depth, mtry, leaf in shapes:
        big = ForestParams(sizes[-1], depth, mtry, leaf)
        for test in folds:
            train = np.setdiff1d(all_idx, test)
            tasks.append((X, codes, len(classes), train, test, transform, big, seed, sizes))
    results = parallel_map(_grid_task, tasks, n_jobs)
    acc = {}
    for ti, (shape, fi) in enumerate(itertools.product(range(len(shapes)), range(len(folds)))):
        for size, a in zip(sizes, results[ti]):
            acc.setdefault((shapes[shape], size), [0.0] * len(folds))[fi] = a
    scores = []
    for order, p in enumerate(grid.points()):
        fold_acc = acc[((p.max_depth, p.mtry, p.min_samples_leaf), int(p.n_trees))]
        scores.append((p, float(np.mean(fold_acc)), fold_acc))
    ranked = sorted(range(len(scores)), key=lambda i: (-scores[i][1], scores[i][0].n_trees,
                                                       _depth_key(scores[i][0].max_depth), i))
    return GridResult(scores[ranked[0]][0], scores)


def _grid_task(args):
    X, codes, n_classes, train, test, transform, params, seed, sizes = args
    Xtr, Xte = transform(X[train], X[test])
    Xtr = np.ascontiguousarray(Xtr)
    Xte = np.ascontiguousarray(Xte)
    tp = params.tree_params()
    votes = np.zeros((len(test), n_classes))
    rows = np.arange(len(test))
    truth = codes[test]
    out = []
    for t in range(params.n_trees):
        tree = _tree_task((Xtr, codes[train], n_classes, tp, seed, t))
        votes[rows, tree.predict_index(Xte)] += 1.0
        if t + 1 in sizes:
            out.append(float(np.mean(np.argmax(votes, axis=1) == truth)))
    return out


# ---------------------------------------------------------------- persistence

def _fmt_depth(d):
    return "none" if d is None else str(d)


def save_forest(model: ForestModel, path) -> None:
    """Header lines, then each tree as `node_id,feature,threshold,left,right`
    for splits and `node_id,leaf,<counts>` for leaves."""
    p = model.params
    lines = [
        f"seed = {model.seed}",
        f"n_trees = {p.n_trees}",
        f"max_depth = {_fmt_depth(p.max_depth)}",
        f"mtry = {p.mtry}",
        f"min_samples_leaf = {p.min_samples_leaf}",
        f"n_features = {model.n_features}",
        f"classes = {','.join(str(c) for c in model.classes)}",
        f"oob_accuracy = {model.oob_accuracy!r}",
    ]
    for ti, tree in enumerate(model.trees):
        lines.append(f"tree {ti} nodes {tree.n_nodes}")
        for node in range(tree.n_nodes):
            if tree.feature[node] >= 0:
                lines.append(f"{node},{tree.feature[node]},{float(tree.threshold[node])!r},"
                             f"{tree.left[node]},{tree.right[node]}")
            else:
                lines.append(f"{node},leaf,{' '.join(str(int(c)) for c in tree.counts[node])}")
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_mtry(text):
    return int(text) if text.isdigit() else (None if text == "None" else text)


def load_forest(path) -> ForestModel:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ArtifactError(f"forest model missing: {exc}") from None
    head = {}
    i = 0
    while i < len(lines) and not lines[i].startswith("tree "):
        k, v = lines[i].split("=", 1)
        head[k.strip()] = v.strip()
        i += 1
    classes = head["classes"].split(",")
    depth = None if head["max_depth"] == "none" else int(head["max_depth"])
    params = ForestParams(int(head["n_trees"]), depth, _parse_mtry(head["mtry"]), int(head["min_samples_leaf"]))
    trees = []
    while i < len(lines):
        n_nodes = int(lines[i].split()[3])
        feat = np.full(n_nodes, -1, dtype=np.int64)
        thr = np.zeros(n_nodes)
        left = np.full(n_nodes, -1, dtype=np.int64)
        right = np.full(n_nodes, -1, dtype=np.int64)
        counts = np.zeros((n_nodes, len(classes)), dtype=np.int64)
        for line in lines[i + 1:i + 1 + n_nodes]:
            parts = line.split(",")
            node = int(parts[0])
            if parts[1] == "leaf":
                counts[node] = [int(c) for c in parts[2].split()]
            else:
                feat[node], thr[node] = int(parts[1]), float(parts[2])
                left[node], right[node] = int(parts[3]), int(parts[4])
        trees.append(DecisionTree(feat, thr, left, right, counts, depth, params.min_samples_leaf))
        i += 1 + n_nodes
    return ForestModel(trees, params, classes, int(head["n_features"]), int(head["seed"]),
                       float(head["oob_accuracy"]))
