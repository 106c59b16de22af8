"""Full-covariance Gaussian mixtures fit by EM, BIC model selection and
progression-zone labeling of the components."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import ArtifactError, DomainError, FitError, LabelingError, SelectionError, ShapeError
from .nmf import PLOT_ORIENTATION, Orientation


class Zone(str, Enum):
    LOW = "Low"
    MODERATE = "Moderate"
    HIGH = "High"
    UNASSIGNED = "Unassigned"


@dataclass
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihood: float = float("nan")
    history: list[float] = field(default_factory=list)
    converged: bool = True
    zone_labels: list[Zone] | None = None
    reg: float = 1e-6

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.covariances = np.asarray(self.covariances, dtype=float).reshape(-1, self.means.shape[1],
                                                                              self.means.shape[1])
        if self.zone_labels is None:
            self.zone_labels = [Zone.UNASSIGNED] * self.k

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def n_parameters(self) -> int:
        d = self.dim
        return (self.k - 1) + self.k * d + self.k * d * (d + 1) // 2

    def predict(self, X) -> np.ndarray:
        return np.argmax(responsibilities(self, X), axis=1)


def _check_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("points must be an n x dim matrix")
    if not np.all(np.isfinite(X)):
        raise DomainError("points contain non-finite values")
    return X


def _component_log_density(X, means, covs) -> np.ndarray:
    """log N(x_i; mean_j, cov_j) as an n x k matrix."""
    n, d = X.shape
    out = np.empty((n, len(means)))
    for j, (mu, cov) in enumerate(zip(means, covs)):
        L = np.linalg.cholesky(cov)
        z = np.linalg.solve(L, (X - mu).T)
        maha = np.sum(z * z, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        out[:, j] = -0.5 * (d * np.log(2 * np.pi) + logdet + maha)
    return out


def _weighted_log_density(model, X):
    with np.errstate(divide="ignore"):
        logw = np.log(model.weights)
    return _component_log_density(X, model.means, model.covariances) + logw


def log_likelihood(model: GmmModel, X) -> float:
    X = _check_points(X)
    return float(np.sum(logsumexp(_weighted_log_density(model, X), axis=1)))


def responsibilities(model: GmmModel, X) -> np.ndarray:
    X = _check_points(X)
    if X.shape[1] != model.dim:
        raise ShapeError(f"points have dimension {X.shape[1]}, model has {model.dim}")
    lp = _weighted_log_density(model, X)
    return np.exp(lp - logsumexp(lp, axis=1, keepdims=True))


def _kmeans_pp(X, k, rng) -> np.ndarray:
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def gmm_fit(X, k: int, seed: int = 0, reg: float = 1e-6, tol: float = 1e-6, max_iter: int = 500) -> GmmModel:
    """EM with full covariances.

    Means start from k-means++ seeding, weights uniform, every covariance at
    the pooled sample covariance. `reg` is added to each covariance
    diagonal after every M-step. Stops when the log-likelihood gains less
    than `tol`. Near a collapsing component the ridge can make an M-step
    lose likelihood; such a step is rejected and the previous parameters
    are returned, so `history` is non-decreasing.
    """
    X = _check_points(X)
    n, d = X.shape
    if k < 1 or k > n:
        raise FitError(f"cannot fit {k} components to {n} points")
    rng = np.random.default_rng(seed)
    pooled = np.atleast_2d(np.cov(X.T, bias=True)) if n > 1 else np.zeros((d, d))
    means = _kmeans_pp(X, k, rng)
    covs = np.tile(pooled + reg * np.eye(d), (k, 1, 1))
    weights = np.full(k, 1.0 / k)
    history = []
    converged = False
    prev = None
    for _ in range(max_iter):
        try:
            lp = _component_log_density(X, means, covs) + np.log(weights)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"covariance lost positive definiteness: {exc}") from None
        norm = logsumexp(lp, axis=1, keepdims=True)
        ll = float(norm.sum())
        if history and ll - history[-1] < tol:
            converged = True
            if ll < history[-1]:
                weights, means, covs = prev
            else:
                history.append(ll)
            break
        history.append(ll)
        prev = (weights, means, covs.copy())
        resp = np.exp(lp - norm)
        nk = resp.sum(axis=0)
        if np.any(nk <= 0):
            raise FitError("a component lost all its responsibility")
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        for j in range(k):
            diff = X - means[j]
            cov = (resp[:, j, None] * diff).T @ diff / nk[j]
            covs[j] = 0.5 * (cov + cov.T) + reg * np.eye(d)
    if not converged:
        # the final M-step was never scored
        lp = _component_log_density(X, means, covs) + np.log(weights)
        ll = float(logsumexp(lp, axis=1).sum())
        if ll > history[-1]:
            history.append(ll)
        elif ll < history[-1]:
            weights, means, covs = prev
    return GmmModel(weights, means, covs, history[-1], history, converged, reg=reg)


def bic(model: GmmModel, X) -> float:
    X = _check_points(X)
    n = X.shape[0]
    if n == 0:
        raise ValueError("BIC needs at least one point")
    return bic_value(model.n_parameters(), n, log_likelihood(model, X))


def bic_value(n_params: int, n: int, loglik: float) -> float:
    return n_params * np.log(n) - 2.0 * loglik


@dataclass
class BicScan:
    candidates: list[tuple[int, float, bool]]
    selected_k: int
    models: dict[int, GmmModel] = field(default_factory=dict, repr=False)

    @property
    def selected(self) -> GmmModel:
        return self.models[self.selected_k]


def fit_best(X, k: int, seed: int = 0, restarts: int = 5, reg: float = 1e-6, tol: float = 1e-6,
             max_iter: int = 500) -> GmmModel:
    """Best log-likelihood over seeded restarts; earlier restarts win ties."""
    seeds = np.random.SeedSequence([seed, k]).generate_state(restarts)
    best, errors = None, []
    for s in seeds:
        try:
            m = gmm_fit(X, k, int(s), reg, tol, max_iter)
        except FitError as exc:
            errors.append(str(exc))
            continue
        if best is None or m.log_likelihood > best.log_likelihood:
            best = m
    if best is None:
        raise FitError(f"all {restarts} restarts failed for k={k}: {errors[0]}")
    return best


def select_k(X, k_range=range(1, 7), seed: int = 0, restarts: int = 5, reg: float = 1e-6,
             tol: float = 1e-6, max_iter: int = 500) -> BicScan:
    X = _check_points(X)
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise SelectionError("empty k range")
    if ks[-1] > len(X):
        raise SelectionError(f"k={ks[-1]} exceeds the {len(X)} available points")
    candidates, models = [], {}
    for k in ks:
        try:
            m = fit_best(X, k, seed, restarts, reg, tol, max_iter)
        except FitError:
            candidates.append((k, float("inf"), False))
            continue
        models[k] = m
        candidates.append((k, bic(m, X), m.converged))
    scored = [(b, k) for k, b, ok in candidates if ok]
    if not scored:
        raise SelectionError("no candidate mixture converged")
    # min over (bic, k) breaks exact ties toward the smaller k
    return BicScan(candidates, min(scored)[1], models)


def label_zones(model: GmmModel, orientation: Orientation = PLOT_ORIENTATION) -> GmmModel:
    """Rank three components by progression score: largest High, smallest Low.

    Components whose scores tie are left Unassigned.
    """
    if model.k != 3:
        raise LabelingError(f"zone labeling needs exactly 3 components, got {model.k}")
    scores = orientation.score(model.means)
    order = np.argsort(scores, kind="stable")
    names = [Zone.LOW, Zone.MODERATE, Zone.HIGH]
    labels = [Zone.UNASSIGNED] * 3
    for rank, j in enumerate(order):
        tied = any(np.isclose(scores[j], scores[i], rtol=1e-12, atol=1e-12) for i in range(3) if i != j)
        if not tied:
            labels[j] = names[rank]
    return GmmModel(model.weights, model.means, model.covariances, model.log_likelihood,
                    list(model.history), model.converged, labels, model.reg)


def assign_zones(model: GmmModel, X) -> list[Zone]:
    return [model.zone_labels[j] for j in model.predict(X)]


# ---------------------------------------------------------------- persistence

def save_gmm(model: GmmModel, path) -> None:
    """One line per component: weight, mean_x, mean_y, cov_xx, cov_xy, cov_yy, zone."""
    if model.dim != 2:
        raise ShapeError("only 2-D mixtures are persisted")
    lines = ["# weight, mean_x, mean_y, cov_xx, cov_xy, cov_yy, zone"]
    for w, mu, cov, z in zip(model.weights, model.means, model.covariances, model.zone_labels):
        vals = [w, mu[0], mu[1], cov[0, 0], cov[0, 1], cov[1, 1]]
        lines.append(", ".join(repr(float(v)) for v in vals) + f", {z.value}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_gmm(path, reg: float = 1e-6) -> GmmModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ArtifactError(f"mixture model missing: {exc}") from None
    w, mu, cov, zones = [], [], [], []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        v = [float(p) for p in parts[:6]]
        w.append(v[0])
        mu.append(v[1:3])
        cov.append([[v[3], v[4]], [v[4], v[5]]])
        zones.append(Zone(parts[6]))
    return GmmModel(np.array(w), np.array(mu), np.array(cov), zone_labels=zones, reg=reg)
