"""Rank-k non-negative matrix factorization and axis interpretation.

V (n x d) is approximated by W (n x k) @ H (k x d) with multiplicative
updates for the Frobenius objective. For k = 2 the rows of W are the
subjects' coordinates in the progression space and H says which clinical
feature groups drive each axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ArtifactError, DomainError, LabelingError, RankError, ShapeError

EPS = 1e-12


@dataclass
class Factorization:
    W: np.ndarray
    H: np.ndarray
    residual_history: list[float]
    rank: int
    converged: bool
    iterations: int
    seed: int = 0
    tol: float = 1e-6

    @property
    def residual(self) -> float:
        return self.residual_history[-1]


def frobenius_residual(V, W, H) -> float:
    V, W, H = (np.asarray(a, dtype=float) for a in (V, W, H))
    if W.shape[1] != H.shape[0] or V.shape != (W.shape[0], H.shape[1]):
        raise ShapeError(f"cannot compare V{V.shape} with W{W.shape} @ H{H.shape}")
    return float(np.linalg.norm(V - W @ H))


def _as_matrix(V) -> np.ndarray:
    V = np.asarray(getattr(V, "values", V), dtype=float)
    if V.ndim != 2:
        raise ShapeError("NMF input must be a 2-D matrix")
    if not np.all(np.isfinite(V)):
        raise DomainError("NMF input contains non-finite entries")
    if (V < 0).any():
        raise DomainError("NMF input contains negative entries")
    return V


def nmf_fit(V, rank: int = 2, seed: int = 0, tol: float = 1e-6, max_iter: int = 2000) -> Factorization:
    """Lee-Seung multiplicative updates, H first then W.

    Stops once an iteration improves the residual by less than `tol`
    relative to the previous residual.
    """
    V = _as_matrix(V)
    n, d = V.shape
    if rank < 1 or rank > min(n, d):
        raise RankError(f"rank {rank} outside [1, {min(n, d)}] for a {n}x{d} matrix")
    rng = np.random.default_rng(seed)
    W = rng.uniform(size=(n, rank))
    H = rng.uniform(size=(rank, d))
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        H *= (W.T @ V) / (W.T @ W @ H + EPS)
        W *= (V @ H.T) / (W @ (H @ H.T) + EPS)
        res = float(np.linalg.norm(V - W @ H))
        history.append(res)
        if res == 0.0 or (len(history) > 1 and history[-2] - res < tol * history[-2]):
            converged = True
            break
    return Factorization(W, H, history, rank, converged, it, seed, tol)


def _rowwise(A, B) -> np.ndarray:
    """A @ B computed so each output row depends only on the same row of A."""
    return np.sum(A[:, :, None] * B[None, :, :], axis=1)


def nmf_transform(V_new, H, seed: int = 0, tol: float = 1e-6, max_iter: int = 2000) -> np.ndarray:
    """Non-negative coordinates for new rows with H held fixed.

    Each row is solved on its own: every row starts from the same seeded
    vector and stops on its own residual, so a row's result does not
    depend on which other rows are in the batch.
    """
    V = _as_matrix(V_new)
    H = np.asarray(H, dtype=float)
    if V.shape[1] != H.shape[1]:
        raise ShapeError(f"rows have {V.shape[1]} columns, H has {H.shape[1]}")
    k = H.shape[0]
    rng = np.random.default_rng(seed)
    start = rng.uniform(size=k)
    W = np.tile(start, (V.shape[0], 1))
    # row-local reductions instead of BLAS products, whose rounding can
    # depend on how many rows are in the batch
    VHt = _rowwise(V, H.T)
    HHt = H @ H.T
    prev = np.linalg.norm(V - _rowwise(W, H), axis=1)
    active = np.ones(V.shape[0], dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        Wa = W[active]
        Wa *= VHt[active] / (_rowwise(Wa, HHt) + EPS)
        W[active] = Wa
        res = np.linalg.norm(V[active] - _rowwise(Wa, H), axis=1)
        done = (res == 0.0) | (prev[active] - res < tol * prev[active])
        prev[active] = res
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return W


class AxisLabel(str, Enum):
    MEMORY = "MemoryDecline"
    COGNITION = "CognitionDecline"
    UNLABELED = "Unlabeled"


_CLAIMS = {"memory": AxisLabel.MEMORY, "cognition": AxisLabel.COGNITION}


@dataclass(frozen=True)
class Orientation:
    """Maps raw coordinates to the plotting convention.

    Memory decline grows along +y and cognitive decline along -x, so the
    progression score y - x equals
    memory_sign * coord[memory_axis] + cognition_sign * coord[cognition_axis],
    where each sign is the direction in which decline grows on that axis.
    """

    memory_axis: int = 1
    cognition_axis: int = 0
    memory_sign: float = 1.0
    cognition_sign: float = -1.0

    def project(self, coords) -> np.ndarray:
        """Raw coordinates -> (x, y) with +y memory decline, -x cognitive decline."""
        c = np.atleast_2d(np.asarray(coords, dtype=float))
        x = -self.cognition_sign * c[:, self.cognition_axis]
        y = self.memory_sign * c[:, self.memory_axis]
        return np.column_stack([x, y])

    def score(self, coords) -> np.ndarray:
        c = np.atleast_2d(np.asarray(coords, dtype=float))
        return self.memory_sign * c[:, self.memory_axis] + self.cognition_sign * c[:, self.cognition_axis]


# (x, y) coordinates already in the plotting convention
PLOT_ORIENTATION = Orientation()


@dataclass
class AxisInterpretation:
    axis_labels: list[AxisLabel]
    group_loadings: list[dict[str, float]]
    orientation: Orientation = field(default_factory=Orientation)

    def axis_for(self, label: AxisLabel):
        for i, lab in enumerate(self.axis_labels):
            if lab == label:
                return i
        return None


def interpret_axes(H, col_meta) -> AxisInterpretation:
    """Label each axis by the feature group that holds most of its H mass."""
    H = np.asarray(H, dtype=float)
    if H.shape[0] != 2:
        raise LabelingError(f"axis interpretation needs rank 2, got {H.shape[0]}")
    groups = [getattr(c, "group", c) for c in col_meta]
    if len(groups) != H.shape[1]:
        raise ShapeError("one feature group per H column required")
    names = sorted(set(groups))
    loadings, claims = [], []
    for row in H:
        mass = {g: float(sum(v for v, gg in zip(row, groups) if gg == g)) for g in names}
        loadings.append(mass)
        ranked = sorted(mass.values(), reverse=True)
        top = ranked[0]
        winners = [g for g, v in mass.items() if v == top]
        if len(winners) == 1 and winners[0] in _CLAIMS:
            margin = top - (ranked[1] if len(ranked) > 1 else 0.0)
            claims.append((_CLAIMS[winners[0]], margin))
        else:
            claims.append((AxisLabel.UNLABELED, 0.0))
    labels = [c[0] for c in claims]
    if labels[0] == labels[1] and labels[0] != AxisLabel.UNLABELED:
        loser = 0 if claims[0][1] < claims[1][1] else 1
        labels[loser] = AxisLabel.UNLABELED
    return AxisInterpretation(labels, loadings)


def orient_axes(interp: AxisInterpretation, W, severity=None) -> AxisInterpretation:
    """Decide which raw axis is memory/cognition and the decline direction.

    An axis left unlabeled takes whichever role the other axis did not
    claim; with no labels at all axis 0 is cognition. The decline sign of
    an axis is +1 unless `severity` (one ordinal per row, e.g. diagnosis
    stage) correlates negatively with it.
    """
    mem = interp.axis_for(AxisLabel.MEMORY)
    cog = interp.axis_for(AxisLabel.COGNITION)
    if mem is None and cog is None:
        cog, mem = 0, 1
    elif mem is None:
        mem = 1 - cog
    elif cog is None:
        cog = 1 - mem
    W = np.asarray(W, dtype=float)

    def sign(axis):
        if severity is None:
            return 1.0
        s = np.asarray(severity, dtype=float)
        if s.std() == 0 or W[:, axis].std() == 0:
            return 1.0
        return -1.0 if np.corrcoef(W[:, axis], s)[0, 1] < 0 else 1.0

    orientation = Orientation(mem, cog, sign(mem), sign(cog))
    return AxisInterpretation(interp.axis_labels, interp.group_loadings, orientation)


# ---------------------------------------------------------------- persistence

def save_factorization(fact: Factorization, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    np.savetxt(d / "W.csv", fact.W, delimiter=",", fmt="%.17g")
    np.savetxt(d / "H.csv", fact.H, delimiter=",", fmt="%.17g")
    lines = [
        f"rank = {fact.rank}",
        f"seed = {fact.seed}",
        f"tol = {fact.tol!r}",
        f"iterations = {fact.iterations}",
        f"converged = {str(fact.converged).lower()}",
        f"final_residual = {fact.residual!r}",
    ]
    (d / "nmf_meta.txt").write_text("\n".join(lines) + "\n")
    np.savetxt(d / "residuals.csv", np.asarray(fact.residual_history), fmt="%.17g")


def load_factorization(directory) -> Factorization:
    d = Path(directory)
    try:
        meta = dict(
            (k.strip(), v.strip())
            for k, v in (line.split("=", 1) for line in (d / "nmf_meta.txt").read_text().splitlines() if line)
        )
        W = np.loadtxt(d / "W.csv", delimiter=",", ndmin=2)
        H = np.loadtxt(d / "H.csv", delimiter=",", ndmin=2)
        hist = np.loadtxt(d / "residuals.csv", ndmin=1).tolist()
    except OSError as exc:
        raise ArtifactError(f"factorization artifacts missing in {d}: {exc}") from None
    return Factorization(W, H, hist, int(meta["rank"]), meta["converged"] == "true",
                         int(meta["iterations"]), int(meta["seed"]), float(meta["tol"]))
