"""K-means on feature tuples, silhouette analysis and prototype retrieval."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from . import kernels
from .features import FeatureMatrix, FeatureTuple, to_raw_units

logger = logging.getLogger(__name__)


class ClusteringError(ValueError):
    pass


@dataclass(frozen=True)
class KmeansConfig:
    k: int = 6
    n_restarts: int = 10
    max_iters: int = 300
    center_tolerance: float = 1e-4
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.n_restarts < 1 or self.max_iters < 1:
            raise ValueError("n_restarts and max_iters must be positive")
        if not self.center_tolerance > 0:
            raise ValueError("center_tolerance must be > 0")


@dataclass(frozen=True, eq=False)
class ClusterModel:
    centers: np.ndarray
    assignments: np.ndarray
    inertia: float
    silhouette_mean: float
    prototypes: tuple[str, ...]
    silhouette_per_point: np.ndarray = field(repr=False)
    n_iter: int = 0
    restart: int = 0
    inertia_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


class Prototype(NamedTuple):
    cluster: int
    index: int
    trial_id: str
    features: FeatureTuple
    distance: float


class SweepRow(NamedTuple):
    k: int
    silhouette: Optional[float]
    inertia: Optional[float]
    error: Optional[str] = None


def _plus_plus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        u = rng.random()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(d2), u * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(u * n)
        centers[c] = X[idx]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def _repair_empty(X, centers, labels, d2):
    """Move each empty cluster's center onto the point farthest from its own center."""
    counts = np.bincount(labels, minlength=centers.shape[0])
    for c in np.flatnonzero(counts == 0):
        j = int(np.argmax(d2))
        logger.info("k-means: cluster %d empty, reseeding at point %d", c, j)
        counts[labels[j]] -= 1
        centers[c] = X[j]
        labels[j] = c
        d2[j] = 0.0
        counts[c] = 1


def _means(X, labels, k):
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / np.bincount(labels, minlength=k)[:, None]


def _lloyd(X, centers, cfg: KmeansConfig, debug: bool):
    history = []
    n_iter = 0
    for n_iter in range(1, cfg.max_iters + 1):
        labels, d2 = kernels.assign_labels(X, centers)
        _repair_empty(X, centers, labels, d2)
        history.append(float(d2.sum()))
        if debug and len(history) > 1:
            assert history[-1] <= history[-2] * (1 + 1e-12) + 1e-15, "inertia increased"
        new = _means(X, labels, cfg.k)
        shift = float(np.sqrt(((new - centers) ** 2).sum(axis=1)).max())
        centers = new
        if shift <= cfg.center_tolerance:
            break
    labels, d2 = kernels.assign_labels(X, centers)
    _repair_empty(X, centers, labels, d2)
    return centers, labels, float(d2.sum()), n_iter, history


def kmeans(matrix: FeatureMatrix, cfg: KmeansConfig = KmeansConfig(), debug: bool = False) -> ClusterModel:
    """Best-of-restarts Lloyd's k-means from k-means++ seeding.

    Deterministic for a given ``cfg.rng_seed``. Assignment ties go to the
    lowest cluster index and inertia ties to the earliest restart.
    """
    X = np.ascontiguousarray(matrix.values, dtype=float)
    n = X.shape[0]
    if cfg.k > n:
        raise ClusteringError(f"k = {cfg.k} exceeds the number of tuples ({n})")
    distinct = np.unique(X, axis=0).shape[0]
    if distinct < cfg.k:
        raise ClusteringError(f"only {distinct} distinct tuples for k = {cfg.k}; clusters would be empty")
    rng = np.random.default_rng(cfg.rng_seed)
    best = None
    for restart in range(cfg.n_restarts):
        centers = _plus_plus(X, cfg.k, rng)
        result = _lloyd(X, centers, cfg, debug)
        if best is None or result[2] < best[0][2]:
            best = (result, restart)
    (centers, labels, inertia, n_iter, history), restart = best
    mean_s, per_point = silhouette(X, labels)
    model = ClusterModel(centers, labels, inertia, mean_s, (), per_point, n_iter, restart, tuple(history))
    protos = retrieve_prototypes(matrix, model)
    object.__setattr__(model, "prototypes", tuple(p.trial_id for p in protos))
    return model


def silhouette(X, assignments) -> tuple[float, np.ndarray]:
    """Mean and per-point Euclidean silhouette; points in singleton clusters score 0."""
    if isinstance(X, FeatureMatrix):
        X = X.values
    X = np.ascontiguousarray(X, dtype=float)
    labels = np.ascontiguousarray(assignments, dtype=np.int64)
    if np.unique(labels).size < 2:
        raise ClusteringError("silhouette undefined for k = 1")
    per_point = kernels.silhouette_samples(X, labels, int(labels.max()) + 1)
    return float(per_point.mean()), per_point


def silhouette_sweep(matrix: FeatureMatrix, k_range: tuple[int, int] = (2, 16),
                     cfg: KmeansConfig = KmeansConfig()) -> list[SweepRow]:
    """K-means + silhouette for each k in the inclusive range; per-k failures are reported, not raised."""
    k_lo, k_hi = k_range
    n = len(matrix)
    if k_lo < 2 or k_hi > n - 1 or k_lo > k_hi:
        raise ClusteringError(f"k range {k_range} must lie within [2, {n - 1}]")
    rows = []
    for k in range(k_lo, k_hi + 1):
        try:
            model = kmeans(matrix, KmeansConfig(k, cfg.n_restarts, cfg.max_iters,
                                                cfg.center_tolerance, cfg.rng_seed))
        except ClusteringError as exc:
            logger.warning("sweep k=%d failed: %s", k, exc)
            rows.append(SweepRow(k, None, None, str(exc)))
            continue
        rows.append(SweepRow(k, model.silhouette_mean, model.inertia))
    return rows


def best_k(rows: Sequence[SweepRow]) -> int:
    """k with the highest mean silhouette (lowest k on ties)."""
    valid = [r for r in rows if r.silhouette is not None]
    if not valid:
        raise ClusteringError("no valid rows in silhouette sweep")
    return max(valid, key=lambda r: (r.silhouette, -r.k)).k


def retrieve_prototypes(matrix: FeatureMatrix, model: ClusterModel) -> list[Prototype]:
    """Per cluster, the member tuple nearest its center (lowest ingestion index on ties)."""
    X = matrix.values
    tuples = matrix.tuples
    out = []
    for c in range(model.k):
        members = np.flatnonzero(model.assignments == c)
        d = np.sqrt(((X[members] - model.centers[c]) ** 2).sum(axis=1))
        j = int(members[np.argmin(d)])
        out.append(Prototype(c, j, matrix.trial_ids[j], tuples[j], float(d.min())))
    return out


def cluster_summary(matrix: FeatureMatrix, model: ClusterModel) -> dict:
    """JSON-ready summary: centers in natural units, sizes and prototypes."""
    centers = to_raw_units(matrix, model.centers)
    protos = retrieve_prototypes(matrix, model)
    return {
        "k": model.k,
        "inertia": model.inertia,
        "silhouette_mean": model.silhouette_mean,
        "feature_names": list(matrix.names),
        "standardized": matrix.standardized,
        "clusters": [
            {
                "cluster": c,
                "center": centers[c].tolist(),
                "size": int(model.sizes[c]),
                "prototype": {"trial_id": p.trial_id, "index": p.index,
                              **{name: v for name, v in zip(matrix.names, p.features[1:])}},
            }
            for c, p in enumerate(protos)
        ],
    }


def write_sweep(path: Union[str, Path], rows: Sequence[SweepRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "silhouette", "inertia", "error"])
        for r in rows:
            w.writerow([r.k, "" if r.silhouette is None else repr(r.silhouette),
                        "" if r.inertia is None else repr(r.inertia), r.error or ""])


def write_scatter(path: Union[str, Path], matrix: FeatureMatrix, model: ClusterModel) -> None:
    """Plot data: one row per tuple with its cluster and prototype flag."""
    protos = set(model.prototypes)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial_id", *matrix.names, "cluster", "is_prototype"])
        for tid, row, c in zip(matrix.trial_ids, matrix.raw_values(), model.assignments):
            w.writerow([tid, *(repr(float(v)) for v in row), int(c), int(tid in protos)])
