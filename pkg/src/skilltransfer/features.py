"""Per-trial (peak velocity, SPARC) feature tuples."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .smoothness import SparcConfig, sparc
from .trajectory import Rejection, SegmentedTrial

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("pv", "sparc")


class FeatureTuple(NamedTuple):
    trial_id: str
    pv: float
    sparc: float


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Feature rows in ingestion order.

    ``values`` holds the (possibly standardized) rows used for clustering;
    ``scaling`` is the per-dimension ``(mean, std)`` pair when standardized.
    """

    trial_ids: tuple[str, ...]
    values: np.ndarray
    names: tuple[str, ...] = FEATURE_NAMES
    standardized: bool = False
    scaling: Optional[tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, ndmin=2)
        if values.shape != (len(self.trial_ids), len(self.names)):
            raise ValueError(f"values shape {values.shape} does not match "
                             f"{len(self.trial_ids)} trials x {len(self.names)} features")
        if self.standardized and self.scaling is None:
            raise ValueError("standardized matrix needs its scaling")
        values.setflags(write=False)
        object.__setattr__(self, "trial_ids", tuple(self.trial_ids))
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.trial_ids)

    def raw_values(self) -> np.ndarray:
        """Rows in natural units."""
        return invert(self).values if self.standardized else self.values

    @property
    def tuples(self) -> list[FeatureTuple]:
        raw = self.raw_values()
        return [FeatureTuple(tid, *map(float, row)) for tid, row in zip(self.trial_ids, raw)]


def extract_features(trials: Sequence[SegmentedTrial], sparc_cfg: SparcConfig = SparcConfig()
                     ) -> tuple[FeatureMatrix, list[Rejection]]:
    """One (pv, sparc) row per trial; a trial whose SPARC fails is dropped and reported."""
    ids: list[str] = []
    rows: list[tuple[float, float]] = []
    dropped: list[Rejection] = []
    for trial in trials:
        try:
            s = sparc(trial.profile, sparc_cfg).sparc
        except ValueError as exc:
            logger.warning("dropping trial %s: %s", trial.trial_id, exc)
            dropped.append(Rejection(trial.trial_id, f"sparc failed: {exc}"))
            continue
        ids.append(trial.trial_id)
        rows.append((trial.peak_speed, s))
    values = np.array(rows, dtype=float).reshape(len(rows), len(FEATURE_NAMES))
    return FeatureMatrix(tuple(ids), values), dropped


def standardize(matrix: FeatureMatrix) -> FeatureMatrix:
    """Z-score every dimension (population standard deviation)."""
    if matrix.standardized:
        return matrix
    if len(matrix) < 2:
        raise ValueError("standardize needs at least 2 tuples")
    mean = matrix.values.mean(axis=0)
    std = matrix.values.std(axis=0)
    for name, s in zip(matrix.names, std):
        if s == 0:
            raise ValueError(f"zero variance: {name}")
    return FeatureMatrix(matrix.trial_ids, (matrix.values - mean) / std, matrix.names, True, (mean, std))


def invert(matrix: FeatureMatrix) -> FeatureMatrix:
    """Undo :func:`standardize`."""
    if not matrix.standardized:
        return matrix
    mean, std = matrix.scaling
    return FeatureMatrix(matrix.trial_ids, matrix.values * std + mean, matrix.names)


def to_raw_units(matrix: FeatureMatrix, points: np.ndarray) -> np.ndarray:
    """Map points from the matrix's clustering space back to natural units."""
    if not matrix.standardized:
        return np.asarray(points, dtype=float)
    mean, std = matrix.scaling
    return np.asarray(points, dtype=float) * std + mean


def write_features(path: Union[str, Path], matrix: FeatureMatrix) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial_id", *matrix.names])
        for tid, row in zip(matrix.trial_ids, matrix.raw_values()):
            w.writerow([tid, *(repr(float(v)) for v in row)])


def read_features(path: Union[str, Path]) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        ids, rows = [], []
        for row in reader:
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return FeatureMatrix(tuple(ids), np.array(rows, dtype=float).reshape(len(ids), len(header) - 1),
                         tuple(header[1:]))
