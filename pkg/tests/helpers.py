"""Small builders shared by the test modules."""
import numpy as np

from skilltransfer.features import FeatureMatrix
from skilltransfer.trajectory import Trajectory

BLOB_MEANS = np.array([[pv, s] for s in (-1.8, -1.6) for pv in (0.4, 0.6, 0.8)])


def planted_blobs(sigma=0.02, per_blob=100, seed=0):
    """Six Gaussian blobs on a 0.2-spaced PV-SPARC grid; returns (matrix, labels)."""
    rng = np.random.default_rng(seed)
    X = np.vstack([m + sigma * rng.standard_normal((per_blob, 2)) for m in BLOB_MEANS])
    labels = np.repeat(np.arange(len(BLOB_MEANS)), per_blob)
    ids = tuple(f"b{i:04d}" for i in range(len(X)))
    return FeatureMatrix(ids, X), labels


def line_trajectory(velocity, n=60, rate=60.0, contact_index=None, trial_id="line"):
    t = np.arange(n) / rate
    positions = np.outer(t, np.asarray(velocity, dtype=float))
    return Trajectory(trial_id, "s00", t, positions, rate, contact_index)


def matrix(rows, ids=None):
    rows = np.asarray(rows, dtype=float)
    ids = ids or tuple(f"t{i}" for i in range(len(rows)))
    return FeatureMatrix(tuple(ids), rows)
