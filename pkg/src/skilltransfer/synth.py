"""Synthetic demonstrations built from minimum-jerk submovements.

A single submovement gives the bell-shaped, single-peak speed profile of a
skilled reach. Superposing time-shifted submovements produces multi-peak,
less smooth profiles. Trials move downward along the vertical (y) axis toward
a surface at ``target``; ``contact_at`` marks when the tool touches it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .trajectory import Trajectory


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one family of synthetic trials.

    ``overlap`` in [0, 1) sets how much consecutive submovements overlap in
    time; 0 places them back to back. ``contact_at`` is the fraction of
    ``duration`` at which contact is flagged (``None`` leaves the final sample
    as the contact). ``jitter`` is a relative per-trial standard deviation
    applied to displacement and duration.
    """

    n_submovements: int = 1
    displacement: float = 0.3
    duration: float = 1.0
    overlap: float = 0.0
    rate: float = 60.0
    noise_sd: float = 0.0
    rng_seed: int = 0
    contact_at: Optional[float] = None
    jitter: float = 0.0
    target: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if int(self.n_submovements) != self.n_submovements or self.n_submovements < 1:
            raise ValueError("n_submovements must be an integer >= 1")
        if not self.displacement > 0:
            raise ValueError("displacement must be > 0")
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if not 0 <= self.overlap < 1:
            raise ValueError("overlap must be in [0, 1)")
        if not self.rate > 0:
            raise ValueError("rate must be > 0")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if not 0 <= self.jitter < 0.5:
            raise ValueError("jitter must be in [0, 0.5)")
        if self.contact_at is not None and not 0 < self.contact_at <= 1:
            raise ValueError("contact_at must be in (0, 1]")


def min_jerk_position(tau):
    """Normalized min-jerk displacement ``10τ³ − 15τ⁴ + 6τ⁵``, clamped to [0, 1]."""
    tau = np.clip(tau, 0.0, 1.0)
    return tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)


def min_jerk_speed(tau):
    """d/dτ of :func:`min_jerk_position`; zero outside [0, 1]."""
    tau = np.asarray(tau, dtype=float)
    inside = (tau >= 0.0) & (tau <= 1.0)
    return np.where(inside, 30.0 * tau**2 * (1.0 - tau) ** 2, 0.0)


def submovement_layout(n: int, duration: float, overlap: float) -> tuple[float, np.ndarray]:
    """Per-submovement duration and start times, filling ``duration`` exactly."""
    sub = duration / (1.0 + (n - 1) * (1.0 - overlap))
    return sub, np.arange(n) * sub * (1.0 - overlap)


def height(t, n: int, displacement: float, duration: float, overlap: float) -> np.ndarray:
    """Remaining height above the target for ``n`` equal submovements."""
    sub, starts = submovement_layout(n, duration, overlap)
    t = np.asarray(t, dtype=float)
    h = np.full(t.shape, float(displacement))
    for s in starts:
        h -= (displacement / n) * min_jerk_position((t - s) / sub)
    return h


def analytic_speed(t, n: int, displacement: float, duration: float, overlap: float) -> np.ndarray:
    """Closed-form speed of :func:`height` (submovements all move the same way)."""
    sub, starts = submovement_layout(n, duration, overlap)
    t = np.asarray(t, dtype=float)
    v = np.zeros(t.shape)
    for s in starts:
        v += (displacement / n / sub) * min_jerk_speed((t - s) / sub)
    return v


def _jittered(value: float, jitter: float, rng: np.random.Generator) -> float:
    if jitter == 0:
        return value
    return value * float(np.clip(1.0 + jitter * rng.standard_normal(), 0.5, 1.5))


def generate_trial(spec: SynthSpec, trial_id: str = "trial", subject_id: str = "s00",
                   rng: Optional[np.random.Generator] = None) -> Trajectory:
    """One synthetic trial; sampled at ``spec.rate`` from t = 0 through the end of motion."""
    if rng is None:
        rng = np.random.default_rng(spec.rng_seed)
    D = _jittered(spec.displacement, spec.jitter, rng)
    T = _jittered(spec.duration, spec.jitter, rng)
    n = int(math.ceil(T * spec.rate - 1e-9)) + 1
    t = np.arange(n) / spec.rate
    positions = np.tile(np.asarray(spec.target, dtype=float), (n, 1))
    positions[:, 1] += height(t, spec.n_submovements, D, T, spec.overlap)
    if spec.noise_sd > 0:
        positions += rng.normal(0.0, spec.noise_sd, size=positions.shape)
    contact = None
    if spec.contact_at is not None:
        contact = min(n - 1, int(round(spec.contact_at * T * spec.rate)))
    return Trajectory(trial_id, subject_id, t, positions, spec.rate, contact)


def min_jerk_trajectory(spec: SynthSpec, trial_id: str = "trial") -> Trajectory:
    if spec.n_submovements != 1:
        raise ValueError("min_jerk_trajectory needs n_submovements == 1; use generate_trial")
    return generate_trial(spec, trial_id)


@dataclass
class SynthDataset:
    trajectories: list[Trajectory]
    labels: dict[str, int]


def make_dataset(cluster_specs: Sequence[tuple[SynthSpec, int]], n_subjects: int = 10,
                 seed: int = 0) -> SynthDataset:
    """Generate ``count`` trials per spec, labelled by the spec's position in the list.

    Each trial draws from its own generator seeded by
    ``(seed, rng_seed, label, index)``, so trials are independent of order.
    """
    trajectories: list[Trajectory] = []
    labels: dict[str, int] = {}
    serial = 0
    for label, (spec, count) in enumerate(cluster_specs):
        if count < 1:
            raise ValueError(f"spec {label}: count must be >= 1")
        for i in range(count):
            rng = np.random.default_rng([seed, spec.rng_seed, label, i])
            trial_id = f"c{label}-{i:03d}"
            trajectories.append(generate_trial(spec, trial_id, f"s{serial % n_subjects:02d}", rng))
            labels[trial_id] = label
            serial += 1
    return SynthDataset(trajectories, labels)


def write_labels(path: Union[str, Path], labels: dict[str, int]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial_id", "planted_cluster"])
        for trial_id, label in labels.items():
            w.writerow([trial_id, label])


def read_labels(path: Union[str, Path]) -> dict[str, int]:
    with open(path, newline="") as fh:
        return {row["trial_id"]: int(row["planted_cluster"]) for row in csv.DictReader(fh)}


def _spec(n, displacement, duration, overlap, contact_at, seed):
    return SynthSpec(n_submovements=n, displacement=displacement, duration=duration, overlap=overlap,
                     noise_sd=1e-4, jitter=0.03, contact_at=contact_at, rng_seed=seed)


# Two peak-speed levels (~0.53 and ~0.89 m/s) crossed with one, two and three
# submovements; contact placed where the tail speed falls to ~0.45 m/s.
DEFAULT_CLUSTER_SPECS: tuple[tuple[SynthSpec, int], ...] = (
    (_spec(1, 0.25, 0.90, 0.00, 0.633, 101), 100),
    (_spec(1, 0.35, 0.75, 0.00, 0.766, 102), 100),
    (_spec(2, 0.314, 1.00, 0.20, 0.800, 103), 100),
    (_spec(2, 0.501, 0.95, 0.20, 0.871, 104), 100),
    (_spec(3, 0.303, 1.00, 0.10, 0.871, 105), 100),
    (_spec(3, 0.483, 0.95, 0.10, 0.904, 106), 100),
)
