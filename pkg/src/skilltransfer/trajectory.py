"""Demonstration trial ingestion, speed profiles, onset detection and segmentation.

Input files are delimiter-separated with a header row and the columns
``trial_id, subject_id, t, x, y, z`` plus an optional 0/1 ``contact`` column.
Times are in seconds, positions in meters.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

MIN_SAMPLES = 4
DEFAULT_RATE = 60.0
DEFAULT_ONSET_THRESHOLD = 0.05
DEFAULT_CONTACT_BAND = (0.3, 0.7)

REQUIRED_COLUMNS = ("trial_id", "subject_id", "t", "x", "y", "z")


class NoMovementError(ValueError):
    """Raised when no speed sample exceeds the onset threshold."""


class TrajectorySample(NamedTuple):
    t: float
    position: tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped 3-D end-effector positions of one trial.

    ``positions`` has shape ``(n, 3)``. ``contact_index`` marks the contact
    sample; ``None`` means contact is the final sample.
    """

    trial_id: str
    subject_id: str
    t: np.ndarray
    positions: np.ndarray
    nominal_rate: float
    contact_index: Optional[int] = None

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=float)
        p = np.ascontiguousarray(self.positions, dtype=float)
        if t.ndim != 1 or p.shape != (t.size, 3):
            raise ValueError(f"trial {self.trial_id}: positions must have shape (n, 3) matching t")
        if t.size < MIN_SAMPLES:
            raise ValueError(f"trial {self.trial_id}: too short ({t.size} samples, need {MIN_SAMPLES})")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
            raise ValueError(f"trial {self.trial_id}: non-finite sample")
        if t[0] < 0:
            raise ValueError(f"trial {self.trial_id}: negative time")
        if np.any(np.diff(t) <= 0):
            raise ValueError(f"trial {self.trial_id}: timestamps not strictly increasing")
        if not self.nominal_rate > 0:
            raise ValueError(f"trial {self.trial_id}: nominal_rate must be > 0")
        if self.contact_index is not None and not 0 <= self.contact_index < t.size:
            raise ValueError(f"trial {self.trial_id}: contact_index out of range")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "positions", p)

    def __len__(self):
        return self.t.size

    @property
    def samples(self) -> list[TrajectorySample]:
        return [TrajectorySample(float(ti), tuple(map(float, pi))) for ti, pi in zip(self.t, self.positions)]

    @property
    def contact(self) -> int:
        """Index of the contact sample (final sample when unflagged)."""
        return self.t.size - 1 if self.contact_index is None else self.contact_index

    @property
    def is_uniform(self) -> bool:
        dt = 1.0 / self.nominal_rate
        return bool(np.allclose(np.diff(self.t), dt, rtol=0.0, atol=1e-9 * max(1.0, self.t[-1])))


@dataclass(frozen=True, eq=False)
class SpeedProfile:
    """Uniformly sampled speed magnitude series starting at ``t0``."""

    t0: float
    dt: float
    speed: np.ndarray

    def __post_init__(self):
        s = np.ascontiguousarray(self.speed, dtype=float)
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if s.ndim != 1 or s.size < MIN_SAMPLES:
            raise ValueError(f"speed profile needs at least {MIN_SAMPLES} samples")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValueError("speed values must be finite and non-negative")
        s.setflags(write=False)
        object.__setattr__(self, "speed", s)

    def __len__(self):
        return self.speed.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.speed.size)

    def scaled(self, factor: float) -> "SpeedProfile":
        return SpeedProfile(self.t0, self.dt, self.speed * factor)


@dataclass(frozen=True, eq=False)
class SegmentedTrial:
    """Onset-to-contact portion of an accepted trial."""

    trial_id: str
    profile: SpeedProfile
    contact_speed: float
    peak_speed: float
    subject_id: str = ""
    positions: Optional[np.ndarray] = field(default=None, repr=False)


class RowError(NamedTuple):
    row: int
    message: str


class Rejection(NamedTuple):
    trial_id: str
    reason: str


@dataclass
class IngestResult:
    trajectories: list[Trajectory]
    rejections: list[Rejection]
    row_errors: list[RowError]


def _estimate_rate(t: np.ndarray) -> float:
    return float(1.0 / np.median(np.diff(t)))


def ingest_trials(
    source: Union[str, Path, io.TextIOBase, Iterable[str]],
    delimiter: str = ",",
    nominal_rate: Optional[float] = None,
) -> IngestResult:
    """Read trial records into one :class:`Trajectory` per trial.

    ``source`` may be a path, an open text file or an iterable of lines.
    Malformed rows are skipped and reported with their 0-based data row index;
    trials with fewer than four distinct timestamps are rejected as too short.
    Duplicate timestamps within a trial are collapsed to their mean position.
    When ``nominal_rate`` is omitted it is estimated from the median time step.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return ingest_trials(fh, delimiter=delimiter, nominal_rate=nominal_rate)

    reader = csv.reader(source, delimiter=delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValueError("empty input: header row required") from None
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise ValueError(f"input header missing columns: {', '.join(missing)}")
    col = {name: header.index(name) for name in REQUIRED_COLUMNS}
    contact_col = header.index("contact") if "contact" in header else None

    # trial_id -> [subject_id, rows]; dict keeps first-seen trial order
    grouped: dict[str, list] = {}
    row_errors: list[RowError] = []
    for row_idx, row in enumerate(reader):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            trial_id = row[col["trial_id"]].strip()
            subject_id = row[col["subject_id"]].strip()
            values = tuple(float(row[col[c]]) for c in ("t", "x", "y", "z"))
            if not all(math.isfinite(v) for v in values):
                raise ValueError("non-finite value")
            if values[0] < 0:
                raise ValueError("negative time")
            contact = False
            if contact_col is not None and contact_col < len(row) and row[contact_col].strip():
                flag = row[contact_col].strip()
                if flag not in ("0", "1"):
                    raise ValueError(f"contact flag must be 0 or 1, got {flag!r}")
                contact = flag == "1"
        except (ValueError, IndexError) as exc:
            row_errors.append(RowError(row_idx, f"row {row_idx}: {exc}"))
            logger.warning("skipping malformed row %d: %s", row_idx, exc)
            continue
        if not trial_id:
            row_errors.append(RowError(row_idx, f"row {row_idx}: empty trial_id"))
            continue
        entry = grouped.setdefault(trial_id, [subject_id, []])
        entry[1].append((*values, contact))

    trajectories: list[Trajectory] = []
    rejections: list[Rejection] = []
    for trial_id, (subject_id, rows) in grouped.items():
        arr = np.array([r[:4] for r in rows], dtype=float)
        flags = np.array([r[4] for r in rows], dtype=bool)
        order = np.argsort(arr[:, 0], kind="stable")
        arr, flags = arr[order], flags[order]
        t_unique, inverse, counts = np.unique(arr[:, 0], return_inverse=True, return_counts=True)
        if t_unique.size < MIN_SAMPLES:
            rejections.append(Rejection(trial_id, "too short"))
            continue
        positions = np.zeros((t_unique.size, 3))
        np.add.at(positions, inverse, arr[:, 1:])
        positions /= counts[:, None]
        contact_flags = np.zeros(t_unique.size, dtype=bool)
        np.logical_or.at(contact_flags, inverse, flags)
        contact_index = int(np.flatnonzero(contact_flags)[0]) if contact_flags.any() else None
        rate = nominal_rate if nominal_rate is not None else _estimate_rate(t_unique)
        trajectories.append(
            Trajectory(trial_id, subject_id, t_unique, positions, rate, contact_index)
        )
    return IngestResult(trajectories, rejections, row_errors)


def write_trials(path: Union[str, Path], trajectories: Sequence[Trajectory], delimiter: str = ",") -> None:
    """Write trajectories in the ingestion format, flagging each contact sample."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow([*REQUIRED_COLUMNS, "contact"])
        for traj in trajectories:
            c = traj.contact_index
            for i, (ti, p) in enumerate(zip(traj.t, traj.positions)):
                w.writerow([traj.trial_id, traj.subject_id, repr(float(ti)),
                            repr(float(p[0])), repr(float(p[1])), repr(float(p[2])),
                            int(c is not None and i == c)])


def resample_uniform(traj: Trajectory, rate: float = DEFAULT_RATE) -> Trajectory:
    """Linearly interpolate positions onto ``t0, t0 + 1/rate, ...`` up to ``t_end``.

    No extrapolation past the last sample. A flagged contact is moved to the
    nearest grid sample.
    """
    if not rate > 0:
        raise ValueError("rate must be > 0")
    t0, t_end = traj.t[0], traj.t[-1]
    n = int(math.floor((t_end - t0) * rate + 1e-9)) + 1
    grid = t0 + np.arange(n) / rate
    positions = np.column_stack([np.interp(grid, traj.t, traj.positions[:, k]) for k in range(3)])
    contact_index = None
    if traj.contact_index is not None:
        contact_index = int(min(n - 1, round((traj.t[traj.contact_index] - t0) * rate)))
    return Trajectory(traj.trial_id, traj.subject_id, grid, positions, rate, contact_index)


def finite_difference(values: np.ndarray, dt: float) -> np.ndarray:
    """Central differences inside, first-order one-sided differences at both ends."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dt)
    out[0] = (values[1] - values[0]) / dt
    out[-1] = (values[-1] - values[-2]) / dt
    return out


def speed_profile(traj: Trajectory) -> SpeedProfile:
    """Euclidean norm of the position derivative of a uniformly sampled trajectory."""
    if not traj.is_uniform:
        raise ValueError(f"trial {traj.trial_id}: speed_profile requires uniform sampling")
    dt = 1.0 / traj.nominal_rate
    vel = finite_difference(traj.positions, dt)
    return SpeedProfile(float(traj.t[0]), dt, np.linalg.norm(vel, axis=1))


def detect_onset(profile: SpeedProfile, threshold: float = DEFAULT_ONSET_THRESHOLD) -> int:
    """Index of the first sample whose speed strictly exceeds ``threshold``."""
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    above = np.flatnonzero(profile.speed > threshold)
    if above.size == 0:
        raise NoMovementError("no movement detected")
    return int(above[0])


def segment_and_filter(
    traj: Trajectory,
    onset_threshold: float = DEFAULT_ONSET_THRESHOLD,
    contact_band: tuple[float, float] = DEFAULT_CONTACT_BAND,
) -> Union[SegmentedTrial, Rejection]:
    """Clip a uniform trajectory to ``[onset, contact]`` and apply the contact-speed band.

    Returns a :class:`Rejection` instead of raising, so batch callers can log
    every dropped trial exactly once.
    """
    lo, hi = contact_band
    if not 0 <= lo <= hi:
        raise ValueError(f"invalid contact band {contact_band}")
    profile = speed_profile(traj)
    try:
        onset = detect_onset(profile, onset_threshold)
    except NoMovementError:
        return Rejection(traj.trial_id, "no movement detected")
    contact = traj.contact
    if contact <= onset:
        return Rejection(traj.trial_id, "degenerate segment")
    if contact - onset + 1 < MIN_SAMPLES:
        return Rejection(traj.trial_id, "segment too short")
    contact_speed = float(profile.speed[contact])
    if not lo <= contact_speed <= hi:
        return Rejection(traj.trial_id, f"contact speed {contact_speed:.4f} outside [{lo}, {hi}]")
    segment = SpeedProfile(float(traj.t[onset]), profile.dt, profile.speed[onset:contact + 1])
    return SegmentedTrial(
        trial_id=traj.trial_id,
        profile=segment,
        contact_speed=contact_speed,
        peak_speed=float(segment.speed.max()),
        subject_id=traj.subject_id,
        positions=traj.positions[onset:contact + 1].copy(),
    )
