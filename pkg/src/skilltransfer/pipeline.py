"""Batch pipeline stages: synthesize, analyze (features + clustering), transfer.

Every stage reads and writes plain files in one output directory, so stages
can be rerun independently. All outputs are deterministic for a fixed config.
"""
from __future__ import annotations

import copy
import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from . import clustering, features, robot, synth, trajectory
from .smoothness import SparcConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2

TRIALS_FILE = "trials.csv"
LABELS_FILE = "labels.csv"
ANALYSIS_FILE = "analysis.json"
SEGMENTS_FILE = "prototype_segments.csv"
REPORT_FILE = "report.json"
ANALYSIS_OUTPUTS = ("features.csv", "silhouette.csv", "clusters.csv", "prototypes.csv",
                    "prototype_speeds.csv", SEGMENTS_FILE, "rejections.csv", ANALYSIS_FILE)


class ConfigError(ValueError):
    """Invalid configuration or unusable input; maps to exit code 1."""


DEFAULT_CONFIG: dict[str, Any] = {
    "input": None,
    "robot": None,
    "out": "out",
    "seed": 0,
    "onset_threshold": trajectory.DEFAULT_ONSET_THRESHOLD,
    "contact_band": list(trajectory.DEFAULT_CONTACT_BAND),
    "resample_rate": trajectory.DEFAULT_RATE,
    "sparc": asdict(SparcConfig()),
    "kmeans": {"k": 6, "n_restarts": 10, "max_iters": 300, "center_tolerance": 1e-4},
    "sweep_range": [2, 16],
    "standardize": False,
    "transfer": {
        "integrate": True,
        "dt": 1.0 / 60.0,
        "q0_deg": None,
        "mounting_rpy_deg": list(robot.DEMO_TO_ROBOT_RPY_DEG),
    },
    "synth": {
        "n_subjects": 10,
        "clusters": [{**asdict(spec), "target": list(spec.target), "count": count}
                     for spec, count in synth.DEFAULT_CLUSTER_SPECS],
    },
}


def _merge(base: dict, override: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config field '{prefix}{key}'")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, f"{prefix}{key}.")
        else:
            out[key] = value
    return out


@dataclass
class PipelineConfig:
    """Effective configuration; ``raw`` is the merged dict echoed into reports."""

    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_CONFIG))

    def __post_init__(self):
        self.validate()

    @classmethod
    def load(cls, path: Union[str, Path, None] = None, **overrides) -> "PipelineConfig":
        raw = copy.deepcopy(DEFAULT_CONFIG)
        if path is not None:
            try:
                user = json.loads(Path(path).read_text())
            except FileNotFoundError:
                raise ConfigError(f"config file not found: {path}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from None
            raw = _merge(raw, user)
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "k":
                raw["kmeans"]["k"] = value
            else:
                raw[key] = value
        return cls(raw)

    def validate(self) -> None:
        r = self.raw
        if not _positive(r["onset_threshold"]):
            raise ConfigError("onset_threshold must be > 0")
        band = r["contact_band"]
        if not (isinstance(band, (list, tuple)) and len(band) == 2 and 0 <= band[0] <= band[1]):
            raise ConfigError("contact_band must be [low, high] with 0 <= low <= high")
        if not _positive(r["resample_rate"]):
            raise ConfigError("resample_rate must be > 0")
        if not _positive(r["transfer"]["dt"]):
            raise ConfigError("transfer.dt must be > 0")
        lo, hi = r["sweep_range"]
        if lo < 2 or hi < lo:
            raise ConfigError("sweep_range must be [low, high] with 2 <= low <= high")
        try:
            self.sparc_config()
        except ValueError as exc:
            raise ConfigError(f"sparc: {exc}") from None
        try:
            self.kmeans_config()
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"kmeans: {exc}") from None
        self.synth_specs()

    def sparc_config(self) -> SparcConfig:
        return SparcConfig(**self.raw["sparc"])

    def kmeans_config(self) -> clustering.KmeansConfig:
        return clustering.KmeansConfig(rng_seed=int(self.raw["seed"]), **self.raw["kmeans"])

    def synth_specs(self) -> list[tuple[synth.SynthSpec, int]]:
        specs = []
        for i, entry in enumerate(self.raw["synth"]["clusters"]):
            entry = dict(entry)
            count = entry.pop("count", 100)
            if "target" in entry:
                entry["target"] = tuple(entry["target"])
            try:
                specs.append((synth.SynthSpec(**entry), int(count)))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"synth.clusters[{i}]: {exc}") from None
            if count < 1:
                raise ConfigError(f"synth.clusters[{i}]: count must be >= 1")
        return specs

    @property
    def out(self) -> Path:
        return Path(self.raw["out"])


def _positive(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0


def _clean(obj):
    """JSON-safe copy: numpy to builtins, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True, allow_nan=False) + "\n")


def run_synth(cfg: PipelineConfig) -> list[Path]:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    dataset = synth.make_dataset(cfg.synth_specs(), n_subjects=int(cfg.raw["synth"]["n_subjects"]),
                                 seed=int(cfg.raw["seed"]))
    trajectory.write_trials(out / TRIALS_FILE, dataset.trajectories)
    synth.write_labels(out / LABELS_FILE, dataset.labels)
    logger.info("wrote %d synthetic trials", len(dataset.trajectories))
    return [out / TRIALS_FILE, out / LABELS_FILE]


def run_analyze(cfg: PipelineConfig) -> dict:
    """Ingest, segment, extract features, sweep k, cluster and pick prototypes."""
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    r = cfg.raw
    input_path = r["input"] if r["input"] is not None else out / TRIALS_FILE
    if not Path(input_path).exists():
        raise ConfigError(f"input dataset not found: {input_path}")

    ingested = trajectory.ingest_trials(input_path)
    rejections = [("ingest", rj.trial_id, rj.reason) for rj in ingested.rejections]
    accepted: list[trajectory.SegmentedTrial] = []
    by_id: dict[str, trajectory.Trajectory] = {}
    for traj in ingested.trajectories:
        uniform = trajectory.resample_uniform(traj, float(r["resample_rate"]))
        result = trajectory.segment_and_filter(uniform, float(r["onset_threshold"]), tuple(r["contact_band"]))
        if isinstance(result, trajectory.Rejection):
            rejections.append(("segment", result.trial_id, result.reason))
        else:
            accepted.append(result)
            by_id[result.trial_id] = uniform

    matrix, dropped = features.extract_features(accepted, cfg.sparc_config())
    rejections.extend(("features", rj.trial_id, rj.reason) for rj in dropped)
    counts = {
        "rows_malformed": len(ingested.row_errors),
        "ingested": len(ingested.trajectories) + len(ingested.rejections),
        "accepted": len(matrix),
        "rejected": len(rejections),
    }
    kcfg = cfg.kmeans_config()
    if len(matrix) == 0:
        raise ConfigError("0 accepted trials")
    if len(matrix) < kcfg.k:
        raise ConfigError(f"{len(matrix)} accepted trials is fewer than k = {kcfg.k} "
                          f"(ingested {counts['ingested']}, rejected {counts['rejected']})")

    features.write_features(out / "features.csv", matrix)
    space = features.standardize(matrix) if r["standardize"] else matrix

    lo, hi = r["sweep_range"]
    hi = min(hi, len(space) - 1)
    sweep = clustering.silhouette_sweep(space, (lo, hi), kcfg) if lo <= hi else []
    clustering.write_sweep(out / "silhouette.csv", sweep)

    model = clustering.kmeans(space, kcfg)
    protos = clustering.retrieve_prototypes(space, model)
    clustering.write_scatter(out / "clusters.csv", space, model)
    _write_rejections(out / "rejections.csv", rejections)
    _write_prototypes(out, protos, accepted, by_id, space.names)

    summary = clustering.cluster_summary(space, model)
    analysis = {
        "counts": counts,
        "row_errors": [e.message for e in ingested.row_errors],
        "rejections": [{"stage": s, "trial_id": t, "reason": why} for s, t, why in rejections],
        "silhouette": [{"k": row.k, "silhouette": row.silhouette, "inertia": row.inertia,
                        "error": row.error} for row in sweep],
        "best_k": clustering.best_k(sweep) if any(row.silhouette is not None for row in sweep) else None,
        "clusters": summary,
        "config": r,
    }
    write_json(out / ANALYSIS_FILE, analysis)
    return analysis


def _write_rejections(path: Path, rejections) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "trial_id", "reason"])
        w.writerows(rejections)


def _write_prototypes(out: Path, protos, accepted, by_id, names) -> None:
    seg_by_id = {s.trial_id: s for s in accepted}
    with open(out / "prototypes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "trial_id", *names, "distance_to_center"])
        for p in protos:
            w.writerow([p.cluster, p.trial_id, *(repr(float(v)) for v in p.features[1:]), repr(p.distance)])
    with open(out / "prototype_speeds.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "trial_id", "t", "speed"])
        for p in protos:
            prof = seg_by_id[p.trial_id].profile
            for t, v in zip(prof.times - prof.t0, prof.speed):
                w.writerow([p.cluster, p.trial_id, repr(float(t)), repr(float(v))])
    with open(out / SEGMENTS_FILE, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "trial_id", "dt", "x", "y", "z"])
        for p in protos:
            seg = seg_by_id[p.trial_id]
            for xyz in seg.positions:
                w.writerow([p.cluster, p.trial_id, repr(seg.profile.dt), *(repr(float(v)) for v in xyz)])


def read_prototype_segments(path: Path) -> list[tuple[int, str, float, np.ndarray]]:
    """(cluster, trial_id, dt, positions) per prototype, in cluster order."""
    groups: dict[int, list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            c = int(row["cluster"])
            entry = groups.setdefault(c, [row["trial_id"], float(row["dt"]), []])
            entry[2].append((float(row["x"]), float(row["y"]), float(row["z"])))
    return [(c, tid, dt, np.array(pts)) for c, (tid, dt, pts) in sorted(groups.items())]


def run_transfer(cfg: PipelineConfig) -> tuple[dict, int]:
    """Transfer every prototype to the robot and write the consolidated report."""
    out = cfg.out
    r = cfg.raw
    try:
        model = robot.load_robot(r["robot"])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"robot config invalid: {exc}") from None
    analysis_path = out / ANALYSIS_FILE
    if not analysis_path.exists() or not (out / SEGMENTS_FILE).exists():
        raise ConfigError(f"cluster report not found in {out}; run 'analyze' first")
    analysis = json.loads(analysis_path.read_text())

    t_cfg = r["transfer"]
    dt = float(t_cfg["dt"])
    q0 = model.q0 if t_cfg["q0_deg"] is None else np.radians(np.asarray(t_cfg["q0_deg"], dtype=float))
    mounting = robot.make_pose(rpy_deg=t_cfg["mounting_rpy_deg"])
    pv_by_cluster = {c["cluster"]: c["prototype"] for c in analysis["clusters"]["clusters"]}

    entries = []
    status = EXIT_OK
    for cluster, trial_id, seg_dt, positions in read_prototype_segments(out / SEGMENTS_FILE):
        if not math.isclose(seg_dt, dt, rel_tol=1e-12):
            t_src = np.arange(positions.shape[0]) * seg_dt
            t_new = np.arange(int(math.floor(t_src[-1] / dt + 1e-9)) + 1) * dt
            positions = np.column_stack([np.interp(t_new, t_src, positions[:, k]) for k in range(3)])
        try:
            result = robot.transfer_prototype(model, positions, mounting, q0, dt,
                                              bool(t_cfg["integrate"]), trial_id)
        except robot.IKError as exc:
            logger.warning("prototype %s: %s", trial_id, exc)
            status = EXIT_PARTIAL
            entries.append({"cluster": cluster, "trial_id": trial_id, "prototype": pv_by_cluster.get(cluster),
                            "feasible": False, "error": str(exc), "file": None})
            continue
        name = f"joint_velocities_{cluster}.csv"
        _write_joint_velocities(out / name, result)
        entry = {
            "cluster": cluster,
            "trial_id": trial_id,
            "prototype": pv_by_cluster.get(cluster),
            "steps": int(result.times.size),
            "peak_cartesian_speed": result.peak_cartesian_speed,
            "peak_qd_per_joint": result.peak_qd_per_joint,
            "feasible": result.feasible,
            "singular": result.singular,
            "singular_step": int(np.flatnonzero(result.singular_flags)[0]) if result.singular else None,
            "suggested_scale": result.suggested_scale,
            "file": name,
        }
        if not result.feasible:
            status = EXIT_PARTIAL
        if not result.feasible and not result.singular:
            scaled = robot.scale_task(result)
            entry["scaled_task"] = {
                "scale": scaled.scale,
                "dt": scaled.dt,
                "peak_cartesian_speed": float(np.linalg.norm(scaled.velocities, axis=1).max())
                if scaled.velocities.size else 0.0,
            }
        entries.append(entry)

    emitted = [name for name in (TRIALS_FILE, LABELS_FILE, *ANALYSIS_OUTPUTS) if (out / name).exists()]
    emitted += [e["file"] for e in entries if e["file"]]
    manifest = sorted(emitted) + [REPORT_FILE]
    report = {
        "counts": analysis["counts"],
        "rejections": analysis["rejections"],
        "row_errors": analysis["row_errors"],
        "silhouette": analysis["silhouette"],
        "best_k": analysis["best_k"],
        "clusters": analysis["clusters"],
        "robot": {"name": model.name, "qd_limits": model.qd_limits, "q0_deg": np.degrees(q0)},
        "transfer": entries,
        "config": r,
        "manifest": manifest,
    }
    write_json(out / REPORT_FILE, report)
    missing = [m for m in manifest if not (out / m).exists()]
    if missing:
        raise RuntimeError(f"manifest lists missing files: {missing}")
    return report, status


def _write_joint_velocities(path: Path, result: robot.TransferResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *(f"qd_{j + 1}" for j in range(robot.N_JOINTS)), "singular"])
        for t, qd, flag in zip(result.times, result.qd_path, result.singular_flags):
            w.writerow([repr(float(t)), *("nan" if not math.isfinite(v) else repr(float(v)) for v in qd),
                        int(flag)])
