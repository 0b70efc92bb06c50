"""Prototype discovery from demonstration trajectories and transfer to a 6-DOF arm."""
from .clustering import ClusterModel, ClusteringError, KmeansConfig, kmeans, silhouette, silhouette_sweep
from .features import FeatureMatrix, extract_features, standardize
from .kernels import BACKEND
from .robot import RobotModel, TransferResult, load_robot, transfer_prototype
from .smoothness import SparcConfig, sparc
from .synth import SynthSpec, generate_trial, make_dataset
from .trajectory import Trajectory, ingest_trials, segment_and_filter

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ClusterModel", "ClusteringError", "FeatureMatrix", "KmeansConfig", "RobotModel",
    "SparcConfig", "SynthSpec", "Trajectory", "TransferResult", "extract_features", "generate_trial",
    "ingest_trials", "kmeans", "load_robot", "make_dataset", "segment_and_filter", "silhouette",
    "silhouette_sweep", "sparc", "standardize", "transfer_prototype",
]
