"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Also times one silhouette sweep and one prototype transfer through the public
API with each backend swapped in.
"""
import argparse
import timeit

import numpy as np

from skilltransfer import clustering, kernels, robot, synth
from skilltransfer.features import FeatureMatrix

KERNELS = ("assign_labels", "silhouette_samples", "dh_frames", "dh_jacobian")


def kernel_cases():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(600, 2))
    C = rng.normal(size=(6, 2))
    labels = rng.integers(0, 6, 600).astype(np.int64)
    model = robot.load_robot()
    q = model.q0.copy()
    return {
        "assign_labels (600 x 6)": ("assign_labels", (X, C)),
        "silhouette_samples (600, k=6)": ("silhouette_samples", (X, labels, 6)),
        "dh_frames (6 joints)": ("dh_frames", (model._dh, q, model.base_pose)),
        "dh_jacobian (6 joints)": ("dh_jacobian", (model._dh, q, model.base_pose)),
    }


def use_backend(name):
    impl = kernels.BACKENDS[name]
    for k in KERNELS:
        setattr(kernels, k, getattr(impl, k))


def best_time(fn, repeat):
    number = max(1, int(0.05 / max(min(timeit.repeat(fn, number=1, repeat=3)), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def pipeline_cases():
    rng = np.random.default_rng(1)
    X = np.vstack([m + 0.02 * rng.standard_normal((100, 2))
                   for m in [(pv, s) for s in (-1.8, -1.6) for pv in (0.4, 0.6, 0.8)]])
    matrix = FeatureMatrix(tuple(map(str, range(len(X)))), X)
    model = robot.load_robot()
    traj = synth.generate_trial(synth.SynthSpec(contact_at=0.9))
    seg = traj.positions[: traj.contact + 1]
    return {
        "silhouette sweep k=2..16 (600 pts)": lambda: clustering.silhouette_sweep(
            matrix, (2, 16), clustering.KmeansConfig(n_restarts=3)),
        "transfer one prototype (55 steps)": lambda: robot.transfer_prototype(model, seg),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = [b for b in ("python", "compiled") if b in kernels.BACKENDS]
    if len(backends) < 2:
        print("compiled extension not built; only the python backend is available")

    rows = []
    for label, (name, call_args) in kernel_cases().items():
        times = {b: best_time(lambda: getattr(kernels.BACKENDS[b], name)(*call_args), args.repeat)
                 for b in backends}
        rows.append((label, times))
    for label, fn in pipeline_cases().items():
        times = {}
        for b in backends:
            use_backend(b)
            times[b] = best_time(fn, max(1, args.repeat // 2))
        rows.append((label, times))
    use_backend(kernels.BACKEND)

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  " + "  ".join(f"{b:>12}" for b in backends) + "   speedup")
    for label, times in rows:
        cells = "  ".join(f"{times[b] * 1e6:>10.1f}us" for b in backends)
        speedup = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{label:<{width}}  {cells}   {speedup:6.1f}x")


if __name__ == "__main__":
    main()
