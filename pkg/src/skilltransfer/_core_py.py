"""Pure-Python (numpy) kernels. Reference behaviour for the compiled ``_core``."""
import numpy as np


def assign_labels(X, C):
    """Nearest-center labels and squared distances; ties go to the lowest center index."""
    X = np.asarray(X, dtype=float)
    C = np.asarray(C, dtype=float)
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int64), d2[np.arange(X.shape[0]), labels]


def silhouette_samples(X, labels, k):
    """Per-point silhouette with Euclidean distance; singleton clusters score 0."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    n = X.shape[0]
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    sums = dist @ onehot
    sizes = onehot.sum(axis=0)
    own = sizes[labels]
    out = np.zeros(n)
    for i in range(n):
        if own[i] <= 1:
            continue
        a = sums[i, labels[i]] / (own[i] - 1)
        b = np.inf
        for c in range(k):
            if c != labels[i] and sizes[c] > 0:
                b = min(b, sums[i, c] / sizes[c])
        m = max(a, b)
        out[i] = 0.0 if m == 0.0 else (b - a) / m
    return out


def dh_transform(a, alpha, d, theta):
    """Standard (distal) DH link transform Rz(theta) Tz(d) Tx(a) Rx(alpha)."""
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def dh_frames(dh, q, base):
    """World-frame transforms of frames 0..n; ``dh`` rows are (a, alpha, d, theta_offset)."""
    dh = np.asarray(dh, dtype=float)
    n = dh.shape[0]
    frames = np.empty((n + 1, 4, 4))
    frames[0] = base
    for i in range(n):
        a, alpha, d, offset = dh[i]
        frames[i + 1] = frames[i] @ dh_transform(a, alpha, d, q[i] + offset)
    return frames


def dh_jacobian(dh, q, base):
    """End-effector pose and world-frame geometric Jacobian of an all-revolute chain."""
    frames = dh_frames(dh, q, base)
    n = frames.shape[0] - 1
    pe = frames[n, :3, 3]
    J = np.empty((6, n))
    for i in range(n):
        z = frames[i, :3, 2]
        J[:3, i] = np.cross(z, pe - frames[i, :3, 3])
        J[3:, i] = z
    return frames[n], J
