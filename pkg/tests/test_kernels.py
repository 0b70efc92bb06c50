import os
import subprocess
import sys

import numpy as np
import pytest

from skilltransfer import _core_py, kernels
from skilltransfer.robot import load_robot

compiled = kernels.BACKENDS.get("compiled")
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


@needs_compiled
class TestParity:
    def test_assign_labels(self):
        rng = np.random.default_rng(0)
        X, C = rng.normal(size=(300, 2)), rng.normal(size=(7, 2))
        la, da = _core_py.assign_labels(X, C)
        lb, db = compiled.assign_labels(X, C)
        assert np.array_equal(la, lb)
        assert np.abs(da - db).max() < 1e-14

    def test_assign_ties_go_low(self):
        X = np.array([[0.0, 0.0]])
        C = np.array([[1.0, 0.0], [-1.0, 0.0]])
        assert compiled.assign_labels(X, C)[0][0] == _core_py.assign_labels(X, C)[0][0] == 0

    def test_silhouette(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(150, 2))
        labels = rng.integers(0, 5, 150).astype(np.int64)
        labels[0] = 4
        a, b = _core_py.silhouette_samples(X, labels, 5), compiled.silhouette_samples(X, labels, 5)
        assert np.abs(a - b).max() < 1e-13

    def test_dh(self):
        model = load_robot()
        for q in np.random.default_rng(2).uniform(-3, 3, (20, 6)):
            fa = _core_py.dh_frames(model._dh, q, model.base_pose)
            fb = compiled.dh_frames(model._dh, q, model.base_pose)
            assert np.abs(fa - fb).max() < 1e-14
            (ta, ja), (tb, jb) = _core_py.dh_jacobian(model._dh, q, model.base_pose), \
                compiled.dh_jacobian(model._dh, q, model.base_pose)
            assert np.abs(ta - tb).max() < 1e-14 and np.abs(ja - jb).max() < 1e-14

    def test_read_only_inputs(self):
        model = load_robot()
        assert not model._dh.flags.writeable
        compiled.dh_jacobian(model._dh, model.q0, model.base_pose)


def test_selection():
    assert kernels.BACKEND in kernels.BACKENDS
    expected = "compiled" if compiled is not None else "python"
    if os.environ.get("SKILLTRANSFER_PURE_PYTHON", "") not in ("", "0"):
        expected = "python"
    assert kernels.BACKEND == expected


def test_env_forces_fallback():
    env = dict(os.environ, SKILLTRANSFER_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from skilltransfer import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
