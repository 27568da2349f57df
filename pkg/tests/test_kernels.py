"""The compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from escapeset import _kernels
from escapeset._kernels import _fallback

core = pytest.importorskip("escapeset._kernels._core")

coords = st.floats(-10, 10, allow_nan=False, width=64)


def point_sets(dim=2, max_size=8):
    return st.integers(1, max_size).flatmap(lambda n: arrays(np.float64, (n, dim), elements=coords))


@pytest.mark.parametrize("code,y0", [
    (_kernels.FIELD_SPIRAL, [[0.5, 0.0], [2.0, 1.0], [1.0, 0.0]]),
    (_kernels.FIELD_R3SADDLE, [[0.0, 0.0, 0.0], [0.5, 0.2, 0.1], [1.0, 1.0, 0.5]]),
    (_kernels.FIELD_RADIAL, [[0.25], [0.5], [2.0]]),
])
def test_rk4_backends_agree(code, y0):
    y0 = np.array(y0)
    a, da = core.rk4_samples(code, y0, 1e-3, 200, 10, 1e6)
    b, db = _fallback.rk4_samples(code, y0, 1e-3, 200, 10, 1e6)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12, equal_nan=True)
    assert (da == db).all()


def test_rk4_backends_agree_on_divergence():
    y0 = np.array([[3.0, 0.0], [0.5, 0.0]])
    a, da = core.rk4_samples(_kernels.FIELD_SPIRAL, y0, -1e-3, 500, 10, 1e3)
    b, db = _fallback.rk4_samples(_kernels.FIELD_SPIRAL, y0, -1e-3, 500, 10, 1e3)
    assert (da == db).all() and da[0] > 0 and da[1] == -1
    assert np.allclose(a, b, equal_nan=True)


@given(point_sets(), point_sets())
def test_hausdorff_backends_agree(a, b):
    assert core.hausdorff(a, b) == _fallback.hausdorff(a, b)


@given(point_sets(max_size=40), st.floats(0.01, 5.0))
def test_cluster_backends_agree(pts, eps):
    ca, la = core.greedy_cluster(pts, eps)
    cb, lb = _fallback.greedy_cluster(pts, eps)
    assert (np.asarray(ca) == np.asarray(cb)).all() and (np.asarray(la) == np.asarray(lb)).all()


def test_read_only_inputs_are_accepted():
    a = np.array([[0.0, 0.0], [1.0, 1.0]])
    a.setflags(write=False)
    assert core.hausdorff(a, a) == 0.0
    core.greedy_cluster(a, 0.5)


def test_active_backend_is_named():
    assert _kernels.BACKEND in ("cython", "python")


def test_pure_python_switch_gives_same_verdicts():
    import subprocess
    import sys

    code = ("from escapeset import BACKEND, R3Saddle, ball_exhaustion, classify_escape;"
            "v = classify_escape(R3Saddle(), (0.5, 0.0, 0.0), ball_exhaustion(3), 20);"
            "print(BACKEND, v.forward.value)")
    env = {**__import__("os").environ, "ESCAPESET_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "non-escaping"]
