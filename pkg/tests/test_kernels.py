"""Backend parity: the compiled kernels and the pure-Python fallback must
agree to tight tolerances on every exported kernel."""

import numpy as np
import pytest

from streampag import _kernels_py
from streampag import kernels

_ckernels = pytest.importorskip(
    "streampag._ckernels", reason="compiled extension not built"
)


def rand_spd(rng, p, cond=1.0):
    a = rng.standard_normal((p, p))
    return np.ascontiguousarray(a @ a.T + cond * p * np.eye(p))


def test_selected_backend_is_exposed():
    assert kernels.backend_name() in ("c", "python")


@pytest.mark.parametrize("p,k", [(3, 0), (4, 1), (8, 3), (20, 6)])
def test_partial_corr_parity(p, k):
    rng = np.random.default_rng(p * 100 + k)
    cov = rand_spd(rng, p)
    s = np.array(sorted(rng.choice(np.arange(2, p), size=k, replace=False)), dtype=np.int64)
    r_c = _ckernels.partial_corr(cov, 0, 1, s, 1e-10)
    r_py = _kernels_py.partial_corr(cov, 0, 1, s, 1e-10)
    assert r_c == pytest.approx(r_py, abs=1e-10)


def test_partial_corr_singular_raises_same_type():
    cov = np.ascontiguousarray(
        np.array([[1.0, 0.0, 1.5], [0.0, 1.0, 0.0], [1.5, 0.0, 1.0]])
    )
    s = np.array([2], dtype=np.int64)
    with pytest.raises(np.linalg.LinAlgError):
        _ckernels.partial_corr(cov, 0, 1, s, 1e-10)
    with pytest.raises(np.linalg.LinAlgError):
        _kernels_py.partial_corr(cov, 0, 1, s, 1e-10)


@pytest.mark.parametrize("p", [2, 5, 12, 30])
def test_solve_spd_parity(p):
    rng = np.random.default_rng(p)
    m = rand_spd(rng, p)
    rhs = rng.standard_normal(p)
    x_c = np.asarray(_ckernels.solve_spd(m, rhs, 1e-10))
    x_py = _kernels_py.solve_spd(m, rhs, 1e-10)
    assert np.allclose(x_c, x_py, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("p", [1, 4, 25])
def test_welford_parity(p):
    rng = np.random.default_rng(p + 7)
    data = rng.standard_normal((100, p))
    weights = np.cumprod(rng.choice([1.0, 1.0, 1.3], size=100))

    mean_c = np.zeros(p)
    scat_c = np.zeros((p, p))
    tot_c = 0.0
    mean_py = np.zeros(p)
    scat_py = np.zeros((p, p))
    tot_py = 0.0
    for row, w in zip(data, weights):
        row = np.ascontiguousarray(row)
        tot_c = _ckernels.welford_update(mean_c, scat_c, tot_c, row, w)
        tot_py = _kernels_py.welford_update(mean_py, scat_py, tot_py, row, w)
    assert tot_c == pytest.approx(tot_py, rel=1e-15)
    assert np.allclose(mean_c, mean_py, rtol=1e-12, atol=1e-15)
    assert np.allclose(scat_c, scat_py, rtol=1e-10, atol=1e-12)


def test_env_var_forces_python_backend():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "import streampag; print(streampag.backend_name())"],
        env={"PATH": "/usr/bin:/bin", "STREAMPAG_KERNELS": "python"},
        capture_output=True,
        text=True,
    )
    assert out.stdout.strip() == "python"
