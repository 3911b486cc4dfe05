import subprocess
import sys

import numpy as np

from anisonl import _accel


def test_backend_flag_reported():
    assert isinstance(_accel.using_numba(), bool)


def test_gauge_backends_agree(rng):
    pts = np.ascontiguousarray(rng.normal(size=(5000, 2)))
    expo = np.array([3.0, 3.5])
    a = _accel.gauge_many(pts, expo)
    b = _accel.gauge_many_np(pts, expo)
    assert np.allclose(a, b, rtol=1e-13)


def test_interp_backends_agree(rng):
    lo = np.array([-2.0, -2.0])
    inv_h = np.array([8.0, 8.0])
    shape = np.array([33, 33], dtype=np.int64)
    vals = rng.normal(size=33 * 33)
    q = np.ascontiguousarray(rng.uniform(-1.9, 1.9, size=(4000, 2)))
    a = _accel.interp_many(q, lo, inv_h, shape, vals)
    b = _accel.interp_many_np(q, lo, inv_h, shape, vals)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_numpy_fallback_env_flag():
    code = (
        "import os; os.environ['ANISONL_NUMBA'] = '0'\n"
        "import numpy as np\n"
        "from anisonl import _accel, using_numba\n"
        "assert not using_numba()\n"
        "pts = np.ones((10, 2))\n"
        "g = _accel.gauge_many(pts, np.array([3.0, 3.0]))\n"
        "assert np.allclose(g, 2.0)\n"
        "print('fallback-ok')\n"
    )
    proc = subprocess.run([sys.executable, "-c", code],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "fallback-ok" in proc.stdout


def test_solver_sweep_backends_agree(rng):
    from anisonl.profile import isotropic
    from anisonl.kernels import KernelFamily
    from anisonl.solver import AssembledOperator, DiscreteProblem

    prof = isotropic(1, 1.0, 1.0, 2.0)
    fam = KernelFamily.extremal_pair(prof)
    prob = DiscreteProblem(prof, (-1.0,), (1.0,), (17,), fam, 0.3, window=24)
    op = AssembledOperator(prob)
    u = rng.normal(size=17)
    res_active = op.apply(u.copy())

    # drive the numpy twin directly through the same assembled tables
    pad = prob.window
    from anisonl.solver import _far_values, _pad_exterior
    u_pad = _pad_exterior(prob, pad)
    core = tuple(slice(pad, pad + s) for s in prob.shape)
    u_pad[core] = u.reshape(prob.shape)
    f = np.zeros(int(np.prod(prob.shape)))
    _, res_np = _accel.solver_sweep_np(
        u_pad, pad, op.offsets, op.weights, f.reshape(prob.shape), op.tau,
        op.tail, _far_values(prob).reshape(prob.shape))
    assert np.allclose(res_active, res_np.ravel(), rtol=1e-12, atol=1e-12)
