import numpy as np
import pytest

from anisonl.fields import (AffineExterior, CallableExterior, ConstantExterior,
                            GridField)
from anisonl.kernels import KernelFamily, PowerLawKernel, TruncatedKernel
from anisonl.profile import isotropic
from anisonl.solver import (AssembledOperator, DiscreteProblem,
                            assemble_weights, cell_weight, dense_matrix,
                            discrete_extremal, lattice_offsets,
                            solve_dirichlet)


@pytest.fixture(scope="module")
def prob1(iso1):
    fam = KernelFamily.singleton(PowerLawKernel(iso1, 1.0))
    return DiscreteProblem(iso1, (-2.0,), (2.0,), (65,), fam, 0.0,
                           tolerance=1e-10, window=64)


def test_weights_symmetric_nonnegative(iso1):
    k = PowerLawKernel(iso1, 1.0)
    off, w, tail = assemble_weights(k, np.array([0.0625]), iso1, 32)
    key = {tuple(o): i for i, o in enumerate(off)}
    for i, o in enumerate(off):
        assert w[i] == w[key[tuple(-o)]]
    assert np.all(w >= 0.0) and tail >= 0.0


def test_weights_far_field_scaling(iso1):
    # far offsets: w ~ 2 h |y|^-2 for the 1-D unit-multiplier kernel
    h = np.array([0.0625])
    k = PowerLawKernel(iso1, 1.0)
    off, w, _ = assemble_weights(k, h, iso1, 64)
    for j in (20, 40, 60):
        idx = int(np.nonzero(off[:, 0] == j)[0][0])
        y = j * h[0]
        # refined per-cell quadrature oracle (far weights are midpoint)
        fine = cell_weight(k, np.array([y]), h, 64)
        assert w[idx] == pytest.approx(2.0 * fine, rel=1e-3)
        assert w[idx] == pytest.approx(2.0 * iso1.c_sigma * h[0] / y ** 2,
                                       rel=0.01)


def test_operator_kills_affine(iso1):
    fam = KernelFamily.singleton(PowerLawKernel(iso1, 1.0))
    prob = DiscreteProblem(iso1, (-2.0,), (2.0,), (33,), fam,
                           AffineExterior(0.7, (1.3,)), window=48)
    op = AssembledOperator(prob)
    pts = GridField(prob.lo, prob.hi, np.zeros(prob.shape),
                    prob.exterior).grid_points()
    res = op.apply(0.7 + 1.3 * pts[:, 0])
    assert np.max(np.abs(res)) < 1e-12


def test_solve_zero_case(prob1):
    field, rep = solve_dirichlet(prob1)
    assert rep.converged and rep.residual <= 1e-10
    assert np.max(np.abs(field.values)) == 0.0


def test_solve_affine_case(iso1):
    fam = KernelFamily.singleton(PowerLawKernel(iso1, 1.0))
    prob = DiscreteProblem(iso1, (-2.0,), (2.0,), (65,), fam,
                           AffineExterior(1.0, (2.0,)), tolerance=1e-10,
                           window=64)
    field, rep = solve_dirichlet(prob)
    pts = field.grid_points()
    assert rep.converged
    assert np.max(np.abs(field.values.ravel() - (1.0 + 2.0 * pts[:, 0]))) \
        <= 1e-10


def test_dense_direct_solve_oracle(iso1):
    # 1-D isotropic single kernel, indicator exterior data on [1, 2]
    def ind(pts):
        x = pts[:, 0]
        return ((x >= 1.0) & (x <= 2.0)).astype(float)

    fam = KernelFamily.singleton(PowerLawKernel(iso1, 1.0))
    prob = DiscreteProblem(iso1, (-0.9,), (0.9,), (49,), fam,
                           CallableExterior(ind, 1.0), tolerance=1e-10,
                           window=96)
    field, rep = solve_dirichlet(prob)
    assert rep.converged
    a, b = dense_matrix(prob)
    direct = np.linalg.solve(a, b)
    assert np.max(np.abs(direct - field.values.ravel())) <= 10.0 * 1e-10
    assert np.all(field.values >= 0.0)        # comparison with zero data


def test_discrete_comparison_principle(iso1_ell, rng):
    fam = KernelFamily.extremal_pair(iso1_ell)
    for _ in range(3):
        lo_val = float(rng.uniform(0.0, 0.5))
        hi_val = lo_val + float(rng.uniform(0.0, 0.5))
        pa = DiscreteProblem(iso1_ell, (-1.0,), (1.0,), (33,), fam,
                             ConstantExterior(lo_val), tolerance=1e-10,
                             window=48)
        pb = DiscreteProblem(iso1_ell, (-1.0,), (1.0,), (33,), fam,
                             ConstantExterior(hi_val), tolerance=1e-10,
                             window=48)
        ua, _ = solve_dirichlet(pa)
        ub, _ = solve_dirichlet(pb)
        assert np.all(ua.values <= ub.values + 1e-12)


def test_residual_at_convergence(iso1_ell):
    def ind(pts):
        x = pts[:, 0]
        return ((x >= 1.0) & (x <= 2.0)).astype(float)

    fam = KernelFamily.extremal_pair(iso1_ell)
    prob = DiscreteProblem(iso1_ell, (-1.0,), (1.0,), (33,), fam,
                           CallableExterior(ind, 1.0), tolerance=1e-9,
                           window=48)
    field, rep = solve_dirichlet(prob)
    assert rep.converged
    op = AssembledOperator(prob)
    res = op.apply(field.values.ravel())
    assert np.max(np.abs(res)) <= 1e-9


def test_solution_bracketed_by_extremal_operators(iso1_ell):
    def ind(pts):
        x = pts[:, 0]
        return ((x >= 1.0) & (x <= 2.0)).astype(float)

    fam = KernelFamily.extremal_pair(iso1_ell)
    prob = DiscreteProblem(iso1_ell, (-1.0,), (1.0,), (33,), fam,
                           CallableExterior(ind, 1.0), tolerance=1e-9,
                           window=48)
    field, _ = solve_dirichlet(prob)
    mm = discrete_extremal(prob, field.values, "minus")
    mp = discrete_extremal(prob, field.values, "plus")
    assert np.max(mm) <= 1e-8       # M^- u <= I u = 0
    assert np.min(mp) >= -1e-8      # M^+ u >= I u = 0


def test_max_iters_reports_partial(iso1):
    def ind(pts):
        x = pts[:, 0]
        return ((x >= 1.0) & (x <= 2.0)).astype(float)

    fam = KernelFamily.singleton(PowerLawKernel(iso1, 1.0))
    prob = DiscreteProblem(iso1, (-0.9,), (0.9,), (33,), fam,
                           CallableExterior(ind, 1.0), tolerance=1e-14,
                           max_iters=5, window=48)
    _, rep = solve_dirichlet(prob)
    assert not rep.converged and rep.iterations == 5
    assert rep.residual > 0.0


def test_truncated_kernel_control(iso1, rng):
    # |I_K u - I_K1 u| <= 4 c0 sup|u| at every grid point
    from anisonl.experiments import truncated_control_check
    base = PowerLawKernel(iso1, 1.0)
    c0 = 0.8

    def k2(y):
        r = np.abs(y[:, 0])
        return np.where((r > 0.5) & (r < 1.5), c0, 0.0)

    trunc = TruncatedKernel(base, k2, l1_budget=2.0 * c0)
    for trial in range(2):
        vals = rng.normal(size=33)
        prob_full = DiscreteProblem(
            iso1, (-1.0,), (1.0,), (33,),
            KernelFamily.singleton(trunc), ConstantExterior(0.0), window=48)
        prob_base = DiscreteProblem(
            iso1, (-1.0,), (1.0,), (33,),
            KernelFamily.singleton(base), ConstantExterior(0.0), window=48)
        out = truncated_control_check(prob_full, prob_base, vals,
                                      c0=2.0 * c0)
        assert out["ok"]
        assert out["max_gap"] <= out["budget"]


def test_lattice_offsets_involution():
    off = lattice_offsets(2, 3)
    assert off.shape == ((7 * 7 - 1), 2)
    as_set = {tuple(o) for o in off}
    assert all(tuple(-np.array(o)) in as_set for o in as_set)


def test_bad_spacing_rejected(iso1):
    fam = KernelFamily.singleton(PowerLawKernel(iso1, 1.0))
    with pytest.raises(ValueError):
        DiscreteProblem(iso1, (0.0,), (0.0,), (5,), fam, 0.0)
