"""Monotone discrete Dirichlet solver for the inf-sup operator.

The lattice operator replaces each kernel by per-offset cell integrals
(symmetric, nonnegative: a monotone scheme) inside a finite window, plus
a scalar reaction term for the mass beyond the window that couples the
point to its far exterior value.  The solve is a damped Jacobi fixed
point u <- u + tau (I_h u - f) with tau = 1 / max_member(total weight),
which keeps every update monotone in the data: raising exterior values
can only raise the solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from ._accel import solver_sweep
from .fields import AffineExterior, ConstantExterior, GridField
from .kernels import tail_gauge_bounds
from .profile import AnisotropyProfile


@dataclass
class DiscreteProblem:
    profile: AnisotropyProfile
    lo: tuple
    hi: tuple
    shape: tuple
    family: KernelFamily
    exterior: object
    rhs: object = None             # callable or None (zero)
    tolerance: float = 1e-8
    max_iters: int = 20000
    window: int = None             # offset extent in cells per axis

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        self.shape = tuple(int(s) for s in np.atleast_1d(self.shape))
        if isinstance(self.exterior, (int, float)):
            self.exterior = ConstantExterior(float(self.exterior))
        if self.window is None:
            self.window = 2 * (max(self.shape) - 1)
        h = (self.hi - self.lo) / (np.array(self.shape) - 1)
        if np.any(h <= 0):
            raise ValueError("grid spacing must be positive")
        self.h = h


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual: float
    tau: float


def lattice_offsets(n, window):
    """All integer offsets in [-window, window]^n except the origin,
    ordered so that offset negation is an index involution."""
    rng = np.arange(-window, window + 1)
    mesh = np.meshgrid(*[rng] * n, indexing="ij")
    off = np.stack([m.ravel() for m in mesh], axis=1)
    off = off[np.any(off != 0, axis=1)]
    order = np.lexsort(off.T[::-1])
    return off[order]


def _refinement_level(j_inf):
    if j_inf <= 1:
        return 16
    if j_inf <= 3:
        return 4
    return 1


def cell_weight(kernel, center, h, level):
    """Cell integral of the kernel by tensor-midpoint refinement."""
    n = center.size
    if level == 1:
        pts = center[None, :]
    else:
        axes = [center[d] - h[d] / 2 + (np.arange(level) + 0.5) * h[d] / level
                for d in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    vol = float(np.prod(h))
    return float(np.mean(kernel.eval(pts))) * vol


def assemble_weights(kernel, h, profile, window):
    """Per-offset operator weights (2x cell integrals) and the tail mass.

    Weights are computed on a canonical half set and mirrored, so
    w(-y) = w(y) holds exactly.  The tail reaction weight models the
    kernel mass beyond the window via the closed-form gauge-tail bracket.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    n = h.size
    if np.any(h <= 0):
        raise ValueError("grid spacing must be positive")
    off = lattice_offsets(n, window)
    key = {tuple(o): i for i, o in enumerate(off)}
    w = np.zeros(off.shape[0])
    done = np.zeros(off.shape[0], dtype=bool)
    for i, o in enumerate(off):
        if done[i]:
            continue
        j = key[tuple(-o)]
        level = _refinement_level(int(np.max(np.abs(o))))
        val = cell_weight(kernel, o * h, h, level)
        w[i] = w[j] = val
        done[i] = done[j] = True
    r_ins = (window + 0.5) * float(np.min(h))
    tg_lo, tg_hi = tail_gauge_bounds(profile, r_ins)
    mult_mid = 0.5 * (kernel.mult_lo + kernel.mult_hi)
    tail_mass = mult_mid * profile.c_sigma * 0.5 * (tg_lo + tg_hi)
    return off, 2.0 * w, 2.0 * tail_mass


def _pad_exterior(problem, pad):
    """Padded value array holding exterior data around the box."""
    axes = [np.concatenate([
        problem.lo[d] + problem.h[d] * np.arange(-pad, 0),
        np.linspace(problem.lo[d], problem.hi[d], problem.shape[d]),
        problem.hi[d] + problem.h[d] * np.arange(1, pad + 1)])
        for d in range(problem.lo.size)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return problem.exterior(pts).reshape([a.size for a in axes])


def _far_values(problem):
    pts = GridField(problem.lo, problem.hi,
                    np.zeros(problem.shape), problem.exterior).grid_points()
    ext = problem.exterior
    if isinstance(ext, ConstantExterior):
        return np.full(pts.shape[0], ext.value)
    if isinstance(ext, AffineExterior):
        return ext(pts)
    return np.zeros(pts.shape[0])


class AssembledOperator:
    """Weight tables of a problem: offsets, per-member weights, tail."""

    def __init__(self, problem):
        self.problem = problem
        fam = problem.family
        self.offsets, w0, t0 = assemble_weights(
            fam.members[0][0], problem.h, problem.profile, problem.window)
        n_inf, n_sup = fam.n_inf, fam.n_sup
        self.weights = np.zeros((n_inf, n_sup, self.offsets.shape[0]))
        self.tail = np.zeros((n_inf, n_sup))
        self.weights[0, 0] = w0
        self.tail[0, 0] = t0
        for a in range(n_inf):
            for b in range(n_sup):
                if a == 0 and b == 0:
                    continue
                _, w, t = assemble_weights(fam.members[a][b], problem.h,
                                           problem.profile, problem.window)
                self.weights[a, b] = w
                self.tail[a, b] = t
        self.tau = 1.0 / float(
            np.max(self.weights.sum(axis=2) + self.tail))

    def apply(self, values):
        """I_h applied to interior values (exterior from the problem)."""
        _, res = self._sweep(values)
        return res

    def _sweep(self, values):
        p = self.problem
        pad = p.window
        u_pad = _pad_exterior(p, pad)
        core = tuple(slice(pad, pad + s) for s in p.shape)
        u_pad[core] = values.reshape(p.shape)
        f = self._rhs_values()
        tail_val = _far_values(p)
        new, res = solver_sweep(u_pad, pad, self.offsets, self.weights,
                                f, self.tau, self.tail, tail_val)
        return new, res

    def _rhs_values(self):
        p = self.problem
        if p.rhs is None:
            return np.zeros(int(np.prod(p.shape)))
        pts = GridField(p.lo, p.hi, np.zeros(p.shape), p.exterior).grid_points()
        return np.asarray(p.rhs(pts), dtype=float)


def solve_dirichlet(problem, u0=None, operator=None):
    """Damped Jacobi iteration to residual sup-norm <= tolerance.

    Starts from the exterior rule sampled on the grid, which makes
    globally harmonic data (constants, affine functions) exact at the
    first sweep.
    """
    op = operator or AssembledOperator(problem)
    if u0 is None:
        pts = GridField(problem.lo, problem.hi, np.zeros(problem.shape),
                        problem.exterior).grid_points()
        u = np.asarray(problem.exterior(pts), dtype=float).ravel()
    else:
        u = np.asarray(u0, dtype=float).ravel()
    it = 0
    res_sup = math.inf
    while it < problem.max_iters:
        u_new, res = op._sweep(u)
        res_sup = float(np.max(np.abs(res)))
        u = u_new
        it += 1
        if res_sup <= problem.tolerance:
            break
    field = GridField(problem.lo, problem.hi, u.reshape(problem.shape),
                      problem.exterior)
    return field, SolveReport(res_sup <= problem.tolerance, it, res_sup,
                              op.tau)


def dense_matrix(problem, member=(0, 0)):
    """Dense matrix and right-hand side of one linear member.

    For the oracle comparison: solve A u = b directly and match the
    fixed-point solution.  Exterior data and the tail term land in b.
    """
    p = problem
    kernel = p.family.members[member[0]][member[1]]
    off, w, tail = assemble_weights(kernel, p.h, p.profile, p.window)
    n = p.lo.size
    shape = p.shape
    size = int(np.prod(shape))
    idx = np.arange(size).reshape(shape)
    field = GridField(p.lo, p.hi, np.zeros(shape), p.exterior)
    pts = field.grid_points()
    A = np.zeros((size, size))
    b = np.zeros(size)
    far = _far_values(p)
    rhs = np.zeros(size) if p.rhs is None else np.asarray(p.rhs(pts))
    total = float(np.sum(w)) + tail
    for flat, x in enumerate(pts):
        A[flat, flat] = -total
        multi = np.unravel_index(flat, shape)
        for k, o in enumerate(off):
            nb = tuple(multi[d] + o[d] for d in range(n))
            if all(0 <= nb[d] < shape[d] for d in range(n)):
                A[flat, idx[nb]] += w[k]
            else:
                y = x + o * p.h
                b[flat] -= w[k] * float(p.exterior(y[None, :])[0])
        b[flat] -= tail * far[flat]
    b += rhs
    return A, b


def discrete_extremal(problem, values, which="minus"):
    """Cellwise extremal operator M^{+/-}_h on the problem lattice.

    Uses multiplier-one base weights; the closed form splits the full
    second difference by sign per offset pair, so the sum runs over a
    canonical half of the offsets with doubled cell weights.
    """
    from .kernels import PowerLawKernel
    p = problem
    base = PowerLawKernel(p.profile, 1.0)
    off, w, tail = assemble_weights(base, p.h, p.profile, p.window)
    pad = p.window
    u_pad = _pad_exterior(p, pad)
    core = tuple(slice(pad, pad + s) for s in p.shape)
    u_pad[core] = np.asarray(values, dtype=float).reshape(p.shape)
    lam, Lam = p.profile.lambda_lo, p.profile.lambda_hi
    u0 = u_pad[core]
    out = np.zeros(p.shape)
    first_pos = np.argmax(off != 0, axis=1)
    canonical = off[np.arange(off.shape[0]), first_pos] > 0
    for k in np.nonzero(canonical)[0]:
        o = off[k]
        sl_p = tuple(slice(pad + o[d], pad + o[d] + p.shape[d])
                     for d in range(p.lo.size))
        sl_m = tuple(slice(pad - o[d], pad - o[d] + p.shape[d])
                     for d in range(p.lo.size))
        delta = u_pad[sl_p] + u_pad[sl_m] - 2.0 * u0
        pos = np.maximum(delta, 0.0)
        neg = np.maximum(-delta, 0.0)
        # w[k] holds twice the cell integral: exactly the +-pair's mass
        if which == "minus":
            out += w[k] * (lam * pos - Lam * neg)
        else:
            out += w[k] * (Lam * pos - lam * neg)
    far = _far_values(p).reshape(p.shape)
    d = far - u0
    pos, neg = np.maximum(d, 0.0), np.maximum(-d, 0.0)
    if which == "minus":
        out += tail * (lam * pos - Lam * neg)
    else:
        out += tail * (Lam * pos - lam * neg)
    return out
