"""Fields on R^n: grid values on a box plus an explicit exterior rule.

All operators evaluate these objects anywhere in R^n.  Inside the box the
value is multilinear interpolation of the lattice values (the sole
smoothing assumption of the toolkit); outside, the exterior rule applies.
Exterior data is first-class: it may be a constant, an affine function or
an arbitrary bounded callable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import interp_many


@dataclass(frozen=True)
class ConstantExterior:
    value: float

    def __call__(self, pts):
        return np.full(pts.shape[0], float(self.value))

    def bounds(self):
        return float(self.value), float(self.value)


@dataclass(frozen=True)
class AffineExterior:
    """u(y) = offset + slope . y outside the box."""
    offset: float
    slope: tuple

    def __call__(self, pts):
        return self.offset + pts @ np.asarray(self.slope, dtype=float)

    def bounds(self):
        return -math.inf, math.inf

    def at(self, x):
        return self.offset + float(np.dot(self.slope, x))


class CallableExterior:
    def __init__(self, fn, sup_bound):
        self.fn = fn
        self.sup_bound = float(sup_bound)

    def __call__(self, pts):
        return np.asarray(self.fn(pts), dtype=float)

    def bounds(self):
        return -self.sup_bound, self.sup_bound


class GridField:
    """Lattice values on an axis-aligned box, evaluable on all of R^n."""

    def __init__(self, lo, hi, values, exterior, sup_bound=None):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        self.values = np.asarray(values, dtype=float)
        self.n = self.lo.size
        if self.values.ndim != self.n:
            raise ValueError("grid values rank must equal the dimension")
        if any(s < 2 for s in self.values.shape):
            raise ValueError("need at least two lattice points per axis")
        self.shape = np.array(self.values.shape, dtype=np.int64)
        self.h = (self.hi - self.lo) / (self.shape - 1)
        self._inv_h = 1.0 / self.h
        self._flat = np.ascontiguousarray(self.values.ravel())
        if isinstance(exterior, (int, float)):
            exterior = ConstantExterior(float(exterior))
        self.exterior = exterior
        self._declared_sup = sup_bound

    @classmethod
    def from_function(cls, fn, lo, hi, shape, exterior, sup_bound=None):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        axes = [np.linspace(lo[i], hi[i], shape[i]) for i in range(lo.size)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.asarray(fn(pts), dtype=float).reshape(shape)
        return cls(lo, hi, vals, exterior, sup_bound=sup_bound)

    def axes(self):
        return [np.linspace(self.lo[i], self.hi[i], self.values.shape[i])
                for i in range(self.n)]

    def grid_points(self):
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def sup_bound(self):
        if self._declared_sup is not None:
            return self._declared_sup
        lo, hi = self.exterior.bounds()
        grid = float(np.max(np.abs(self.values)))
        return max(grid, abs(lo), abs(hi))

    def eval(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        inside = np.all((pts >= self.lo[None, :]) & (pts <= self.hi[None, :]),
                        axis=1)
        out = np.empty(pts.shape[0])
        if inside.any():
            out[inside] = interp_many(
                np.ascontiguousarray(pts[inside]), self.lo, self._inv_h,
                self.shape, self._flat)
        if not inside.all():
            out[~inside] = self.exterior(pts[~inside])
        return out

    def __call__(self, pts):
        return self.eval(pts)

    def clearance(self, x):
        """Radius beyond which x +- y is guaranteed outside the box."""
        x = np.asarray(x, dtype=float)
        corners = np.maximum(np.abs(self.lo - x), np.abs(self.hi - x))
        return float(np.linalg.norm(corners))

    def to_csv(self, path):
        """Dump the lattice as CSV rows: point coordinates, then the value."""
        import csv
        pts = self.grid_points()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i}" for i in range(self.n)] + ["value"])
            for p, v in zip(pts, self.values.ravel()):
                writer.writerow([repr(float(c)) for c in p] + [repr(float(v))])

    @classmethod
    def from_csv(cls, path, lo, hi, shape, exterior, sup_bound=None):
        import csv
        with open(path) as fh:
            rows = list(csv.reader(fh))
        vals = np.array([float(r[-1]) for r in rows[1:]]).reshape(shape)
        return cls(lo, hi, vals, exterior, sup_bound=sup_bound)

    def tail_delta_range(self, x, far):
        """Bracket of delta(u, x, y) over |y| >= far.

        Exact (a point) when the exterior rule is constant or affine and
        the far radius clears the box; otherwise derived from the field's
        sup bound.
        """
        x = np.asarray(x, dtype=float)
        ux = float(self.eval(x[None, :])[0])
        if far > self.clearance(x):
            if isinstance(self.exterior, ConstantExterior):
                d = 2.0 * self.exterior.value - 2.0 * ux
                return d, d
            if isinstance(self.exterior, AffineExterior):
                d = 2.0 * self.exterior.at(x) - 2.0 * ux
                return d, d
            lo, hi = self.exterior.bounds()
            return 2.0 * lo - 2.0 * ux, 2.0 * hi - 2.0 * ux
        s = self.sup_bound
        return -2.0 * s - 2.0 * ux, 2.0 * s - 2.0 * ux


class AnalyticField:
    """Field given by a closed-form rule; no grid, no interpolation error."""

    def __init__(self, fn, sup_bound, range_outside=None, c11_bound=None):
        self.fn = fn
        self._sup = float(sup_bound)
        self._range_outside = range_outside
        self.c11_bound = c11_bound
        self.n = None   # dimension-agnostic

    def eval(self, pts):
        return np.asarray(self.fn(np.atleast_2d(np.asarray(pts, dtype=float))),
                          dtype=float)

    def __call__(self, pts):
        return self.eval(pts)

    @property
    def sup_bound(self):
        return self._sup

    def tail_delta_range(self, x, far):
        x = np.asarray(x, dtype=float)
        ux = float(self.eval(x[None, :])[0])
        if self._range_outside is not None:
            r = far - float(np.linalg.norm(x))
            if r > 0:
                lo, hi = self._range_outside(r)
                return 2.0 * lo - 2.0 * ux, 2.0 * hi - 2.0 * ux
        return -2.0 * self._sup - 2.0 * ux, 2.0 * self._sup - 2.0 * ux


def second_difference(u, x, y):
    """delta(u, x, y) = u(x+y) + u(x-y) - 2 u(x), vectorized over y rows."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    ux = float(u.eval(x[None, :])[0])
    return u.eval(x[None, :] + y) + u.eval(x[None, :] - y) - 2.0 * ux


def estimate_c11(u, x, scale, directions=16, seed=7, safety=2.0):
    """Probe-based bound M with |delta(u,x,y)| <= 2 M |y|^2 near x.

    Samples second differences along coordinate axes plus random
    directions at a few radii around ``scale``.  A measurement, not a
    certificate; the safety factor covers curvature between probes.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    if getattr(u, "c11_bound", None) is not None:
        return float(u.c11_bound)
    rng = np.random.default_rng(seed)
    dirs = [np.eye(n)[i] for i in range(n)]
    extra = rng.normal(size=(max(directions - n, 0), n))
    for v in extra:
        nv = np.linalg.norm(v)
        if nv > 0:
            dirs.append(v / nv)
    dirs = np.array(dirs)
    worst = 0.0
    for fac in (0.5, 1.0, 2.0):
        y = dirs * (fac * scale)
        d = np.abs(second_difference(u, x, y))
        r2 = np.sum(y ** 2, axis=1)
        worst = max(worst, float(np.max(d / (2.0 * r2))))
    return safety * worst
