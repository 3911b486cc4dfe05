"""Barrier functions and their sampled supersolution certificates.

The radial barrier min(cap, |x|^-p) is a supersolution of the minimal
operator on an annulus once p is large enough; ``find_p`` searches the
smallest integer exponent whose sampled margins certify it.  The scaled
variant g(x) = min(cap, |T_r^-1 x|^-p) inherits the property through the
identity M^- g(x) = r^-1 |det T_r| M^- f(T_r^-1 x).  The bump barrier
(power annulus glued to an axis-separable quadratic cap, capped at zero
outside a large ellipse) is positive on a fixed rectangle and has
nonnegative minimal operator outside the small ellipse, up to a
compactly supported continuous defect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import AnalyticField
from .geometry import ScalingMap, ellipse, rect
from .operators import eval_extremal
from .quadrature import QuadratureScheme


# ---------------------------------------------------------------------------
# the two elementary inequalities behind every barrier estimate
# ---------------------------------------------------------------------------

def elementary_inequality_convexity(a1, a2, s):
    """(a2+a1)^-s + (a2-a1)^-s - [2 a2^-s + s(s+1) a1^2 a2^(-s-2)] >= 0."""
    a1, a2, s = (np.asarray(v, dtype=float) for v in (a1, a2, s))
    lhs = (a2 + a1) ** -s + (a2 - a1) ** -s
    rhs = 2.0 * a2 ** -s + s * (s + 1.0) * a1 ** 2 * a2 ** (-s - 2.0)
    return lhs - rhs


def elementary_inequality_bernoulli(a1, a2, s):
    """(a2+a1)^-s - a2^-s (1 - s a1/a2) >= 0."""
    a1, a2, s = (np.asarray(v, dtype=float) for v in (a1, a2, s))
    return (a2 + a1) ** -s - a2 ** -s * (1.0 - s * a1 / a2)


def delta_lower_bound(p, y):
    """Proof-side lower bound for delta(f, e1, y), |y| < 1/2, f = |x|^-p:
    p [ -|y|^2 + (p+2) y1^2 - (p+2)(p+4) y1^2 |y|^2 / 2 ]."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    r2 = np.sum(y ** 2, axis=1)
    y1sq = y[:, 0] ** 2
    return p * (-r2 + (p + 2.0) * y1sq
                - (p + 2.0) * (p + 4.0) * y1sq * r2 / 2.0)


# ---------------------------------------------------------------------------
# barrier fields
# ---------------------------------------------------------------------------

class RadialBarrier(AnalyticField):
    """f(x) = min(cap, |x|^-p), radially non-increasing, bounded by cap."""

    def __init__(self, p, cap):
        if p <= 0 or cap <= 0:
            raise ValueError("barrier needs positive exponent and cap")
        self.p = float(p)
        self.cap = float(cap)

        def fn(pts):
            r = np.linalg.norm(pts, axis=1)
            with np.errstate(divide="ignore"):
                return np.minimum(self.cap, r ** -self.p)

        super().__init__(fn, sup_bound=cap,
                         range_outside=self._range_outside)

    def _range_outside(self, R):
        if R <= 0:
            return 0.0, self.cap
        return 0.0, min(self.cap, R ** -self.p)

    @property
    def kink_radius(self):
        return self.cap ** (-1.0 / self.p)


class ScaledBarrier(AnalyticField):
    """g(x) = min(cap, |T_r^-1 x|^-p) = f(T_r^-1 x) with f = RadialBarrier."""

    def __init__(self, profile, r, p, cap):
        self.base = RadialBarrier(p, cap)
        self.map = ScalingMap(profile, r)
        self.p = float(p)
        self.cap = float(cap)
        d = self.map.diagonal()
        self._max_diag = float(np.max(d))

        def fn(pts):
            return self.base.eval(self.map.apply(pts, inverse=True))

        super().__init__(fn, sup_bound=cap, range_outside=self._range_outside)

    def _range_outside(self, R):
        if R <= 0:
            return 0.0, self.cap
        return 0.0, min(self.cap, (R / self._max_diag) ** -self.p)


def build_barrier(profile, variant, p, r=None, s=None):
    """Barrier constructors: 'f_cap2p', 'f_caps' (needs s), 'g_scaled'
    (needs r and s)."""
    if variant == "f_cap2p":
        return RadialBarrier(p, 2.0 ** p)
    if variant == "f_caps":
        if s is None or not 0 < s < 1:
            raise ValueError("variant f_caps needs a cap scale s in (0,1)")
        return RadialBarrier(p, s ** -p)
    if variant == "g_scaled":
        if r is None or s is None:
            raise ValueError("variant g_scaled needs r and s")
        return ScaledBarrier(profile, r, p, s ** -p)
    raise ValueError(f"unknown barrier variant {variant!r}")


# ---------------------------------------------------------------------------
# exponent search
# ---------------------------------------------------------------------------

class BarrierSearchError(RuntimeError):
    def __init__(self, worst_margin, worst_point, p_max):
        self.worst_margin = worst_margin
        self.worst_point = worst_point
        super().__init__(
            f"no admissible exponent up to p = {p_max}; worst margin "
            f"{worst_margin:.3e} at {worst_point}")


def annulus_points(n, r_lo, r_hi, count, seed, avoid=None, avoid_dist=0.05):
    """Deterministic sample of the Euclidean annulus r_lo <= |x| <= r_hi."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < count:
        d = rng.normal(size=n)
        nd = np.linalg.norm(d)
        if nd == 0:
            continue
        radius = r_lo + (r_hi - r_lo) * rng.random()
        if avoid is not None and abs(radius - avoid) < avoid_dist:
            continue
        pts.append(d / nd * radius)
    return np.array(pts)


def _margins(barrier, pts, profile, quad):
    out = []
    for x in pts:
        ov = eval_extremal(barrier, x, profile, quad, which="minus")
        out.append((ov.value, ov.error))
    return out


def find_p(profile, R, quad=None, n_points=200, p_max=64, seed=11,
           sigma_floor=0.5, screen_points=24):
    """Smallest integer p in [1, p_max] with M^- min(2^p, |x|^-p) >= 0
    (within quadrature error) on a sample of {1 <= |x| <= R}.

    Strategy: binary search on a screening subset (margins are monotone
    in p), then full certification at the candidate, advancing p if the
    full sample disagrees with the screen.
    """
    if R <= 1:
        raise ValueError("the annulus needs R > 1")
    if profile.sigma_min <= sigma_floor:
        raise ValueError(
            f"profile sigma_min {profile.sigma_min} at or below the "
            f"configured floor {sigma_floor}; barrier certification refused")
    if quad is None:
        quad = QuadratureScheme(shells=20, nodes_per_shell=1500,
                                far_radius=8.0 * R, r_inner=1e-8, seed=seed)
    pts = annulus_points(profile.n, 1.0, R, n_points, seed)
    screen = pts[:screen_points]

    def screen_ok(p):
        m = _margins(RadialBarrier(p, 2.0 ** p), screen, profile, quad)
        return all(v >= -e for v, e in m)

    lo, hi = 1, p_max
    if not screen_ok(hi):
        m = _margins(RadialBarrier(hi, 2.0 ** hi), pts, profile, quad)
        worst = min(range(len(m)), key=lambda i: m[i][0])
        raise BarrierSearchError(m[worst][0], pts[worst], p_max)
    while lo < hi:
        mid = (lo + hi) // 2
        if screen_ok(mid):
            hi = mid
        else:
            lo = mid + 1
    p = lo
    while p <= p_max:
        margins = _margins(RadialBarrier(p, 2.0 ** p), pts, profile, quad)
        if all(v >= -e for v, e in margins):
            worst = min(range(len(margins)), key=lambda i: margins[i][0])
            return {
                "p": p,
                "min_margin": margins[worst][0],
                "worst_point": pts[worst],
                "quadrature_error": margins[worst][1],
                "n_points": len(pts),
            }
        p += 1
    m = _margins(RadialBarrier(p_max, 2.0 ** p_max), pts, profile, quad)
    worst = min(range(len(m)), key=lambda i: m[i][0])
    raise BarrierSearchError(m[worst][0], pts[worst], p_max)


# ---------------------------------------------------------------------------
# the bump barrier
# ---------------------------------------------------------------------------

@dataclass
class PsiBarrier:
    """Power annulus glued C^{1,1} to a per-axis quadratic cap.

    In the straightened coordinates w = T_{1/4}^{-1} x the unscaled shape
    is |w|^-p - (3 sqrt n)^-p on 1 <= |w| <= 3 sqrt n, a quadratic
    c_q - (p/2)|w|^2 inside the unit ball, and 0 outside; value and
    gradient match on |w| = 1 by construction.  quad_coeffs are the
    x-coordinate coefficients (a_1..a_n, c) of the cap.
    """
    profile: object
    p: float
    tilde_c: float
    quad_coeffs: np.ndarray      # (n + 1,): a_i then the constant c

    def __post_init__(self):
        self.map = ScalingMap(self.profile, 0.25)
        self._t = self.map.diagonal()
        self._outer = 3.0 * math.sqrt(self.profile.n)
        self._c = float(self.quad_coeffs[-1])

    def eval(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        w = pts / self._t[None, :]
        r = np.linalg.norm(w, axis=1)
        out = np.zeros(pts.shape[0])
        outer_val = self._outer ** -self.p
        mid = (r >= 1.0) & (r < self._outer)
        out[mid] = r[mid] ** -self.p - outer_val
        core = r < 1.0
        # q(x) = sum a_i x_i^2 + c collapses to c - (p/2)|w|^2 in w-space
        out[core] = self._c - 0.5 * self.p * r[core] ** 2
        return self.tilde_c * out

    def __call__(self, pts):
        return self.eval(pts)

    @property
    def sup_bound(self):
        return self.tilde_c * self._c

    def tail_delta_range(self, x, far):
        x = np.asarray(x, dtype=float)
        ux = float(self.eval(x[None, :])[0])
        support_radius = self._outer * float(np.max(self._t))
        if far - float(np.linalg.norm(x)) >= support_radius:
            return -2.0 * ux, -2.0 * ux
        return -2.0 * ux, 2.0 * self.sup_bound - 2.0 * ux

    def support_set(self):
        return ellipse(self.profile, 0.25, self._outer)

    def floor_set(self):
        return rect(self.profile, 0.25, 3.0)


def build_psi(profile, p, floor=3.0, safety=1.05):
    """Solve the per-axis gluing systems and scale so the barrier clears
    ``floor`` on the rectangle R_{1/4,3}."""
    n = profile.n
    t = ScalingMap(profile, 0.25).diagonal()
    outer = 3.0 * math.sqrt(n)
    outer_val = outer ** -p

    # per-axis 2x2 system: value and gradient match at x = t_i e_i
    a = np.empty(n)
    cs = np.empty(n)
    for i in range(n):
        ti = t[i]
        sys = np.array([[ti ** 2, 1.0], [2.0 * ti, 0.0]])
        rhs = np.array([1.0 - outer_val, -p / ti])
        try:
            sol = np.linalg.solve(sys, rhs)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"gluing system singular on axis {i}") from exc
        a[i] = sol[0]
        cs[i] = sol[1]
    if not np.allclose(cs, cs[0], rtol=1e-10, atol=1e-12):
        raise RuntimeError(f"inconsistent gluing constants across axes: {cs}")
    c_x = cs[0]

    # the unscaled minimum over R_{1/4,3} sits at the box corner
    corner = 3.0 ** (1.0 / (n + profile.sigma_min)) * math.sqrt(n)
    min_val = corner ** -p - outer_val
    if min_val <= 0:
        raise RuntimeError("degenerate floor: the box corner reaches the "
                           "support boundary")
    tilde_c = safety * floor / min_val
    coeffs = np.concatenate([a, [c_x]])
    return PsiBarrier(profile, float(p), float(tilde_c), coeffs)


def make_phi(profile, deficit):
    """Continuous bump supported exactly on E_{1/4,1}, scaled by the
    measured margin deficit."""
    t = ScalingMap(profile, 0.25).diagonal()

    def phi(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        w = pts / t[None, :]
        r2 = np.sum(w ** 2, axis=1)
        return deficit * np.maximum(0.0, 1.0 - r2) ** 2

    return phi


def verify_supersolution(barrier, points, profile, quad, phi=None):
    """Minimum of M^- barrier + phi over the sample; PASS iff the minimum
    clears minus the local quadrature error."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    margins = []
    errors = []
    for x in points:
        ov = eval_extremal(barrier, x, profile, quad, which="minus")
        bump = float(phi(x[None, :])[0]) if phi is not None else 0.0
        margins.append(ov.value + bump)
        errors.append(ov.error)
    margins = np.array(margins)
    errors = np.array(errors)
    worst = int(np.argmin(margins))
    return {
        "min_margin": float(margins[worst]),
        "worst_point": points[worst],
        "quadrature_error": float(errors[worst]),
        "passed": bool(np.all(margins >= -errors)),
        "n_points": len(points),
    }
