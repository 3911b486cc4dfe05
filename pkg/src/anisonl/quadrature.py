"""Singular-integral quadrature on dyadic Theta-annuli.

The plane splits into four zones around the singularity:

    Theta_{r_inner}                  -> analytic C^{1,1} remainder bound
    Theta_{r_outer} \\ Theta_{r_inner} -> geometric Theta-shells, stratified
                                        Monte Carlo nodes per shell
    B_far \\ Theta_{r_outer}          -> one bounded stratum
    R^n \\ B_far                      -> bracketed tail (exterior-rule aware)

r_outer is the largest level with Theta_{r_outer} inside the Euclidean
ball B_far, so the strata partition B_far \\ Theta_{r_inner} exactly.
Node positions are reproducible: shell m draws from a child stream of the
scheme seed.  Symmetric integrands make sign-flips of the nodes a no-op.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import gauge


@dataclass(frozen=True)
class QuadratureScheme:
    shells: int = 24
    nodes_per_shell: int = 2048
    far_radius: float = 16.0
    r_inner: float = 1e-6
    seed: int = 2024
    c11_bound: float = None    # near-field M; probed per field when None
    outer_factor: int = 4      # node multiplier for the B_far stratum
    z_score: float = 3.0       # Monte Carlo confidence multiplier

    def __post_init__(self):
        if self.shells < 1 or self.nodes_per_shell < 2:
            raise ValueError("need at least one shell and two nodes per shell")
        if self.far_radius <= 0 or self.r_inner <= 0:
            raise ValueError("far_radius and r_inner must be positive")

    def refined(self, shell_factor=2, node_factor=2):
        """Finer scheme: more shells, deeper inner cut, more nodes."""
        return replace(self,
                       shells=self.shells * shell_factor,
                       r_inner=self.r_inner ** shell_factor
                       if self.r_inner < 1 else self.r_inner,
                       nodes_per_shell=self.nodes_per_shell * node_factor)

    def to_json(self):
        return json.dumps({"shells": self.shells,
                           "nodes_per_shell": self.nodes_per_shell,
                           "far_radius": self.far_radius,
                           "r_inner": self.r_inner,
                           "seed": self.seed})

    @staticmethod
    def from_dict(obj):
        return QuadratureScheme(
            shells=int(obj.get("shells", 24)),
            nodes_per_shell=int(obj.get("nodes_per_shell", 2048)),
            far_radius=float(obj.get("far_radius", 16.0)),
            r_inner=float(obj.get("r_inner", 1e-6)),
            seed=int(obj.get("seed", 2024)),
        )

    @staticmethod
    def from_json(text):
        return QuadratureScheme.from_dict(json.loads(text))


def outer_theta_radius(profile, far_radius):
    """Largest r with Theta_r inside the Euclidean ball B_far."""
    rn = math.sqrt(profile.n)
    ratio = far_radius / rn
    expo = profile.n + (profile.sigma_min if ratio >= 1.0 else profile.sigma_max)
    return ratio ** expo


def shell_radii(profile, quad):
    """Geometric gauge radii r_outer = rho_0 > rho_1 > ... > rho_S = r_inner."""
    r_outer = outer_theta_radius(profile, quad.far_radius)
    if quad.r_inner >= r_outer:
        raise ValueError("r_inner must be below the outer Theta radius "
                         f"({quad.r_inner} >= {r_outer})")
    t = np.linspace(0.0, 1.0, quad.shells + 1)
    return r_outer * (quad.r_inner / r_outer) ** t


def _shell_rng(quad, index):
    return np.random.default_rng(
        np.random.SeedSequence(entropy=quad.seed, spawn_key=(index,)))


def integrate(profile, quad, integrand):
    """Monte Carlo of ``integrand`` over B_far \\ Theta_{r_inner}.

    ``integrand(pts)`` maps (m, n) points to values; it must already
    include the kernel.  Returns (value, standard_error).
    """
    n = profile.n
    radii = shell_radii(profile, quad)
    total = 0.0
    var = 0.0
    for m in range(quad.shells):
        r_hi, r_lo = radii[m], radii[m + 1]
        rng = _shell_rng(quad, m)
        hw = r_hi ** (1.0 / profile.exponents)
        pts = rng.uniform(-hw, hw, size=(quad.nodes_per_shell, n))
        box = float(np.prod(2.0 * hw))
        g = gauge(profile, pts)
        mask = (g < r_hi) & (g >= r_lo)
        vals = np.zeros(quad.nodes_per_shell)
        if mask.any():
            vals[mask] = integrand(pts[mask])
        total += box * float(np.mean(vals))
        var += (box ** 2) * float(np.var(vals)) / quad.nodes_per_shell

    # stratum between the largest Theta shell and the Euclidean far ball
    rng = _shell_rng(quad, quad.shells)
    count = quad.nodes_per_shell * quad.outer_factor
    pts = rng.uniform(-quad.far_radius, quad.far_radius, size=(count, n))
    box = (2.0 * quad.far_radius) ** n
    g = gauge(profile, pts)
    mask = (g >= radii[0]) & (np.linalg.norm(pts, axis=1) < quad.far_radius)
    vals = np.zeros(count)
    if mask.any():
        vals[mask] = integrand(pts[mask])
    total += box * float(np.mean(vals))
    var += (box ** 2) * float(np.var(vals)) / count
    return total, math.sqrt(var)
