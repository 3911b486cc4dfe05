"""Batch front-end: JSON config in, results.json + data.csv out.

One process runs one named command read from the config file.  Runs are
deterministic: the emitted files embed the config digest and seed, carry
no timestamps, and re-running an identical config reproduces identical
bytes.  Exit codes: 0 pass, 1 property failure, 2 config error, 3 invalid
experiment preconditions.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np
import jsonschema

from .profile import AnisotropyProfile
from .quadrature import QuadratureScheme

COMMANDS = ("constants", "barrier-verify", "envelope", "abp-cover", "cz",
            "solve", "harnack", "decay", "sweep", "kernel-check")

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["command", "profile"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "profile": {
            "type": "object",
            "required": ["n", "sigma"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "sigma": {"type": "array",
                          "items": {"type": "number",
                                    "exclusiveMinimum": 0,
                                    "exclusiveMaximum": 2}},
                "lambda_lo": {"type": "number", "exclusiveMinimum": 0},
                "lambda_hi": {"type": "number", "exclusiveMinimum": 0},
                "rho0": {"type": "number", "exclusiveMinimum": 0},
                "frak_c": {"type": "integer", "minimum": 1},
            },
        },
        "quadrature": {"type": "object"},
        "seed": {"type": "integer"},
        "out": {"type": "string"},
        "params": {"type": "object"},
    },
}


class ConfigError(Exception):
    pass


def load_config(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(json.dumps({"error": "unreadable config",
                                      "detail": str(exc)}))
    try:
        jsonschema.validate(obj, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(json.dumps({
            "error": "config schema violation",
            "path": list(exc.absolute_path),
            "detail": exc.message}))
    return obj


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and (math.isinf(o) or math.isnan(o)):
        return str(o)
    return str(o)


def emit_results(out_dir, summary, rows, columns):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "results.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True,
                  default=_json_default)
        fh.write("\n")
    emit_plotdata(os.path.join(out_dir, "data.csv"), rows, columns)


def emit_plotdata(path, rows, columns, sidecar=True):
    """Write one CSV series; header-only when the series is empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])
    if sidecar:
        with open(path + ".header.txt", "w") as fh:
            fh.write("columns: " + ", ".join(columns) + "\n")


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def _cmd_constants(profile, quad, params, seed):
    from .profile import radii_sequence
    rows = [(i, profile.sigma[i], profile.q[i]) for i in range(profile.n)]
    summary = {
        "c_sigma": profile.c_sigma,
        "q": list(profile.q),
        "q_max": profile.q_max,
        "i_min": profile.i_min,
        "frak_c": profile.frak_c,
        "rho0": profile.rho0,
        "matrix_a": profile.matrix_a().tolist(),
        "r0": radii_sequence(profile, 0),
    }
    return summary, rows, ("index", "sigma", "q"), all(q > 0 for q in profile.q)


def _cmd_barrier_verify(profile, quad, params, seed):
    from .barriers import (annulus_points, build_psi, find_p, make_phi,
                           verify_supersolution)
    R = params.get("R", 8.0 * math.sqrt(profile.n))
    found = find_p(profile, R, quad, n_points=params.get("n_points", 60),
                   seed=seed)
    psi = build_psi(profile, found["p"])
    pts = annulus_points(profile.n, 1.05 * float(np.max(psi._t)),
                         2.0 * float(np.max(psi._t)),
                         params.get("psi_points", 40), seed + 1)
    rep = verify_supersolution(psi, pts, profile, quad,
                               phi=make_phi(profile, 0.0))
    summary = {"p": found["p"], "min_margin_f": found["min_margin"],
               "tilde_c": psi.tilde_c,
               "quad_coeffs": psi.quad_coeffs.tolist(),
               "min_margin": rep["min_margin"],
               "worst_point": rep["worst_point"].tolist(),
               "quadrature_error": rep["quadrature_error"]}
    rows = [(found["p"], found["min_margin"], rep["min_margin"])]
    return summary, rows, ("p", "margin_f", "margin_psi"), rep["passed"]


def _make_cap_field(profile, shape):
    from .fields import GridField
    n = profile.n

    def cap(pts):
        r2 = np.sum(pts ** 2, axis=1)
        return np.maximum(0.0, 1.0 - 2.0 * r2)

    lo, hi = [-2.0] * n, [2.0] * n
    return GridField.from_function(cap, lo, hi, (shape,) * n, 0.0)


def _cmd_envelope(profile, quad, params, seed):
    from .envelope import concave_envelope, contact_set, default_contact_tol
    u = _make_cap_field(profile, params.get("grid", 129))
    env = concave_envelope(u)
    tol = default_contact_tol(u, env)
    pts, degenerate = contact_set(u, env, tol)
    planes = env.supporting_planes()
    summary = {"contact_points": len(pts), "degenerate": degenerate,
               "contact_tol": tol, "n_planes": int(planes.shape[0]),
               "lipschitz": env.lipschitz()}
    rows = [tuple(p) for p in planes]
    cols = tuple(f"plane_c{i}" for i in range(planes.shape[1] if planes.size
                                              else 2))
    return summary, rows, cols, True


def _cmd_abp_cover(profile, quad, params, seed):
    from .abp import abp_cover, verify_cover
    from .fields import GridField
    u = _make_cap_field(profile, params.get("grid", 65))
    fconst = params.get("f_const", 8.0)
    f = GridField.from_function(
        lambda pts: np.full(pts.shape[0], fconst),
        [-2.0] * profile.n, [2.0] * profile.n, (17,) * profile.n, fconst)
    cover = abp_cover(u, f, profile, seed=seed,
                      mc_samples=params.get("mc_samples", 1000))
    report = verify_cover(cover, u, cover.envelope, f, profile)
    report.pop("per_rectangle")
    from .abp import cover_dump
    report["rectangles"] = cover_dump(cover)
    rows = [(r.gen,) + tuple(r.center) + (r.record["varsigma_ratio"],)
            for r in cover.rectangles]
    cols = ("gen",) + tuple(f"c{i}" for i in range(profile.n)) + ("varsigma",)
    ok = report["disjoint"] and report["contact_covered"] \
        and report["diameter_ok"]
    return report, rows, cols, ok


def _cmd_cz(profile, quad, params, seed):
    from .coverings import CellSet, cz_decompose
    gen = params.get("generation", 5)
    delta = params.get("delta", 0.5)
    rng = np.random.default_rng(seed)
    n = profile.n
    m = 2 ** gen
    b = CellSet(n, gen, np.ones((m,) * n, dtype=bool))
    a_mask = rng.random((m,) * n) < delta / 2.0
    a = CellSet(n, gen, a_mask)
    res = cz_decompose(a, b, delta)
    summary = {"selected": len(res.selected), "covered": res.covered,
               "c_measured": res.c_measured, "certified": res.certified,
               "a_measure": a.measure, "b_measure": b.measure}
    rows = [(c.gen,) + c.index for c in res.selected]
    cols = ("gen",) + tuple(f"i{i}" for i in range(n))
    return summary, rows, cols, res.certified


def _solve_setup(profile, params, seed):
    from .kernels import KernelFamily
    from .solver import DiscreteProblem
    n = profile.n
    shape = params.get("grid", 129 if n == 1 else 33)
    box = params.get("box", 4.0)
    bump_center = params.get("bump_center", 2.5)
    bump_height = params.get("bump_height", 1.0)

    def exterior_fn(pts):
        r2 = np.sum((pts - bump_center) ** 2, axis=1)
        return bump_height * np.exp(-4.0 * r2)

    from .fields import CallableExterior
    family = KernelFamily.extremal_pair(profile)
    return DiscreteProblem(
        profile, (-box,) * n, (box,) * n, (shape,) * n, family,
        CallableExterior(exterior_fn, bump_height),
        tolerance=params.get("tolerance", 1e-8),
        max_iters=params.get("max_iters", 20000),
        window=params.get("window", None))


def _cmd_solve(profile, quad, params, seed):
    from .solver import solve_dirichlet
    problem = _solve_setup(profile, params, seed)
    field, report = solve_dirichlet(problem)
    summary = {"converged": report.converged, "iterations": report.iterations,
               "residual": report.residual, "tau": report.tau,
               "sup": float(np.max(field.values)),
               "origin": float(field.eval(np.zeros((1, profile.n)))[0])}
    rows = [(report.iterations, report.residual)]
    return summary, rows, ("iterations", "residual"), report.converged


def _normalized_solution(profile, params, seed):
    from .solver import solve_dirichlet
    problem = _solve_setup(profile, params, seed)
    field, report = solve_dirichlet(problem)
    origin = float(field.eval(np.zeros((1, profile.n)))[0])
    scale = 1.0 / max(origin, 1e-12)
    from .fields import GridField, CallableExterior
    ext = problem.exterior
    scaled = GridField(problem.lo, problem.hi, field.values * scale,
                       CallableExterior(lambda pts: ext(pts) * scale,
                                        ext.sup_bound * scale))
    return scaled, problem, report


def _cmd_harnack(profile, quad, params, seed):
    from .experiments import harnack_quotient
    u, problem, report = _normalized_solution(profile, params, seed)
    res = harnack_quotient(u, params.get("c0", 1.0), problem)
    if not res.valid:
        raise PreconditionError("; ".join(res.notes))
    summary = dict(res.scalars)
    summary["converged"] = report.converged
    return summary, res.rows, res.columns, res.valid


def _cmd_decay(profile, quad, params, seed):
    from .experiments import distribution_decay
    u, problem, report = _normalized_solution(profile, params, seed)
    res = distribution_decay(u, params.get("M", 2.0),
                             params.get("k_max", 6))
    summary = dict(res.scalars)
    return summary, res.rows, res.columns, True


def _cmd_sweep(profile, quad, params, seed):
    from .experiments import harnack_quotient, sigma_sweep
    sigmas = params.get("sigma_min_values", [1.0, 1.5, 1.9, 1.99])
    profiles = [AnisotropyProfile(profile.n, (s,) * profile.n,
                                  profile.lambda_lo, profile.lambda_hi)
                for s in sigmas]

    def runner(prof):
        u, problem, _ = _normalized_solution(prof, params, seed)
        res = harnack_quotient(u, params.get("c0", 1.0), problem)
        return res.scalars.get("quotient", math.nan), res.valid

    res = sigma_sweep(profiles, runner)
    ok = not res.scalars.get("diverging", False)
    rows = [(r[0], r[2]) for r in res.rows]
    return dict(res.scalars), rows, ("sigma_min", "quantity"), ok


def _cmd_kernel_check(profile, quad, params, seed):
    from .experiments import kernel_modulus_check
    from .kernels import PowerLawKernel
    kernel = PowerLawKernel(profile, profile.lambda_lo)
    tau0 = params.get("tau0", 0.5)
    scales = params.get("h_scales", [0.05, 0.1])
    h_samples = [np.concatenate([[s * tau0], np.zeros(profile.n - 1)])
                 for s in scales]
    res = kernel_modulus_check(kernel, profile, tau0, h_samples,
                               params.get("c0", 1e3), seed=seed)
    return dict(res.scalars, passed=res.passed), res.rows, res.columns, \
        res.passed


class PreconditionError(Exception):
    pass


_DISPATCH = {
    "constants": _cmd_constants,
    "barrier-verify": _cmd_barrier_verify,
    "envelope": _cmd_envelope,
    "abp-cover": _cmd_abp_cover,
    "cz": _cmd_cz,
    "solve": _cmd_solve,
    "harnack": _cmd_harnack,
    "decay": _cmd_decay,
    "sweep": _cmd_sweep,
    "kernel-check": _cmd_kernel_check,
}


def run(config, out_dir=None, seed=None, threads=None):
    """Execute one config; returns the process exit status."""
    from .experiments import config_digest
    if threads is not None:
        try:
            import numba
            numba.set_num_threads(max(1, int(threads)))
        except (ImportError, ValueError):
            pass
    command = config["command"]
    profile = AnisotropyProfile.from_dict(config["profile"])
    quad = QuadratureScheme.from_dict(config.get("quadrature", {}))
    params = config.get("params", {})
    if seed is None:
        seed = int(config.get("seed", 0))
    out_dir = out_dir or config.get("out", "anisonl-out")
    digest = config_digest({k: v for k, v in config.items() if k != "out"})

    try:
        summary, rows, columns, ok = _DISPATCH[command](profile, quad,
                                                        params, seed)
    except PreconditionError as exc:
        emit_results(out_dir, {"command": command, "digest": digest,
                               "seed": seed, "invalid": str(exc)}, [],
                     ("empty",))
        return 3
    summary = {"command": command, "digest": digest, "seed": seed,
               "passed": bool(ok), **summary}
    emit_results(out_dir, summary, rows, columns)
    print(f"[anisonl] {command} digest={digest} passed={bool(ok)}")
    return 0 if ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="anisonl",
        description="anisotropic nonlocal operator experiments")
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (falls back to "
                             "ANISO_NONLOCAL_THREADS)")
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        env = os.environ.get("ANISO_NONLOCAL_THREADS")
        threads = int(env) if env else None

    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    try:
        return run(config, out_dir=args.out, seed=args.seed, threads=threads)
    except PreconditionError as exc:
        print(json.dumps({"invalid": str(exc)}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
