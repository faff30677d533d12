"""Command-line front end: equilibrium solves, entropy evaluation, production
quadrature, inequality audit suites, saturation-scale curves, and relaxation runs.

Every run writes a manifest (tool version, arguments digest, seed, tolerances)
next to its output; reruns with an identical manifest are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .audit import (ABS_TOL, REL_TOL, TestSuiteSpec, audit_lambda_bounds,
                    make_suite, run_battery)
from .collision import (CollisionQuad, HardPotential, HardSphere, Maxwell,
                        OverMaxwellian, SoftPotential, SuperQuadratic,
                        production_bfd, production_landau)
from .distributions import (Distribution, Moments, distribution_from_json,
                            moments_of)
from .dynamics import SimulationConfig, run as run_simulation
from .entropy import (default_eps_samples, relative_entropy,
                      relative_entropy_representation, rg_curve, rg_derivative,
                      rg_value, entropy as entropy_of, spec_for)
from .equilibrium import solve_equilibrium
from .errors import KeqError
from .quadrature import VelocityGrid

BOLTZMANN_KERNELS = {"maxwell": Maxwell, "hard_sphere": HardSphere,
                     "super_quadratic": SuperQuadratic}
LANDAU_KERNELS = {"landau_over_maxwellian": OverMaxwellian}


def _fail(message: str):
    print(message, file=sys.stderr)
    raise SystemExit(1)


def _fmt(x) -> str:
    """Shortest round-trip decimal representation of a float."""
    return repr(float(x))


def _digest(payload) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True,
                                     default=str).encode()).hexdigest()


def _write_manifest(out_path: str, command: str, payload, seed) -> None:
    manifest = {
        "tool": f"keq {__version__}",
        "command": command,
        "inputs_digest": _digest(payload),
        "seed": seed,
        "tolerances": {"abs_tol": ABS_TOL, "rel_tol": REL_TOL},
        "threads": _thread_cap(),
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _thread_cap() -> int:
    return int(os.environ.get("KEQ_THREADS", "1"))


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        _fail(f"error: malformed JSON in {path} at line {exc.lineno}, "
              f"column {exc.colno}: {exc.msg}")


def _load_distribution(path: str) -> Distribution:
    doc = _load_json(path)
    try:
        return distribution_from_json(doc)
    except KeqError as exc:
        _fail(f"error: {exc}")


def _write_csv(path: str, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, bool):
                cells.append("true" if cell else "false")
            elif isinstance(cell, float):
                cells.append(_fmt(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def cmd_equilibrium(args) -> int:
    u = [float(x) for x in args.u.split(",")] if args.u else [0.0, 0.0, 0.0]
    m = Moments(args.rho, u, args.T)
    sol = solve_equilibrium(m, args.eps, args.statistics)
    doc = sol.to_json()
    payload = {"rho": args.rho, "T": args.T, "u": u, "eps": args.eps,
               "statistics": args.statistics}
    out = args.out or "equilibrium.json"
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "equilibrium", payload, args.seed)
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_entropy(args) -> int:
    f = _load_distribution(args.dist)
    spec = spec_for(args.eps, args.family)
    doc = {"entropy": entropy_of(f, spec)}
    if args.ref:
        g = _load_distribution(args.ref)
        doc["relative_entropy"] = relative_entropy(f, g, spec)
        doc["representation"] = relative_entropy_representation(f, g, spec)
    out = args.out or "entropy.json"
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "entropy", {"dist": args.dist, "eps": args.eps,
                                     "family": args.family}, args.seed)
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_produce(args) -> int:
    f = _load_distribution(args.dist)
    grid = None
    if args.quad is not None:
        m = moments_of(f)
        L = args.box if args.box is not None else 6.0 * float(np.sqrt(m.T))
        grid = VelocityGrid(L=L, N=args.quad, center=tuple(m.u))
    quad = CollisionQuad(grid=grid, n_polar=args.sphere_polar,
                         n_azimuth=args.sphere_azimuth,
                         prune_delta=args.prune_delta)
    if args.kernel in BOLTZMANN_KERNELS:
        res = production_bfd(f, args.eps, BOLTZMANN_KERNELS[args.kernel](), quad)
    elif args.kernel == "landau_over_maxwellian":
        res = production_landau(f, args.eps, OverMaxwellian(), quad)
    elif args.kernel == "landau_soft":
        res = production_landau(f, args.eps, SoftPotential(args.beta), quad)
    elif args.kernel == "landau_hard":
        res = production_landau(f, args.eps, HardPotential(args.beta), quad)
    else:
        _fail(f"error: unknown kernel {args.kernel!r}")
    doc = {"value": res.value, "node_count": res.node_count,
           "clamped_nodes": res.clamped_nodes, "est_error": res.est_error}
    out = args.out or "production.json"
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "produce", {"dist": args.dist, "eps": args.eps,
                                     "kernel": args.kernel,
                                     "quad": args.quad}, args.seed)
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_audit(args) -> int:
    if args.suite == "default":
        spec = TestSuiteSpec(seed=args.seed, count=args.count)
    else:
        spec = TestSuiteSpec.from_json(_load_json(args.suite))
    suite = make_suite(spec)
    rows = []
    all_hold = True
    for member in suite:
        for rep in run_battery(member, collision_n=args.quad):
            rows.append(rep.row(member.index))
            all_hold &= rep.holds
    if args.lambda_bounds:
        for rep in audit_lambda_bounds():
            rows.append(rep.row(-1))
            all_hold &= rep.holds
    out = args.out or "audit.csv"
    _write_csv(out, ["inequality_id", "seed_index", "lhs", "rhs", "margin",
                     "tolerance", "holds", "quad_error"], rows)
    _write_manifest(out, "audit", spec.to_json(), spec.seed)
    print(f"{len(rows)} audit rows -> {out}; all hold: {all_hold}")
    return 0 if all_hold else 2


def cmd_rg_curve(args) -> int:
    g = _load_distribution(args.dist)
    if args.eps:
        eps_samples = [float(x) for x in args.eps.split(",")]
    else:
        eps_samples = list(default_eps_samples(g, args.n_samples))
    from .distributions import default_grid
    grid = default_grid(g)
    rows = []
    for s in rg_curve(g, eps_samples, grid):
        if s.error is not None or s.eps <= 0.0:
            rows.append([s.eps, s.value if s.value is not None else float("nan"),
                         float("nan"), float("nan"),
                         s.gamma if s.gamma is not None else float("nan"),
                         s.kappa0 if s.kappa0 is not None else float("nan")])
            continue
        deriv = rg_derivative(g, s.eps, grid)
        h = 1e-4 * s.eps
        fd = (rg_value(g, s.eps + h, grid) - rg_value(g, s.eps - h, grid)) / (2 * h)
        rows.append([s.eps, s.value, deriv, fd, s.gamma, s.kappa0])
    out = args.out or "rg_curve.csv"
    _write_csv(out, ["eps", "R_g", "R_g_derivative", "finite_diff", "gamma",
                     "kappa0_est"], rows)
    _write_manifest(out, "rg-curve", {"dist": args.dist,
                                      "eps": eps_samples}, args.seed)
    print(f"{len(rows)} samples -> {out}")
    return 0


_SIM_KEYS = {"schema", "grid", "kernel", "eps", "dt", "t_end", "integrator",
             "conservative_projection", "positivity_clamp",
             "diagnostics_stride", "n_polar", "n_azimuth", "prune_delta",
             "initial"}


def cmd_simulate(args) -> int:
    doc = _load_json(args.config)
    if doc.get("schema") != 1:
        _fail("error: simulation config must declare \"schema\": 1")
    unknown = set(doc) - _SIM_KEYS
    if unknown:
        _fail(f"error: unknown config fields: {sorted(unknown)}")
    try:
        f_in = distribution_from_json(doc["initial"])
    except KeqError as exc:
        _fail(f"error: {exc}")
    kernel = BOLTZMANN_KERNELS.get(doc.get("kernel", "maxwell"))
    if kernel is None:
        _fail(f"error: unknown kernel {doc.get('kernel')!r};"
              f" valid: {sorted(BOLTZMANN_KERNELS)}")
    cfg = SimulationConfig(
        grid=VelocityGrid.from_json(doc["grid"]), kernel=kernel(),
        eps=float(doc.get("eps", 0.0)), dt=float(doc.get("dt", 0.01)),
        t_end=float(doc.get("t_end", 1.0)),
        integrator=doc.get("integrator", "euler"),
        conservative_projection=bool(doc.get("conservative_projection", True)),
        positivity_clamp=bool(doc.get("positivity_clamp", True)),
        diagnostics_stride=int(doc.get("diagnostics_stride", 1)),
        n_polar=int(doc.get("n_polar", 4)),
        n_azimuth=int(doc.get("n_azimuth", 8)),
        prune_delta=float(doc.get("prune_delta", 0.0)))
    out_diag = run_simulation(f_in, cfg)
    rows = []
    for i, t in enumerate(out_diag.times):
        m = out_diag.moments[i]
        rows.append([t, m.rho, m.u[0], m.u[1], m.u[2], m.T,
                     out_diag.entropy[i], out_diag.relative_entropy[i],
                     out_diag.production[i], out_diag.mass_defect[i],
                     out_diag.energy_defect[i]])
    out = args.out or "trajectory.csv"
    _write_csv(out, ["t", "rho", "ux", "uy", "uz", "T", "H", "H_rel", "D",
                     "mass_defect", "energy_defect"], rows)
    _write_manifest(out, "simulate", doc, args.seed)
    print(f"{len(rows)} records -> {out}; decay fit: "
          f"{json.dumps(out_diag.decay_fit, sort_keys=True)}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="keq",
        description="quantum-kinetic equilibria, entropy functionals, and "
                    "quadrature-certified entropy inequalities")
    p.add_argument("--threads", type=int, default=None,
                   help="cap worker parallelism (default: KEQ_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("equilibrium", help="solve the statistic for moments")
    pe.add_argument("--rho", type=float, required=True)
    pe.add_argument("--T", type=float, required=True)
    pe.add_argument("--u", type=str, default=None, help="ux,uy,uz")
    pe.add_argument("--eps", type=float, default=0.0)
    pe.add_argument("--statistics", default="fermi",
                    choices=["fermi", "bose", "classical"])
    pe.add_argument("--out", default=None)
    pe.add_argument("--seed", type=int, default=0)
    pe.set_defaults(fn=cmd_equilibrium)

    pn = sub.add_parser("entropy", help="entropy functionals of a distribution")
    pn.add_argument("--dist", required=True)
    pn.add_argument("--ref", default=None)
    pn.add_argument("--family", default="classical",
                    choices=["classical", "fermi", "bose"])
    pn.add_argument("--eps", type=float, default=0.0)
    pn.add_argument("--out", default=None)
    pn.add_argument("--seed", type=int, default=0)
    pn.set_defaults(fn=cmd_entropy)

    pp = sub.add_parser("produce", help="entropy production quadrature")
    pp.add_argument("--dist", required=True)
    pp.add_argument("--kernel", default="maxwell")
    pp.add_argument("--eps", type=float, default=0.0)
    pp.add_argument("--beta", type=float, default=1.0)
    pp.add_argument("--quad", type=int, default=None,
                    help="velocity nodes per axis (default: adapted, <= 24)")
    pp.add_argument("--box", type=float, default=None)
    pp.add_argument("--sphere-polar", type=int, default=12)
    pp.add_argument("--sphere-azimuth", type=int, default=24)
    pp.add_argument("--prune-delta", type=float, default=1e-16)
    pp.add_argument("--out", default=None)
    pp.add_argument("--seed", type=int, default=0)
    pp.set_defaults(fn=cmd_produce)

    pa = sub.add_parser("audit", help="run the inequality audit battery")
    pa.add_argument("--suite", default="default")
    pa.add_argument("--seed", type=int, default=42)
    pa.add_argument("--count", type=int, default=50)
    pa.add_argument("--quad", type=int, default=16)
    pa.add_argument("--lambda-bounds", action="store_true",
                    help="append the prefactor interval bounds")
    pa.add_argument("--out", default=None)
    pa.set_defaults(fn=cmd_audit)

    pr = sub.add_parser("rg-curve", help="relative entropy vs saturation scale")
    pr.add_argument("--dist", required=True)
    pr.add_argument("--eps", default=None, help="comma-separated samples")
    pr.add_argument("--n-samples", type=int, default=24)
    pr.add_argument("--out", default=None)
    pr.add_argument("--seed", type=int, default=0)
    pr.set_defaults(fn=cmd_rg_curve)

    ps = sub.add_parser("simulate", help="relaxation of the homogeneous equation")
    ps.add_argument("--config", required=True)
    ps.add_argument("--out", default=None)
    ps.add_argument("--seed", type=int, default=0)
    ps.set_defaults(fn=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        os.environ["KEQ_THREADS"] = str(args.threads)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")
    try:
        return args.fn(args)
    except SystemExit:
        raise
    except KeqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
