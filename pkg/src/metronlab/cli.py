"""Command-line front end: configured runs, sweeps and check suites with
CSV/JSON outputs and a manifest.json echoing every input.

Exit codes: 0 success, 2 validation error, 3 numerical failure.  A one-line
machine-parsable diagnostic goes to stderr on failure.  Parallelism for
sweeps comes from --jobs or the METRON_LAB_JOBS environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, algebra, bragg, greens, orbits, trapped_modes
from .errors import MetronLabError, NumericalError, ValidationError
from .io import read_config, write_csv, write_gnuplot_stub, write_json
from .numerics import RadialGrid

COMMANDS = (
    "metron-solve",
    "metron-rescale",
    "bragg-classify",
    "bragg-sweep",
    "bragg-lattice",
    "orbit-drift",
    "orbit-threemode",
    "orbit-variance",
    "greens-eval",
    "greens-conserve",
    "algebra-check",
    "calibrate",
)


def parse_values(text):
    """Comma list ("0,0.5,1") or range ("start:stop:count") of floats."""
    text = str(text)
    if ":" in text:
        a, b, n = text.split(":")
        return list(np.linspace(float(a), float(b), int(n)))
    return [float(v) for v in text.split(",") if v != ""]


def parse_vector(text, n):
    vals = [float(v) for v in str(text).split(",")]
    if len(vals) != n:
        raise ValidationError(f"expected {n} comma-separated components, got {text!r}")
    return np.array(vals)


def _add_common(parser):
    parser.add_argument("--output-dir", default="out")
    parser.add_argument("--formats", default="csv,json")
    parser.add_argument("--config", default=None)
    parser.add_argument(
        "--jobs", type=int, default=int(os.environ.get("METRON_LAB_JOBS", "1"))
    )


def build_parser():
    top = argparse.ArgumentParser(prog="metronlab")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metron-solve")
    p.add_argument("--omega-hat", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--mode", type=int, default=0)
    p.add_argument("--r0", type=float, default=5.0)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--n-points", type=int, default=2001)
    _add_common(p)

    p = sub.add_parser("metron-rescale")
    p.add_argument("--omega-hat", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--mode", type=int, default=0)
    p.add_argument("--r0", type=float, default=5.0)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--n-points", type=int, default=2001)
    p.add_argument("--lam", type=str, required=True,
                   help="scale factor; a,b,c or start:stop:count sweeps the family")
    _add_common(p)

    p = sub.add_parser("bragg-classify")
    p.add_argument("--E0", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--omega0", type=float, required=True)
    p.add_argument("--s-max", type=float, default=0.0,
                   help="when positive, also integrate and write the trajectory")
    _add_common(p)

    p = sub.add_parser("bragg-sweep")
    p.add_argument("--ratio", type=str, required=True, help="omega0*E0/gamma values")
    p.add_argument("--phi", type=str, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--omega0", type=float, default=1.0)
    _add_common(p)

    p = sub.add_parser("bragg-lattice")
    p.add_argument("--ki", type=str, required=True, help="k1,k2,k3,k4 of the incident wave")
    p.add_argument("--fundamental", action="append", required=True,
                   help="spatial fundamental g1,g2,g3 (repeatable)")
    p.add_argument("--dimensionality", type=int, default=3)
    p.add_argument("--normal-axis", type=int, default=2)
    p.add_argument("--max-order", type=int, default=3)
    p.add_argument("--omega0", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("orbit-drift")
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)
    p.add_argument("--c3", type=float, required=True)
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--delta-r0", type=float, required=True)
    p.add_argument("--t-max", type=float, default=200.0)
    _add_common(p)

    p = sub.add_parser("orbit-threemode")
    p.add_argument("--a1", type=complex, default=1.0 + 0j)
    p.add_argument("--a2", type=complex, default=0.0 + 0j)
    p.add_argument("--a12", type=complex, default=0.0 + 0j)
    p.add_argument("--k", type=complex, default=1.0 + 0j)
    p.add_argument("--mu1", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=0.0)
    p.add_argument("--gamma-f", type=float, default=0.0)
    p.add_argument("--beta-dr", type=float, default=0.0)
    p.add_argument("--evolution", choices=["Emission", "PrescribedField"],
                   default="Emission")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=400)
    _add_common(p)

    p = sub.add_parser("orbit-variance")
    p.add_argument("--n1", type=float, required=True)
    p.add_argument("--n2", type=float, required=True)
    p.add_argument("--kprime", type=float, required=True)
    p.add_argument("--mu1", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=200)
    _add_common(p)

    p = sub.add_parser("greens-eval")
    p.add_argument("--r", type=str, required=True)
    p.add_argument("--t", type=str, required=True)
    p.add_argument("--omega-hat", type=float, default=1.0)
    p.add_argument("--k-max", type=float, default=60.0)
    p.add_argument("--kind", choices=list(greens.KERNEL_KINDS), default="retarded")
    p.add_argument("--method", choices=["quadrature", "stationary", "lightcone"],
                   default="quadrature")
    _add_common(p)

    p = sub.add_parser("greens-conserve")
    p.add_argument("--kind", choices=list(greens.KERNEL_KINDS), default="symmetric")
    p.add_argument("--sigma", type=float, default=0.4)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--speed", type=float, default=0.3)
    p.add_argument("--span", type=float, default=6.0)
    p.add_argument("--samples", type=int, default=121)
    _add_common(p)

    p = sub.add_parser("algebra-check")
    p.add_argument("--suite", default="gamma,polarization,factorization,star,"
                                      "electroweak,gauge,calibration")
    _add_common(p)

    p = sub.add_parser("calibrate")
    p.add_argument("--a-sq", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--m-core", type=float, required=True)
    p.add_argument("--k5", type=float, required=True)
    p.add_argument("--gprime", type=float, required=True)
    _add_common(p)

    return top


def _apply_config(parser, argv):
    """Merge a flat config file under explicit CLI flags; unknown keys are
    rejected with exit code 2."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    cfg_path = argv[idx + 1]
    cfg = read_config(cfg_path)
    command = argv[0]
    sub = None
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            sub = action.choices[command]
    known = {a.dest for a in sub._actions}
    extra = []
    for key, value in cfg.items():
        dest = key.strip().replace("-", "_")
        if dest not in known:
            raise ValidationError(f"unknown config key {key!r}")
        flag = "--" + dest.replace("_", "-")
        if flag in argv or any(a.startswith(flag + "=") for a in argv):
            continue  # explicit flags override config values
        extra.extend([flag, value])
    return argv[:1] + extra + argv[1:]


def manifest_from(args, extra=None):
    payload = {
        "command": args.command,
        "version": __version__,
        "parameters": {
            k: v for k, v in sorted(vars(args).items()) if k != "command"
        },
    }
    if extra:
        payload.update(extra)
    return payload


def _out(args):
    return Path(args.output_dir)


def _solve_from_args(args):
    params = trapped_modes.SingleModeParams(
        omega_hat=args.omega_hat,
        epsilon=args.eps,
        mode_order=args.mode,
        r0=args.r0,
        max_iters=args.max_iters,
        tol=args.tol,
    )
    grid = None
    if args.r_max is not None:
        grid = RadialGrid(args.r_max, args.n_points)
    return trapped_modes.iterate_single_mode(params, grid=grid)


def cmd_metron_solve(args):
    sol = _solve_from_args(args)
    out = _out(args)
    formats = args.formats.split(",")
    if "csv" in formats:
        write_csv(out / "solution.csv", ["r", "phi0", "phi1", "kappa_sq"], sol.to_csv_rows())
        write_gnuplot_stub(out / "solution.gp", "solution.csv", "trapped mode",
                           1, [(2, "phi0"), (3, "phi1"), (4, "kappa_sq")])
    if "json" in formats:
        write_json(out / "solution.json", sol.to_json_dict())
    write_json(out / "manifest.json", manifest_from(args, {
        "omega": sol.omega,
        "residual_eigen": sol.residual_eigen,
        "residual_poisson": sol.residual_poisson,
        "iterations_used": sol.iterations_used,
        "well_parameter": sol.well_parameter(),
        "crossing_radius": sol.crossing_radius(),
    }))
    print(f"omega = {sol.omega:.12g}  residuals = ({sol.residual_eigen:.3e}, "
          f"{sol.residual_poisson:.3e})  iterations = {sol.iterations_used}")
    return 0


def cmd_metron_rescale(args):
    lams = parse_values(args.lam)
    if not lams:
        raise ValidationError("empty lambda grid")
    sol = _solve_from_args(args)
    out = _out(args)
    if len(lams) == 1:
        scaled = trapped_modes.rescale(sol, lams[0])
        if "csv" in args.formats.split(","):
            write_csv(out / "rescaled.csv", ["r", "phi0", "phi1", "kappa_sq"],
                      scaled.to_csv_rows())
        write_json(out / "manifest.json", manifest_from(args, {
            "omega_base": sol.omega,
            "omega_rescaled": scaled.omega,
            "lambda_max": trapped_modes.max_scale_factor(sol),
            "residual_eigen": scaled.residual_eigen,
            "residual_poisson": scaled.residual_poisson,
        }))
        print(f"omega' = {scaled.omega:.12g} (base {sol.omega:.12g})")
        return 0

    def run_point(lam):
        try:
            sc = trapped_modes.rescale(sol, lam)
            return (lam, sc.omega, sc.residual_eigen, sc.residual_poisson, "ok")
        except MetronLabError as exc:
            return (lam, float("nan"), float("nan"), float("nan"),
                    f"error:{type(exc).__name__}")

    with ThreadPoolExecutor(max_workers=max(args.jobs, 1)) as pool:
        rows = list(pool.map(run_point, lams))
    write_csv(out / "rescale_sweep.csv",
              ["lambda", "omega", "residual_eigen", "residual_poisson", "status"],
              rows)
    write_json(out / "manifest.json", manifest_from(args, {
        "omega_base": sol.omega,
        "lambda_max": trapped_modes.max_scale_factor(sol),
        "points": len(rows),
    }))
    print(f"{len(rows)} rescalings")
    return 0


def cmd_bragg_classify(args):
    state = bragg.BraggTrapState(E=args.E0, deltaS=0.0, gamma=args.gamma,
                                 phi=args.phi, omega0=args.omega0)
    res = bragg.classify_trapping(state)
    payload = dict(res)
    if abs(res["B"]) <= 1.0:
        st, un = bragg.equilibrium_phases(res["B"], args.phi)
        payload["deltaS_stable"] = st
        payload["deltaS_unstable"] = un
    if args.s_max > 0:
        s_path, E, dS = bragg.integrate_trap(state, args.s_max)
        const = bragg.first_integral(E, dS, state)
        write_csv(_out(args) / "trajectory.csv",
                  ["s", "E", "deltaS", "first_integral"],
                  zip(s_path, E, dS, const))
        write_gnuplot_stub(_out(args) / "trajectory.gp", "trajectory.csv",
                           "resonance trapping", 1, [(2, "E"), (3, "deltaS")])
        payload["first_integral_drift"] = float(np.max(np.abs(const - const[0])))
    write_json(_out(args) / "classification.json", payload)
    write_json(_out(args) / "manifest.json", manifest_from(args, payload))
    print(f"verdict = {res['verdict']}  B = {res['B']:.12g}")
    return 0


def cmd_bragg_sweep(args):
    ratios = parse_values(args.ratio)
    phis = parse_values(args.phi)
    if not ratios or not phis:
        raise ValidationError("empty sweep grid")
    cells = [(ratio, phi) for ratio in ratios for phi in phis]

    def run_cell(cell):
        ratio, phi = cell
        try:
            state = bragg.BraggTrapState(
                E=ratio * args.gamma / args.omega0, deltaS=0.0,
                gamma=args.gamma, phi=phi, omega0=args.omega0,
            )
            res = bragg.classify_trapping(state)
            if abs(res["B"]) <= 1.0:
                st, un = bragg.equilibrium_phases(res["B"], phi)
            else:
                st = un = float("nan")
            return (res["B"], phi, res["verdict"], st, un)
        except MetronLabError as exc:
            return (float("nan"), phi, f"error:{type(exc).__name__}",
                    float("nan"), float("nan"))

    with ThreadPoolExecutor(max_workers=max(args.jobs, 1)) as pool:
        rows = list(pool.map(run_cell, cells))
    write_csv(_out(args) / "sweep.csv",
              ["B", "phi", "verdict", "deltaS_stable", "deltaS_unstable"], rows)
    write_json(_out(args) / "manifest.json",
               manifest_from(args, {"cells": len(rows)}))
    print(f"{len(rows)} cells")
    return 0


def cmd_bragg_lattice(args):
    k_i = parse_vector(args.ki, 4)
    fundamentals = []
    for g in args.fundamental:
        v = parse_vector(g, 3)
        fundamentals.append(np.array([v[0], v[1], v[2], 0.0]))
    lattice = bragg.LatticeSpec(
        fundamental_wavenumbers=tuple(fundamentals),
        dimensionality=args.dimensionality,
        max_order=args.max_order,
        normal_axis=args.normal_axis,
    )
    ks = bragg.bragg_scatter_set(k_i, lattice, args.omega0)
    rows = [(k[0], k[1], k[2], k[3], bragg.minkowski_dot(k, k)) for k in ks]
    write_csv(_out(args) / "scatter_set.csv", ["k1", "k2", "k3", "k4", "k_dot_k"], rows)
    write_json(_out(args) / "manifest.json", manifest_from(args, {"count": len(rows)}))
    print(f"{len(rows)} on-shell scattered wavenumbers")
    return 0


def cmd_orbit_drift(args):
    model = orbits.OrbitDriftModel(d=args.d, C1=args.c1, C2=args.c2, C3=args.c3)
    eq = orbits.drift_equilibria(model)
    res = orbits.integrate_drift(model, args.delta_r0, args.t_max)
    out = _out(args)
    write_csv(out / "drift_path.csv", ["t", "delta_r"],
              zip(res["t"], res["delta_r"]))
    dr = np.linspace(min(res["delta_r"].min(), -3), max(res["delta_r"].max(), 3), 601)
    write_csv(out / "phase_portrait.csv", ["delta_r", "ddelta_r_dt"],
              zip(dr, orbits.drift_rhs(model, dr)))
    write_gnuplot_stub(out / "phase_portrait.gp", "phase_portrait.csv",
                       "orbit drift phase portrait", 1, [(2, "d(delta_r)/dt")])
    verdict = {k: v for k, v in res.items() if k not in ("t", "delta_r")}
    write_json(out / "manifest.json", manifest_from(args, {
        "equilibria": [{"delta_r": r, "stability": s} for r, s in eq],
        "verdict": verdict,
    }))
    print(f"verdict = {res['verdict']}"
          + (f" root = {res['root']:.9g}" if "root" in res else ""))
    return 0


def cmd_orbit_threemode(args):
    state = orbits.ThreeModeState(
        A1=args.a1, A2=args.a2, A12=args.a12, K=args.k,
        mu1=args.mu1, mu2=args.mu2, gamma_f=args.gamma_f, beta_dr=args.beta_dr,
    )
    t, A1, A2, A12 = orbits.integrate_three_mode(
        state, mode=args.evolution, t_max=args.t_max
    )
    sel = np.linspace(0, len(t) - 1, min(args.samples, len(t))).astype(int)
    inv1, inv2 = orbits.manley_rowe(A1, A2, A12)
    rows = zip(t[sel], np.abs(A1[sel]), np.abs(A2[sel]), np.abs(A12[sel]),
               inv1[sel], inv2[sel])
    write_csv(_out(args) / "threemode.csv",
              ["t", "abs_A1", "abs_A2", "abs_A12", "inv_sum", "inv_diff"], rows)
    write_json(_out(args) / "manifest.json", manifest_from(args, {
        "invariant_drift": float(np.max(np.abs(inv1 - inv1[0]))),
    }))
    print(f"integrated to t = {t[-1]:.6g}")
    return 0


def cmd_orbit_variance(args):
    t = np.linspace(0.0, args.t_max, args.samples)
    N1, N2 = orbits.evolve_variances(args.n1, args.n2, args.kprime,
                                     args.mu1, args.mu2, t)
    write_csv(_out(args) / "variances.csv", ["t", "N1", "N2"], zip(t, N1, N2))
    write_json(_out(args) / "manifest.json", manifest_from(args, {
        "N1_final": float(N1[-1]), "N2_final": float(N2[-1]),
    }))
    print(f"N1 -> {N1[-1]:.9g}, N2 -> {N2[-1]:.9g}")
    return 0


def cmd_greens_eval(args):
    rs = parse_values(args.r)
    ts = parse_values(args.t)
    params = greens.DispersionParams(omega_hat=args.omega_hat, k_max=args.k_max)
    rows = []
    for r in rs:
        for t in ts:
            if args.method == "quadrature":
                val = greens.greens_dispersive(r, t, params, args.kind)
            elif args.method == "stationary":
                val = greens.greens_stationary_phase(r, t, params, args.kind)
            else:
                desc = greens.greens_nondispersive(r, t, args.kind)
                val = sum(b["weight"] for b in desc["branches"] if b["on_support"])
            rows.append((r, t, val, args.method))
    write_csv(_out(args) / "kernel_scan.csv", ["r", "t", "value", "method"], rows)
    write_json(_out(args) / "manifest.json", manifest_from(args, {"points": len(rows)}))
    print(f"{len(rows)} kernel evaluations")
    return 0


def cmd_greens_conserve(args):
    n = args.samples
    span = (-args.span, args.span)
    line_i = greens.WorldLine.static_point([0.0, 0.0, 0.0], span, n)
    line_j = greens.WorldLine.from_velocity(
        [args.separation, 0.0, 0.0], [0.0, args.speed, 0.0], span, n
    )
    dp_i, dp_j = greens.momentum_exchange(line_i, line_j, args.sigma, args.kind)
    total = dp_i + dp_j
    scale = max(float(np.max(np.abs(dp_i))), 1e-300)
    payload = {
        "kind": args.kind,
        "dp_i": dp_i.tolist(),
        "dp_j": dp_j.tolist(),
        "total": total.tolist(),
        "relative_violation": float(np.max(np.abs(total)) / scale),
    }
    write_json(_out(args) / "conservation.json", payload)
    write_json(_out(args) / "manifest.json", manifest_from(args, payload))
    print(f"max |dp_i + dp_j| / max |dp_i| = {payload['relative_violation']:.3e}")
    return 0


def _algebra_suite(names):
    checks = []
    if "gamma" in names:
        for rep_name, gs in (
            ("dirac", algebra.dirac_representation()),
            ("chiral", algebra.chiral_representation()),
        ):
            rep = algebra.verify_gamma(gs)
            for c in rep["checks"]:
                checks.append({**c, "check_id": f"{rep_name}_{c['check_id']}"})
    if "polarization" in names:
        for model in (
            algebra.minimal_noneuclidean(1.0),
            algebra.minimal_euclidean(1.0),
            algebra.extended_euclidean(1.0, k9=0.4),
            algebra.color_noneuclidean(1.0, k7=0.6, k8=0.5),
            algebra.color_euclidean(1.0, k7=0.6, k8=0.5),
        ):
            rep = algebra.check_gauge_conditions(model)
            for c in rep["checks"]:
                checks.append({**c, "check_id": f"{model.name}_{c['check_id']}"})
            M = algebra.spinor_metric(model, check=False)
            kind, scale = model.target
            want = (
                np.diag([1.0, 1.0, -1.0, -1.0]) / scale
                if kind == "dirac"
                else np.eye(4) / scale
            )
            dev = float(np.max(np.abs(M - want)))
            checks.append({
                "check_id": f"{model.name}_spinor_metric",
                "max_deviation": dev,
                "status": "pass" if dev < 1e-12 else "fail",
            })
    if "factorization" in names:
        gs = algebra.dirac_representation()
        rng = np.random.default_rng(7)
        dev = 0.0
        for _ in range(16):
            k = rng.normal(size=4)
            dev = max(dev, algebra.kg_factorization(k, rng.uniform(0.2, 2.0), gs))
        checks.append({
            "check_id": "kg_factorization",
            "max_deviation": dev,
            "status": "pass" if dev < 1e-12 else "fail",
        })
    if "star" in names:
        st = algebra.quark_star(1.0, orientation_angle=0.3)
        items = {
            "star_sum": float(np.max(np.abs(st["sum"]))),
            "star_boson_mass": abs(st["boson_mass"] - np.sqrt(3.0)),
            "star_A1": abs(st["A1"] - 4.0),
            "star_A2": abs(st["A2"] + 2.0),
            "star_diagonal_sum": abs(st["diagonal_sum_coefficient"]),
            "star_coupling_ratio": abs(st["g3_prime"] / st["g3"] - np.sqrt(6.0)),
        }
        for cid, dev in items.items():
            checks.append({"check_id": cid, "max_deviation": dev,
                           "status": "pass" if dev < 1e-12 else "fail"})
    if "electroweak" in names:
        sym = algebra.electroweak_config(1.0, 0.0)
        dev = abs(sym.ratio - 1.0 / np.sqrt(2.0))
        checks.append({"check_id": "electroweak_symmetric_ratio",
                       "max_deviation": dev,
                       "status": "pass" if dev < 1e-12 else "fail"})
        cfg = algebra.find_mass_ratio_config(0.87)
        dev = abs(cfg.ratio - 0.87)
        checks.append({"check_id": "electroweak_ratio_rootfind",
                       "max_deviation": dev,
                       "status": "pass" if dev < 1e-6 else "fail"})
        k_e = np.array([cfg.k5_e, 0, 0, 0, cfg.k9])
        k_nu = np.array([0, cfg.k6_nu, 0, 0, -cfg.k9])
        k_c = np.array([0, 0, 0.5, 0.1, 0])
        qe = algebra.quark_ew_wavenumbers(k_e, k_nu, k_c)
        items = {
            "quark_sum_identity": qe["sum_identity_residual"],
            "quark_up_charge": abs(qe["charges_in_e_M"]["up"] - 2.0 / 3.0),
            "quark_down_charge": abs(qe["charges_in_e_M"]["down"] + 1.0 / 3.0),
            "quark_w_coupling": abs(qe["w_coupling_ratio"] + 1.0 / 3.0),
        }
        for cid, dev in items.items():
            checks.append({"check_id": cid, "max_deviation": dev,
                           "status": "pass" if dev < 1e-12 else "fail"})
    if "gauge" in names:
        st = algebra.quark_star(1.0)
        gc = algebra.gauge_correspondence(st, 0.4, -0.7)
        items = {
            "gauge_calibration_constant": gc["C_equals_minus_mass_sq"],
            "gauge_rank_deficiency": gc["residual"],
            "gauge_row_sum": gc["row_sum"],
        }
        for cid, dev in items.items():
            checks.append({"check_id": cid, "max_deviation": dev,
                           "status": "pass" if dev < 1e-12 else "fail"})
    if "calibration" in names:
        cal = algebra.calibrate_constants(2.0, 0.7, 0.3, 1.4, 2.2)
        dev = abs(cal["G"] * (cal["m"] / cal["q"]) ** 2 - cal["epsilon_ratio"])
        checks.append({"check_id": "calibration_loop",
                       "max_deviation": dev,
                       "status": "pass" if dev < 1e-12 else "fail"})
        val = algebra.scale_ratio(2.4e-43)
        ok = 6e-8 <= val <= 1e-7
        checks.append({"check_id": "scale_ratio_window",
                       "max_deviation": 0.0 if ok else abs(val - 7.7e-8),
                       "status": "pass" if ok else "fail"})
    return checks


def cmd_algebra_check(args):
    names = [s.strip() for s in args.suite.split(",") if s.strip()]
    checks = _algebra_suite(names)
    payload = {
        "suite": names,
        "checks": checks,
        "all_pass": all(c["status"] == "pass" for c in checks),
    }
    write_json(_out(args) / "algebra_report.json", payload)
    write_json(_out(args) / "manifest.json", manifest_from(args, {
        "all_pass": payload["all_pass"], "count": len(checks),
    }))
    worst = max((c["max_deviation"] for c in checks), default=0.0)
    print(f"{len(checks)} checks, all_pass = {payload['all_pass']}, "
          f"worst deviation = {worst:.3e}")
    return 0 if payload["all_pass"] else 3


def cmd_calibrate(args):
    cal = algebra.calibrate_constants(args.a_sq, args.beta, args.m_core,
                                      args.k5, args.gprime)
    write_json(_out(args) / "constants.json", cal)
    write_json(_out(args) / "manifest.json", manifest_from(args, cal))
    print("  ".join(f"{k} = {v:.12g}" for k, v in cal.items()))
    return 0


_DISPATCH = {
    "metron-solve": cmd_metron_solve,
    "metron-rescale": cmd_metron_rescale,
    "bragg-classify": cmd_bragg_classify,
    "bragg-sweep": cmd_bragg_sweep,
    "bragg-lattice": cmd_bragg_lattice,
    "orbit-drift": cmd_orbit_drift,
    "orbit-threemode": cmd_orbit_threemode,
    "orbit-variance": cmd_orbit_variance,
    "greens-eval": cmd_greens_eval,
    "greens-conserve": cmd_greens_conserve,
    "algebra-check": cmd_algebra_check,
    "calibrate": cmd_calibrate,
}


def run(argv):
    """Execute one command; returns the process exit code."""
    parser = build_parser()
    try:
        if argv and argv[0] in COMMANDS:
            argv = _apply_config(parser, list(argv))
        args = parser.parse_args(argv)
        return _DISPATCH[args.command](args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except MetronLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def main():
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
