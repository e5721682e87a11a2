"""Command-line interface: band tables, rays, fields, solves, and sweeps.

Every subcommand reads the shared config format, writes plain CSV or the
binary field format, and drops a run manifest capturing the normalized
configuration so the run can be reproduced bit-exactly.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bloch import kappa_integral
from .config import (
    RunConfig,
    SweepSettings,
    config_from_parser,
    load_config,
    parse_fraction,
    write_manifest,
)
from .errors import BlochWkbError, ConfigError
from .fieldio import write_field
from .harness import (
    ScenarioContext,
    convergence_sweep,
    wigner_l1_discrepancy,
    wigner_predicted,
    wigner_transform,
)
from .lattice import scale_physical_params
from .nls import solve_nls
from .rays import trace_bundle
from .wkb import eulerianize, wkb_field


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _add_config_arg(sub):
    sub.add_argument("--config", required=True, help="scenario config file")


def cmd_scale(args) -> int:
    report = scale_physical_params(args.a0, args.abar, args.n, args.omega0)
    print(f"epsilon = {report.epsilon:.6e}")
    print(f"x_s     = {report.x_s:.6e} m")
    print(f"xi      = {report.xi:.6e} 1/m")
    print(f"lambda  = {report.lambda_ratio}")
    if args.out:
        _write_csv(args.out, ["epsilon", "x_s", "xi"],
                   [(report.epsilon, report.x_s, report.xi)])
    return 0


def _preset_run(preset: str, band: int | None) -> RunConfig:
    parser = configparser.ConfigParser()
    parser["potential"] = {"preset": preset}
    if band is not None:
        parser["potential"]["band"] = str(band)
    return config_from_parser(parser, name=f"preset-{preset.split(':')[0]}")


def cmd_bands(args) -> int:
    if args.config is not None:
        run = load_config(args.config)
    elif args.preset is not None:
        run = _preset_run(args.preset, args.band)
    else:
        raise ConfigError("bands needs either --config or --preset")
    s = run.scenario
    context = ScenarioContext(s)
    table = context.table
    problem = context.problem
    n_bands = max(args.n_bands, s.band + 1)
    rows = []
    from .bloch import solve_bloch_at_k
    for j, k in enumerate(table.k_grid):
        energies, _ = solve_bloch_at_k(problem, k, n_bands=n_bands)
        kappa = kappa_integral(problem, s.band, float(k), s.sigma)
        rows.append((float(k), *[float(e) for e in energies],
                     float(table.velocities[j]),
                     float(table.connection[j].real),
                     float(table.connection[j].imag),
                     kappa, float(table.gaps[j])))
    header = (["k"] + [f"E_{n}" for n in range(1, n_bands + 1)]
              + [f"velocity_{s.band}", f"re_connection_{s.band}",
                 f"im_connection_{s.band}", f"kappa_sigma_{s.band}",
                 f"gap_{s.band}"])
    _write_csv(args.out, header, rows)
    write_manifest(Path(args.out).with_suffix(".manifest"), run,
                   command="bands", outputs=[str(args.out)])
    print(f"wrote {args.out}: {len(rows)} momenta, min gap {table.min_gap:.6g}")
    return 0


def cmd_rays(args) -> int:
    run = load_config(args.config)
    s = run.scenario
    context = ScenarioContext(s)
    t_end = args.t_end if args.t_end is not None else s.tau0
    dt = args.dt if args.dt is not None else s.ray_dt
    bundle = trace_bundle(context.evaluator, s.confinement, s.launch_grid()[::args.stride],
                          s.phase, s.sigma, s.coupling, s.amplitude, t_end, dt)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    outputs = []
    for i in range(bundle.n_rays):
        path = bundle.ray(i)
        name = out_dir / f"ray_{i:04d}.csv"
        _write_csv(name, ["t", "x", "k", "J", "phi", "berry", "nlphase"],
                   zip(path.times, path.x, path.k, path.jacobian,
                       path.phase, path.berry, path.nlphase))
        summary.append((path.x0, path.caustic_time))
        outputs.append(str(name))
    _write_csv(out_dir / "bundle.csv", ["x0", "caustic_time"], summary)
    outputs.append(str(out_dir / "bundle.csv"))
    write_manifest(out_dir / "run_manifest.ini", run, command="rays", outputs=outputs)
    print(f"wrote {bundle.n_rays} rays to {out_dir}; "
          f"first caustic at {bundle.caustic_time:.6g}")
    return 0



def _resolve_epsilon(args, run: RunConfig) -> float:
    if getattr(args, "eps", None):
        return parse_fraction(args.eps)
    if run.epsilon is not None:
        return run.epsilon
    raise ConfigError("no epsilon: pass --eps or set epsilon in [nls]")

def cmd_wkb(args) -> int:
    run = load_config(args.config)
    s = run.scenario
    eps = _resolve_epsilon(args, run)
    context = ScenarioContext(s)
    t = args.time
    step = context.ray_step()
    t_snap = round(t / step) * step if t > 0 else 0.0
    field = wkb_field(context.bundle, t_snap, eps, s.x_min, s.x_max,
                      s.points_per_cell)
    write_field(args.out, field)
    outputs = [str(args.out)]
    if args.fields_csv:
        coarse = np.linspace(s.x_min, s.x_max, args.csv_points)
        fields = eulerianize(context.bundle, t_snap, coarse)
        _write_csv(args.fields_csv,
                   ["x", "phi", "grad_phi", "re_amp", "im_amp", "omega", "jac"],
                   zip(fields.x_grid, fields.phi, fields.grad_phi,
                       fields.amp.real, fields.amp.imag, fields.omega, fields.jac))
        outputs.append(str(args.fields_csv))
    write_manifest(Path(args.out).with_suffix(".manifest"), run,
                   command="wkb", outputs=outputs)
    print(f"wrote {args.out} at t={t_snap:.6g}, {field.n_points} points")
    return 0


def cmd_solve(args) -> int:
    run = load_config(args.config)
    s = run.scenario
    eps = _resolve_epsilon(args, run)
    context = ScenarioContext(s)
    times = sorted(float(Fraction(t)) for t in args.snapshots.split(","))
    psi0 = context.initial_field(eps)
    snaps = solve_nls(context.nls_config(eps), psi0, times)
    outputs = []
    for snap in snaps:
        name = f"{args.out}_t{snap.t:.6f}.bwkb"
        write_field(name, snap)
        outputs.append(name)
    write_manifest(f"{args.out}.manifest", run, command="solve", outputs=outputs)
    print(f"wrote {len(snaps)} snapshots with prefix {args.out}")
    return 0


def cmd_compare(args) -> int:
    run = load_config(args.config)
    epsilons = (tuple(parse_fraction(e) for e in args.eps.split(","))
                if args.eps else run.sweep.epsilons)
    run = RunConfig(scenario=run.scenario,
                    sweep=SweepSettings(epsilons=epsilons, seed=run.sweep.seed))
    context = ScenarioContext(run.scenario)
    report = convergence_sweep(context, epsilons, max_workers=args.workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    s_levels = sorted(report.records[0].xs_errors)
    # wall-clock runtimes stay out of the CSV so a manifest rerun is bit-exact
    rows = [(r.epsilon, r.l2_error, r.linf_error,
             *[r.xs_errors[s] for s in s_levels])
            for r in report.records]
    csv_path = out_dir / "convergence.csv"
    _write_csv(csv_path,
               ["epsilon", "l2_error", "linf_error"]
               + [f"xs_{s}" for s in s_levels], rows)
    orders_path = out_dir / "orders.csv"
    _write_csv(orders_path, ["scenario", "fitted_order_l2", "fitted_order_linf"],
               [(report.scenario, report.fitted_order_l2, report.fitted_order_linf)])
    write_manifest(out_dir / "run_manifest.ini", run, command="compare",
                   outputs=[str(csv_path), str(orders_path)])
    for r in report.records:
        print(f"eps={r.epsilon:<10.6g} l2={r.l2_error:.6e} "
              f"linf={r.linf_error:.6e}  [{r.runtime_seconds:.1f}s]")
    print(f"fitted L2 order   = {report.fitted_order_l2:.4f}")
    print(f"fitted Linf order = {report.fitted_order_linf:.4f}")
    if report.floor_flagged:
        print("note: records at the numerical floor were excluded from the fit")
    print(f"wrote {csv_path}")
    return 0


def cmd_wigner(args) -> int:
    run = load_config(args.config)
    s = run.scenario
    eps = _resolve_epsilon(args, run)
    context = ScenarioContext(s)
    step = context.ray_step()
    t_snap = round(args.time / step) * step if args.time > 0 else 0.0
    field = wkb_field(context.bundle, t_snap, eps, s.x_min, s.x_max,
                      s.points_per_cell)
    grid = wigner_transform(field, x_stride=args.x_stride)
    predicted = wigner_predicted(context, t_snap, eps, args.width, grid)
    rows = []
    for i, x in enumerate(grid.x_centers):
        for l, xi in enumerate(grid.xi_centers):
            rows.append((float(x), float(xi), float(grid.values[i, l]),
                         float(predicted.values[i, l])))
    _write_csv(args.out, ["x", "xi", "w", "w_predicted"], rows)
    write_manifest(Path(args.out).with_suffix(".manifest"), run,
                   command="wigner", outputs=[str(args.out)])
    l1 = wigner_l1_discrepancy(grid, predicted, args.width)
    print(f"wrote {args.out}: mollified L1 discrepancy {l1:.6g}, "
          f"total mass {grid.total_mass():.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blochwkb",
        description="Bloch-band semiclassics: tables, rays, fields, solves, sweeps")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("scale", help="physical-parameter rescaling")
    p.add_argument("--a0", type=float, required=True, help="trap length [m]")
    p.add_argument("--abar", type=float, required=True, help="scattering length [m]")
    p.add_argument("--n", type=float, required=True, help="particle count")
    p.add_argument("--omega0", type=float, required=True, help="trap frequency [1/s]")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scale)

    p = subs.add_parser("bands", help="band table CSV")
    p.add_argument("--config", default=None, help="scenario config file")
    p.add_argument("--preset", default=None,
                   help="potential preset instead of a config file")
    p.add_argument("--band", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--n-bands", type=int, default=4)
    p.set_defaults(func=cmd_bands)

    p = subs.add_parser("rays", help="trace the ray bundle")
    _add_config_arg(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--stride", type=int, default=100,
                   help="keep every n-th launch point")
    p.set_defaults(func=cmd_rays)

    p = subs.add_parser("wkb", help="assemble the leading-order field")
    _add_config_arg(p)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--eps", default=None, help="epsilon, fraction or decimal")
    p.add_argument("--out", required=True, help="binary field output")
    p.add_argument("--fields-csv", default=None)
    p.add_argument("--csv-points", type=int, default=512)
    p.set_defaults(func=cmd_wkb)

    p = subs.add_parser("solve", help="direct split-step solve")
    _add_config_arg(p)
    p.add_argument("--eps", default=None)
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--snapshots", required=True, help="comma-separated times")
    p.set_defaults(func=cmd_solve)

    p = subs.add_parser("compare", help="epsilon-ladder convergence sweep")
    _add_config_arg(p)
    p.add_argument("--eps", default=None, help="override the config ladder")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_compare)

    p = subs.add_parser("wigner", help="phase-space comparison")
    _add_config_arg(p)
    p.add_argument("--eps", default=None)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=float, default=0.5,
                   help="mollifier width for the predicted density")
    p.add_argument("--x-stride", type=int, default=None,
                   help="keep every n-th position sample")
    p.set_defaults(func=cmd_wigner)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BlochWkbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
