"""Command-line front end: run, converge, mesh-info, export-exact."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import becker as becker_mod
from .assembly import assemble_operators
from .config import ConfigError, RunConfig, load_config
from .convergence import convergence_study, run_case
from .mesh import import_mesh
from .output import schlieren, write_vtk
from .state import GasModel


def _out_dir(cfg_dir: str) -> str:
    return os.environ.get("IDPNS_OUT_DIR", cfg_dir)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_dir = _out_dir(cfg.out_dir)
    os.makedirs(out_dir, exist_ok=True)

    from .config import build_problem
    from .driver import run_simulation

    field, ops, gas, bc, controls, hcfg, pcfg, exact = build_problem(cfg)

    def snapshot(f, idx):
        extra = {"schlieren": schlieren(f, ops)} if ops.dim == 2 else None
        write_vtk(os.path.join(out_dir, f"snapshot_{idx:03d}.vtk"), f, ops, extra)

    final, reports = run_simulation(
        field, ops, gas, controls, hcfg, pcfg, bc,
        snapshot_times=list(cfg.snapshots) or None,
        on_snapshot=snapshot if cfg.snapshots else None,
        collect_reports=True,
    )
    extra = {"schlieren": schlieren(final, ops)} if ops.dim == 2 else None
    write_vtk(os.path.join(out_dir, "final.vtk"), final, ops, extra)
    if exact is not None:
        from .errors import compute_delta_q

        rep = compute_delta_q(final, exact(ops.coords, final.t), ops,
                              quadrature=cfg.quadrature)
        print(f"t={final.t:g} N={rep.n_nodes} delta1={rep.delta1:.6e} "
              f"delta2={rep.delta2:.6e} deltainf={rep.delta_inf:.6e}")
    else:
        print(f"t={final.t:g} steps={len(reports)} min_rho={final.rho.min():.6e}")
    return 0


def _cmd_converge(args) -> int:
    if args.config:
        base = load_config(args.config)
    elif args.case == "becker1d":
        base = RunConfig()
    else:
        print(f"unknown case {args.case!r}", file=sys.stderr)
        return 2
    grids = [int(tok) for tok in args.grids.split(",")]
    csv_path = args.output or os.path.join(_out_dir(base.out_dir), "convergence.csv")
    result = convergence_study(base, grids, csv_path=csv_path)
    for row in result.rows:
        r1 = "--" if row["rate1"] is None else f"{row['rate1']:.2f}"
        print(f"N={row['N']:6d} delta1={row['delta1']:.6e} rate1={r1}")
    if result.failed_grid is not None:
        print(f"grid {result.failed_grid} failed: {result.error}", file=sys.stderr)
        return 1
    print(f"wrote {csv_path}")
    return 0


def _cmd_mesh_info(args) -> int:
    mesh = import_mesh(args.mesh)
    gas = GasModel(gamma=1.4, mu=1.0, prandtl=0.75)
    ops = assemble_operators(mesh, gas)
    off = ops.offdiag
    worst = float(ops.beta[off].max()) if off.any() else 0.0
    print(f"dim={mesh.dim} nodes={ops.n} cells={len(ops.cells)}")
    print(f"measure={ops.domain_measure:.12g} min_cell={ops.cell_measure.min():.3e}")
    print(f"max offdiagonal thermal stiffness: {worst:.6e} "
          f"({'acute (<= 0)' if worst <= 0.0 else 'NOT acute (> 0)'})")
    return 0 if worst <= 0.0 else 1


def _cmd_export_exact(args) -> int:
    params = becker_mod.shock_params(args.gamma, args.mach0, v0=args.v0,
                                     rho0=args.rho0, mu=args.mu, v_inf=args.v_inf)
    x = np.linspace(args.a, args.b, args.n)
    u = becker_mod.becker_state(x, args.t, params)
    lines = ["x,density,momentum,total_energy"]
    lines += [f"{xi:.12e},{r:.12e},{m:.12e},{e:.12e}" for xi, (r, m, e) in zip(x, u)]
    text = "\n".join(lines) + "\n"
    if args.output:
        from .output import _atomic_write

        _atomic_write(args.output, text)
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="idpns",
                                description="viscous compressible flow solver")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a configured simulation")
    pr.add_argument("--config", required=True)
    pr.set_defaults(func=_cmd_run)

    pc = sub.add_parser("converge", help="grid-refinement study")
    pc.add_argument("--case", default="becker1d")
    pc.add_argument("--config", default=None)
    pc.add_argument("--grids", required=True, help="comma-separated node counts")
    pc.add_argument("--output", default=None, help="CSV path")
    pc.set_defaults(func=_cmd_converge)

    pm = sub.add_parser("mesh-info", help="mesh diagnostics incl. stiffness sign audit")
    pm.add_argument("mesh")
    pm.set_defaults(func=_cmd_mesh_info)

    pe = sub.add_parser("export-exact", help="sample the viscous-shock solution")
    pe.add_argument("--gamma", type=float, default=1.4)
    pe.add_argument("--mach0", type=float, default=3.0)
    pe.add_argument("--v0", type=float, default=1.0)
    pe.add_argument("--rho0", type=float, default=1.0)
    pe.add_argument("--mu", type=float, default=0.01)
    pe.add_argument("--v-inf", dest="v_inf", type=float, default=0.2)
    pe.add_argument("--a", type=float, default=-1.0)
    pe.add_argument("--b", type=float, default=1.5)
    pe.add_argument("--n", type=int, default=201)
    pe.add_argument("--t", type=float, default=0.0)
    pe.add_argument("--output", default=None)
    pe.set_defaults(func=_cmd_export_exact)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
