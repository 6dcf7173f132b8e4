"""Run configuration: flat INI-style files parsed with configparser.

Sections: [mesh], [gas], [initial], [time], [limiter], [output].  Every key
has a default, so a minimal file only states what differs from the Becker
baseline.  ``build_problem`` turns a RunConfig into ready-to-run objects.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import becker as becker_mod
from .assembly import assemble_operators
from .boundary import BoundaryCondition
from .driver import TimeControls
from .hyperbolic import HyperbolicConfig
from .mesh import generate_structured_tri_2d, generate_uniform_1d, import_mesh
from .parabolic import ParabolicConfig
from .state import GasModel, SolutionField, assemble_state


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # mesh
    mesh_kind: str = "uniform1d"
    mesh_path: str = ""
    a: float = -1.0
    b: float = 1.5
    n_nodes: int = 101
    nx: int = 32
    ny: int = 16
    box: tuple = (0.0, 1.0, 0.0, 0.5)
    periodic: bool = False
    boundary_tag: str = "dirichlet"
    side_tags: dict = dc_field(default_factory=dict)
    # gas
    gamma: float = 1.4
    mu: float = 0.01
    lam: float = 0.0
    prandtl: float = 0.75
    # initial condition
    case: str = "becker"
    mach0: float = 3.0
    v0: float = 1.0
    rho0: float = 1.0
    v_inf: float = 0.2
    const_state: tuple = (1.0, 0.0, 1.0)  # rho, velocity components, e
    # time
    cfl: float = 0.4
    t_final: float = 3.0
    max_steps: int = 10**7
    audit_every: int = 1
    # limiter
    high_order: bool = True
    relax_bounds: bool = False
    # output
    out_dir: str = "out"
    snapshots: tuple = ()
    reproducible: bool = True
    quadrature: str = "lumped"


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _get(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            return _BOOL[raw.strip().lower()]
        return cast(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: cannot parse as {cast.__name__}") from exc


def _floats(raw: str) -> tuple:
    raw = raw.strip()
    return tuple(float(tok) for tok in raw.split(",")) if raw else ()


def load_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    cfg = RunConfig()
    cfg.mesh_kind = _get(parser, "mesh", "kind", str, cfg.mesh_kind)
    cfg.mesh_path = _get(parser, "mesh", "path", str, cfg.mesh_path)
    cfg.a = _get(parser, "mesh", "a", float, cfg.a)
    cfg.b = _get(parser, "mesh", "b", float, cfg.b)
    cfg.n_nodes = _get(parser, "mesh", "n", int, cfg.n_nodes)
    cfg.nx = _get(parser, "mesh", "nx", int, cfg.nx)
    cfg.ny = _get(parser, "mesh", "ny", int, cfg.ny)
    if parser.has_option("mesh", "box"):
        cfg.box = _floats(parser.get("mesh", "box"))
    cfg.periodic = _get(parser, "mesh", "periodic", bool, cfg.periodic)
    cfg.boundary_tag = _get(parser, "mesh", "tag", str, cfg.boundary_tag)
    for side in ("left", "right", "bottom", "top"):
        if parser.has_option("mesh", side):
            cfg.side_tags[side] = parser.get("mesh", side).strip()

    cfg.gamma = _get(parser, "gas", "gamma", float, cfg.gamma)
    cfg.mu = _get(parser, "gas", "mu", float, cfg.mu)
    cfg.lam = _get(parser, "gas", "lambda", float, cfg.lam)
    cfg.prandtl = _get(parser, "gas", "prandtl", float, cfg.prandtl)

    cfg.case = _get(parser, "initial", "case", str, cfg.case)
    cfg.mach0 = _get(parser, "initial", "mach0", float, cfg.mach0)
    cfg.v0 = _get(parser, "initial", "v0", float, cfg.v0)
    cfg.rho0 = _get(parser, "initial", "rho0", float, cfg.rho0)
    cfg.v_inf = _get(parser, "initial", "v_inf", float, cfg.v_inf)
    if parser.has_option("initial", "constant"):
        cfg.const_state = _floats(parser.get("initial", "constant"))

    cfg.cfl = _get(parser, "time", "cfl", float, cfg.cfl)
    cfg.t_final = _get(parser, "time", "t_final", float, cfg.t_final)
    cfg.max_steps = _get(parser, "time", "max_steps", int, cfg.max_steps)
    cfg.audit_every = _get(parser, "time", "audit_every", int, cfg.audit_every)

    cfg.high_order = _get(parser, "limiter", "high_order", bool, cfg.high_order)
    cfg.relax_bounds = _get(parser, "limiter", "relax_bounds", bool, cfg.relax_bounds)

    cfg.out_dir = _get(parser, "output", "directory", str, cfg.out_dir)
    if parser.has_option("output", "snapshots"):
        cfg.snapshots = _floats(parser.get("output", "snapshots"))
    cfg.reproducible = _get(parser, "output", "reproducible", bool, cfg.reproducible)
    cfg.quadrature = _get(parser, "output", "quadrature", str, cfg.quadrature)

    if cfg.mesh_kind == "file" and not os.path.isfile(cfg.mesh_path):
        raise ConfigError(f"[mesh] path does not exist: {cfg.mesh_path}")
    if cfg.case not in ("becker", "sod2d", "constant", "sod1d"):
        raise ConfigError(f"[initial] case must be becker|sod1d|sod2d|constant, got {cfg.case!r}")
    return cfg


def build_mesh(cfg: RunConfig):
    if cfg.mesh_kind == "uniform1d":
        return generate_uniform_1d(cfg.a, cfg.b, cfg.n_nodes, periodic=cfg.periodic,
                                   tag=cfg.boundary_tag)
    if cfg.mesh_kind == "structured2d":
        return generate_structured_tri_2d(cfg.box, cfg.nx, cfg.ny,
                                          tags=cfg.side_tags or None)
    if cfg.mesh_kind == "file":
        return import_mesh(cfg.mesh_path)
    raise ConfigError(f"unknown mesh kind {cfg.mesh_kind!r}")


def _sod2d_state(coords: np.ndarray, gamma: float) -> np.ndarray:
    rho = np.where(coords[:, 0] < 0.5, 120.0, 1.2)
    e = 1.0 / (gamma * (gamma - 1.0))  # p = rho/gamma with p = (gamma-1) rho e
    vel = np.zeros_like(coords)
    return assemble_state(rho, vel, np.full_like(rho, e), 2)


def _sod1d_state(x: np.ndarray, gamma: float) -> np.ndarray:
    left = x < 0.5 * (x.min() + x.max())
    rho = np.where(left, 1.0, 0.125)
    p = np.where(left, 1.0, 0.1)
    e = p / ((gamma - 1.0) * rho)
    return assemble_state(rho, np.zeros((len(x), 1)), e, 1)


def build_problem(cfg: RunConfig):
    """Returns (field, ops, gas, bc, controls, hcfg, pcfg, exact_sampler).

    ``exact_sampler`` is (coords, t) -> conserved states, or None when the
    case has no closed-form solution.
    """
    mesh = build_mesh(cfg)
    gas = GasModel(gamma=cfg.gamma, mu=cfg.mu, lam=cfg.lam, prandtl=cfg.prandtl)
    ops = assemble_operators(mesh, gas)
    coords = ops.coords
    exact = None

    if cfg.case == "becker":
        params = becker_mod.shock_params(cfg.gamma, cfg.mach0, v0=cfg.v0,
                                         rho0=cfg.rho0, mu=cfg.mu, v_inf=cfg.v_inf)
        if mesh.dim == 1:
            exact = lambda c, t: becker_mod.becker_state(c[:, 0], t, params)
        else:
            exact = lambda c, t: becker_mod.becker_state_2d(c, t, params)
        u0 = exact(coords, 0.0)
    elif cfg.case == "sod2d":
        if mesh.dim != 2:
            raise ConfigError("case sod2d needs a 2D mesh")
        u0 = _sod2d_state(coords, cfg.gamma)
    elif cfg.case == "sod1d":
        u0 = _sod1d_state(coords[:, 0], cfg.gamma)
    else:
        rho, e = cfg.const_state[0], cfg.const_state[-1]
        vel = np.broadcast_to(np.array(cfg.const_state[1:-1]), (len(coords), mesh.dim))
        u0 = assemble_state(np.full(len(coords), rho), np.array(vel),
                            np.full(len(coords), e), mesh.dim)

    field = SolutionField(u0, mesh.dim, 0.0)
    bc = BoundaryCondition(dirichlet=exact) if exact is not None else BoundaryCondition()
    if cfg.case == "sod2d":
        bc = BoundaryCondition(velocity=lambda c, t: np.zeros((len(c), 2)))
    controls = TimeControls(cfl=cfg.cfl, t_final=cfg.t_final,
                            max_steps=cfg.max_steps, audit_every=cfg.audit_every)
    hcfg = HyperbolicConfig(use_high_order=cfg.high_order, relax_bounds=cfg.relax_bounds)
    pcfg = ParabolicConfig()
    return field, ops, gas, bc, controls, hcfg, pcfg, exact
