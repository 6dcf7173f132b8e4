"""Exact steady/traveling viscous-shock solution (ideal gas, Pr = 3/4).

The velocity profile v(x) is given implicitly by a monotone map x(v) on
(v1, v0); density and internal energy follow in closed form.  A Galilean
shift with translation velocity v_inf turns the steady profile into a
traveling wave used for initialization, Dirichlet data and error
measurement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import GasModel, assemble_state

_PRANDTL = 0.75  # the closed-form solution only exists at this Prandtl number


@dataclass(frozen=True)
class BeckerParams:
    gamma: float
    mu: float
    v0: float
    v1: float
    rho0: float
    v_inf: float = 0.0

    @property
    def m0(self) -> float:
        return self.rho0 * self.v0

    @property
    def v01(self) -> float:
        return float(np.sqrt(self.v0 * self.v1))

    @property
    def kappa_over_cv(self) -> float:
        # kappa = mu c_p / Pr with Pr = 3/4, so kappa/c_v = gamma mu / Pr
        return self.gamma * self.mu / _PRANDTL

    @property
    def length_scale(self) -> float:
        """The prefactor of the implicit profile equation."""
        return 2.0 / (self.gamma + 1.0) * self.kappa_over_cv / self.m0

    def gas(self) -> GasModel:
        return GasModel(gamma=self.gamma, mu=self.mu, lam=0.0, prandtl=_PRANDTL)


def shock_params(gamma: float, mach0: float, v0: float = 1.0, rho0: float = 1.0,
                 mu: float = 0.01, v_inf: float = 0.0) -> BeckerParams:
    """Parameters from the pre-shock Mach number: v1 = (gamma-1+2/M0^2)/(gamma+1) * v0."""
    if mach0 <= 1.0:
        raise ValueError(f"pre-shock Mach number must exceed 1, got {mach0}")
    v1 = v0 * (gamma - 1.0 + 2.0 * mach0**-2) / (gamma + 1.0)
    return BeckerParams(gamma=gamma, mu=mu, v0=v0, v1=v1, rho0=rho0, v_inf=v_inf)


def profile_position(v, params: BeckerParams) -> np.ndarray:
    """Forward map v -> x on (v1, v0)."""
    v = np.asarray(v, dtype=float)
    p = params
    dv = p.v0 - p.v1
    with np.errstate(divide="ignore"):  # endpoints map to +-inf, by design
        return p.length_scale * (
            p.v0 / dv * np.log((p.v0 - v) / (p.v0 - p.v01))
            - p.v1 / dv * np.log((v - p.v1) / (p.v01 - p.v1))
        )


def _position_derivative(v, params: BeckerParams) -> np.ndarray:
    p = params
    dv = p.v0 - p.v1
    return p.length_scale * (-p.v0 / dv / (p.v0 - v) - p.v1 / dv / (v - p.v1))


def invert_profile(x, params: BeckerParams, tol: float = 1e-13, max_newton: int = 100) -> np.ndarray:
    """Velocity v with profile_position(v) = x, solved by safeguarded Newton.

    x -> v is a decreasing bijection; for |x| beyond the resolvable range the
    corresponding asymptote (v0 or v1) is returned to working precision.
    """
    p = params
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)

    eps = 1e-14 * (p.v0 - p.v1)
    lo = np.full(x.shape, p.v1 + eps)  # x(lo) large positive
    hi = np.full(x.shape, p.v0 - eps)  # x(hi) large negative
    x_lo = profile_position(lo, p)
    x_hi = profile_position(hi, p)

    v = np.full(x.shape, p.v01)
    done_lo = x >= x_lo
    done_hi = x <= x_hi
    v[done_lo] = p.v1
    v[done_hi] = p.v0
    active = ~(done_lo | done_hi)

    # Newton with bisection safeguard on the bracket [lo, hi]
    for _ in range(max_newton):
        if not active.any():
            break
        a = np.where(active)[0]
        res = profile_position(v[a], p) - x[a]
        conv = np.abs(res) <= tol * (1.0 + np.abs(x[a]))
        active[a[conv]] = False
        a = a[~conv]
        if a.size == 0:
            break
        res = res[~conv]
        pos = res > 0.0  # x(v) too large -> v too small
        lo[a[pos]] = np.maximum(lo[a[pos]], v[a[pos]])
        hi[a[~pos]] = np.minimum(hi[a[~pos]], v[a[~pos]])
        cand = v[a] - res / _position_derivative(v[a], p)
        bad = (cand <= lo[a]) | (cand >= hi[a])
        cand[bad] = 0.5 * (lo[a][bad] + hi[a][bad])
        v[a] = cand

    return float(v[0]) if scalar else v


def becker_profile(x, params: BeckerParams):
    """Steady profile (rho, v, e) at positions x."""
    p = params
    v = invert_profile(x, p)
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    rho = p.m0 / v_arr
    e = (1.0 / (2.0 * p.gamma)) * ((p.gamma + 1.0) / (p.gamma - 1.0) * p.v01**2 - v_arr**2)
    if np.ndim(x) == 0:
        return float(rho[0]), float(v_arr[0]), float(e[0])
    return rho, v_arr, e


def becker_state(x, t: float, params: BeckerParams) -> np.ndarray:
    """Traveling-wave conserved state u(x, t), shape (n, 3) for 1D positions.

    Galilean shift: xi = x - v_inf t, lab velocity v_inf + v(xi).
    """
    p = params
    xi = np.atleast_1d(np.asarray(x, dtype=float)) - p.v_inf * t
    rho, v, e = becker_profile(xi, p)
    rho = np.atleast_1d(rho)
    v_lab = np.atleast_1d(v) + p.v_inf
    e = np.atleast_1d(e)
    return assemble_state(rho, v_lab[:, None], e, dim=1)


def becker_state_2d(coords: np.ndarray, t: float, params: BeckerParams) -> np.ndarray:
    """Same traveling wave extended uniformly in y over 2D node coordinates."""
    p = params
    xi = coords[:, 0] - p.v_inf * t
    rho, v, e = becker_profile(xi, p)
    vel = np.zeros((len(xi), 2))
    vel[:, 0] = np.atleast_1d(v) + p.v_inf
    return assemble_state(np.atleast_1d(rho), vel, np.atleast_1d(e), dim=2)
