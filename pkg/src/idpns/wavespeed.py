"""Guaranteed upper bound on the maximum wave speed of projected Riemann problems.

Uses the two-rarefaction pressure estimate; the resulting bound is provably
an upper bound on the fastest wave of the exact Riemann fan for the ideal
gas (the test suite checks it against an exact iterative solver).
"""

from __future__ import annotations

import numpy as np

from .state import GasModel, check_admissible, pressure


def max_wavespeed_primitive(gamma, rho_l, vn_l, p_l, rho_r, vn_r, p_r) -> np.ndarray:
    """Wave-speed bound from primitive data projected on the normal.

    All arguments broadcast; returns an array of bounds (>= 0).
    """
    rho_l, vn_l, p_l, rho_r, vn_r, p_r = np.broadcast_arrays(
        *map(np.asarray, (rho_l, vn_l, p_l, rho_r, vn_r, p_r))
    )
    c_l = np.sqrt(gamma * p_l / rho_l)
    c_r = np.sqrt(gamma * p_r / rho_r)

    gm1 = gamma - 1.0
    expo = gm1 / (2.0 * gamma)
    # two-rarefaction star pressure, clamped at zero
    num = c_l + c_r - 0.5 * gm1 * (vn_r - vn_l)
    den = c_l * p_l ** (-expo) + c_r * p_r ** (-expo)
    p_star = np.where(num > 0.0, (np.maximum(num, 0.0) / den) ** (1.0 / expo), 0.0)

    gp = (gamma + 1.0) / (2.0 * gamma)
    lam_l = vn_l - c_l * np.sqrt(1.0 + gp * np.maximum((p_star - p_l) / p_l, 0.0))
    lam_r = vn_r + c_r * np.sqrt(1.0 + gp * np.maximum((p_star - p_r) / p_r, 0.0))
    return np.maximum(0.0, np.maximum(-lam_l, lam_r))


def max_wavespeed(n: np.ndarray, u_l: np.ndarray, u_r: np.ndarray, gas: GasModel) -> np.ndarray:
    """Upper bound on the fastest wave of the Riemann problem (u_l | u_r) along n.

    ``n`` has shape (k, dim) with unit rows, ``u_l``/``u_r`` shape (k, dim+2).
    For equal states the bound reduces to |v.n| + c.
    """
    u_l = np.atleast_2d(u_l)
    u_r = np.atleast_2d(u_r)
    n = np.atleast_2d(n)
    dim = n.shape[1]
    check_admissible(u_l, dim, "max_wavespeed left state")
    check_admissible(u_r, dim, "max_wavespeed right state")

    rho_l = u_l[:, 0]
    rho_r = u_r[:, 0]
    vn_l = np.sum(u_l[:, 1 : 1 + dim] * n, axis=1) / rho_l
    vn_r = np.sum(u_r[:, 1 : 1 + dim] * n, axis=1) / rho_r
    p_l = pressure(u_l, gas, dim)
    p_r = pressure(u_r, gas, dim)
    return max_wavespeed_primitive(gas.gamma, rho_l, vn_l, p_l, rho_r, vn_r, p_r)
