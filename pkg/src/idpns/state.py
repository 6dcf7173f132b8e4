"""Conserved-state algebra, ideal-gas thermodynamics and admissibility checks.

Nodal states are stored as a single array ``u`` of shape ``(n, dim + 2)``
with columns ``[rho, m_1 .. m_dim, E]``.  All thermodynamic functions are
vectorized over the node axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class AdmissibilityError(ValueError):
    """A state left the admissible set (rho > 0, e > 0)."""


@dataclass(frozen=True)
class GasModel:
    """Ideal-gas model with constant transport coefficients.

    ``kappa_over_cv`` is the combination that enters the thermal diffusion
    operator; it follows from the Prandtl number, kappa/c_v = gamma*mu/Pr.
    """

    gamma: float = 1.4
    mu: float = 0.0
    lam: float = 0.0
    prandtl: float = 0.75

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if self.mu < 0.0 or self.lam < 0.0:
            raise ValueError("viscosities must be nonnegative")
        if self.prandtl <= 0.0:
            raise ValueError("Prandtl number must be positive")

    @property
    def c_v(self) -> float:
        return 1.0 / (self.gamma - 1.0)

    @property
    def c_p(self) -> float:
        return self.gamma / (self.gamma - 1.0)

    @property
    def kappa_over_cv(self) -> float:
        return self.gamma * self.mu / self.prandtl

    def dissipation_constant(self, dim: int) -> float:
        """Constant k in s(v):grad v >= 2 mu (1-k) |e(v)|^2; lies in [0, 1)."""
        if self.mu == 0.0:
            return 0.0
        return max(0.0, (dim / 3.0) * (1.0 - 3.0 * self.lam / (2.0 * self.mu)))


@dataclass
class SolutionField:
    """Nodal conserved states over the dof set plus the current time."""

    u: np.ndarray  # (n, dim + 2)
    dim: int
    t: float = 0.0

    def __post_init__(self):
        self.u = np.ascontiguousarray(self.u, dtype=float)
        if self.u.ndim != 2 or self.u.shape[1] != self.dim + 2:
            raise ValueError(f"expected (n, {self.dim + 2}) array, got {self.u.shape}")

    @property
    def n_nodes(self) -> int:
        return self.u.shape[0]

    @property
    def rho(self) -> np.ndarray:
        return self.u[:, 0]

    @property
    def mom(self) -> np.ndarray:
        return self.u[:, 1 : 1 + self.dim]

    @property
    def ener(self) -> np.ndarray:
        return self.u[:, -1]

    def copy(self) -> "SolutionField":
        return SolutionField(self.u.copy(), self.dim, self.t)


def assemble_state(rho, vel, e_int, dim: int) -> np.ndarray:
    """Conserved array from primitive (rho, velocity, specific internal energy)."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    vel = np.asarray(vel, dtype=float).reshape(len(rho), dim)
    e_int = np.atleast_1d(np.asarray(e_int, dtype=float))
    u = np.empty((len(rho), dim + 2))
    u[:, 0] = rho
    u[:, 1 : 1 + dim] = rho[:, None] * vel
    u[:, -1] = rho * (e_int + 0.5 * np.sum(vel**2, axis=1))
    return u


def velocity(u: np.ndarray, dim: int) -> np.ndarray:
    return u[:, 1 : 1 + dim] / u[:, 0:1]


def internal_energy(u: np.ndarray, dim: int) -> np.ndarray:
    """Specific internal energy e = E/rho - |m|^2 / (2 rho^2).

    Total function; may return nonpositive values for inadmissible states.
    """
    rho = u[:, 0]
    kin = 0.5 * np.sum(u[:, 1 : 1 + dim] ** 2, axis=1)
    return u[:, -1] / rho - kin / rho**2


def is_admissible(u: np.ndarray, dim: int) -> np.ndarray:
    """Elementwise strict admissibility: rho > 0 and e > 0."""
    u = np.atleast_2d(u)
    rho = u[:, 0]
    ok = rho > 0.0
    e = np.where(ok, internal_energy(np.where(ok[:, None], u, 1.0), dim), -1.0)
    return ok & (e > 0.0)


def check_admissible(u: np.ndarray, dim: int, context: str = "state") -> None:
    ok = is_admissible(u, dim)
    if not ok.all():
        i = int(np.argmin(ok))
        rho = u[i, 0]
        if rho <= 0.0:
            raise AdmissibilityError(f"{context}: non-positive density at node {i} (rho={rho})")
        e = internal_energy(u[i : i + 1], dim)[0]
        raise AdmissibilityError(
            f"{context}: non-positive internal energy at node {i} (e={e})"
        )


class Thermo(NamedTuple):
    e: np.ndarray
    p: np.ndarray
    T: np.ndarray
    s: np.ndarray
    c: np.ndarray


def thermodynamics(u: np.ndarray, gas: GasModel, dim: int) -> Thermo:
    """Ideal-gas closure: e, p = (gamma-1) rho e, T = e/c_v, s, sound speed.

    s = log(e^{1/(gamma-1)} / rho) stored as the entropy itself.
    Raises on non-positive density or internal energy.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    check_admissible(u, dim, "thermodynamics")
    rho = u[:, 0]
    e = internal_energy(u, dim)
    p = (gas.gamma - 1.0) * rho * e
    T = e / gas.c_v
    s = gas.c_v * np.log(e) - np.log(rho)
    c = np.sqrt(gas.gamma * p / rho)
    return Thermo(e=e, p=p, T=T, s=s, c=c)


def pressure(u: np.ndarray, gas: GasModel, dim: int) -> np.ndarray:
    return (gas.gamma - 1.0) * u[:, 0] * internal_energy(u, dim)


def specific_entropy(u: np.ndarray, gas: GasModel, dim: int) -> np.ndarray:
    rho = u[:, 0]
    e = internal_energy(u, dim)
    return gas.c_v * np.log(e) - np.log(rho)


def flux(u: np.ndarray, gas: GasModel, dim: int) -> np.ndarray:
    """Euler flux f(u), shape (n, dim+2, dim)."""
    n = u.shape[0]
    rho = u[:, 0]
    m = u[:, 1 : 1 + dim]
    E = u[:, -1]
    v = m / rho[:, None]
    p = pressure(u, gas, dim)
    f = np.empty((n, dim + 2, dim))
    f[:, 0, :] = m
    for k in range(dim):
        f[:, 1 + k, :] = v * m[:, k : k + 1]
        f[:, 1 + k, k] += p
    f[:, -1, :] = v * (E + p)[:, None]
    return f


def entropy_and_derivative(u: np.ndarray, gas: GasModel, dim: int):
    """Mathematical entropy eta = rho s and its gradient d eta / du.

    Returns (eta (n,), deta (n, dim+2)).
    """
    rho = u[:, 0]
    m = u[:, 1 : 1 + dim]
    e = internal_energy(u, dim)
    v = m / rho[:, None]
    s = gas.c_v * np.log(e) - np.log(rho)
    eta = rho * s
    cv = gas.c_v
    deta = np.empty_like(u)
    v2 = np.sum(v**2, axis=1)
    deta[:, 0] = s - 1.0 - cv + cv * 0.5 * v2 / e
    deta[:, 1 : 1 + dim] = -cv * v / e[:, None]
    deta[:, -1] = cv / e
    return eta, deta
