"""Boundary data application for the hyperbolic and parabolic substeps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .assembly import DiscreteOperators


@dataclass
class BoundaryCondition:
    """Nodal boundary treatment.

    ``dirichlet``: sampler (coords, t) -> conserved states, evaluated at the
    dirichlet-tagged dofs; slip-tagged dofs get their momentum projected onto
    the wall tangent.  Either part may be absent.
    """

    dirichlet: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    velocity: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def apply(self, u: np.ndarray, ops: DiscreteOperators, t: float) -> None:
        if self.dirichlet is not None and len(ops.dirichlet_dofs):
            u[ops.dirichlet_dofs] = self.dirichlet(ops.coords[ops.dirichlet_dofs], t)
        if len(ops.slip_dofs):
            dim = ops.dim
            mom = u[ops.slip_dofs, 1 : 1 + dim]
            mn = np.sum(mom * ops.slip_normals, axis=1)
            u[ops.slip_dofs, 1 : 1 + dim] = mom - mn[:, None] * ops.slip_normals

    def dirichlet_velocity(self, ops: DiscreteOperators, t: float) -> np.ndarray | None:
        """Prescribed velocity at dirichlet dofs (for the implicit solve)."""
        if not len(ops.dirichlet_dofs):
            return None
        if self.velocity is not None:
            return self.velocity(ops.coords[ops.dirichlet_dofs], t)
        if self.dirichlet is None:
            return None
        ub = self.dirichlet(ops.coords[ops.dirichlet_dofs], t)
        return ub[:, 1 : 1 + ops.dim] / ub[:, 0:1]
