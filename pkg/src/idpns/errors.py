"""Consolidated error indicators against a nodal exact-solution sampler."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import DiscreteOperators
from .state import SolutionField


@dataclass
class ErrorReport:
    n_nodes: int
    delta1: float
    delta2: float
    delta_inf: float
    per_component: dict


def _norms(err: np.ndarray, ref: np.ndarray, m: np.ndarray,
           cells: np.ndarray | None, measures: np.ndarray | None,
           quadrature: str) -> tuple[float, float, float]:
    """Relative L1, L2, Linf norms of one component via selected quadrature."""
    if quadrature == "lumped":
        n1 = m @ np.abs(err)
        r1 = m @ np.abs(ref)
        n2 = np.sqrt(m @ err**2)
        r2 = np.sqrt(m @ ref**2)
    elif quadrature == "cellwise":
        # midpoint-of-edges rule, exact for quadratics of P1 data in 1D/2D
        nloc = cells.shape[1]
        pairs = [(a, b) for a in range(nloc) for b in range(a + 1, nloc)]
        w = measures / len(pairs)
        n1 = n2 = r1 = r2 = 0.0
        for a, b in pairs:
            em = 0.5 * (err[cells[:, a]] + err[cells[:, b]])
            rm = 0.5 * (ref[cells[:, a]] + ref[cells[:, b]])
            n1 += w @ np.abs(em)
            r1 += w @ np.abs(rm)
            n2 += w @ em**2
            r2 += w @ rm**2
        n2, r2 = np.sqrt(n2), np.sqrt(r2)
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    ninf = np.abs(err).max()
    rinf = np.abs(ref).max()
    if min(r1, r2, rinf) == 0.0:
        raise ValueError("exact solution has a vanishing norm; relative error undefined")
    return n1 / r1, n2 / r2, ninf / rinf


def compute_delta_q(field: SolutionField, exact: np.ndarray,
                    ops: DiscreteOperators, quadrature: str = "lumped") -> ErrorReport:
    """delta_q = relative error of rho plus momentum plus total energy, q in {1,2,inf}.

    Momentum components are combined through their Euclidean magnitude so the
    indicator has one additive term per physical field.
    """
    dim = field.dim
    m = ops.m_lumped
    cells, measures = ops.cells, ops.cell_measure
    per = {}
    totals = np.zeros(3)
    mom_err = field.u[:, 1 : 1 + dim] - exact[:, 1 : 1 + dim]
    mom_ref = exact[:, 1 : 1 + dim]
    comps = [
        ("rho", field.u[:, 0] - exact[:, 0], exact[:, 0]),
        ("momentum", np.linalg.norm(mom_err, axis=1), np.linalg.norm(mom_ref, axis=1)),
        ("energy", field.u[:, -1] - exact[:, -1], exact[:, -1]),
    ]
    for name, err, ref in comps:
        d1, d2, dinf = _norms(err, ref, m, cells, measures, quadrature)
        per[name] = (d1, d2, dinf)
        totals += (d1, d2, dinf)
    return ErrorReport(
        n_nodes=len(m),
        delta1=float(totals[0]),
        delta2=float(totals[1]),
        delta_inf=float(totals[2]),
        per_component=per,
    )


def convergence_rate(delta_coarse: float, delta_fine: float,
                     h_coarse: float, h_fine: float) -> float:
    return float(np.log(delta_coarse / delta_fine) / np.log(h_coarse / h_fine))
