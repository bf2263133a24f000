"""Relaxation of the full ghost-point system, interface conditions included.

Interior nodes take the Jacobi/Gauss-Seidel update of their own row.  The
left ghost ``u^L_{J+1}`` is driven by the flux-jump mismatch and the right
ghost ``u^R_J`` by the solution-jump mismatch, each with its own pseudo time
step (``muN_dt``, ``muD_dt``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .discretization import (
    InterfaceStencil,
    build_interface_stencil,
    flux_left,
    flux_right,
    quadratic_derivative,
)
from .grid import InteriorField, ProblemData, TwoSidedField

__all__ = [
    "MU_D_DT",
    "MU_N_SAFETY",
    "RelaxationParams",
    "SweepState",
    "IterationResult",
    "build_params",
    "jacobi_sweep",
    "gauss_seidel_sweep",
    "iterate_to_tolerance",
]

MU_D_DT = 0.9
MU_N_SAFETY = 0.9


@dataclass(frozen=True)
class RelaxationParams:
    interior_step: InteriorField
    muD_dt: float
    muN_dt: float


def build_params(p: ProblemData, st: InterfaceStencil) -> RelaxationParams:
    grid = p.grid
    h = grid.h

    def steps(g):
        gh = 0.5 * (g[:-1] + g[1:])
        return h * h / (gh[:-1] + gh[1:])

    return RelaxationParams(
        interior_step=InteriorField(grid, steps(p.gamma.left), steps(p.gamma.right)),
        muD_dt=MU_D_DT,
        muN_dt=MU_N_SAFETY * h / max(st.gammaL_alpha, st.gammaR_alpha),
    )


@dataclass
class SweepState:
    """Iterate plus everything a sweep needs; ``u`` is updated by the sweeps."""

    u: TwoSidedField
    problem: ProblemData
    stencil: InterfaceStencil = None
    params: RelaxationParams = None
    _coef: tuple = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.stencil is None:
            self.stencil = build_interface_stencil(self.problem.gamma, self.problem.grid)
        if self.params is None:
            self.params = build_params(self.problem, self.stencil)
        if self.u.grid != self.problem.grid:
            raise ValueError("iterate and problem live on different grids")

    def coefficients(self):
        # (gm, gp, den, f*h^2) per side as plain lists, for the scalar loops
        if self._coef is None:
            h2 = self.problem.grid.h ** 2
            out = []
            for g, f in (
                (self.problem.gamma.left, self.problem.f.left),
                (self.problem.gamma.right, self.problem.f.right),
            ):
                gh = 0.5 * (g[:-1] + g[1:])
                gm, gp = gh[:-1], gh[1:]
                out.append((gm.tolist(), gp.tolist(), (gm + gp).tolist(), (f * h2).tolist()))
            self._coef = tuple(out)
        return self._coef


def _ghost_increments(u: TwoSidedField, p: ProblemData, st: InterfaceStencil, prm):
    J = u.grid.J
    t = st.theta
    dN = st.gammaR_alpha * flux_right(u, st) - st.gammaL_alpha * flux_left(u, st) - p.gN
    dD = (
        (1.0 - t) * u.left[J]
        + t * u.left[J + 1]
        - (1.0 - t) * u.right[0]
        - t * u.right[1]
        + p.gD
    )
    return prm.muN_dt * dN, prm.muD_dt * dD


def jacobi_sweep(state: SweepState) -> TwoSidedField:
    """One Jacobi sweep from the old values; replaces ``state.u``."""
    u, p, st, prm = state.u, state.problem, state.stencil, state.params
    h2 = u.grid.h ** 2
    new = u.copy()
    for side in ("left", "right"):
        old, g, f = getattr(u, side), getattr(p.gamma, side), getattr(p.f, side)
        gh = 0.5 * (g[:-1] + g[1:])
        gm, gp = gh[:-1], gh[1:]
        getattr(new, side)[1:-1] = (f * h2 + gm * old[:-2] + gp * old[2:]) / (gm + gp)
    incN, incD = _ghost_increments(u, p, st, prm)
    J = u.grid.J
    new.left[J + 1] = u.left[J + 1] + incN
    new.right[0] = u.right[0] + incD
    new.left[0] = p.g0
    new.right[-1] = p.g1
    state.u = new
    return new


def gauss_seidel_sweep(state: SweepState) -> TwoSidedField:
    """One in-place sweep in the unknown order.

    ``u^L_0``, ``u^L_1..u^L_J`` (fresh left neighbours), the left ghost from
    the flux jump (fresh interior left values, old ghost, old right values),
    the right ghost from the solution jump (fresh left values), then
    ``u^R_{J+1}..u^R_N`` and ``u^R_{N+1}``.
    """
    u, p, st, prm = state.u, state.problem, state.stencil, state.params
    (gmL, gpL, denL, fL), (gmR, gpR, denR, fR) = state.coefficients()
    J = u.grid.J
    t = st.theta

    ul = u.left.tolist()
    ul[0] = p.g0
    prev = ul[0]
    for k in range(J):  # node k+1
        prev = (fL[k] + gmL[k] * prev + gpL[k] * ul[k + 2]) / denL[k]
        ul[k + 1] = prev

    ur = u.right
    wl, wr = st.flux_weights_left, st.flux_weights_right
    fluxL = quadratic_derivative(wl, ul[J - 1], ul[J], ul[J + 1])
    fluxR = quadratic_derivative(wr, ur[0], ur[1], ur[2])
    ul[J + 1] += prm.muN_dt * (st.gammaR_alpha * fluxR - st.gammaL_alpha * fluxL - p.gN)
    u.left[:] = ul

    urr = ur.tolist()
    urr[0] += prm.muD_dt * (
        (1.0 - t) * ul[J] + t * ul[J + 1] - (1.0 - t) * urr[0] - t * urr[1] + p.gD
    )
    prev = urr[0]
    for k in range(len(urr) - 2):  # node J+1+k
        prev = (fR[k] + gmR[k] * prev + gpR[k] * urr[k + 2]) / denR[k]
        urr[k + 1] = prev
    urr[-1] = p.g1
    ur[:] = urr
    return u


class IterationResult(NamedTuple):
    u: TwoSidedField
    history: list
    converged: bool


def relative_change(new: TwoSidedField, old: TwoSidedField) -> float:
    diff = max(np.max(np.abs(new.left - old.left)), np.max(np.abs(new.right - old.right)))
    scale = new.max_abs()
    if scale == 0.0:
        return 0.0 if diff == 0.0 else np.inf
    return float(diff / scale)


def iterate_to_tolerance(
    p: ProblemData,
    u0: TwoSidedField,
    tol: float = 1e-6,
    max_sweeps: int = 100_000,
    scheme: str = "gauss_seidel",
) -> IterationResult:
    """Sweep until the relative successive change drops to ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    sweep = {"gauss_seidel": gauss_seidel_sweep, "jacobi": jacobi_sweep}[scheme]
    state = SweepState(u0.copy(), p)
    history = []
    for _ in range(max_sweeps):
        old = state.u.copy()
        sweep(state)
        history.append(relative_change(state.u, old))
        if history[-1] <= tol:
            return IterationResult(state.u, history, True)
    return IterationResult(state.u, history, False)
