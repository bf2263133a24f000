"""Dirichlet-Neumann domain decomposition on the ghost-point discretization.

The left subproblem takes a Dirichlet value at the interface from the last
right iterate; the right subproblem takes the flux of the new left iterate.
Both use the interface stencils of the coupled scheme, so a converged
iteration lands on the same discrete solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .discretization import InterfaceStencil, build_interface_stencil, flux_left
from .grid import ProblemData, TwoSidedField

__all__ = ["DdmState", "DdmResult", "ddm_iterate", "interface_trace"]


@dataclass
class DdmState:
    uL: np.ndarray
    uR: np.ndarray
    trace_history: list = field(default_factory=list)
    change_history: list = field(default_factory=list)
    step_history: list = field(default_factory=list)
    iterations: int = 0


@dataclass
class DdmResult:
    u: TwoSidedField
    converged: bool
    diverged: bool
    state: DdmState

    @property
    def history(self) -> list:
        return self.state.change_history

    def contraction(self) -> float:
        """Geometric-mean ratio of successive absolute trace changes (nan if
        fewer than two nonzero changes were recorded)."""
        ch = [c for c in self.state.step_history if c > 0]
        if len(ch) < 2:
            return float("nan")
        return float((ch[-1] / ch[0]) ** (1.0 / (len(ch) - 1)))


def interface_trace(uR: np.ndarray, st: InterfaceStencil) -> float:
    """Right-side linear interpolant at the interface."""
    c, d = st.dirichlet_weights_right
    return c * uR[0] + d * uR[1]


def _tridiagonal_side(g: np.ndarray, f: np.ndarray, h: float):
    """Interior rows built from ``g``, divided by their diagonal.

    Unit diagonals keep these rows on the scale of the boundary and interface
    rows; with a coefficient of 1e10 the unscaled elimination swamps them.
    """
    gm, gp = 0.5 * (g[:-2] + g[1:-1]), 0.5 * (g[1:-1] + g[2:])
    d = gm + gp
    return -gm / d, -gp / d, f * h * h / d


def _solve_left(p: ProblemData, st: InterfaceStencil, value: float) -> np.ndarray:
    """Unknowns u^L_0..u^L_{J+1}; the last row pins the interpolant at alpha."""
    grid = p.grid
    n = grid.J + 2
    lo, up, rhs = _tridiagonal_side(p.gamma.left, p.f.left, grid.h)
    ab = np.zeros((3, n))
    b = np.empty(n)
    ab[1, 0] = 1.0
    b[0] = p.g0
    ab[0, 2:n] = up
    ab[1, 1 : n - 1] = 1.0
    ab[2, 0 : n - 2] = lo
    b[1 : n - 1] = rhs
    a0, a1 = st.dirichlet_weights_left
    ab[2, n - 2] = a0
    ab[1, n - 1] = a1
    b[n - 1] = value
    return solve_banded((1, 1), ab, b)


def _solve_right(p: ProblemData, st: InterfaceStencil, flux: float) -> np.ndarray:
    """Unknowns u^R_J..u^R_{N+1}; the first row imposes the interface flux."""
    grid = p.grid
    n = grid.N + 2 - grid.J
    lo, up, rhs = _tridiagonal_side(p.gamma.right, p.f.right, grid.h)
    # banded storage with one sub- and two super-diagonals
    ab = np.zeros((4, n))
    b = np.empty(n)
    w = np.asarray(st.flux_weights_right) * st.gammaR_alpha
    scale = np.max(np.abs(w))
    ab[2, 0], ab[1, 1], ab[0, 2] = w / scale
    b[0] = flux / scale
    ab[1, 2:n] = up
    ab[2, 1 : n - 1] = 1.0
    ab[3, 0 : n - 2] = lo
    b[1 : n - 1] = rhs
    ab[2, n - 1] = 1.0
    b[n - 1] = p.g1
    return solve_banded((1, 2), ab, b)


def ddm_iterate(
    p: ProblemData,
    tol: float = 1e-6,
    max_iters: int = 200,
    initial_trace: float = 0.0,
    growth_limit: float = 10.0,
) -> DdmResult:
    """Alternate left (Dirichlet) and right (flux) solves.

    Stops when the relative change of the interface trace is at most
    ``tol``; flags divergence once the absolute change exceeds
    ``growth_limit`` times the smallest absolute change seen so far.
    """
    if tol <= 0 or max_iters < 1:
        raise ValueError("tol must be positive and max_iters at least 1")
    grid = p.grid
    st = build_interface_stencil(p.gamma, grid)
    state = DdmState(np.zeros(grid.J + 2), np.zeros(grid.N + 2 - grid.J))
    trace = float(initial_trace)
    state.trace_history.append(trace)
    smallest = np.inf
    converged = diverged = False
    for _ in range(max_iters):
        state.uL = _solve_left(p, st, trace - p.gD)
        left = TwoSidedField(grid, state.uL, state.uR)
        state.uR = _solve_right(p, st, p.gN + st.gammaL_alpha * flux_left(left, st))
        new = interface_trace(state.uR, st)
        step = abs(new - trace)
        change = step / max(abs(new), np.finfo(float).tiny)
        state.iterations += 1
        state.trace_history.append(new)
        state.step_history.append(step)
        state.change_history.append(change)
        trace = new
        if change <= tol:
            converged = True
            break
        if not np.isfinite(step) or step > growth_limit * smallest:
            diverged = True
            break
        smallest = min(smallest, step)
    u = TwoSidedField(grid, state.uL.copy(), state.uR.copy())
    return DdmResult(u, converged, diverged, state)
