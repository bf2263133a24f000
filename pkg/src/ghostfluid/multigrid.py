"""Geometric multigrid for the ghost-point interface system.

Each level re-discretizes the operator at its own spacing (coefficients are
injected from the finest nodes, ghosts re-extrapolated).  Defects are
restricted separately on each side of the interface; the two interface
defects are scalars and are copied unchanged.  Corrections are prolongated by
linear interpolation, again side by side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discretization import (
    InterfaceStencil,
    build_interface_stencil,
    compute_defect,
    direct_solve,
    extrapolate_gamma,
)
from .grid import GridError, GridSpec, InteriorField, ProblemData, TwoSidedField, build_grid
from .relaxation import (
    RelaxationParams,
    SweepState,
    build_params,
    gauss_seidel_sweep,
    relative_change,
)

__all__ = [
    "MgLevel",
    "MgParams",
    "CycleReport",
    "ConvergenceFailure",
    "build_hierarchy",
    "restrict_defect",
    "restrict_interface_defects",
    "prolongate_correction",
    "coarse_solve",
    "cycle",
    "solve_multigrid",
    "estimate_convergence_factor",
    "coarsest_valid_intervals",
    "random_initial_guess",
]


class ConvergenceFailure(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class MgLevel:
    grid: GridSpec
    gamma: TwoSidedField
    stencil: InterfaceStencil
    params: RelaxationParams


@dataclass(frozen=True)
class MgParams:
    nu1: int = 1
    nu2: int = 1
    cycle: str = "v"
    omega1: float = 0.5
    coarsest_intervals: int = 16
    tol: float = 1e-6
    max_cycles: int = 100

    def __post_init__(self):
        if self.nu1 < 0 or self.nu2 < 0:
            raise ValueError("sweep counts must be non-negative")
        if self.cycle not in ("v", "w", "tgcs"):
            raise ValueError(f"cycle must be 'v', 'w' or 'tgcs', got {self.cycle!r}")
        if not 0.0 < self.omega1 <= 1.0:
            raise ValueError(f"omega1 must lie in (0, 1], got {self.omega1}")
        if self.coarsest_intervals < 8 or not _is_pow2(self.coarsest_intervals):
            raise ValueError(
                f"coarsest_intervals must be a power of two >= 8, got {self.coarsest_intervals}"
            )
        if self.tol <= 0 or self.max_cycles < 1:
            raise ValueError("tol must be positive and max_cycles at least 1")

    @property
    def delta(self) -> int:
        return 2 if self.cycle == "w" else 1


@dataclass
class CycleReport:
    """Per-cycle diagnostics.

    ``residual_history[0]`` is the interior defect of the initial guess and
    ``residual_history[m]`` the one after cycle ``m``; ``rho_history[m-1]``
    is ``residual_history[m] / residual_history[m-1]``.
    """

    residual_history: list = field(default_factory=list)
    rho_history: list = field(default_factory=list)
    change_history: list = field(default_factory=list)
    cycles_run: int = 0
    converged: bool = False


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _level(grid: GridSpec, gamma: TwoSidedField) -> MgLevel:
    st = build_interface_stencil(gamma, grid)
    dummy = ProblemData(gamma, InteriorField(grid))
    return MgLevel(grid, gamma, st, build_params(dummy, st))


def build_hierarchy(p: ProblemData, mgp: MgParams) -> list[MgLevel]:
    """Levels from the finest grid down to ``mgp.coarsest_intervals``.

    A ``tgcs`` cycle always gets exactly two levels.
    """
    fine = p.grid
    n = fine.intervals
    if not _is_pow2(n):
        raise GridError(f"finest grid must have a power-of-two interval count, got {n}")
    coarsest = n // 2 if mgp.cycle == "tgcs" else mgp.coarsest_intervals
    if coarsest > n:
        raise GridError(f"coarsest grid ({coarsest} intervals) is finer than the finest ({n})")
    levels = [_level(fine, p.gamma)]
    # non-ghost nodal coefficients of the finest grid, by node index
    gl_fine = p.gamma.left[:-1]
    gr_fine = p.gamma.right[1:]
    J_fine = fine.J
    step = 1
    while levels[-1].grid.intervals > coarsest:
        step *= 2
        m = n // step
        try:
            grid = build_grid(m - 1, fine.alpha)
        except GridError as exc:
            raise GridError(f"level with {m} intervals is not admissible: {exc}") from None
        left_nodes = np.arange(0, grid.J + 1) * step
        right_nodes = np.arange(grid.J + 1, grid.N + 2) * step
        gamma = extrapolate_gamma(
            gl_fine[left_nodes], gr_fine[right_nodes - (J_fine + 1)], grid
        )
        levels.append(_level(grid, gamma))
    return levels


def coarsest_valid_intervals(intervals: int, alpha: float, minimum: int = 8) -> int:
    """Smallest admissible power-of-two level reachable from ``intervals``."""
    best = intervals
    m = intervals
    while m // 2 >= minimum:
        m //= 2
        try:
            build_grid(m - 1, alpha)
        except GridError:
            break
        best = m
    return best


def restrict_defect(
    r: InteriorField, fine: GridSpec, coarse: GridSpec, omega1: float = 0.5
) -> InteriorField:
    """Side-by-side restriction of the interior defect.

    Full weighting wherever the whole same-side stencil exists; next to the
    interface the left side falls back to ``omega1*r(2i) + (1-omega1)*r(2i-1)``
    and the right side to ``(r(2i) + r(2i+1))/2``.
    """
    Jf, Jc, Nc = fine.J, coarse.J, coarse.N
    rl = np.concatenate([[np.nan], r.left])  # rl[j] = r at node j, 1..Jf
    rr = r.right  # rr[k] = r at node Jf+1+k

    i = np.arange(1, Jc + 1)
    left = np.empty(Jc)
    full = 2 * i + 1 <= Jf
    fi = 2 * i[full]
    left[full] = 0.25 * rl[fi - 1] + 0.5 * rl[fi] + 0.25 * rl[fi + 1]
    if not full[-1]:
        j = 2 * Jc
        left[-1] = omega1 * rl[j] + (1.0 - omega1) * rl[j - 1]

    i = np.arange(Jc + 1, Nc + 1)
    right = np.empty(Nc - Jc)
    full = 2 * i - 1 >= Jf + 1
    fi = 2 * i[full] - (Jf + 1)
    right[full] = 0.25 * rr[fi - 1] + 0.5 * rr[fi] + 0.25 * rr[fi + 1]
    if not full[0]:
        k = 2 * (Jc + 1) - (Jf + 1)
        right[0] = 0.5 * (rr[k] + rr[k + 1])
    return InteriorField(coarse, left, right)


def restrict_interface_defects(dD: float, dN: float) -> tuple[float, float]:
    return dD, dN


def prolongate_correction(e: TwoSidedField, coarse: GridSpec, fine: GridSpec) -> TwoSidedField:
    """Linear interpolation on each side, ghost values included."""

    def side(values, first_coarse, nodes):
        # values[k] lives on coarse node first_coarse + k
        even = nodes % 2 == 0
        out = np.empty(len(nodes))
        out[even] = values[nodes[even] // 2 - first_coarse]
        lo = (nodes[~even] - 1) // 2 - first_coarse
        out[~even] = 0.5 * (values[lo] + values[lo + 1])
        return out

    return TwoSidedField(
        fine,
        side(e.left, 0, fine.left_nodes),
        side(e.right, coarse.J, fine.right_nodes),
    )


def coarse_solve(level: MgLevel, rhs: ProblemData) -> TwoSidedField:
    return direct_solve(rhs, level.stencil)


def _coarse_problem(level: MgLevel, r: InteriorField, dD: float, dN: float) -> ProblemData:
    return ProblemData(level.gamma, r, 0.0, 0.0, dD, dN)


def cycle(
    levels: list[MgLevel], k: int, u: TwoSidedField, problem: ProblemData, mgp: MgParams
) -> TwoSidedField:
    """One multigrid cycle on level ``k`` for ``problem``; updates ``u`` in place."""
    lvl = levels[k]
    if k == len(levels) - 1:
        e = coarse_solve(lvl, problem)
        u.left[:] = e.left
        u.right[:] = e.right
        return u
    state = SweepState(u, problem, lvl.stencil, lvl.params)
    for _ in range(mgp.nu1):
        gauss_seidel_sweep(state)
    d = compute_defect(problem, u, lvl.stencil)
    coarse = levels[k + 1]
    dD, dN = restrict_interface_defects(d.dD, d.dN)
    cp = _coarse_problem(
        coarse, restrict_defect(d.interior, lvl.grid, coarse.grid, mgp.omega1), dD, dN
    )
    e = TwoSidedField(coarse.grid)
    for _ in range(mgp.delta):
        cycle(levels, k + 1, e, cp, mgp)
    ef = prolongate_correction(e, coarse.grid, lvl.grid)
    u.left += ef.left
    u.right += ef.right
    for _ in range(mgp.nu2):
        gauss_seidel_sweep(state)
    return u


def solve_multigrid(
    p: ProblemData,
    mgp: MgParams = MgParams(),
    u0: TwoSidedField | None = None,
    raise_on_failure: bool = False,
) -> tuple[TwoSidedField, CycleReport]:
    """Cycle from ``u0`` (zero by default) until the relative successive
    change in max norm is at most ``mgp.tol``."""
    levels = build_hierarchy(p, mgp)
    u = TwoSidedField(p.grid) if u0 is None else u0.copy()
    report = CycleReport()
    report.residual_history.append(compute_defect(p, u, levels[0].stencil).interior_norm())
    for _ in range(mgp.max_cycles):
        old = u.copy()
        cycle(levels, 0, u, p, mgp)
        report.cycles_run += 1
        res = compute_defect(p, u, levels[0].stencil).interior_norm()
        prev = report.residual_history[-1]
        report.residual_history.append(res)
        report.rho_history.append(res / prev if prev > 0 else float("nan"))
        report.change_history.append(relative_change(u, old))
        if report.change_history[-1] <= mgp.tol:
            report.converged = True
            break
    if not report.converged and raise_on_failure:
        raise ConvergenceFailure(
            f"no convergence to tol={mgp.tol:g} in {mgp.max_cycles} cycles", report
        )
    return u, report


_UNDERFLOW = 1e-280


def random_initial_guess(grid: GridSpec, seed: int = 0) -> TwoSidedField:
    """Values in [-1, 1] from a fixed seed, boundary entries zero."""
    rng = np.random.default_rng(seed)
    u = TwoSidedField(grid, rng.uniform(-1, 1, grid.J + 2), rng.uniform(-1, 1, grid.N + 2 - grid.J))
    u.left[0] = 0.0
    u.right[-1] = 0.0
    return u


def estimate_convergence_factor(
    p_homogeneous: ProblemData,
    u0: TwoSidedField | None = None,
    mgp: MgParams = MgParams(max_cycles=300),
    seed: int = 0,
    window: int = 8,
    rel_tol: float = 1e-2,
) -> tuple[float, CycleReport]:
    """Asymptotic per-cycle reduction of the interior defect.

    The per-cycle ratios of a homogeneous problem can oscillate when the
    dominant eigenvalues of the cycle are complex, so the settling test is
    applied to their geometric mean over the last ``window`` cycles, compared
    with the mean over the ``window`` cycles before those; a window of 1 is
    the raw ratio against the previous one.  The iterate is rescaled between cycles (the
    problem is linear and homogeneous) so long runs cannot underflow.
    """
    p = p_homogeneous
    if any(v != 0 for v in (p.g0, p.g1, p.gD, p.gN)) or np.any(p.f.values() != 0):
        raise ValueError("convergence factor is measured on the homogeneous problem")
    if window < 1:
        raise ValueError("window must be at least 1")
    levels = build_hierarchy(p, mgp)
    u = random_initial_guess(p.grid, seed) if u0 is None else u0.copy()
    report = CycleReport()
    r0 = compute_defect(p, u, levels[0].stencil).interior_norm()
    if r0 == 0:
        raise ValueError("initial guess has zero defect")
    report.residual_history.append(r0)
    log_res = [np.log(r0)]
    smoothed = []
    for m in range(1, mgp.max_cycles + 1):
        prev = compute_defect(p, u, levels[0].stencil).interior_norm()
        cycle(levels, 0, u, p, mgp)
        report.cycles_run = m
        res = compute_defect(p, u, levels[0].stencil).interior_norm()
        if not res > _UNDERFLOW:
            raise ConvergenceFailure(
                "defect vanished before the ratio settled; restart with another guess",
                report,
            )
        ratio = res / prev
        report.rho_history.append(ratio)
        log_res.append(log_res[-1] + np.log(ratio))
        # the reported history is in units of the initial defect
        report.residual_history.append(float(np.exp(log_res[-1])))
        scale = 1.0 / res
        u.left *= scale
        u.right *= scale
        if m >= window:
            smoothed.append(float(np.exp((log_res[-1] - log_res[-1 - window]) / window)))
        # compare disjoint windows; overlapping ones agree by construction
        if len(smoothed) > window:
            a, b = smoothed[-1], smoothed[-1 - window]
            if abs(a - b) / a < rel_tol:
                report.converged = True
                return a, report
    raise ConvergenceFailure(
        f"convergence factor did not settle within {mgp.max_cycles} cycles", report
    )
