"""Manufactured interface problems and the error measurements taken on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import extrapolate_gamma
from .expr import ExpressionTree, eval_jet, evaluate, parse_expression
from .grid import GridSpec, InteriorField, ProblemData, TwoSidedField, build_grid

__all__ = [
    "ExampleSpec",
    "ExactSolution",
    "PRESETS",
    "preset",
    "jump_study",
    "example_from_strings",
    "synthesize_problem",
    "discrete_derivative",
    "error_norms",
    "convergence_orders",
]


@dataclass(frozen=True)
class ExampleSpec:
    name: str
    alpha: float
    uL: ExpressionTree
    uR: ExpressionTree
    gammaL: ExpressionTree
    gammaR: ExpressionTree
    sources: tuple[str, str, str, str] = ("", "", "", "")

    def check_positive(self, samples: int = 10_000) -> None:
        xl = np.linspace(0.0, self.alpha, samples)
        xr = np.linspace(self.alpha, 1.0, samples)
        for tree, xs, side in ((self.gammaL, xl, "left"), (self.gammaR, xr, "right")):
            v = np.asarray(evaluate(tree, xs)) + 0 * xs
            if np.any(v <= 0):
                raise ValueError(f"{self.name}: gamma is not positive on the {side} subdomain")


def example_from_strings(
    name: str, alpha: float, uL: str, uR: str, gammaL: str, gammaR: str, params=None
) -> ExampleSpec:
    spec = ExampleSpec(
        name,
        float(alpha),
        parse_expression(uL, params),
        parse_expression(uR, params),
        parse_expression(gammaL, params),
        parse_expression(gammaR, params),
        (uL, uR, gammaL, gammaR),
    )
    spec.check_positive()
    return spec


_SMOOTH = "3+cos(5*pi*x)"
_STIFF = "10^9*(10+sin(5*pi*x))"
_U1 = "exp(sin(5*pi*x))"
_U2 = "exp(x^2)"

PRESET_SOURCES = {
    "example1": (0.343, _U1, _U2, _SMOOTH, _STIFF),
    "example2": (0.743, _U1, _U2, _SMOOTH, _STIFF),
    "example3": (0.283, _U1, _U2, _STIFF, _SMOOTH),
    "example4": (0.813, _U2, _U1, _STIFF, _SMOOTH),
}


def preset(name: str, p: int = 0) -> ExampleSpec:
    if name == "jump_study":
        return jump_study(p)
    try:
        alpha, uL, uR, gL, gR = PRESET_SOURCES[name]
    except KeyError:
        raise KeyError(
            f"unknown example {name!r}; choose from {sorted(PRESET_SOURCES) + ['jump_study']}"
        ) from None
    return example_from_strings(name, alpha, uL, uR, gL, gR)


def jump_study(p: int) -> ExampleSpec:
    """Zero solution, ``gamma^L = 10^p``, ``gamma^R = 1`` at ``alpha = 0.543``."""
    return example_from_strings("jump_study", 0.543, "0", "0", "10^p", "1", {"p": p})


PRESETS = tuple(PRESET_SOURCES) + ("jump_study",)


@dataclass
class ExactSolution:
    """Analytic ``u`` and ``u'`` sampled on both sides, ghosts included."""

    u: TwoSidedField
    du: TwoSidedField

    def mirrored(self, grid: GridSpec | None = None) -> "ExactSolution":
        grid = grid or self.u.grid.mirrored()
        return ExactSolution(self.u.mirrored(grid), self.du.mirrored(grid, sign=-1.0))


def synthesize_problem(spec: ExampleSpec, grid: GridSpec) -> tuple[ProblemData, ExactSolution]:
    """Reconstruct ``f``, boundary and jump data from the closed forms."""
    if grid.alpha != spec.alpha:
        raise ValueError(f"grid interface {grid.alpha} differs from example's {spec.alpha}")
    J, N = grid.J, grid.N
    xl = grid.x(grid.left_nodes)
    xr = grid.x(grid.right_nodes)
    uL, uR = eval_jet(spec.uL, xl), eval_jet(spec.uR, xr)
    gL, gR = eval_jet(spec.gammaL, xl), eval_jet(spec.gammaR, xr)

    def source(u, g):
        return -(g.d1 * u.d1 + g.value * u.d2)

    f = InteriorField(grid, source(uL, gL)[1 : J + 1], source(uR, gR)[1 : N + 1 - J])
    gamma = extrapolate_gamma(gL.value[: J + 1], gR.value[1:], grid)

    a = spec.alpha
    ua_L, ua_R = eval_jet(spec.uL, a), eval_jet(spec.uR, a)
    ga_L, ga_R = evaluate(spec.gammaL, a), evaluate(spec.gammaR, a)
    problem = ProblemData(
        gamma=gamma,
        f=f,
        g0=float(evaluate(spec.uL, 0.0)),
        g1=float(evaluate(spec.uR, 1.0)),
        gD=float(ua_R.value - ua_L.value),
        gN=float(ga_R * ua_R.d1 - ga_L * ua_L.d1),
    )
    exact = ExactSolution(
        TwoSidedField(grid, uL.value, uR.value),
        TwoSidedField(grid, uL.d1, uR.d1),
    )
    return problem, exact


def problem_for(spec: ExampleSpec, intervals: int) -> tuple[ProblemData, ExactSolution]:
    return synthesize_problem(spec, build_grid(intervals - 1, spec.alpha))


def _side_derivative(v: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return d


def discrete_derivative(u: TwoSidedField) -> TwoSidedField:
    """Central differences within each side; one-sided second order at the
    array ends (the physical boundaries and the ghosts)."""
    h = u.grid.h
    return TwoSidedField(u.grid, _side_derivative(u.left, h), _side_derivative(u.right, h))


def error_norms(u: TwoSidedField, exact: ExactSolution) -> tuple[float, float]:
    """Max-norm errors of ``u`` and of its discrete derivative over physical
    nodes (ghosts excluded)."""
    du = discrete_derivative(u)

    def physical_max(a: TwoSidedField, b: TwoSidedField) -> float:
        return float(
            max(
                np.max(np.abs(a.left[:-1] - b.left[:-1])),
                np.max(np.abs(a.right[1:] - b.right[1:])),
            )
        )

    return physical_max(u, exact.u), physical_max(du, exact.du)


def convergence_orders(errors) -> tuple[list[float], float]:
    """Row orders ``log2(e_{i-1}/e_i)`` and the least-squares slope of
    ``log e`` against ``log h``.

    ``errors`` is a sequence of ``(intervals, error)`` pairs with doubling
    interval counts, so a second-order method gives a slope near 2.
    """
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two (intervals, error) pairs")
    n = np.array([float(e[0]) for e in errors])
    e = np.array([float(e[1]) for e in errors])
    if np.any(e <= 0):
        raise ValueError("errors must be positive")
    if np.any(n[1:] != 2 * n[:-1]):
        raise ValueError("interval counts must double from row to row")
    orders = np.log2(e[:-1] / e[1:]).tolist()
    slope = float(np.polyfit(np.log(1.0 / n), np.log(e), 1)[0])
    return orders, slope
