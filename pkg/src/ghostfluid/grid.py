"""Uniform 1D grid with an embedded interface and the two-sided containers.

Node ``x_j = j*h`` for ``j = 0..N+1`` with ``h = 1/(N+1)``.  The interface
``alpha`` lies in ``[x_J, x_{J+1})``.  The left subdomain owns nodes ``0..J``
plus a ghost at ``J+1``; the right subdomain owns ``J+1..N+1`` plus a ghost at
``J``.  Arrays are stored with explicit offsets (left from 0, right from J) so
a side can never read the other side's values by accident.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridError",
    "GridSpec",
    "TwoSidedField",
    "InteriorField",
    "ProblemData",
    "build_grid",
    "mirror_problem",
]


class GridError(ValueError):
    """Invalid grid or interface placement."""


@dataclass(frozen=True)
class GridSpec:
    N: int
    alpha: float
    J: int
    theta: float
    # 1 - alpha, carried so that mirroring twice restores alpha bit-exactly
    alpha_complement: float = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / (self.N + 1)

    @property
    def intervals(self) -> int:
        return self.N + 1

    def x(self, j):
        return np.asarray(j, dtype=float) * self.h

    @property
    def left_nodes(self) -> np.ndarray:
        """Node indices of the left array, ghost ``J+1`` included."""
        return np.arange(0, self.J + 2)

    @property
    def right_nodes(self) -> np.ndarray:
        """Node indices of the right array, ghost ``J`` included."""
        return np.arange(self.J, self.N + 2)

    def mirrored(self) -> "GridSpec":
        if self.theta == 0.0:
            raise GridError("cannot mirror a grid whose interface sits on a node")
        J = self.N - self.J
        theta = self.alpha_complement * (self.N + 1) - J
        theta = min(max(theta, 0.0), math.nextafter(1.0, 0.0))
        return GridSpec(self.N, self.alpha_complement, J, theta, self.alpha)

    def coarsened(self) -> "GridSpec":
        """The grid with spacing 2h and the same interface."""
        if self.intervals % 2:
            raise GridError(f"cannot coarsen a grid with {self.intervals} intervals")
        return build_grid(self.intervals // 2 - 1, self.alpha)


def build_grid(N: int, alpha: float) -> GridSpec:
    """Locate ``alpha`` on the uniform grid with ``N`` interior nodes.

    Raises :class:`GridError` when ``alpha`` is outside (0, 1) or so close to
    an end that one subdomain cannot host its interface stencil
    (``2 <= J <= N-2`` is required).
    """
    N = int(N)
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise GridError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    t = alpha * (N + 1)
    r = round(t)
    if abs(t - r) <= 4 * np.finfo(float).eps * max(t, 1.0):
        t = float(r)
    J = int(math.floor(t))
    theta = t - J
    if J < 2 or J > N - 2:
        raise GridError(
            f"alpha={alpha} gives J={J} on N={N}; need 2 <= J <= N-2 "
            "so each subdomain hosts its interface stencil"
        )
    if N < 7:
        raise GridError(f"need N >= 7 interior nodes, got N={N}")
    return GridSpec(N, alpha, J, theta, 1.0 - alpha)


class TwoSidedField:
    """Element of S(Omega_h): left values on 0..J+1, right values on J..N+1.

    Index with node numbers through :meth:`L` / :meth:`R`, or use ``left`` /
    ``right`` directly (``right[k]`` is node ``J + k``).
    """

    __slots__ = ("grid", "left", "right")

    def __init__(self, grid: GridSpec, left=None, right=None):
        self.grid = grid
        nl, nr = grid.J + 2, grid.N + 2 - grid.J
        self.left = np.zeros(nl) if left is None else np.array(left, dtype=float)
        self.right = np.zeros(nr) if right is None else np.array(right, dtype=float)
        if self.left.shape != (nl,) or self.right.shape != (nr,):
            raise ValueError(
                f"expected left/right of length {nl}/{nr}, "
                f"got {self.left.shape}/{self.right.shape}"
            )

    @classmethod
    def from_functions(cls, grid: GridSpec, fl, fr) -> "TwoSidedField":
        return cls(grid, fl(grid.x(grid.left_nodes)), fr(grid.x(grid.right_nodes)))

    def L(self, j: int) -> float:
        if not 0 <= j <= self.grid.J + 1:
            raise IndexError(f"left node {j} outside 0..{self.grid.J + 1}")
        return self.left[j]

    def R(self, j: int) -> float:
        if not self.grid.J <= j <= self.grid.N + 1:
            raise IndexError(f"right node {j} outside {self.grid.J}..{self.grid.N + 1}")
        return self.right[j - self.grid.J]

    def copy(self) -> "TwoSidedField":
        return TwoSidedField(self.grid, self.left, self.right)

    def __add__(self, other: "TwoSidedField") -> "TwoSidedField":
        return TwoSidedField(self.grid, self.left + other.left, self.right + other.right)

    def __sub__(self, other: "TwoSidedField") -> "TwoSidedField":
        return TwoSidedField(self.grid, self.left - other.left, self.right - other.right)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.left)), np.max(np.abs(self.right))))

    def flat(self) -> np.ndarray:
        """Concatenation in the unknown ordering u^L_0..u^L_{J+1}, u^R_J..u^R_{N+1}."""
        return np.concatenate([self.left, self.right])

    @classmethod
    def from_flat(cls, grid: GridSpec, v) -> "TwoSidedField":
        v = np.asarray(v, dtype=float)
        return cls(grid, v[: grid.J + 2], v[grid.J + 2 :])

    def mirrored(self, grid: GridSpec | None = None, sign: float = 1.0) -> "TwoSidedField":
        grid = grid or self.grid.mirrored()
        return TwoSidedField(grid, sign * self.right[::-1], sign * self.left[::-1])

    def __repr__(self) -> str:
        return f"TwoSidedField(J={self.grid.J}, N={self.grid.N})"


class InteriorField:
    """Element of the interior space: left on nodes 1..J, right on J+1..N."""

    __slots__ = ("grid", "left", "right")

    def __init__(self, grid: GridSpec, left=None, right=None):
        self.grid = grid
        nl, nr = grid.J, grid.N - grid.J
        self.left = np.zeros(nl) if left is None else np.array(left, dtype=float)
        self.right = np.zeros(nr) if right is None else np.array(right, dtype=float)
        if self.left.shape != (nl,) or self.right.shape != (nr,):
            raise ValueError(
                f"expected left/right of length {nl}/{nr}, "
                f"got {self.left.shape}/{self.right.shape}"
            )

    def at(self, j: int) -> float:
        if 1 <= j <= self.grid.J:
            return self.left[j - 1]
        if self.grid.J < j <= self.grid.N:
            return self.right[j - self.grid.J - 1]
        raise IndexError(f"interior node {j} outside 1..{self.grid.N}")

    def values(self) -> np.ndarray:
        """Values on nodes 1..N in order."""
        return np.concatenate([self.left, self.right])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values())))

    def copy(self) -> "InteriorField":
        return InteriorField(self.grid, self.left, self.right)

    def mirrored(self, grid: GridSpec | None = None) -> "InteriorField":
        grid = grid or self.grid.mirrored()
        return InteriorField(grid, self.right[::-1], self.left[::-1])


@dataclass
class ProblemData:
    """Discrete data of ``-(gamma u')' = f`` with ``[u] = gD``, ``[gamma u'] = gN``."""

    gamma: TwoSidedField
    f: InteriorField
    g0: float = 0.0
    g1: float = 0.0
    gD: float = 0.0
    gN: float = 0.0

    def __post_init__(self):
        if self.gamma.grid != self.f.grid:
            raise ValueError("gamma and f live on different grids")
        if np.any(self.gamma.left <= 0) or np.any(self.gamma.right <= 0):
            raise ValueError("gamma must be positive everywhere, ghosts included")

    @property
    def grid(self) -> GridSpec:
        return self.gamma.grid


def mirror_problem(p: ProblemData) -> ProblemData:
    """The same problem under ``x -> 1 - x``.

    Sides swap and reverse, ``g0 <-> g1`` and ``gD -> -gD``; ``gN`` is
    unchanged since both the side order and the sign of ``u'`` flip.
    """
    grid = p.grid.mirrored()
    return ProblemData(
        gamma=p.gamma.mirrored(grid),
        f=p.f.mirrored(grid),
        g0=p.g1,
        g1=p.g0,
        gD=-p.gD,
        gN=p.gN,
    )
