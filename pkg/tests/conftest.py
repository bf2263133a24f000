import numpy as np
import pytest

from ghostfluid.discretization import (
    assemble_system,
    build_interface_stencil,
    compute_defect,
    defect_vector,
    extrapolate_gamma,
)
from ghostfluid.grid import InteriorField, ProblemData, build_grid
from ghostfluid.relaxation import build_params


def random_problem(seed: int, N: int = 7, alpha: float | None = None) -> ProblemData:
    """Random positive coefficients, random source and scalar data."""
    rng = np.random.default_rng(seed)
    if alpha is None:
        h = 1.0 / (N + 1)
        alpha = rng.uniform(2 * h, (N - 1) * h)
    grid = build_grid(N, alpha)
    gamma = extrapolate_gamma(
        rng.uniform(1.0, 2.0, grid.J + 1), rng.uniform(5.0, 9.0, grid.N + 1 - grid.J), grid
    )
    f = InteriorField(grid, rng.normal(size=grid.J), rng.normal(size=grid.N - grid.J))
    g0, g1, gD, gN = rng.normal(size=4)
    return ProblemData(gamma, f, g0, g1, gD, gN)


def dense_rows(p: ProblemData):
    system = assemble_system(p)
    st = build_interface_stencil(p.gamma, p.grid)
    prm = build_params(p, st)
    return system.matrix.toarray(), system.rhs, prm


def dense_sweep(p: ProblemData, u: np.ndarray, fresh: bool) -> np.ndarray:
    """One sweep driven only by the assembled rows.

    Unknown ``i`` is updated in storage order.  Interior unknowns solve their
    own row; the left ghost takes a pseudo-time step on the flux row, the
    right ghost on the Dirichlet row; boundaries are pinned.  ``fresh``
    selects Gauss-Seidel (reads updated values) or Jacobi (reads old ones).
    """
    A, b, prm = dense_rows(p)
    J = p.grid.J
    n = len(b)
    old = np.array(u, dtype=float)
    new = old.copy()
    for i in range(n):
        src = new if fresh else old
        if i == 0 or i == n - 1:
            new[i] = b[i]
        elif i == J + 1:
            r = J + 2
            new[i] = src[i] + prm.muN_dt * (A[r] @ src - b[r])
        elif i == J + 2:
            r = J + 1
            new[i] = src[i] + prm.muD_dt * (b[r] - A[r] @ src)
        else:
            a = A[i].copy()
            d = a[i]
            a[i] = 0.0
            new[i] = (b[i] - a @ src) / d
    return new


def relative_defect(p, u):
    """Defect over the natural scale ``|A| |u| + |b|`` of the assembled system."""
    system = assemble_system(p)
    d = np.abs(defect_vector(compute_defect(p, u)))
    scale = abs(system.matrix) @ np.abs(u.flat()) + np.abs(system.rhs)
    return float(np.max(d / scale))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


FD_STEP = 1e-5


def central_difference(g, x, h=FD_STEP):
    """Fourth-order central difference of ``g`` at ``x``."""
    return (8.0 * (g(x + h) - g(x - h)) - (g(x + 2 * h) - g(x - 2 * h))) / (12.0 * h)


def preset_expressions():
    from ghostfluid.manufactured import PRESET_SOURCES

    srcs = set()
    for v in PRESET_SOURCES.values():
        srcs.update(v[1:])
    return sorted(srcs)


# acceptance outcomes, printed one line per criterion after the run
CRITERIA: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> None:
    CRITERIA[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
