import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostfluid.discretization import (
    apply_operator,
    assemble_system,
    build_interface_stencil,
    compute_defect,
    defect_vector,
    direct_solve,
    extrapolate_gamma,
    half_point_gamma,
    jump_dirichlet,
    jump_flux,
)
from ghostfluid.grid import InteriorField, ProblemData, TwoSidedField, build_grid, mirror_problem
from scipy.linalg import solve_banded

from conftest import random_problem, relative_defect


def linear_field(grid, fl, fr):
    return TwoSidedField.from_functions(grid, fl, fr)


def test_extrapolate_constant():
    g = build_grid(15, 0.4)
    gam = extrapolate_gamma(np.full(g.J + 1, 3.0), np.full(g.N + 1 - g.J, 5.0), g)
    assert gam.left[-1] == 3.0 and gam.right[0] == 5.0


def test_extrapolate_two_values():
    g = build_grid(15, 0.4)
    gl = np.full(g.J + 1, 1.0)
    gl[-2:] = [2.0, 3.0]
    gam = extrapolate_gamma(gl, np.ones(g.N + 1 - g.J), g)
    assert gam.left[-1] == 4.0


def test_extrapolate_exact_on_linear():
    g = build_grid(31, 0.4)
    xr = g.x(np.arange(g.J + 1, g.N + 2))
    gam = extrapolate_gamma(np.ones(g.J + 1), 10 + xr, g)
    assert gam.right[0] == pytest.approx(10 + g.J * g.h, rel=1e-15)


def test_extrapolate_rejects_nonpositive_ghost():
    g = build_grid(15, 0.4)
    gl = np.ones(g.J + 1)
    gl[-2:] = [3.0, 1.0]
    with pytest.raises(ValueError):
        extrapolate_gamma(gl, np.ones(g.N + 1 - g.J), g)


def test_half_point_gamma():
    g = build_grid(15, 0.4)
    gam = TwoSidedField(g, np.full(g.J + 2, 7.0), np.full(g.N + 2 - g.J, 7.0))
    assert half_point_gamma(gam, "L", 2) == 7.0
    gam.left[3:5] = [3.0, 5.0]
    assert half_point_gamma(gam, "L", 3) == 4.0
    with pytest.raises(ValueError):
        half_point_gamma(gam, "X", 3)


def test_operator_constant_gives_zero():
    g = build_grid(31, 0.37)
    gam = linear_field(g, lambda x: 1 + x, lambda x: 3 + x * x)
    u = linear_field(g, lambda x: 0 * x + 2.0, lambda x: 0 * x - 1.0)
    assert np.all(apply_operator(gam, u).values() == 0.0)


def test_operator_exact_on_quadratic():
    g = build_grid(31, 0.37)
    one = linear_field(g, lambda x: 0 * x + 1, lambda x: 0 * x + 1)
    u = linear_field(g, lambda x: x * x, lambda x: x * x)
    assert np.allclose(apply_operator(one, u).values(), -2.0, rtol=0, atol=1e-11)


def test_operator_linear_gamma_linear_u():
    g = build_grid(31, 0.37)
    gam = linear_field(g, lambda x: 1 + x, lambda x: 1 + x)
    u = linear_field(g, lambda x: x, lambda x: x)
    assert np.allclose(apply_operator(gam, u).values(), -1.0, rtol=0, atol=1e-11)


def test_operator_reads_only_own_side():
    p = random_problem(3, N=15)
    g = p.grid
    u = linear_field(g, np.sin, np.cos)
    poisoned = TwoSidedField(g, u.left, np.full(g.N + 2 - g.J, np.nan))
    gp = TwoSidedField(g, p.gamma.left, np.full(g.N + 2 - g.J, np.nan))
    r = apply_operator(gp, poisoned)
    assert np.all(np.isfinite(r.left)) and np.all(np.isnan(r.right))
    poisoned = TwoSidedField(g, np.full(g.J + 2, np.nan), u.right)
    gp = TwoSidedField(g, np.full(g.J + 2, np.nan), p.gamma.right)
    r = apply_operator(gp, poisoned)
    assert np.all(np.isnan(r.left)) and np.all(np.isfinite(r.right))


def test_stencil_node_aligned_interface():
    g = build_grid(15, 0.5)
    gam = TwoSidedField(g, np.ones(g.J + 2), np.ones(g.N + 2 - g.J))
    st_ = build_interface_stencil(gam, g)
    assert st_.theta == 0.0
    assert st_.dirichlet_weights_left == (1.0, 0.0)
    # derivative of the quadratic interpolant at x_J: central difference
    h = g.h
    assert st_.flux_weights_left == pytest.approx((-0.5 / h, 0.0, 0.5 / h))
    # right stencil on {J, J+1, J+2} evaluated at its left node: one-sided
    assert st_.flux_weights_right == pytest.approx((-1.5 / h, 2.0 / h, -0.5 / h))


@given(theta=st.floats(min_value=0.0, max_value=0.999))
@settings(max_examples=50, deadline=None)
def test_flux_weights_exact_on_quadratics(theta):
    g = build_grid(31, (10 + theta) / 32)
    gam = TwoSidedField(g, np.ones(g.J + 2), np.ones(g.N + 2 - g.J))
    st_ = build_interface_stencil(gam, g)
    a = g.alpha
    u = linear_field(g, lambda x: 3 * x * x - x, lambda x: -2 * x * x + 5 * x)
    # exact derivative at alpha: right minus left
    expected = (-4 * a + 5) - (6 * a - 1)
    assert jump_flux(u, st_) == pytest.approx(expected, rel=1e-9, abs=1e-9)


def _unit_stencil(g, gl=1.0, gr=1.0):
    gam = TwoSidedField(g, np.full(g.J + 2, gl), np.full(g.N + 2 - g.J, gr))
    return build_interface_stencil(gam, g)


def test_jump_dirichlet_examples():
    g = build_grid(31, 0.37)
    st_ = _unit_stencil(g)
    c = linear_field(g, lambda x: 0 * x + 2, lambda x: 0 * x + 2)
    assert jump_dirichlet(c, st_) == 0.0
    step = linear_field(g, lambda x: 0 * x, lambda x: 0 * x + 1)
    assert jump_dirichlet(step, st_) == 1.0
    ident = linear_field(g, lambda x: x, lambda x: x)
    assert abs(jump_dirichlet(ident, st_)) <= 1e-15


def test_jump_flux_examples():
    g = build_grid(31, 0.37)
    c = linear_field(g, lambda x: 0 * x + 2, lambda x: 0 * x + 2)
    assert jump_flux(c, _unit_stencil(g)) == 0.0
    u = linear_field(g, lambda x: x, lambda x: 2 * x)
    assert jump_flux(u, _unit_stencil(g)) == pytest.approx(1.0, rel=1e-12)
    assert abs(jump_flux(u, _unit_stencil(g, 2.0, 1.0))) <= 1e-12


def test_jumps_vanish_at_second_order_on_smooth_data():
    errs = []
    ns = (64, 128, 256, 512, 1024)
    for n in ns:
        g = build_grid(n - 1, 0.4321)
        gam = linear_field(g, lambda x: 2 + np.sin(x), lambda x: 2 + np.sin(x))
        st_ = build_interface_stencil(gam, g)
        u = linear_field(g, lambda x: np.exp(x) * np.cos(3 * x), lambda x: np.exp(x) * np.cos(3 * x))
        # both sides interpolate the same two samples, so this jump is exact
        assert abs(jump_dirichlet(u, st_)) <= 1e-14
        errs.append(abs(jump_flux(u, st_)))
    slope = np.polyfit(np.log(1.0 / np.array(ns)), np.log(errs), 1)[0]
    assert slope >= 1.9


def test_defect_of_zero_field():
    p = random_problem(4, N=15)
    p = ProblemData(p.gamma, p.f)
    d = compute_defect(p, TwoSidedField(p.grid))
    assert np.array_equal(d.interior.values(), p.f.values())
    assert (d.dD, d.dN, d.d0, d.d1) == (0.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_defect_matches_assembled_rows(seed):
    p = random_problem(seed)
    rng = np.random.default_rng(seed + 100)
    u = TwoSidedField.from_flat(p.grid, rng.normal(size=p.grid.N + 4))
    system = assemble_system(p)
    expected = system.rhs - system.matrix @ u.flat()
    got = defect_vector(compute_defect(p, u))
    assert np.allclose(got, expected, rtol=0, atol=1e-12 * np.max(np.abs(expected)))


def test_system_layout():
    p = random_problem(5)
    s = assemble_system(p)
    J = p.grid.J
    assert s.matrix.shape == (p.grid.N + 4, p.grid.N + 4)
    assert (s.row_dirichlet(), s.row_flux()) == (J + 1, J + 2)
    assert (s.left_index(J + 1), s.right_index(J)) == (J + 1, J + 2)


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    k=st.integers(min_value=3, max_value=7),
)
@settings(max_examples=40, deadline=None)
def test_direct_solution_has_zero_defect(seed, k):
    p = random_problem(seed, N=2**k - 1)
    assert relative_defect(p, direct_solve(p)) <= 1e-13


def test_unit_coefficient_matches_tridiagonal_poisson():
    # no jump: the ghost-point scheme and the plain three-point scheme coincide
    n = 64
    g = build_grid(n - 1, 0.4321)
    x = g.x(np.arange(n + 1))
    u_ex = np.sin(3 * x) + x
    f = 9 * np.sin(3 * x)
    p = ProblemData(
        TwoSidedField(g, np.ones(g.J + 2), np.ones(g.N + 2 - g.J)),
        InteriorField(g, f[1 : g.J + 1], f[g.J + 1 : g.N + 1]),
        u_ex[0],
        u_ex[-1],
    )
    u = direct_solve(p)
    h = g.h
    ab = np.zeros((3, g.N))
    ab[0, 1:] = -1 / h**2
    ab[1, :] = 2 / h**2
    ab[2, :-1] = -1 / h**2
    b = f[1:-1].copy()
    b[0] += u_ex[0] / h**2
    b[-1] += u_ex[-1] / h**2
    ref = solve_banded((1, 1), ab, b)
    got = np.concatenate([u.left[1 : g.J + 1], u.right[1 : g.N + 1 - g.J]])
    # the interface rows are exact for quadratics only, so the two discrete
    # solutions agree to truncation order
    assert np.max(np.abs(got - ref)) <= 5 * h**2
    assert np.max(np.abs(got - u_ex[1:-1])) <= 5 * h**2


@pytest.mark.parametrize("seed", range(5))
def test_direct_solve_commutes_with_mirroring(seed):
    p = random_problem(seed, N=31)
    u = direct_solve(p)
    m = direct_solve(mirror_problem(p))
    back = u.mirrored(m.grid)
    assert np.allclose(m.flat(), back.flat(), rtol=0, atol=1e-11 * u.max_abs())
