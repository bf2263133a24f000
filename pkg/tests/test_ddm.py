import numpy as np
import pytest

from ghostfluid.ddm import ddm_iterate, interface_trace
from ghostfluid.discretization import build_interface_stencil, direct_solve
from ghostfluid.manufactured import example_from_strings, preset, problem_for
from ghostfluid.multigrid import MgParams, solve_multigrid

from conftest import relative_defect

SMOOTH_U = "exp(x)*cos(3*x)"


def equal_coefficient_problem(alpha, n=64, gamma="2+sin(x)"):
    spec = example_from_strings("equal", alpha, SMOOTH_U, SMOOTH_U, gamma, gamma)
    return problem_for(spec, n)[0]


def test_example2_converges_to_multigrid_solution():
    p, _ = problem_for(preset("example2"), 64)
    tol = 1e-6
    res = ddm_iterate(p, tol)
    assert res.converged and not res.diverged
    u, _ = solve_multigrid(p, MgParams(coarsest_intervals=16, tol=1e-12))
    assert np.max(np.abs(res.u.flat() - u.flat())) <= 10 * tol * u.max_abs()


def test_continuous_data_matches_direct_solve():
    p = equal_coefficient_problem(0.743)
    tol = 1e-8
    res = ddm_iterate(p, tol)
    assert res.converged
    ref = direct_solve(p)
    assert np.max(np.abs(res.u.flat() - ref.flat())) <= 10 * tol * ref.max_abs()


def test_converged_iterate_solves_the_coupled_system():
    p, _ = problem_for(preset("example2"), 128)
    res = ddm_iterate(p, 1e-10)
    assert res.converged
    assert relative_defect(p, res.u) <= 1e-8


def test_equal_coefficients_small_left_domain_diverges():
    res = ddm_iterate(equal_coefficient_problem(0.343), 1e-8)
    assert res.diverged and not res.converged
    assert res.contraction() > 1.0


def test_equal_coefficients_large_left_domain_converges():
    res = ddm_iterate(equal_coefficient_problem(0.743), 1e-8)
    assert res.converged
    assert res.contraction() < 0.5


def test_contraction_follows_subdomain_ratio():
    # with a constant coefficient the trace error is multiplied by about
    # -(1 - alpha) / alpha per iteration
    for alpha in (0.6, 0.7, 0.8):
        res = ddm_iterate(equal_coefficient_problem(alpha, 256, "2"), 1e-12)
        assert res.contraction() == pytest.approx((1 - alpha) / alpha, rel=0.05)


def test_boundary_rows_hold_every_iteration():
    p = equal_coefficient_problem(0.7)
    for k in (1, 2, 3):
        res = ddm_iterate(p, 1e-300, max_iters=k)
        assert res.state.iterations == k
        assert res.u.left[0] == p.g0 and res.u.right[-1] == p.g1


def test_trace_history_is_reported():
    p, _ = problem_for(preset("example3"), 64)
    res = ddm_iterate(p, 1e-8, initial_trace=0.5)
    st = build_interface_stencil(p.gamma, p.grid)
    assert res.state.trace_history[0] == 0.5
    assert res.state.trace_history[-1] == pytest.approx(interface_trace(res.u.right, st))
    assert len(res.history) == res.state.iterations


def test_validation():
    p, _ = problem_for(preset("example2"), 64)
    with pytest.raises(ValueError):
        ddm_iterate(p, 0.0)
    with pytest.raises(ValueError):
        ddm_iterate(p, 1e-6, max_iters=0)


@pytest.mark.parametrize("name", ["example1", "example4"])
def test_stiff_subdomain_keeps_boundary_value(name):
    p, _ = problem_for(preset(name), 64)
    res = ddm_iterate(p, 1e-8, max_iters=1)
    assert res.u.left[0] == pytest.approx(p.g0, abs=1e-13)
    assert res.u.right[-1] == pytest.approx(p.g1, abs=1e-13)
