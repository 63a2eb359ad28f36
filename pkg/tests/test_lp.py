import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from padoa.lp import LinearProgram, LpStatus, SimplexSolver, dual_objective, dump_lp, farkas_certifies, load_lp, solve_lp

TOL = 1e-7


def test_box_minimum():
    res = solve_lp(LinearProgram.build([1.0], lo=[0], hi=[1]))
    assert res.status is LpStatus.OPTIMAL
    assert res.primal.tolist() == [0.0] and res.objective == 0.0


def test_simplex_vertex():
    res = solve_lp(LinearProgram.build([-1.0, -1.0], G=[[1, 1]], g=[1], lo=[0, 0], hi=[1, 1]))
    assert res.objective == pytest.approx(-1.0)


def test_empty_interval_has_farkas_ray():
    lp = LinearProgram.build([0.0], G=[[-1.0], [1.0]], g=[-2.0, 1.0], lo=[-10], hi=[10])
    res = solve_lp(lp)
    assert res.status is LpStatus.INFEASIBLE
    assert farkas_certifies(lp, res.farkas)


def test_equality_infeasible_has_farkas_ray():
    lp = LinearProgram.build([1.0, 1.0], E=[[1, 1]], h=[5], lo=[0, 0], hi=[1, 1])
    res = solve_lp(lp)
    assert res.status is LpStatus.INFEASIBLE
    assert farkas_certifies(lp, res.farkas)


def test_unbounded():
    res = solve_lp(LinearProgram.build([-1.0], lo=[0], hi=[np.inf]))
    assert res.status is LpStatus.UNBOUNDED


def test_beale_cycling_example():
    c = [-0.75, 20, -0.5, 6]
    G = [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]]
    res = solve_lp(LinearProgram.build(c, G=G, g=[0, 0, 1], lo=[0] * 4, hi=[np.inf] * 4))
    assert res.status is LpStatus.OPTIMAL
    assert res.objective == pytest.approx(-1.25)


def check_duality(lp, res):
    assert abs(dual_objective(lp, res) - res.objective) <= TOL * max(1.0, abs(res.objective))
    # multipliers reproduce the costs, inequality ones carry the right sign
    rebuilt = lp.E.T @ res.dual_eq + lp.G.T @ res.dual_ineq + res.dual_bounds
    assert np.allclose(rebuilt, lp.c, atol=TOL)
    assert np.all(res.dual_ineq <= TOL)
    slack = lp.g - lp.G @ res.primal
    assert np.all(np.abs(res.dual_ineq * slack) <= TOL)
    x, d = res.primal, res.dual_bounds
    at_lo = np.abs(x - lp.lo) <= TOL
    at_hi = np.abs(x - lp.hi) <= TOL
    assert np.all((np.abs(d) <= TOL) | ((d > 0) & at_lo) | ((d < 0) & at_hi))


@st.composite
def feasible_lps(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    mi, me = int(rng.integers(0, 6)), int(rng.integers(0, 3))
    lo = rng.uniform(-3, 0, n)
    hi = lo + rng.uniform(0, 4, n)
    if rng.random() < 0.3:
        hi[rng.integers(n)] = np.inf
    x0 = np.where(np.isfinite(hi), rng.uniform(lo, np.where(np.isfinite(hi), hi, lo + 1)), lo + 1)
    G = rng.normal(size=(mi, n))
    g = G @ x0 + rng.uniform(0, 1, mi)
    E = rng.normal(size=(me, n))
    h = E @ x0
    c = rng.normal(size=n)
    c[~np.isfinite(hi)] = np.abs(c[~np.isfinite(hi)])
    return LinearProgram.build(c, E if me else None, h if me else None, G if mi else None, g if mi else None, lo, hi)


@settings(max_examples=300, deadline=None)
@given(feasible_lps())
def test_strong_duality_and_complementary_slackness(lp):
    res = solve_lp(lp)
    assert res.status is LpStatus.OPTIMAL
    check_duality(lp, res)
    ref = linprog(lp.c, A_ub=lp.G if lp.m_ineq else None, b_ub=lp.g if lp.m_ineq else None,
                  A_eq=lp.E if lp.m_eq else None, b_eq=lp.h if lp.m_eq else None,
                  bounds=list(zip(lp.lo, lp.hi)), method="highs")
    assert res.objective == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)


@settings(max_examples=100, deadline=None)
@given(feasible_lps(), st.integers(0, 2**32 - 1))
def test_warm_start_after_bound_change(lp, seed):
    solver = SimplexSolver(lp)
    assert solver.solve().status is LpStatus.OPTIMAL
    rng = np.random.default_rng(seed)
    j = int(rng.integers(lp.n))
    hi = lp.hi.copy()
    hi[j] = lp.lo[j] + rng.uniform(0, 1) * (min(lp.hi[j], lp.lo[j] + 4) - lp.lo[j])
    solver.set_bounds(j, lp.lo[j], hi[j])
    warm = solver.resolve()
    cold = solve_lp(LinearProgram.build(lp.c, lp.E, lp.h, lp.G, lp.g, lp.lo, hi))
    assert warm.status is cold.status
    if cold.ok:
        assert warm.objective == pytest.approx(cold.objective, abs=1e-7, rel=1e-7)


def test_add_rows_then_resolve():
    lp = LinearProgram.build([-1.0, -2.0], G=[[1, 1]], g=[4], lo=[0, 0], hi=[3, 3])
    solver = SimplexSolver(lp)
    assert solver.solve().objective == pytest.approx(-7.0)
    solver.add_rows(np.array([[0.0, 1.0]]), np.array([2.0]))
    res = solver.resolve()
    assert res.objective == pytest.approx(-6.0)
    assert res.dual_ineq.size == 2


def test_dump_and_load_round_trip(tmp_path):
    lp = LinearProgram.build([1.0, -0.1], E=[[1, 1]], h=[1], G=[[1, -1]], g=[0.25], lo=[0, -np.inf], hi=[2, np.inf])
    path = tmp_path / "lp.txt"
    dump_lp(lp, path)
    back = load_lp(path)
    for name in ("c", "E", "h", "G", "g", "lo", "hi"):
        assert np.array_equal(getattr(back, name), getattr(lp, name))
