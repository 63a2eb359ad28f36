"""Reference solvers that share no code with the package.

The fixed-integer problems go to cvxpy, the MILPs to HiGHS through scipy.
"""
import itertools
import math

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog

from padoa.model import AbsL1, Affine, Power


def _term_expr(term, v):
    if isinstance(term, Affine):
        return term.a @ v + term.c
    if isinstance(term, Power):
        return term.w * cp.power(cp.abs(term.q @ v - term.r), term.p)
    if isinstance(term, AbsL1):
        return term.w * cp.abs(term.q @ v - term.r)
    raise TypeError(type(term))


def fixed_z_value(problem, z) -> float:
    """min over x of f(x, z) subject to the boxes, polytopes and coupling; inf if empty."""
    z = np.asarray(z, dtype=float)
    x = cp.Variable(problem.n_x)
    cons = [x >= problem.lb_x, x <= problem.ub_x]
    obj = 0
    for i, blk in enumerate(problem.blocks):
        xi = x[problem.xs(i)]
        if blk.C.shape[0]:
            cons.append(blk.C @ xi <= blk.d)
        v = cp.hstack([xi, z[problem.zs(i)]]) if blk.nz else xi
        for t in blk.terms:
            obj = obj + _term_expr(t, v)
    if problem.A.shape[0]:
        cons.append(problem.A @ x == problem.b)
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return math.inf
    return float(prob.value)


def enumerate_value(problem):
    best, arg = math.inf, None
    for z in problem.integer_points():
        v = fixed_z_value(problem, z)
        if v < best:
            best, arg = v, z
    return best, arg


def milp_by_enumeration(c, G, g, E, h, lo, hi, ints) -> float:
    """Exhaustive search over the integer box, one HiGHS LP per point."""
    c = np.asarray(c, float)
    ints = list(ints)
    best = math.inf
    ranges = [range(int(lo[j]), int(hi[j]) + 1) for j in ints]
    for pt in itertools.product(*ranges):
        lo_, hi_ = np.array(lo, float), np.array(hi, float)
        lo_[ints] = pt
        hi_[ints] = pt
        res = linprog(c, A_ub=G, b_ub=g, A_eq=E, b_eq=h, bounds=list(zip(lo_, hi_)), method="highs")
        if res.status == 0:
            best = min(best, float(res.fun))
    return best
