"""Reference solvers: exhaustive enumeration and a direct MILP model."""
from __future__ import annotations

import numpy as np

from .fixed_z import CouplingInfeasible, solve_fixed_z
from .lp import LinearProgram
from .milp import SOLVER_BRANCHING, MilpStatus, MixedIntegerLinearProgram, solve_milp
from .model import AbsL1, Affine, StructuredMicp
from .oa import SolveResult, Status

ENUM_TOL = 1e-9


def enumerate_solve(problem: StructuredMicp, tol_inner: float = ENUM_TOL, limit: int = 1 << 16) -> SolveResult:
    """Minimum of the fixed-integer optimum over every point of Z."""
    n = problem.cardinality_z()
    if n > limit:
        raise ValueError(f"|Z| = {n} exceeds the enumeration limit {limit}")
    out = SolveResult(Status.OPTIMAL)
    cuts = None
    for z in problem.integer_points():
        try:
            sol = solve_fixed_z(problem, z, tol_inner, cuts=cuts)
        except CouplingInfeasible as exc:
            return SolveResult(Status.INFEASIBLE, certificate=exc.certificate)
        cuts = sol.active_cuts
        out.iterations += 1
        out.inner_iters += sol.inner_iters
        out.visited.append(z)
        if sol.value < out.value:
            out.value, out.x, out.z = sol.value, sol.x_star.copy(), z.copy()
    out.lower_bound = out.value
    return out


def milp_direct(problem: StructuredMicp, gap_tol: float = 1e-9) -> SolveResult:
    """Solve a piecewise-linear instance as one MILP.

    Each absolute-value term gets an epigraph column bounded by its two
    linear pieces. Power terms are rejected.
    """
    if not problem.is_piecewise_linear():
        raise ValueError("milp-direct needs affine and absolute-value terms only")
    p = problem
    nv = p.n_x + p.n_z
    c = np.zeros(nv)
    const = 0.0
    rows, rhs = [], []
    extra = 0

    def embed(i, coeffs):
        blk = p.blocks[i]
        v = np.zeros(nv)
        v[p.xs(i)] = coeffs[: blk.nx]
        zs = p.zs(i)
        v[p.n_x + zs.start : p.n_x + zs.stop] = coeffs[blk.nx :]
        return v

    abs_terms = []
    for i, blk in enumerate(p.blocks):
        for term in blk.terms:
            if isinstance(term, Affine):
                c += embed(i, term.a)
                const += term.c
            elif isinstance(term, AbsL1):
                abs_terms.append((i, term))
    ncol = nv + len(abs_terms)
    c = np.concatenate([c, np.ones(len(abs_terms))])
    for k, (i, term) in enumerate(abs_terms):
        q = embed(i, term.w * term.q)
        for sign in (1.0, -1.0):
            r = np.zeros(ncol)
            r[:nv] = sign * q
            r[nv + k] = -1.0
            rows.append(r)
            rhs.append(sign * term.w * term.r)
    for i, blk in enumerate(p.blocks):
        for crow, dv in zip(blk.C, blk.d):
            r = np.zeros(ncol)
            r[p.xs(i)] = crow
            rows.append(r)
            rhs.append(dv)
    E = np.zeros((p.A.shape[0], ncol))
    E[:, : p.n_x] = p.A
    lo = np.concatenate([p.lb_x, p.lb_z, np.zeros(len(abs_terms))])
    hi = np.concatenate([p.ub_x, p.ub_z, np.full(len(abs_terms), np.inf)])
    lp = LinearProgram.build(
        c, E if E.shape[0] else None, p.b if E.shape[0] else None,
        np.array(rows) if rows else None, np.array(rhs) if rows else None, lo, hi,
    )
    res = solve_milp(MixedIntegerLinearProgram(lp, p.n_x + np.arange(p.n_z)), gap_tol=gap_tol, branching=SOLVER_BRANCHING)
    if res.status is MilpStatus.INFEASIBLE:
        from .fixed_z import certify_infeasible

        return SolveResult(Status.INFEASIBLE, certificate=certify_infeasible(p))
    if res.status is not MilpStatus.OPTIMAL:
        return SolveResult(Status.NOT_CONVERGED, lower_bound=res.best_bound)
    x = res.incumbent[: p.n_x]
    z = np.round(res.incumbent[p.n_x : nv])
    out = SolveResult(Status.OPTIMAL, value=p.evaluate(x, z), x=x.copy(), z=z, iterations=1)
    out.lower_bound = res.best_bound + const
    out.inner_iters = res.nodes
    return out
