"""Partially decomposed outer approximation.

Each iteration solves one mixed-integer subproblem per block, in which only
that block's integers are free and all other integers stay at the current
``z``. The subproblems run outer approximation against a snapshot of the
shared cut pool; their cuts are merged back in a fixed order, and a master
MILP over the merged pool produces the next ``z`` and the lower bound.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cuts import CutPool, build_master, prune, seed_term_cuts
from .fixed_z import CouplingInfeasible, InfeasibilityCertificate, solve_fixed_z
from .milp import SOLVER_BRANCHING, MilpStatus, solve_milp
from .model import StructuredMicp
from .oa import (
    IterationTrace,
    InvariantViolation,
    SolveResult,
    Status,
    TraceRow,
    add_solution_cuts,
    check_z,
    default_z0,
    master_cutoff,
    oa_solve,
    term_cuts_of,
    POLISH_TOL,
)

log = logging.getLogger(__name__)

MAX_CUTS = 10_000


@dataclass
class BlockSubproblemResult:
    k: int
    V_k: float
    zeta_star: np.ndarray
    z: np.ndarray
    x: np.ndarray
    cuts: list
    inner_iters: int
    inner_trace: IterationTrace
    inner_lower_bound: float
    master_point: tuple | None = None
    certificate: InfeasibilityCertificate | None = None
    visited: list = field(default_factory=list)


def freeze_others(problem: StructuredMicp, z: np.ndarray, k: int) -> StructuredMicp:
    lo, hi = z.copy(), z.copy()
    s = problem.zs(k)
    lo[s] = problem.lb_z[s]
    hi[s] = problem.ub_z[s]
    return problem.with_integer_bounds(lo, hi)


def solve_block_subproblem(
    problem: StructuredMicp, z, k: int, eps_L: float, pool: CutPool, tol_inner: float | None = None
) -> BlockSubproblemResult:
    """Outer approximation over block ``k``'s integers with the rest fixed at ``z``.

    Works on a copy of ``pool``; the returned ``cuts`` are the ones it added.
    They keep their full ``z`` coefficients and remain valid on all of Z.
    """
    if eps_L <= 0:
        raise ValueError("eps_L must be positive")
    z = check_z(problem, z)
    sub = freeze_others(problem, z, k)
    local = CutPool(sub)
    for c in pool.cuts():
        local.add(c)
    before = len(local)
    res = oa_solve(sub, eps_L, z, tol_inner=tol_inner, pool=local, polish=False)
    new = _added(pool, local) if before else local.cuts()
    if res.status is Status.INFEASIBLE:
        return BlockSubproblemResult(k, math.inf, z[problem.zs(k)], z, None, [], 0, res.trace, -math.inf,
                                     certificate=res.certificate)
    if res.status is not Status.OPTIMAL:
        raise RuntimeError(f"block {k} subproblem did not converge")
    return BlockSubproblemResult(
        k=k,
        V_k=res.value,
        zeta_star=res.z[problem.zs(k)].copy(),
        z=res.z.copy(),
        x=res.x.copy(),
        cuts=new,
        inner_iters=res.iterations,
        inner_trace=res.trace,
        inner_lower_bound=res.lower_bound,
        master_point=res.master_point,
        visited=res.visited,
    )


def _added(pool: CutPool, local: CutPool) -> list:
    known = [set(c.key() for c in pool.cuts(i)) for i in range(pool.problem.N)]
    return [c for c in local.cuts() if c.key() not in known[c.block]]


def _run_block(args):
    problem, z, k, eps_L, pool_dict, tol_inner = args
    pool = CutPool.from_dict(problem, pool_dict)
    return solve_block_subproblem(problem, z, k, eps_L, pool, tol_inner)


def padoa_solve(
    problem: StructuredMicp,
    eps: float = 1e-6,
    eps_L: float | None = None,
    z0=None,
    *,
    workers: int = 1,
    max_iter: int = 100,
    tol_inner: float | None = None,
    master_gap: float = 1e-9,
    prune_cuts: bool = False,
    polish: bool = True,
    on_iteration=None,
) -> SolveResult:
    """Solve ``problem`` to ``eps`` accuracy with per-block subproblems.

    ``eps_L`` (default ``eps / 2``) is the accuracy of the block
    subproblems and may not exceed ``eps``. ``workers > 1`` runs the block
    subproblems in separate processes; results do not depend on it.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    eps_L = eps / 2 if eps_L is None else eps_L
    if not 0 < eps_L <= eps:
        raise ValueError("need 0 < eps_L <= eps")
    p = problem
    z = default_z0(p) if z0 is None else check_z(p, z0)
    pool = CutPool(p)
    pool.add_many(seed_term_cuts(p))
    extra = tuple(f"V_{k}" for k in range(p.N)) + tuple(f"inner_iters_{k}" for k in range(p.N))
    trace = IterationTrace(extra)
    out = SolveResult(Status.NOT_CONVERGED, trace=trace, pool=pool)
    out.inner_iters = 0
    visited: set = set()
    shadow: set = set()
    U, LB = math.inf, -math.inf
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for it in range(1, max_iter + 1):
            t0 = time.perf_counter()
            subs = _solve_all(p, z, eps_L, pool, tol_inner, executor)
            t_sub = (time.perf_counter() - t0) * 1e3
            for s in subs:
                if s.certificate is not None:
                    out.status = Status.INFEASIBLE
                    out.certificate = s.certificate
                    return out
            pool.merge(s.cuts for s in subs)
            out.inner_iters += sum(s.inner_iters for s in subs)
            best = min(subs, key=lambda s: (s.V_k, s.k))
            if best.V_k < U:
                U = best.V_k
                out.value, out.x, out.z = best.V_k, best.x, best.z
            for s in subs:
                visited.add(tuple(s.z.astype(int).tolist()))
            composite = np.concatenate([s.zeta_star for s in subs]) if p.n_z else np.zeros(0)
            key = tuple(composite.astype(int).tolist())
            if key not in visited:
                visited.add(key)
                try:
                    sol = solve_fixed_z(p, composite, tol_inner or eps_L / 2, cuts=term_cuts_of(pool))
                except CouplingInfeasible as exc:
                    out.status = Status.INFEASIBLE
                    out.certificate = exc.certificate
                    return out
                add_solution_cuts(pool, p, sol, composite)
                # a feasible point, so its value is a valid upper bound too
                if sol.value < U:
                    U = sol.value
                    out.value, out.x, out.z = sol.value, sol.x_star.copy(), composite.copy()
            if U - LB <= eps:
                # the last master bound already certifies the new incumbent
                trace.append(TraceRow(it, U, LB, len(pool), len(visited), t_sub, 0.0, _extra(subs)))
                out.iterations = it
                out.status = Status.OPTIMAL
                break
            if len(pool) > MAX_CUTS and out.master_point is not None:
                pool = prune(pool, out.master_point)
                out.pool = pool

            t1 = time.perf_counter()
            milp, layout = build_master(p, pool)
            cutoff = master_cutoff(U, eps)
            res = solve_milp(milp, gap_tol=master_gap, cutoff=cutoff, branching=SOLVER_BRANCHING)
            t_master = (time.perf_counter() - t1) * 1e3
            if res.status is MilpStatus.CUTOFF:
                bound = cutoff
            elif res.status is MilpStatus.OPTIMAL:
                bound = res.best_bound
                out.master_point = layout.split(res.incumbent)
            else:
                raise RuntimeError(f"master MILP ended with status {res.status.value}")
            LB = max(LB, bound)
            trace.append(TraceRow(it, U, LB, len(pool), len(visited), t_sub, t_master, _extra(subs)))
            out.iterations = it
            out.lower_bound = LB
            log.debug("PaDOA iter %d: U=%.10g LB=%.10g cuts=%d", it, U, LB, len(pool))
            if on_iteration is not None:
                on_iteration(it, out, subs)
            if U - LB <= eps:
                out.status = Status.OPTIMAL
                break
            z_next = np.round(out.master_point[1]) + 0.0
            nkey = tuple(z_next.astype(int).tolist())
            if nkey in shadow:
                raise InvariantViolation(f"master returned {nkey} twice with U-LB={U - LB:.3e} > eps")
            shadow.add(nkey)
            if prune_cuts:
                pool = prune(pool, out.master_point)
                out.pool = pool
            z = z_next
    finally:
        if executor is not None:
            executor.shutdown()
    out.visited = [np.array(v, dtype=float) for v in sorted(visited)]
    if out.status is Status.OPTIMAL and polish:
        try:
            sol = solve_fixed_z(p, out.z, POLISH_TOL, cuts=term_cuts_of(pool))
            if sol.value <= out.value:
                out.value, out.x = sol.value, sol.x_star.copy()
        except Exception as exc:  # polishing is optional
            log.debug("polish skipped: %s", exc)
    return out


def _extra(subs) -> dict:
    row = {f"V_{s.k}": s.V_k for s in subs}
    row.update({f"inner_iters_{s.k}": s.inner_iters for s in subs})
    return row


def _solve_all(p, z, eps_L, pool, tol_inner, executor) -> list[BlockSubproblemResult]:
    if executor is None:
        return [solve_block_subproblem(p, z, k, eps_L, pool, tol_inner) for k in range(p.N)]
    snap = pool.to_dict()
    jobs = [(p, z, k, eps_L, snap, tol_inner) for k in range(p.N)]
    return list(executor.map(_run_block, jobs))
