"""Outer approximation with an extended-formulation master MILP."""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cuts import CutPool, build_master, make_cuts, seed_term_cuts
from .fixed_z import CouplingInfeasible, InfeasibilityCertificate, solve_fixed_z
from .milp import SOLVER_BRANCHING, MilpStatus, solve_milp
from .model import StructuredMicp

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iter", "U", "LB", "gap", "num_cuts", "card_Pi", "t_sub_ms", "t_master_ms")
POLISH_TOL = 1e-9


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NOT_CONVERGED = "NotConverged"


class InvariantViolation(AssertionError):
    """A property the convergence argument depends on did not hold."""


@dataclass
class TraceRow:
    iter: int
    U: float
    LB: float
    num_cuts: int
    card_Pi: int
    t_sub_ms: float
    t_master_ms: float
    extra: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.U - self.LB


class IterationTrace:
    def __init__(self, extra_columns: tuple = ()):
        self.rows: list[TraceRow] = []
        self.extra_columns = tuple(extra_columns)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, k):
        return self.rows[k]

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def to_csv(self, path=None, timings: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS + self.extra_columns)
        for r in self.rows:
            t_sub = r.t_sub_ms if timings else 0.0
            t_mas = r.t_master_ms if timings else 0.0
            w.writerow(
                [r.iter, repr(float(r.U)), repr(float(r.LB)), repr(float(r.gap)), r.num_cuts, r.card_Pi, f"{t_sub:.3f}", f"{t_mas:.3f}"]
                + [_fmt(r.extra.get(c)) for c in self.extra_columns]
            )
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class SolveResult:
    status: Status
    value: float = math.inf
    x: np.ndarray | None = None
    z: np.ndarray | None = None
    lower_bound: float = -math.inf
    trace: IterationTrace = field(default_factory=IterationTrace)
    pool: CutPool | None = None
    visited: list = field(default_factory=list)
    certificate: InfeasibilityCertificate | None = None
    iterations: int = 0
    inner_iters: int = 0
    master_point: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def default_z0(problem: StructuredMicp) -> np.ndarray:
    return problem.lb_z.copy()


def check_z(problem: StructuredMicp, z) -> np.ndarray:
    z = np.asarray(z, dtype=float).ravel()
    if z.size != problem.n_z:
        raise ValueError(f"z0 has {z.size} entries, problem has {problem.n_z}")
    if np.any(z < problem.lb_z) or np.any(z > problem.ub_z) or np.any(z != np.round(z)):
        raise ValueError("z0 must be an integer point inside the integer bounds")
    return z


def master_cutoff(U: float, eps: float) -> float:
    """Master cutoff slightly above ``U - eps`` so a cut-off master certifies ``U - LB <= eps`` in floating point."""
    if not math.isfinite(U):
        return U
    return U - eps + 8 * np.spacing(abs(U))


def add_solution_cuts(pool: CutPool, problem: StructuredMicp, sol, z) -> None:
    pool.add_many(make_cuts(problem, sol, z))
    pool.add_many(sol.active_cuts)


def term_cuts_of(pool: CutPool) -> list:
    return [c for c in pool.cuts() if c.term is not None]


def oa_solve(
    problem: StructuredMicp,
    eps: float = 1e-6,
    z0=None,
    *,
    tol_inner: float | None = None,
    pool: CutPool | None = None,
    max_iter: int | None = None,
    master_gap: float = 1e-9,
    polish: bool = True,
    use_cutoff: bool = True,
    on_iteration: Callable | None = None,
) -> SolveResult:
    """Solve ``problem`` to ``eps`` absolute accuracy by outer approximation.

    Cuts accumulate in ``pool`` (a fresh one when omitted, otherwise the pool
    is extended in place). ``on_iteration(k, result)`` is called after every
    master solve with the partially filled result.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    p = problem
    tol_inner = eps / 2 if tol_inner is None else tol_inner
    z = default_z0(p) if z0 is None else check_z(p, z0)
    if pool is None:
        pool = CutPool(p)
        pool.add_many(seed_term_cuts(p))
    max_iter = p.cardinality_z() + 1 if max_iter is None else max_iter
    trace = IterationTrace()
    out = SolveResult(Status.NOT_CONVERGED, trace=trace, pool=pool)
    visited: set = set()
    U, LB = math.inf, -math.inf
    for k in range(1, max_iter + 1):
        t0 = time.perf_counter()
        try:
            sol = solve_fixed_z(p, z, tol_inner, cuts=term_cuts_of(pool))
        except CouplingInfeasible as exc:
            out.status = Status.INFEASIBLE
            out.certificate = exc.certificate
            return out
        t_sub = (time.perf_counter() - t0) * 1e3
        out.inner_iters += sol.inner_iters
        key = tuple(z.astype(int).tolist())
        if key in visited:
            raise InvariantViolation(f"integer point {key} revisited by outer approximation")
        visited.add(key)
        out.visited.append(z.copy())
        if sol.value < U:
            U = sol.value
            out.value, out.x, out.z = sol.value, sol.x_star.copy(), z.copy()
        add_solution_cuts(pool, p, sol, z)
        if U - LB <= eps:
            # the last master bound already certifies the new incumbent
            trace.append(TraceRow(k, U, LB, len(pool), len(visited), t_sub, 0.0))
            out.iterations = k
            out.status = Status.OPTIMAL
            break

        t1 = time.perf_counter()
        milp, layout = build_master(p, pool)
        cutoff = master_cutoff(U, eps) if use_cutoff else None
        res = solve_milp(milp, gap_tol=master_gap, cutoff=cutoff, branching=SOLVER_BRANCHING)
        t_master = (time.perf_counter() - t1) * 1e3
        if res.status is MilpStatus.CUTOFF:
            bound = cutoff
        elif res.status is MilpStatus.OPTIMAL:
            bound = res.best_bound
        else:
            raise RuntimeError(f"master MILP ended with status {res.status.value}")
        LB = max(LB, bound)
        trace.append(TraceRow(k, U, LB, len(pool), len(visited), t_sub, t_master))
        out.iterations = k
        out.lower_bound = LB
        log.debug("OA iter %d: U=%.10g LB=%.10g |Pi|=%d cuts=%d", k, U, LB, len(visited), len(pool))
        if res.incumbent is not None:
            out.master_point = layout.split(res.incumbent)
        if on_iteration is not None:
            on_iteration(k, out)
        if U - LB <= eps:
            out.status = Status.OPTIMAL
            break
        x_plus, z_plus, _ = layout.split(res.incumbent)
        z_next = np.round(z_plus) + 0.0
        if tuple(z_next.astype(int).tolist()) in visited:
            raise InvariantViolation(
                f"master returned visited point {tuple(z_next.astype(int))} with U-LB={U - LB:.3e} > eps"
            )
        z = z_next
    if out.status is Status.OPTIMAL and polish:
        _polish(p, out, pool)
    return out


def _polish(p: StructuredMicp, out: SolveResult, pool: CutPool) -> None:
    try:
        sol = solve_fixed_z(p, out.z, POLISH_TOL, cuts=term_cuts_of(pool))
    except Exception as exc:  # polishing is optional
        log.debug("polish skipped: %s", exc)
        return
    if sol.value <= out.value:
        out.value, out.x = sol.value, sol.x_star.copy()
