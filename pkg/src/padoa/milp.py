"""Best-bound branch and bound over the simplex in :mod:`padoa.lp`.

Node order is deterministic: smallest parent bound first, ties by creation
order; the branching variable is the most fractional one (lowest index on
ties) and the floor child is created before the ceiling child. Pseudocost
branching is available as an alternative and is just as deterministic.
"""
from __future__ import annotations

import enum
import heapq
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .lp import LinearProgram, LpStatus, SimplexSolver

log = logging.getLogger(__name__)

INT_TOL = 1e-6
DEFAULT_GAP = 1e-8
BRANCHING = ("most-fractional", "pseudocost")
# rule used by the solvers built on top of this module; pseudocosts cut the
# tree several-fold on scheduling instances
SOLVER_BRANCHING = "pseudocost"


class MilpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    GAP_LIMIT = "GapLimit"
    CUTOFF = "Cutoff"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class MixedIntegerLinearProgram:
    lp: LinearProgram
    integer_vars: np.ndarray

    def __post_init__(self):
        idx = np.array(sorted(set(int(j) for j in np.ravel(self.integer_vars))), dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= self.lp.n):
            raise ValueError("integer variable index out of range")
        if not (np.all(np.isfinite(self.lp.lo[idx])) and np.all(np.isfinite(self.lp.hi[idx]))):
            raise ValueError("integer variables need finite bounds")
        idx.setflags(write=False)
        object.__setattr__(self, "integer_vars", idx)


@dataclass
class MilpResult:
    status: MilpStatus
    incumbent: np.ndarray | None = None
    objective: float = math.inf
    best_bound: float = -math.inf
    nodes: int = 0
    farkas: np.ndarray | None = None
    bound_history: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status is MilpStatus.OPTIMAL


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    lo: np.ndarray = field(compare=False)
    hi: np.ndarray = field(compare=False)
    parent: int = field(compare=False, default=-1)
    var: int = field(compare=False, default=-1)
    up: bool = field(compare=False, default=False)
    step: float = field(compare=False, default=0.0)


def solve_milp(
    milp: MixedIntegerLinearProgram,
    gap_tol: float = DEFAULT_GAP,
    node_limit: int = 200_000,
    cutoff: float | None = None,
    branching: str = "most-fractional",
) -> MilpResult:
    """Minimize a MILP to within ``gap_tol`` (absolute) of optimality.

    ``cutoff`` is an optional upper bound known in advance; nodes whose
    relaxation is not below it are discarded, and if nothing survives the
    status is ``CUTOFF``.
    """
    if gap_tol < 0:
        raise ValueError("gap_tol must be nonnegative")
    if branching not in BRANCHING:
        raise ValueError(f"unknown branching rule {branching!r}")
    lp = milp.lp
    ints = milp.integer_vars
    solver = SimplexSolver(lp)
    root = solver.solve()
    if root.status is LpStatus.INFEASIBLE:
        return MilpResult(MilpStatus.INFEASIBLE, farkas=root.farkas, nodes=1)
    if root.status is LpStatus.UNBOUNDED:
        return MilpResult(MilpStatus.UNBOUNDED, nodes=1)
    if root.status is not LpStatus.OPTIMAL:
        raise RuntimeError("root relaxation failed numerically")

    inc_x = None
    inc_obj = math.inf if cutoff is None else float(cutoff)
    history = []
    lo0 = np.ceil(lp.lo[ints] - INT_TOL)
    hi0 = np.floor(lp.hi[ints] + INT_TOL)
    if np.any(lo0 > hi0):
        return MilpResult(MilpStatus.INFEASIBLE, nodes=1)

    heap: list[_Node] = []
    seq = 0
    nodes = 0
    pending_root = root
    pc = _Pseudocosts(ints.size)

    heapq.heappush(heap, _Node(root.objective, seq, lo0, hi0, -1))
    while heap:
        node = heapq.heappop(heap)
        if node.bound >= inc_obj - gap_tol:
            heapq.heappush(heap, node)
            break
        if nodes >= node_limit:
            heapq.heappush(heap, node)
            bound = min(n.bound for n in heap)
            status = MilpStatus.GAP_LIMIT
            return MilpResult(status, inc_x, inc_obj if inc_x is not None else math.inf, bound, nodes, bound_history=history)
        history.append(node.bound)
        nodes += 1
        if pending_root is not None:
            res = pending_root
            pending_root = None
        else:
            for k, j in enumerate(ints):
                solver.set_bounds(int(j), node.lo[k], node.hi[k])
            # every basis optimal for some node stays dual feasible for all
            # nodes (only bounds differ), so the last one is a valid start
            res = solver.resolve()
        if res.status is LpStatus.INFEASIBLE:
            continue
        if node.var >= 0 and res.status is LpStatus.OPTIMAL:
            pc.record(node.var, node.up, (res.objective - node.bound) / node.step)
        if res.status is not LpStatus.OPTIMAL:
            log.warning("node %d relaxation status %s; node discarded", node.seq, res.status.value)
            continue
        if res.objective >= inc_obj - gap_tol:
            continue
        xi = res.primal[ints]
        frac = np.abs(xi - np.round(xi))
        if frac.size == 0 or frac.max() <= INT_TOL:
            x = res.primal.copy()
            x[ints] = np.round(xi)
            inc_x, inc_obj = x, res.objective
            continue
        down = xi - np.floor(xi)
        if branching == "most-fractional":
            score = np.minimum(down, 1.0 - down)
        else:
            score = pc.score(down, frac > INT_TOL)
        k = int(np.argmax(score))
        lo, hi = node.lo.copy(), node.hi.copy()
        if inc_x is not None:
            _fix_by_reduced_cost(res, ints, lo, hi, inc_obj - gap_tol)
        hi_f = hi.copy()
        hi_f[k] = math.floor(xi[k])
        lo_c = lo.copy()
        lo_c[k] = math.ceil(xi[k])
        seq += 1
        heapq.heappush(heap, _Node(res.objective, seq, lo.copy(), hi_f, node.seq, k, False, down[k]))
        seq += 1
        heapq.heappush(heap, _Node(res.objective, seq, lo_c, hi.copy(), node.seq, k, True, 1.0 - down[k]))

    if inc_x is None:
        if cutoff is not None:
            return MilpResult(MilpStatus.CUTOFF, None, math.inf, float(cutoff), nodes, bound_history=history)
        return MilpResult(MilpStatus.INFEASIBLE, nodes=nodes, bound_history=history)
    bound = min([n.bound for n in heap] + [inc_obj])
    return MilpResult(MilpStatus.OPTIMAL, inc_x, inc_obj, bound, nodes, bound_history=history)


def _fix_by_reduced_cost(res, ints, lo, hi, threshold) -> None:
    """Tighten integer bounds that cannot move without reaching ``threshold``.

    A nonbasic integer at its lower bound with reduced cost ``d > 0`` raises
    the objective by at least ``d`` per unit step, so if one step already
    reaches the threshold it may be fixed for the whole subtree.
    """
    d = res.dual_bounds[ints]
    x = res.primal[ints]
    at_lo = (np.abs(x - lo) <= INT_TOL) & (d > 0) & (res.objective + d >= threshold)
    at_hi = (np.abs(x - hi) <= INT_TOL) & (d < 0) & (res.objective - d >= threshold)
    hi[at_lo] = lo[at_lo]
    lo[at_hi] = hi[at_hi]


class _Pseudocosts:
    """Average objective gain per unit of bound change, per variable and direction."""

    def __init__(self, n: int):
        self.sum = np.zeros((2, n))
        self.cnt = np.zeros((2, n))

    def record(self, k: int, up: bool, gain: float) -> None:
        self.sum[int(up), k] += max(gain, 0.0)
        self.cnt[int(up), k] += 1

    def score(self, down: np.ndarray, fractional: np.ndarray) -> np.ndarray:
        known = self.cnt > 0
        avg = np.where(known, self.sum / np.maximum(self.cnt, 1), 0.0)
        for d in range(2):
            fill = avg[d][known[d]].mean() if known[d].any() else 1.0
            avg[d][~known[d]] = fill
        s = np.maximum(avg[0] * down, 1e-6) * np.maximum(avg[1] * (1.0 - down), 1e-6)
        return np.where(fractional, s, -1.0)
