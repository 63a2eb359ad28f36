"""Convex subproblem with the integer variables held fixed.

With ``z`` fixed the problem is a convex program in ``x``. It is solved by a
cutting-plane (Kelley) loop on an epigraph LP: every non-affine term ``t``
of block ``i`` gets an epigraph column ``s_it`` that is bounded below by
tangent cuts, and tangents are added at the LP optimum until the model gap
``f(x_k, z) - LP value`` falls below ``tol_inner``.

The LP multipliers of the tangent rows give, per term, a convex combination
of valid tangents. Summing those combinations over the terms of a block
yields one plane that supports the block's epigraph model at the optimum;
its ``x`` slope is the consensus multiplier ``lambda`` and its ``z`` slope
is ``mu``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cuts import Cut, power_tangent, seed_term_cuts
from .lp import LinearProgram, LpStatus, SimplexSolver, farkas_certifies
from .model import Affine, Power, StructuredMicp

log = logging.getLogger(__name__)

DEFAULT_TOL_INNER = 5e-7
MAX_INNER = 2000
LP_FEAS_TOL = 1e-10


class NotConverged(RuntimeError):
    pass


@dataclass
class InfeasibilityCertificate:
    """Farkas multipliers for ``A x = b`` and the block rows over the boxes.

    ``y_eq`` belongs to the coupling rows and ``y_ineq`` (nonpositive) to the
    stacked ``C_i x_i <= d_i`` rows.
    """

    y_eq: np.ndarray
    y_ineq: np.ndarray
    lp: LinearProgram

    def verify(self, tol: float = 1e-9) -> bool:
        return farkas_certifies(self.lp, np.concatenate([self.y_eq, self.y_ineq]), tol)

    def to_dict(self) -> dict:
        return {"y_eq": self.y_eq.tolist(), "y_ineq": self.y_ineq.tolist()}


class CouplingInfeasible(ValueError):
    def __init__(self, certificate: InfeasibilityCertificate):
        super().__init__("coupling constraints cannot be met over the continuous boxes")
        self.certificate = certificate


@dataclass
class FixedZSolution:
    value: float
    x_star: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    inner_iters: int
    model_value: float
    block_values: np.ndarray
    block_model_values: np.ndarray
    term_cuts: list = field(default_factory=list)
    model_trace: list = field(default_factory=list)
    active_cuts: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.value - self.model_value


def feasibility_lp(problem: StructuredMicp) -> LinearProgram:
    """``{x in X : A x = b}`` as an LP with zero objective."""
    p = problem
    G = [np.zeros((0, p.n_x))]
    g = [np.zeros(0)]
    for i, blk in enumerate(p.blocks):
        if blk.C.shape[0]:
            rows = np.zeros((blk.C.shape[0], p.n_x))
            rows[:, p.xs(i)] = blk.C
            G.append(rows)
            g.append(blk.d)
    G = np.vstack(G)
    g = np.concatenate(g)
    return LinearProgram.build(
        np.zeros(p.n_x),
        p.A if p.A.shape[0] else None, p.b if p.A.shape[0] else None,
        G if G.shape[0] else None, g if G.shape[0] else None,
        p.lb_x, p.ub_x,
    )


def certify_infeasible(problem: StructuredMicp) -> InfeasibilityCertificate | None:
    """Return a Farkas certificate if ``{x in X : A x = b}`` is empty."""
    lp = feasibility_lp(problem)
    res = SimplexSolver(lp).solve()
    if res.status is not LpStatus.INFEASIBLE:
        return None
    y = res.farkas
    return InfeasibilityCertificate(y[: lp.m_eq].copy(), y[lp.m_eq :].copy(), lp)


class _EpigraphLP:
    """Kelley LP over ``(x, s)`` for one fixed ``z``."""

    def __init__(self, problem: StructuredMicp, z: np.ndarray, cuts: list[Cut]):
        p = problem
        self.p = p
        self.z = z
        self.s_col: dict = {}
        col = p.n_x
        c = np.zeros(p.n_x)
        self.const = 0.0
        self.affine_z = np.zeros(p.n_z)
        for i, blk in enumerate(p.blocks):
            zi = z[p.zs(i)]
            for t, term in enumerate(blk.terms):
                if isinstance(term, Affine):
                    c[p.xs(i)] += term.a[: blk.nx]
                    self.affine_z[p.zs(i)] += term.a[blk.nx :]
                    self.const += term.c + term.a[blk.nx :] @ zi
                else:
                    self.s_col[(i, t)] = col
                    col += 1
        self.ncol = col
        c = np.concatenate([c, np.ones(col - p.n_x)])
        G, g = [], []
        for i, blk in enumerate(p.blocks):
            for crow, dv in zip(blk.C, blk.d):
                r = np.zeros(col)
                r[p.xs(i)] = crow
                G.append(r)
                g.append(dv)
        self.n_poly = len(G)
        self.rows: list[Cut] = []
        kept = [ct for ct in cuts if ct.term is not None and (ct.block, ct.term) in self.s_col]
        for ct in kept:
            r, rhs = self._row(ct)
            G.append(r)
            g.append(rhs)
        self.rows.extend(kept)
        lo = np.concatenate([p.lb_x, np.full(col - p.n_x, -np.inf)])
        hi = np.concatenate([p.ub_x, np.full(col - p.n_x, np.inf)])
        E = np.hstack([p.A, np.zeros((p.A.shape[0], col - p.n_x))])
        self.lp = LinearProgram.build(
            c, E if E.shape[0] else None, p.b if E.shape[0] else None,
            np.array(G) if G else None, np.array(g) if G else None, lo, hi,
        )
        self.solver = SimplexSolver(self.lp, feas_tol=LP_FEAS_TOL)
        self.started = False

    def _row(self, ct: Cut):
        p = self.p
        r = np.zeros(self.ncol)
        r[p.xs(ct.block)] = ct.alpha
        r[self.s_col[(ct.block, ct.term)]] = -1.0
        return r, -ct.gamma - ct.beta @ self.z[p.zs(ct.block)]

    def add(self, new: list[Cut]) -> None:
        rows = [self._row(ct) for ct in new]
        self.solver.add_rows(np.array([r for r, _ in rows]), np.array([h for _, h in rows]))
        self.rows.extend(new)

    def solve(self):
        res = self.solver.resolve() if self.started else self.solver.solve()
        self.started = True
        return res


def solve_fixed_z(
    problem: StructuredMicp,
    z,
    tol_inner: float = DEFAULT_TOL_INNER,
    cuts: list[Cut] | None = None,
    max_inner: int = MAX_INNER,
) -> FixedZSolution:
    """Minimize ``sum_i f_i(x_i, z_i)`` over ``x in X, A x = b`` for fixed ``z``.

    ``cuts`` may carry term cuts from earlier solves; they are valid for every
    ``z`` and shorten the cutting-plane loop. Raises :class:`CouplingInfeasible`
    with a Farkas certificate if the continuous feasible set is empty.
    """
    p = problem
    z = np.asarray(z, dtype=float).ravel()
    if z.size != p.n_z:
        raise ValueError(f"z has {z.size} entries, problem has {p.n_z}")
    if tol_inner <= 0:
        raise ValueError("tol_inner must be positive")
    seeds = seed_term_cuts(p)
    epi = _EpigraphLP(p, z, seeds + list(cuts or []))
    generated = [ct for ct in seeds if (ct.block, ct.term) in epi.s_col]
    nonlinear = sorted(epi.s_col)
    add_tol = tol_inner / (2 * max(len(nonlinear), 1))
    it = 0
    history = []
    while True:
        it += 1
        res = epi.solve()
        if res.status is LpStatus.INFEASIBLE:
            cert = certify_infeasible(p)
            if cert is None:
                raise RuntimeError("epigraph LP infeasible but the continuous set is not")
            raise CouplingInfeasible(cert)
        if res.status is not LpStatus.OPTIMAL:
            raise RuntimeError(f"epigraph LP ended with status {res.status.value}")
        x = res.primal[: p.n_x]
        model = res.objective + epi.const
        history.append(model)
        new, gap = [], 0.0
        for i, t in nonlinear:
            blk = p.blocks[i]
            term = blk.terms[t]
            v = np.concatenate([x[p.xs(i)], z[p.zs(i)]])
            g_t = term.value(v) - res.primal[epi.s_col[(i, t)]]
            gap += max(g_t, 0.0)
            if g_t > add_tol:
                new.append(_tangent(i, blk.nx, t, term, v))
        if gap <= tol_inner or not new:
            break
        if it >= max_inner:
            raise NotConverged(f"fixed-z cutting planes stalled with gap {gap:.3e}")
        epi.add(new)
        generated.extend(new)
    sol = _assemble(p, z, epi, res, x, model, it, generated)
    sol.model_trace = history
    return sol


def _tangent(i, nx, t, term, v) -> Cut:
    if isinstance(term, Power):
        return power_tangent(i, nx, t, term, float(term.q @ v))
    g = term.subgradient(v)
    return Cut(i, g[:nx], g[nx:], term.value(v) - g @ v, "inner-block", t)


def _assemble(p, z, epi, res, x, model, it, generated) -> FixedZSolution:
    pi = -res.dual_ineq[epi.n_poly :]
    lam = np.zeros(p.n_x)
    mu = epi.affine_z.copy()
    block_model = np.zeros(p.N)
    for i, blk in enumerate(p.blocks):
        for term in blk.terms:
            if isinstance(term, Affine):
                lam[p.xs(i)] += term.a[: blk.nx]
                block_model[i] += term.value(np.concatenate([x[p.xs(i)], z[p.zs(i)]]))
    for (i, t), col in epi.s_col.items():
        block_model[i] += res.primal[col]
    active = []
    for w, ct in zip(pi, epi.rows):
        if w > 0:
            lam[p.xs(ct.block)] += w * ct.alpha
            mu[p.zs(ct.block)] += w * ct.beta
            active.append(ct)
    blocks = np.array([p.block_value(i, x, z) for i in range(p.N)])
    return FixedZSolution(
        value=float(blocks.sum()),
        x_star=x.copy(),
        lam=lam,
        mu=mu,
        inner_iters=it,
        model_value=float(model),
        block_values=blocks,
        block_model_values=block_model,
        term_cuts=generated,
        active_cuts=active,
    )
