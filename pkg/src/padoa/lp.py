"""Dense bounded-variable revised simplex.

Every relaxation in the package (fixed-integer epigraph LPs, master MILP
nodes) goes through :class:`SimplexSolver`. The solver works on the
standard form ``A v = b, l <= v <= u`` obtained by appending one slack per
inequality row, and reports duals in the convention

    c = E^T y_eq + G^T y_ineq + d

so that ``y_ineq <= 0`` for ``G x <= g`` rows and the reduced costs ``d``
are the bound multipliers.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.linalg.blas import dger

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
DUAL_TOL = 1e-9
REFACTOR_EVERY = 50

_BASIC, _LOWER, _UPPER, _FREE, _FIXED = 0, 1, 2, 3, 4


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


def _as_matrix(a, ncols: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, ncols))
    return a


@dataclass(frozen=True)
class LinearProgram:
    """``min c^T x  s.t.  E x = h,  G x <= g,  lo <= x <= hi``."""

    c: np.ndarray
    E: np.ndarray
    h: np.ndarray
    G: np.ndarray
    g: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def build(cls, c, E=None, h=None, G=None, g=None, lo=None, hi=None) -> "LinearProgram":
        c = np.asarray(c, dtype=float).ravel()
        n = c.size
        if n == 0:
            raise ValueError("a linear program needs at least one variable")
        E = _as_matrix(E, n)
        G = _as_matrix(G, n)
        h = np.zeros(0) if h is None else np.asarray(h, dtype=float).ravel()
        g = np.zeros(0) if g is None else np.asarray(g, dtype=float).ravel()
        lo = np.full(n, -np.inf) if lo is None else np.asarray(lo, dtype=float).ravel()
        hi = np.full(n, np.inf) if hi is None else np.asarray(hi, dtype=float).ravel()
        if E.shape[1] != n or G.shape[1] != n:
            raise ValueError("constraint matrix width does not match len(c)")
        if E.shape[0] != h.size or G.shape[0] != g.size:
            raise ValueError("right-hand side length does not match row count")
        if lo.size != n or hi.size != n:
            raise ValueError("bound vectors must have len(c) entries")
        if np.any(lo > hi):
            raise ValueError("crossed variable bounds")
        for arr in (c, E, h, G, g, lo, hi):
            arr.setflags(write=False)
        return cls(c, E, h, G, g, lo, hi)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m_eq(self) -> int:
        return self.E.shape[0]

    @property
    def m_ineq(self) -> int:
        return self.G.shape[0]


@dataclass
class LpResult:
    status: LpStatus
    primal: np.ndarray | None = None
    objective: float = float("nan")
    dual_eq: np.ndarray | None = None
    dual_ineq: np.ndarray | None = None
    dual_bounds: np.ndarray | None = None
    farkas: np.ndarray | None = None
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class BasisState:
    """Snapshot used to warm start a solve after bound changes."""

    basis: np.ndarray
    vstat: np.ndarray
    x: np.ndarray


class NumericalFailure(RuntimeError):
    pass


class SimplexSolver:
    """Stateful revised simplex on one LP.

    Bounds of structural variables may be changed and rows appended between
    solves; :meth:`resolve` then restarts from the current basis with the
    dual simplex whenever the basis is still dual feasible.
    """

    def __init__(self, lp: LinearProgram, max_iter: int | None = None, feas_tol: float = FEAS_TOL):
        self.feas_tol = feas_tol
        self.n = lp.n
        self.m_eq = lp.m_eq
        m_ub = lp.m_ineq
        m = self.m_eq + m_ub
        self.m = m
        self.A = np.zeros((m, self.n + m_ub))
        self.A[: self.m_eq, : self.n] = lp.E
        self.A[self.m_eq :, : self.n] = lp.G
        self.A[self.m_eq :, self.n :] = np.eye(m_ub)
        self.b = np.concatenate([lp.h, lp.g])
        self.c = np.concatenate([lp.c, np.zeros(m_ub)])
        self.l = np.concatenate([lp.lo, np.zeros(m_ub)])
        self.u = np.concatenate([lp.hi, np.full(m_ub, np.inf)])
        self.n_art = 0
        self.max_iter = max_iter
        self.basis: np.ndarray | None = None
        self.vstat: np.ndarray | None = None
        self.x: np.ndarray | None = None
        self.Binv: np.ndarray | None = None
        self._factored: np.ndarray | None = None
        self._since_refactor = 0
        self.iterations = 0

    # ------------------------------------------------------------------ setup
    @property
    def A(self) -> np.ndarray:
        return self._A

    @A.setter
    def A(self, value: np.ndarray) -> None:
        self._A = value
        self._AT = None

    def _row_products(self):
        """``A.T`` in a form that is fast for ``A.T @ v`` (sparse when A is)."""
        if self._AT is None:
            A = self._A
            dense = A.size < 20000 or np.count_nonzero(A) > 0.25 * A.size
            self._AT = np.ascontiguousarray(A.T) if dense else scipy.sparse.csr_matrix(A.T)
        return self._AT

    def _reduced_costs(self, costs: np.ndarray) -> np.ndarray:
        y = self.Binv.T @ costs[self.basis]
        return costs - self._row_products() @ y

    @property
    def ncols(self) -> int:
        return self.A.shape[1]

    def _iter_cap(self) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return 50 * (self.m + self.ncols) + 1000

    def _nonbasic_position(self, j: int, prefer: int | None = None) -> int:
        lo, hi = self.l[j], self.u[j]
        if lo == hi:
            return _FIXED
        if np.isfinite(lo) and np.isfinite(hi):
            return prefer if prefer in (_LOWER, _UPPER) else _LOWER
        if np.isfinite(lo):
            return _LOWER
        if np.isfinite(hi):
            return _UPPER
        return _FREE

    def _value_at(self, j: int, st: int) -> float:
        if st in (_LOWER, _FIXED):
            return self.l[j]
        if st == _UPPER:
            return self.u[j]
        return 0.0

    def refactor(self) -> None:
        B = self.A[:, self.basis]
        try:
            lu, piv = scipy.linalg.lu_factor(B, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover
            raise NumericalFailure(str(exc)) from exc
        diag = np.abs(np.diag(lu))
        if diag.size and diag.min() <= 1e-13 * max(1.0, diag.max()):
            raise NumericalFailure("singular basis matrix")
        self.Binv = np.ascontiguousarray(scipy.linalg.lu_solve((lu, piv), np.eye(self.m)))
        self._factored = self.basis.copy()
        self._since_refactor = 0
        self._compute_basic_values()

    def _compute_basic_values(self) -> None:
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b - self._row_products().T @ xn)

    def _pivot(self, r: int, q: int, w: np.ndarray) -> bool:
        """Swap column ``q`` into row ``r``; returns True when the basis was refactored."""
        row = self.Binv[r] / w[r]
        # rank-one update in place; Binv.T is a Fortran-ordered view of Binv
        dger(-1.0, row, w, a=self.Binv.T, overwrite_a=1)
        self.Binv[r] = row
        self.basis[r] = q
        self._factored[r] = q
        self.vstat[q] = _BASIC
        self._since_refactor += 1
        self.iterations += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self.refactor()
            return True
        return False

    # ---------------------------------------------------------------- phase 1
    def _cold_start(self) -> None:
        m = self.m
        self._drop_artificials()
        N = self.ncols
        vstat = np.array([self._nonbasic_position(j) for j in range(N)], dtype=int)
        x = np.array([self._value_at(j, vstat[j]) for j in range(N)])
        res = self.b - self.A @ x
        basis = np.empty(m, dtype=int)
        art_cols = []
        art_rows = []
        for r in range(m):
            sc = self._slack_of_row(r)
            if sc is not None and res[r] >= 0.0:
                basis[r] = sc
            else:
                art_rows.append(r)
                art_cols.append(-1.0 if res[r] < 0.0 else 1.0)
        k = len(art_rows)
        if k:
            D = np.zeros((m, k))
            D[art_rows, np.arange(k)] = art_cols
            self.A = np.hstack([self.A, D])
            self.c = np.concatenate([self.c, np.zeros(k)])
            self.l = np.concatenate([self.l, np.zeros(k)])
            self.u = np.concatenate([self.u, np.full(k, np.inf)])
            vstat = np.concatenate([vstat, np.full(k, _LOWER)])
            x = np.concatenate([x, np.zeros(k)])
            basis[art_rows] = N + np.arange(k)
        self.n_art = k
        vstat[basis] = _BASIC
        self.basis, self.vstat, self.x = basis, vstat, x
        self.refactor()

    def _slack_of_row(self, r: int) -> int | None:
        if r < self.m_eq:
            return None
        return int(self._all_slack_cols()[r - self.m_eq])

    def _drop_artificials(self) -> None:
        if self.n_art:
            keep = self.ncols - self.n_art
            self.A = self.A[:, :keep]
            self.c = self.c[:keep]
            self.l = self.l[:keep]
            self.u = self.u[:keep]
            self.n_art = 0

    def _art_range(self) -> range:
        return range(self.ncols - self.n_art, self.ncols)

    def _phase1(self) -> LpResult | None:
        costs = np.zeros(self.ncols)
        costs[self.ncols - self.n_art :] = 1.0
        status = self._primal(costs)
        if status is LpStatus.UNBOUNDED:  # pragma: no cover - phase 1 is bounded below
            raise NumericalFailure("phase 1 reported unbounded")
        w = float(costs[self.basis] @ self.x[self.basis])
        scale = max(1.0, float(np.max(np.abs(self.b), initial=0.0)))
        if w > self.feas_tol * scale:
            y = self.Binv.T @ costs[self.basis]
            return LpResult(LpStatus.INFEASIBLE, farkas=y.copy(), iterations=self.iterations)
        self._retire_artificials()
        return None

    def _retire_artificials(self) -> None:
        """Fix artificials at zero and delete the nonbasic ones."""
        if not self.n_art:
            return
        first = self.ncols - self.n_art
        keep = np.ones(self.ncols, dtype=bool)
        for j in range(first, self.ncols):
            if self.vstat[j] != _BASIC:
                keep[j] = False
        remap = -np.ones(self.ncols, dtype=int)
        remap[keep] = np.arange(int(keep.sum()))
        self.A = self.A[:, keep]
        self.c = self.c[keep]
        self.l = self.l[keep]
        self.u = self.u[keep]
        self.x = self.x[keep]
        self.vstat = self.vstat[keep]
        self.basis = remap[self.basis]
        self._factored = self.basis.copy()
        self.n_art = int(keep[first:].sum())
        for j in self._art_range():
            self.u[j] = 0.0
            self.c[j] = 0.0

    # --------------------------------------------------------- primal simplex
    def _primal(self, costs: np.ndarray) -> LpStatus:
        m = self.m
        degenerate = 0
        bland = False
        bland_after = 3 * (m + self.ncols)
        A = self.A
        for _ in range(self._iter_cap()):
            d = self._reduced_costs(costs)
            d[self.basis] = 0.0
            vs = self.vstat
            elig = ((vs == _LOWER) & (d < -DUAL_TOL)) | ((vs == _UPPER) & (d > DUAL_TOL)) | (
                (vs == _FREE) & (np.abs(d) > DUAL_TOL)
            )
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return LpStatus.OPTIMAL
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0
            w = self.Binv @ A[:, q]
            step, r, to_upper = self._primal_ratio(w, direction, q, bland)
            if r is None and not np.isfinite(step):
                return LpStatus.UNBOUNDED
            if step <= self.feas_tol * 1e-2:
                degenerate += 1
                if degenerate > bland_after and not bland:
                    log.debug("switching to Bland's rule after %d degenerate pivots", degenerate)
                    bland = True
            self.x[q] += direction * step
            self.x[self.basis] -= direction * step * w
            if r is None:
                # bound flip of the entering variable
                self.vstat[q] = _UPPER if direction > 0 else _LOWER
                self.x[q] = self._value_at(q, self.vstat[q])
                self.iterations += 1
                continue
            leave = int(self.basis[r])
            self.vstat[leave] = _UPPER if to_upper else _LOWER
            if self.l[leave] == self.u[leave]:
                self.vstat[leave] = _FIXED
            self.x[leave] = self._value_at(leave, self.vstat[leave])
            self._pivot(r, q, w)
        raise NumericalFailure("simplex iteration limit reached")

    def _primal_ratio(self, w, direction, q, bland):
        """Return (step, leaving row or None, leaving goes to upper bound)."""
        xb = self.x[self.basis]
        lb = self.l[self.basis]
        ub = self.u[self.basis]
        dw = direction * w
        dec = dw > PIVOT_TOL   # basic value decreases towards lower bound
        inc = dw < -PIVOT_TOL  # basic value increases towards upper bound
        ratios = np.full(self.m, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios[dec] = (xb[dec] - lb[dec]) / dw[dec]
            ratios[inc] = (ub[inc] - xb[inc]) / (-dw[inc])
        ratios = np.maximum(ratios, 0.0)
        flip = self.u[q] - self.l[q]
        if bland:
            best = ratios.min() if self.m else np.inf
            if flip <= best:
                return flip, None, False
            rows = np.flatnonzero(ratios <= best)
            r = int(rows[np.argmin(self.basis[rows])])
            return best, r, bool(inc[r])
        # Harris two-pass ratio test
        relaxed = np.full(self.m, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            relaxed[dec] = (xb[dec] - lb[dec] + self.feas_tol) / dw[dec]
            relaxed[inc] = (ub[inc] - xb[inc] + self.feas_tol) / (-dw[inc])
        theta = relaxed.min() if self.m else np.inf
        if flip <= theta and flip <= (ratios.min() if self.m else np.inf):
            return flip, None, False
        if not np.isfinite(theta):
            return (flip, None, False) if np.isfinite(flip) else (np.inf, None, False)
        rows = np.flatnonzero(ratios <= theta)
        r = int(rows[np.argmax(np.abs(w[rows]))])
        return float(ratios[r]), r, bool(inc[r])

    # ----------------------------------------------------------- dual simplex
    def _dual(self) -> LpStatus:
        A = self.A
        AT = self._row_products()
        d = None
        for _ in range(self._iter_cap()):
            if d is None:
                d = self._reduced_costs(self.c)
                d[self.basis] = 0.0
            xb = self.x[self.basis]
            lb = self.l[self.basis]
            ub = self.u[self.basis]
            below = lb - xb
            above = xb - ub
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas)) if self.m else 0
            if not self.m or infeas[r] <= self.feas_tol:
                return LpStatus.OPTIMAL
            going_up = below[r] > above[r]
            target = lb[r] if going_up else ub[r]
            alpha = AT @ self.Binv[r]
            vs = self.vstat
            if going_up:
                elig = ((vs == _LOWER) & (alpha < -PIVOT_TOL)) | ((vs == _UPPER) & (alpha > PIVOT_TOL))
            else:
                elig = ((vs == _LOWER) & (alpha > PIVOT_TOL)) | ((vs == _UPPER) & (alpha < -PIVOT_TOL))
            elig |= (vs == _FREE) & (np.abs(alpha) > PIVOT_TOL)
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return LpStatus.INFEASIBLE
            ad = np.abs(d[cand])
            aa = np.abs(alpha[cand])
            theta = np.min((ad + DUAL_TOL) / aa)
            ok = ad / aa <= theta
            pick = cand[ok]
            q = int(pick[np.argmax(np.abs(alpha[pick]))])
            w = self.Binv @ A[:, q]
            if abs(w[r]) <= PIVOT_TOL:  # pragma: no cover - inconsistent factor
                self.refactor()
                d = None
                continue
            dxq = (xb[r] - target) / w[r]
            self.x[q] += dxq
            self.x[self.basis] -= dxq * w
            leave = int(self.basis[r])
            self.vstat[leave] = _LOWER if going_up else _UPPER
            if self.l[leave] == self.u[leave]:
                self.vstat[leave] = _FIXED
            self.x[leave] = target
            # update reduced costs along the pivot row; the leaving column picks up -t
            d -= (d[q] / alpha[q]) * alpha
            d[q] = 0.0
            if self._pivot(r, q, w):
                d = None
        raise NumericalFailure("dual simplex iteration limit reached")

    # -------------------------------------------------------------- interface
    def solve(self) -> LpResult:
        """Cold two-phase solve."""
        self.iterations = 0
        try:
            if self.m == 0:
                return self._solve_no_rows()
            self._cold_start()
            infeasible = self._phase1()
            if infeasible is not None:
                return infeasible
            status = self._primal(self.c)
        except NumericalFailure as exc:
            log.warning("LP numerical failure: %s", exc)
            return LpResult(LpStatus.NUMERICAL_FAILURE, iterations=self.iterations)
        return self._result(status)

    def resolve(self) -> LpResult:
        """Re-optimize from the current basis after bound changes or new rows."""
        if self.basis is None:
            return self.solve()
        self.iterations = 0
        try:
            if self._factored is None or not np.array_equal(self._factored, self.basis):
                self.refactor()
            self._reposition_nonbasics()
            self._compute_basic_values()
            if self._primal_feasible():
                status = self._primal(self.c)
            elif self._dual_feasible():
                status = self._dual()
                if status is LpStatus.INFEASIBLE:
                    return LpResult(LpStatus.INFEASIBLE, iterations=self.iterations)
                # clean up any dual infeasibility left by tolerances
                status = self._primal(self.c)
            else:
                return self.solve()
        except NumericalFailure as exc:
            log.debug("warm start failed (%s); cold start", exc)
            return self.solve()
        return self._result(status)

    def _reposition_nonbasics(self) -> None:
        d = self._reduced_costs(self.c)
        nb = self.vstat != _BASIC
        lo, hi = self.l, self.u
        flo, fhi = np.isfinite(lo), np.isfinite(hi)
        boxed = flo & fhi
        prefer = np.where(d < 0, _UPPER, _LOWER)
        keep = np.isin(self.vstat, (_LOWER, _UPPER)) & (np.abs(d) <= DUAL_TOL)
        prefer = np.where(keep, self.vstat, prefer)
        st = np.where(boxed, prefer, np.where(flo, _LOWER, np.where(fhi, _UPPER, _FREE)))
        st = np.where(lo == hi, _FIXED, st)
        self.vstat = np.where(nb, st, self.vstat)
        val = np.where(np.isin(self.vstat, (_LOWER, _FIXED)), lo, np.where(self.vstat == _UPPER, hi, 0.0))
        self.x = np.where(nb, val, self.x)

    def _primal_feasible(self) -> bool:
        xb = self.x[self.basis]
        return bool(np.all(xb >= self.l[self.basis] - self.feas_tol) and np.all(xb <= self.u[self.basis] + self.feas_tol))

    def _dual_feasible(self) -> bool:
        d = self._reduced_costs(self.c)
        vs = self.vstat
        bad = ((vs == _LOWER) & (d < -1e-7)) | ((vs == _UPPER) & (d > 1e-7)) | ((vs == _FREE) & (np.abs(d) > 1e-7))
        return not bool(bad.any())

    def _solve_no_rows(self) -> LpResult:
        x = np.zeros(self.ncols)
        for j in range(self.ncols):
            cj = self.c[j]
            if cj > 0:
                x[j] = self.l[j]
            elif cj < 0:
                x[j] = self.u[j]
            else:
                x[j] = self.l[j] if np.isfinite(self.l[j]) else (self.u[j] if np.isfinite(self.u[j]) else 0.0)
            if not np.isfinite(x[j]):
                return LpResult(LpStatus.UNBOUNDED)
        self.x = x
        self.basis = np.zeros(0, dtype=int)
        self.vstat = np.array([self._nonbasic_position(j) for j in range(self.ncols)])
        self.Binv = np.zeros((0, 0))
        obj = float(self.c[: self.n] @ x[: self.n])
        return LpResult(
            LpStatus.OPTIMAL,
            primal=x[: self.n].copy(),
            objective=obj,
            dual_eq=np.zeros(0),
            dual_ineq=np.zeros(0),
            dual_bounds=self.c[: self.n].copy(),
        )

    def _result(self, status: LpStatus) -> LpResult:
        if status is LpStatus.UNBOUNDED:
            return LpResult(LpStatus.UNBOUNDED, iterations=self.iterations)
        self._compute_basic_values()
        y = self.Binv.T @ self.c[self.basis]
        d = self.c - self.A.T @ y
        x = self.x[: self.n].copy()
        return LpResult(
            LpStatus.OPTIMAL,
            primal=x,
            objective=float(self.c[: self.n] @ x),
            dual_eq=y[: self.m_eq].copy(),
            dual_ineq=y[self.m_eq :].copy(),
            dual_bounds=d[: self.n].copy(),
            iterations=self.iterations,
        )

    # ------------------------------------------------------------ mutations
    def set_bounds(self, j: int, lo: float, hi: float) -> None:
        if lo > hi:
            raise ValueError("crossed bounds")
        self.l[j] = lo
        self.u[j] = hi

    def add_rows(self, G: np.ndarray, g: np.ndarray) -> None:
        """Append inequality rows ``G x <= g`` with their slacks made basic."""
        G = np.atleast_2d(np.asarray(G, dtype=float))
        g = np.asarray(g, dtype=float).ravel()
        k = G.shape[0]
        if k == 0:
            return
        m, N = self.m, self.ncols
        slack_cols_old = self._all_slack_cols()
        # new columns go before the artificial block so structural indices stay put
        art = self.n_art
        core = N - art
        newA = np.zeros((m + k, N + k))
        newA[:m, :core] = self.A[:, :core]
        newA[:m, core + k :] = self.A[:, core:]
        newA[m:, : self.n] = G
        newA[m:, core : core + k] = np.eye(k)

        def widen(vec, fill):
            return np.concatenate([vec[:core], np.full(k, fill), vec[core:]])

        self.A = newA
        self.b = np.concatenate([self.b, g])
        self.c = widen(self.c, 0.0)
        self.l = widen(self.l, 0.0)
        self.u = widen(self.u, np.inf)
        self._slack_cols = np.concatenate([slack_cols_old, core + np.arange(k)])
        self.m = m + k
        if self.basis is None:
            return
        shift = lambda idx: np.where(idx >= core, idx + k, idx)  # noqa: E731
        old_basis = shift(self.basis)
        self.vstat = widen(self.vstat, _BASIC)
        self.x = widen(self.x, 0.0)
        self.basis = np.concatenate([old_basis, core + np.arange(k)])
        xs = g - G @ self.x[: self.n]
        self.x[core : core + k] = xs
        # inverse of [[B, 0], [G_B, I]] is [[Binv, 0], [-G_B Binv, I]]
        GB = newA[m:, old_basis]
        Binv = np.zeros((m + k, m + k))
        Binv[:m, :m] = self.Binv
        Binv[m:, :m] = -GB @ self.Binv
        Binv[m:, m:] = np.eye(k)
        self.Binv = Binv
        self._factored = self.basis.copy()

    def _all_slack_cols(self) -> np.ndarray:
        if hasattr(self, "_slack_cols"):
            return self._slack_cols
        return self.n + np.arange(self.m - self.m_eq)

    def state(self) -> BasisState:
        return BasisState(self.basis.copy(), self.vstat.copy(), self.x.copy())

    def restore(self, st: BasisState) -> None:
        self.basis = st.basis.copy()
        self.vstat = st.vstat.copy()
        self.x = st.x.copy()


def solve_lp(lp: LinearProgram) -> LpResult:
    """Solve ``lp`` from scratch with the two-phase revised simplex."""
    return SimplexSolver(lp).solve()


def farkas_certifies(lp: LinearProgram, y: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff ``y`` proves ``E x = h, G x <= g`` has no solution in the box.

    ``y`` stacks multipliers for equality rows then inequality rows. The
    aggregated row ``(y^T A) x`` must stay strictly below ``y^T rhs`` over
    every admissible point, with inequality multipliers non-positive.
    """
    y = np.asarray(y, dtype=float)
    ye, yg = y[: lp.m_eq], y[lp.m_eq :]
    if np.any(yg > tol):
        return False
    coef = lp.E.T @ ye + lp.G.T @ yg
    rhs = float(lp.h @ ye + lp.g @ yg)
    best = 0.0
    for cj, lo, hi in zip(coef, lp.lo, lp.hi):
        if abs(cj) <= tol:
            continue
        bound = hi if cj > 0 else lo
        if not np.isfinite(bound):
            return False
        best += cj * bound
    return best < rhs - tol


def dual_objective(lp: LinearProgram, res: LpResult, tol: float = 1e-9) -> float:
    """Dual objective value of the multipliers stored in ``res``."""
    val = float(lp.h @ res.dual_eq + lp.g @ res.dual_ineq)
    for dj, lo, hi in zip(res.dual_bounds, lp.lo, lp.hi):
        bound = lo if dj > 0 else hi
        if dj == 0 or (not np.isfinite(bound) and abs(dj) <= tol):
            continue
        val += dj * bound
    return val


def dump_lp(lp: LinearProgram, path) -> None:
    """Write ``lp`` in a plain fixed text layout for bug reports."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"LP {lp.n} {lp.m_eq} {lp.m_ineq}\n")
        fh.write("C " + " ".join(repr(float(v)) for v in lp.c) + "\n")
        for row, rhs in zip(lp.E, lp.h):
            fh.write("E " + " ".join(repr(float(v)) for v in row) + f" = {float(rhs)!r}\n")
        for row, rhs in zip(lp.G, lp.g):
            fh.write("G " + " ".join(repr(float(v)) for v in row) + f" <= {float(rhs)!r}\n")
        fh.write("LO " + " ".join(repr(float(v)) for v in lp.lo) + "\n")
        fh.write("HI " + " ".join(repr(float(v)) for v in lp.hi) + "\n")


def load_lp(path) -> LinearProgram:
    E, h, G, g = [], [], [], []
    c = lo = hi = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tag, *rest = line.split()
            if tag == "C":
                c = [float(v) for v in rest]
            elif tag == "E":
                E.append([float(v) for v in rest[:-2]])
                h.append(float(rest[-1]))
            elif tag == "G":
                G.append([float(v) for v in rest[:-2]])
                g.append(float(rest[-1]))
            elif tag == "LO":
                lo = [float(v) for v in rest]
            elif tag == "HI":
                hi = [float(v) for v in rest]
    return LinearProgram.build(c, E or None, h, G or None, g, lo, hi)
