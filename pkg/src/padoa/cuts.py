"""Supporting hyperplanes of the block objectives and the pools holding them.

A :class:`Cut` ``(alpha, beta, gamma)`` of block ``i`` asserts
``alpha^T x_i + beta^T z_i + gamma <= f_i(x_i, z_i)`` on the block box.
Cuts with ``term=None`` bound the whole block objective; cuts with a term
index bound one objective term. The pool model of block ``i`` is the larger
of the block-cut maximum and the sum over terms of the term-cut maxima, and
the model of the problem is the sum over blocks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .lp import LinearProgram
from .milp import MixedIntegerLinearProgram
from .model import Affine, StructuredMicp

ROUND = 1e-10
ACTIVE_TOL = 1e-6
ORIGINS = ("outer-iter", "inner-block", "master")


@dataclass(frozen=True)
class Cut:
    block: int
    alpha: np.ndarray
    beta: np.ndarray
    gamma: float
    origin: str = "outer-iter"
    term: int | None = None

    def __post_init__(self):
        for name in ("alpha", "beta"):
            arr = np.array(getattr(self, name), dtype=float).ravel()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown cut origin {self.origin!r}")

    def __call__(self, x_i, z_i) -> float:
        return float(self.alpha @ np.asarray(x_i, float) + self.beta @ np.asarray(z_i, float) + self.gamma)

    def key(self) -> tuple:
        coeffs = np.concatenate([self.alpha, self.beta, [self.gamma]])
        rounded = np.round(coeffs / ROUND).astype(np.int64)
        return (-1 if self.term is None else self.term, tuple(rounded.tolist()))

    def sort_key(self) -> tuple:
        return (self.block, ORIGINS.index(self.origin), -1 if self.term is None else self.term,
                tuple(np.concatenate([self.alpha, self.beta, [self.gamma]]).tolist()))

    def to_dict(self) -> dict:
        return {
            "block": self.block, "term": self.term, "origin": self.origin,
            "alpha": self.alpha.tolist(), "beta": self.beta.tolist(), "gamma": self.gamma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Cut":
        return cls(int(d["block"]), d["alpha"], d["beta"], float(d["gamma"]), d.get("origin", "outer-iter"), d.get("term"))


class ModelUndefined(ValueError):
    """A block has no cuts, so the pool model has no value there."""


class CutPool:
    """Per-block cut lists with rounding-based deduplication."""

    def __init__(self, problem: StructuredMicp):
        self.problem = problem
        self._cuts: list[list[Cut]] = [[] for _ in problem.blocks]
        self._keys: list[set] = [set() for _ in problem.blocks]

    def copy(self) -> "CutPool":
        other = CutPool(self.problem)
        other._cuts = [list(c) for c in self._cuts]
        other._keys = [set(k) for k in self._keys]
        return other

    def __len__(self) -> int:
        return sum(len(c) for c in self._cuts)

    def add(self, cut: Cut) -> bool:
        blk = self.problem.blocks[cut.block]
        if cut.alpha.size != blk.nx or cut.beta.size != blk.nz:
            raise ValueError("cut dimensions do not match its block")
        key = cut.key()
        if key in self._keys[cut.block]:
            return False
        self._keys[cut.block].add(key)
        self._cuts[cut.block].append(cut)
        return True

    def add_many(self, cuts: Iterable[Cut]) -> int:
        return sum(self.add(c) for c in cuts)

    def merge(self, batches: Iterable[Iterable[Cut]]) -> int:
        """Add cut batches in canonical order, independent of batch arrival."""
        allc = [c for batch in batches for c in batch]
        allc.sort(key=Cut.sort_key)
        return self.add_many(allc)

    def cuts(self, i: int | None = None) -> list[Cut]:
        if i is None:
            return [c for lst in self._cuts for c in lst]
        return list(self._cuts[i])

    def block_cuts(self, i: int) -> list[Cut]:
        return [c for c in self._cuts[i] if c.term is None]

    def term_cuts(self, i: int) -> dict[int, list[Cut]]:
        out: dict[int, list[Cut]] = {}
        for c in self._cuts[i]:
            if c.term is not None:
                out.setdefault(c.term, []).append(c)
        return out

    def count(self, i: int) -> int:
        return len(self._cuts[i])

    def terms_covered(self, i: int) -> bool:
        return len(self.term_cuts(i)) == len(self.problem.blocks[i].terms) > 0

    def block_model(self, i: int, x_i, z_i) -> float:
        vals = []
        bc = self.block_cuts(i)
        if bc:
            vals.append(max(c(x_i, z_i) for c in bc))
        if self.terms_covered(i):
            vals.append(sum(max(c(x_i, z_i) for c in lst) for lst in self.term_cuts(i).values()))
        if not vals:
            raise ModelUndefined(f"block {i} has no cuts; seed the pool first")
        return max(vals)

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {"cuts": [c.to_dict() for c in self.cuts()]}

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def from_dict(cls, problem: StructuredMicp, d: dict) -> "CutPool":
        pool = cls(problem)
        pool.add_many(Cut.from_dict(c) for c in d["cuts"])
        return pool

    @classmethod
    def load(cls, problem: StructuredMicp, path) -> "CutPool":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(problem, json.load(fh))


# ---------------------------------------------------------------- cuts
def make_cuts(problem: StructuredMicp, sol, z) -> list[Cut]:
    """One supporting hyperplane per block from a fixed-integer solution.

    ``alpha`` is the block slice of the consensus multiplier, ``beta`` the
    block slice of the z-subgradient and ``gamma`` places the plane through
    the block value at ``(x*, z)``. The block value is taken from the
    epigraph model of the final LP so the plane never rises above ``f_i``.
    """
    z = np.asarray(z, dtype=float)
    cuts = []
    for i in range(problem.N):
        xs, zs = problem.xs(i), problem.zs(i)
        alpha = sol.lam[xs]
        beta = sol.mu[zs]
        gamma = sol.block_model_values[i] - alpha @ sol.x_star[xs] - beta @ z[zs]
        cuts.append(Cut(i, alpha, beta, gamma, "outer-iter"))
    return cuts


def eval_model(pool: CutPool, x, z) -> float:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    p = pool.problem
    return float(sum(pool.block_model(i, x[p.xs(i)], z[p.zs(i)]) for i in range(p.N)))


def prune(pool: CutPool, active_at) -> CutPool:
    """Drop cuts that are inactive at the last master point ``(x+, z+, eta+)``.

    Block cuts are kept when ``eta_i+ - cut <= 1e-6``; term cuts are kept
    when within the same tolerance of their term maximum. Every block keeps
    at least its maximizing cut.
    """
    x, z, eta = (np.asarray(a, dtype=float) for a in active_at)
    p = pool.problem
    out = CutPool(p)
    for i in range(p.N):
        xi, zi = x[p.xs(i)], z[p.zs(i)]
        bc = pool.block_cuts(i)
        if bc:
            vals = np.array([c(xi, zi) for c in bc])
            keep = [c for c, v in zip(bc, vals) if eta[i] - v <= ACTIVE_TOL]
            if not keep:
                keep = [bc[int(np.argmax(vals))]]
            out.add_many(keep)
        for t, lst in sorted(pool.term_cuts(i).items()):
            vals = np.array([c(xi, zi) for c in lst])
            top = vals.max()
            out.add_many(c for c, v in zip(lst, vals) if top - v <= ACTIVE_TOL)
    return out


# ---------------------------------------------------------------- master
@dataclass
class MasterLayout:
    """Column layout of the extended-formulation master MILP."""

    n_x: int
    n_z: int
    n_blocks: int
    s_index: dict  # (block, term) -> column

    @property
    def z_cols(self) -> np.ndarray:
        return self.n_x + np.arange(self.n_z)

    def eta_col(self, i: int) -> int:
        return self.n_x + self.n_z + i

    def split(self, v: np.ndarray):
        x = v[: self.n_x]
        z = v[self.n_x : self.n_x + self.n_z]
        eta = v[self.n_x + self.n_z : self.n_x + self.n_z + self.n_blocks]
        return x, z, eta


def build_master(problem: StructuredMicp, pool: CutPool, lb_z=None, ub_z=None):
    """Extended-formulation MILP ``min sum_i eta_i`` over the pool model.

    Returns ``(milp, layout)``. Terms whose pool holds a single cut are
    written straight into the block epigraph row; other terms get their own
    epigraph column.
    """
    p = problem
    lb_z = p.lb_z if lb_z is None else np.asarray(lb_z, float)
    ub_z = p.ub_z if ub_z is None else np.asarray(ub_z, float)
    nx, nz, N = p.n_x, p.n_z, p.N
    s_index: dict = {}
    col = nx + nz + N
    term_maps = []
    for i in range(N):
        tc = pool.term_cuts(i) if pool.terms_covered(i) else {}
        if not tc and not pool.block_cuts(i):
            raise ModelUndefined(f"block {i} has no cuts; seed the pool first")
        term_maps.append(tc)
        for t, lst in sorted(tc.items()):
            if len(lst) > 1:
                s_index[(i, t)] = col
                col += 1
    ncol = col
    rows, rhs = [], []

    def row_for(i, cut):
        r = np.zeros(ncol)
        r[p.xs(i)] = cut.alpha
        r[nx + p.zs(i).start : nx + p.zs(i).stop] = cut.beta
        return r

    for i in range(N):
        for cut in pool.block_cuts(i):
            r = row_for(i, cut)
            r[nx + nz + i] = -1.0
            rows.append(r)
            rhs.append(-cut.gamma)
        tc = term_maps[i]
        if tc:
            r = np.zeros(ncol)
            const = 0.0
            for t, lst in sorted(tc.items()):
                if (i, t) in s_index:
                    r[s_index[(i, t)]] = 1.0
                else:
                    r += row_for(i, lst[0])
                    const += lst[0].gamma
            r[nx + nz + i] = -1.0
            rows.append(r)
            rhs.append(-const)
            for t, lst in sorted(tc.items()):
                if (i, t) not in s_index:
                    continue
                for cut in lst:
                    r = row_for(i, cut)
                    r[s_index[(i, t)]] = -1.0
                    rows.append(r)
                    rhs.append(-cut.gamma)
        blk = p.blocks[i]
        for crow, dval in zip(blk.C, blk.d):
            r = np.zeros(ncol)
            r[p.xs(i)] = crow
            rows.append(r)
            rhs.append(dval)
    c = np.zeros(ncol)
    c[nx + nz : nx + nz + N] = 1.0
    E = np.zeros((p.A.shape[0], ncol))
    E[:, :nx] = p.A
    lo = np.concatenate([p.lb_x, lb_z, np.full(ncol - nx - nz, -np.inf)])
    hi = np.concatenate([p.ub_x, ub_z, np.full(ncol - nx - nz, np.inf)])
    lp = LinearProgram.build(c, E if E.shape[0] else None, p.b if E.shape[0] else None,
                             np.array(rows) if rows else None, np.array(rhs) if rows else None, lo, hi)
    layout = MasterLayout(nx, nz, N, s_index)
    return MixedIntegerLinearProgram(lp, layout.z_cols), layout


def seed_term_cuts(problem: StructuredMicp, points_per_power: int = 5) -> list[Cut]:
    """Globally valid starting cuts for every objective term.

    Affine terms are their own cut, absolute-value terms contribute both
    linear pieces, and power terms get tangents spread over the range of
    their inner affine form on the block box.
    """
    from .model import AbsL1, Power

    out = []
    for i, blk in enumerate(problem.blocks):
        lo = np.concatenate([blk.lb_x, blk.lb_z])
        hi = np.concatenate([blk.ub_x, blk.ub_z])
        for t, term in enumerate(blk.terms):
            if isinstance(term, Affine):
                out.append(_term_cut(i, blk.nx, t, term.a, term.c))
            elif isinstance(term, AbsL1):
                out.append(_term_cut(i, blk.nx, t, term.w * term.q, -term.w * term.r))
                out.append(_term_cut(i, blk.nx, t, -term.w * term.q, term.w * term.r))
            elif isinstance(term, Power):
                s_lo = float(np.sum(np.where(term.q > 0, term.q * lo, term.q * hi)))
                s_hi = float(np.sum(np.where(term.q > 0, term.q * hi, term.q * lo)))
                pts = set(np.linspace(s_lo, s_hi, points_per_power).tolist())
                pts.add(min(max(term.r, s_lo), s_hi))
                for s in sorted(pts):
                    out.append(power_tangent(i, blk.nx, t, term, s))
    return out


def _term_cut(i, nx, t, coeffs, const, origin="inner-block") -> Cut:
    coeffs = np.asarray(coeffs, dtype=float)
    return Cut(i, coeffs[:nx], coeffs[nx:], const, origin, t)


def power_tangent(i, nx, t, term, s: float, origin="inner-block") -> Cut:
    """Tangent of ``w (q^T v - r)**p`` at inner value ``s``."""
    slope = term.slope(s)
    val = term.w * (s - term.r) ** term.p
    return _term_cut(i, nx, t, slope * term.q, val - slope * s, origin)
