"""Block-separable mixed-integer convex programs with affine coupling.

A problem is a list of blocks. Block ``i`` owns ``nx`` continuous variables
``x_i`` (box plus optional polytope rows ``C x_i <= d``), ``nz`` integer
variables ``z_i`` (box) and a convex objective written as a sum of terms.
Blocks interact only through ``A x = b`` on the continuous variables.
Global continuous columns are the blocks' ``x_i`` concatenated in order; the
same holds for integer columns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .lp import LinearProgram, LpStatus, solve_lp

DEFAULT_PENALTY = 1e4


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype).ravel()
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------- terms
@dataclass(frozen=True)
class Affine:
    """``a^T v + c`` over the block vector ``v = (x_i, z_i)``."""

    a: np.ndarray
    c: float = 0.0
    kind = "affine"

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen(self.a))
        object.__setattr__(self, "c", float(self.c))

    @property
    def size(self) -> int:
        return self.a.size

    def value(self, v: np.ndarray) -> float:
        return float(self.a @ v + self.c)

    def subgradient(self, v: np.ndarray) -> np.ndarray:
        return self.a.copy()

    def padded(self, insert_at: int, count: int) -> "Affine":
        return Affine(np.insert(self.a, insert_at, np.zeros(count)), self.c)


@dataclass(frozen=True)
class Power:
    """``w * (q^T v - r)**p`` with even ``p``."""

    q: np.ndarray
    r: float = 0.0
    p: int = 2
    w: float = 1.0
    kind = "power"

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "w", float(self.w))

    @property
    def size(self) -> int:
        return self.q.size

    def value(self, v: np.ndarray) -> float:
        return self.w * float(self.q @ v - self.r) ** self.p

    def slope(self, s: float) -> float:
        """Derivative of the scalar map ``s -> w (s - r)**p``."""
        return self.w * self.p * (s - self.r) ** (self.p - 1)

    def subgradient(self, v: np.ndarray) -> np.ndarray:
        return self.slope(float(self.q @ v)) * self.q

    def padded(self, insert_at: int, count: int) -> "Power":
        return Power(np.insert(self.q, insert_at, np.zeros(count)), self.r, self.p, self.w)


@dataclass(frozen=True)
class AbsL1:
    """``w * |q^T v - r|``."""

    q: np.ndarray
    r: float = 0.0
    w: float = 1.0
    kind = "abs"

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "w", float(self.w))

    @property
    def size(self) -> int:
        return self.q.size

    def value(self, v: np.ndarray) -> float:
        return self.w * abs(float(self.q @ v - self.r))

    def subgradient(self, v: np.ndarray) -> np.ndarray:
        # np.sign(0) == 0 picks the zero-slope element at the kink
        return self.w * np.sign(float(self.q @ v - self.r)) * self.q

    def padded(self, insert_at: int, count: int) -> "AbsL1":
        return AbsL1(np.insert(self.q, insert_at, np.zeros(count)), self.r, self.w)


ObjectiveTerm = Union[Affine, Power, AbsL1]


# ---------------------------------------------------------------- blocks
@dataclass(frozen=True)
class BlockSpec:
    nx: int
    nz: int
    lb_x: np.ndarray
    ub_x: np.ndarray
    lb_z: np.ndarray
    ub_z: np.ndarray
    C: np.ndarray = None
    d: np.ndarray = None
    terms: tuple = ()

    def __post_init__(self):
        nx, nz = int(self.nx), int(self.nz)
        object.__setattr__(self, "nx", nx)
        object.__setattr__(self, "nz", nz)
        for name in ("lb_x", "ub_x", "lb_z", "ub_z"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        C = np.zeros((0, nx)) if self.C is None else np.atleast_2d(np.array(self.C, dtype=float))
        if C.size == 0:
            C = np.zeros((0, nx))
        C.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", _frozen(np.zeros(0) if self.d is None else self.d))
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.lb_x.size != nx or self.ub_x.size != nx:
            raise ValueError(f"continuous bounds need {nx} entries")
        if self.lb_z.size != nz or self.ub_z.size != nz:
            raise ValueError(f"integer bounds need {nz} entries")
        if C.shape[1] != nx or C.shape[0] != self.d.size:
            raise ValueError("polytope rows do not match nx / rhs length")
        for t in self.terms:
            if t.size != nx + nz:
                raise ValueError(f"term has {t.size} coefficients, block has {nx + nz} variables")

    def split(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return v[: self.nx], v[self.nx :]


def evaluate_objective(block: BlockSpec, x_i, z_i) -> float:
    v = _block_vector(block, x_i, z_i)
    return float(sum(t.value(v) for t in block.terms))


def subgradient(block: BlockSpec, x_i, z_i) -> tuple[np.ndarray, np.ndarray]:
    """Term-wise subgradient of the block objective, split into (x, z) parts."""
    v = _block_vector(block, x_i, z_i)
    g = np.zeros(block.nx + block.nz)
    for t in block.terms:
        g += t.subgradient(v)
    return g[: block.nx], g[block.nx :]


def _block_vector(block: BlockSpec, x_i, z_i) -> np.ndarray:
    x_i = np.asarray(x_i, dtype=float).ravel()
    z_i = np.asarray(z_i, dtype=float).ravel()
    if x_i.size != block.nx or z_i.size != block.nz:
        raise ValueError(
            f"dimension mismatch: got ({x_i.size}, {z_i.size}), block expects ({block.nx}, {block.nz})"
        )
    return np.concatenate([x_i, z_i])


# -------------------------------------------------------------- coupling
@dataclass(frozen=True)
class CouplingConstraint:
    """Sparse ``A x = b`` given as (row, continuous column, value) triplets."""

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", _frozen(self.rows, int))
        object.__setattr__(self, "cols", _frozen(self.cols, int))
        object.__setattr__(self, "vals", _frozen(self.vals))
        object.__setattr__(self, "rhs", _frozen(self.rhs))
        if not (self.rows.size == self.cols.size == self.vals.size):
            raise ValueError("coupling triplet arrays differ in length")
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= self.rhs.size):
            raise ValueError("coupling row index out of range")

    @classmethod
    def from_triplets(cls, triplets: Iterable[Sequence[float]], rhs) -> "CouplingConstraint":
        trip = list(triplets)
        rows = [int(t[0]) for t in trip]
        cols = [int(t[1]) for t in trip]
        vals = [float(t[2]) for t in trip]
        return cls(rows, cols, vals, rhs)

    @classmethod
    def empty(cls) -> "CouplingConstraint":
        return cls([], [], [], [])

    @property
    def m(self) -> int:
        return self.rhs.size

    def matrix(self, ncols: int) -> np.ndarray:
        A = np.zeros((self.m, ncols))
        np.add.at(A, (self.rows, self.cols), self.vals)
        return A

    def triplets(self) -> list[tuple[int, int, float]]:
        return [(int(r), int(c), float(v)) for r, c, v in zip(self.rows, self.cols, self.vals)]


@dataclass(frozen=True)
class StructuredMicp:
    blocks: tuple
    coupling: CouplingConstraint = field(default_factory=CouplingConstraint.empty)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("a problem needs at least one block")
        object.__setattr__(self, "blocks", blocks)
        ox = np.concatenate([[0], np.cumsum([b.nx for b in blocks])]).astype(int)
        oz = np.concatenate([[0], np.cumsum([b.nz for b in blocks])]).astype(int)
        object.__setattr__(self, "_ox", ox)
        object.__setattr__(self, "_oz", oz)
        cols = self.coupling.cols
        if cols.size and (cols.min() < 0 or cols.max() >= ox[-1]):
            raise ValueError("coupling column index exceeds number of continuous variables")
        A = self.coupling.matrix(int(ox[-1]))
        A.setflags(write=False)
        object.__setattr__(self, "_A", A)

    # layout helpers
    @property
    def N(self) -> int:
        return len(self.blocks)

    @property
    def n_x(self) -> int:
        return int(self._ox[-1])

    @property
    def n_z(self) -> int:
        return int(self._oz[-1])

    @property
    def A(self) -> np.ndarray:
        return self._A

    @property
    def b(self) -> np.ndarray:
        return self.coupling.rhs

    def xs(self, i: int) -> slice:
        return slice(int(self._ox[i]), int(self._ox[i + 1]))

    def zs(self, i: int) -> slice:
        return slice(int(self._oz[i]), int(self._oz[i + 1]))

    def block_of_z(self, j: int) -> int:
        return int(np.searchsorted(self._oz, j, side="right") - 1)

    @property
    def lb_x(self) -> np.ndarray:
        return np.concatenate([b.lb_x for b in self.blocks])

    @property
    def ub_x(self) -> np.ndarray:
        return np.concatenate([b.ub_x for b in self.blocks])

    @property
    def lb_z(self) -> np.ndarray:
        return np.concatenate([b.lb_z for b in self.blocks]) if self.n_z else np.zeros(0)

    @property
    def ub_z(self) -> np.ndarray:
        return np.concatenate([b.ub_z for b in self.blocks]) if self.n_z else np.zeros(0)

    def evaluate(self, x, z) -> float:
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return float(sum(self.block_value(i, x, z) for i in range(self.N)))

    def block_value(self, i: int, x, z) -> float:
        return evaluate_objective(self.blocks[i], x[self.xs(i)], z[self.zs(i)])

    def with_integer_bounds(self, lb_z, ub_z) -> "StructuredMicp":
        """Copy with integer boxes replaced (used to freeze other blocks)."""
        blocks = []
        for i, blk in enumerate(self.blocks):
            s = self.zs(i)
            blocks.append(
                BlockSpec(blk.nx, blk.nz, blk.lb_x, blk.ub_x, np.asarray(lb_z)[s], np.asarray(ub_z)[s], blk.C, blk.d, blk.terms)
            )
        return StructuredMicp(tuple(blocks), self.coupling)

    def is_piecewise_linear(self) -> bool:
        return all(not isinstance(t, Power) for b in self.blocks for t in b.terms)

    def integer_points(self):
        """Iterate over every point of Z in lexicographic order."""
        import itertools

        ranges = [range(int(round(lo)), int(round(hi)) + 1) for lo, hi in zip(self.lb_z, self.ub_z)]
        for pt in itertools.product(*ranges):
            yield np.array(pt, dtype=float)

    def cardinality_z(self) -> int:
        return math.prod(int(round(hi)) - int(round(lo)) + 1 for lo, hi in zip(self.lb_z, self.ub_z))


# ----------------------------------------------------------- reformulation
def reformulate_integer_coupling(
    problem: StructuredMicp,
    integer_triplets: Iterable[Sequence[float]],
    penalty: float = DEFAULT_PENALTY,
) -> StructuredMicp:
    """Move integer columns out of the coupling rows.

    ``integer_triplets`` are (row, global integer column, value) entries of
    ``B`` in ``A x + B z = b``. Every integer column that appears gets a
    continuous copy ``y`` in its own block (box = convex hull of the integer
    range), the coupling entry is moved onto ``y`` and the block objective
    gains ``penalty * |y - z|``.
    """
    if not penalty > 0:
        raise ValueError(f"penalty must be positive, got {penalty}")
    trip = [(int(r), int(c), float(v)) for r, c, v in integer_triplets if float(v) != 0.0]
    if not trip:
        return problem
    coupled = sorted({c for _, c, _ in trip})
    per_block: dict[int, list[int]] = {}
    for j in coupled:
        if j < 0 or j >= problem.n_z:
            raise ValueError(f"integer coupling column {j} out of range")
        per_block.setdefault(problem.block_of_z(j), []).append(j)

    new_blocks = []
    copy_col: dict[int, int] = {}  # integer column -> new global continuous column
    x_shift = np.zeros(problem.n_x, dtype=int)
    offset = 0
    for i, blk in enumerate(problem.blocks):
        xs = problem.xs(i)
        x_shift[xs] = offset
        js = per_block.get(i, [])
        k = len(js)
        if k == 0:
            new_blocks.append(blk)
            continue
        nx_new = blk.nx + k
        terms = [t.padded(blk.nx, k) for t in blk.terms]
        zs0 = problem.zs(i).start
        for pos, j in enumerate(js):
            q = np.zeros(nx_new + blk.nz)
            q[blk.nx + pos] = 1.0
            q[nx_new + (j - zs0)] = -1.0
            terms.append(AbsL1(q, 0.0, penalty))
            copy_col[j] = int(problem.xs(i).stop + offset + pos)
        lb_y = np.array([blk.lb_z[j - zs0] for j in js])
        ub_y = np.array([blk.ub_z[j - zs0] for j in js])
        C = np.hstack([blk.C, np.zeros((blk.C.shape[0], k))])
        new_blocks.append(
            BlockSpec(
                nx_new, blk.nz,
                np.concatenate([blk.lb_x, lb_y]), np.concatenate([blk.ub_x, ub_y]),
                blk.lb_z, blk.ub_z, C, blk.d, tuple(terms),
            )
        )
        offset += k
    old = problem.coupling
    rows = list(old.rows) + [r for r, _, _ in trip]
    cols = [int(c + x_shift[c]) for c in old.cols] + [copy_col[c] for _, c, _ in trip]
    vals = list(old.vals) + [v for _, _, v in trip]
    return StructuredMicp(tuple(new_blocks), CouplingConstraint(rows, cols, vals, old.rhs))


# -------------------------------------------------------------- validation
@dataclass
class Check:
    block: int | None
    name: str
    ok: bool
    message: str = ""


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            where = "problem" if c.block is None else f"block {c.block}"
            lines.append(f"[{'pass' if c.ok else 'FAIL'}] {where}: {c.name}{' - ' + c.message if c.message else ''}")
        return "\n".join(lines)


class InvalidProblem(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(f"block {c.block}: {c.message}" for c in report.failures))
        self.report = report


def validate(problem: StructuredMicp) -> ValidationReport:
    """Check the standing assumptions: compact nonempty boxes and polytopes, convex terms."""
    rep = ValidationReport()
    for i, blk in enumerate(problem.blocks):
        finite_x = np.all(np.isfinite(blk.lb_x)) and np.all(np.isfinite(blk.ub_x))
        rep.checks.append(Check(i, "finite continuous bounds", bool(finite_x), "" if finite_x else "X_i not compact"))
        finite_z = np.all(np.isfinite(blk.lb_z)) and np.all(np.isfinite(blk.ub_z))
        rep.checks.append(Check(i, "finite integer bounds", bool(finite_z), "" if finite_z else "Z_i not compact"))
        if finite_z:
            lo, hi = np.ceil(blk.lb_z - 1e-9), np.floor(blk.ub_z + 1e-9)
            ok = bool(np.all(lo <= hi))
            rep.checks.append(Check(i, "integer box nonempty", ok, "" if ok else "Z_i empty"))
        if finite_x:
            rep.checks.append(_polytope_check(i, blk))
        convex = True
        msg = ""
        for t in blk.terms:
            w = getattr(t, "w", 0.0)
            if w < 0:
                convex, msg = False, f"negative weight {w} in {t.kind} term"
            if isinstance(t, Power) and (t.p < 2 or t.p % 2):
                convex, msg = False, f"power term with exponent {t.p} is not convex"
        rep.checks.append(Check(i, "convex objective terms", convex, msg))
    return rep


def _polytope_check(i: int, blk: BlockSpec) -> Check:
    if np.any(blk.lb_x > blk.ub_x):
        return Check(i, "X_i nonempty", False, "X_i empty")
    if blk.C.shape[0] == 0:
        return Check(i, "X_i nonempty", True)
    res = solve_lp(LinearProgram.build(np.zeros(blk.nx), G=blk.C, g=blk.d, lo=blk.lb_x, hi=blk.ub_x))
    ok = res.status is LpStatus.OPTIMAL
    return Check(i, "X_i nonempty", ok, "" if ok else "X_i empty")


def ensure_valid(problem: StructuredMicp) -> None:
    rep = validate(problem)
    if not rep.ok:
        raise InvalidProblem(rep)
