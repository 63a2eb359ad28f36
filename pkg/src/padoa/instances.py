"""Small instances used by tests, the command line and the examples."""
from __future__ import annotations

import numpy as np

from .model import AbsL1, Affine, BlockSpec, CouplingConstraint, Power, StructuredMicp


def tiny() -> StructuredMicp:
    """Two blocks, ``f_i = (x_i - z_i)**2 + z_i``, ``x_i in [0, 2]``, ``x_1 + x_2 = 1``.

    The optimum is 0.5 at ``z = (0, 0)``, ``x = (0.5, 0.5)``.
    """
    blocks = [
        BlockSpec(1, 1, [0.0], [2.0], [0.0], [1.0], terms=(Power([1.0, -1.0], 0.0, 2, 1.0), Affine([0.0, 1.0])))
        for _ in range(2)
    ]
    return StructuredMicp(tuple(blocks), CouplingConstraint.from_triplets([(0, 0, 1.0), (0, 1, 1.0)], [1.0]))


def random_instance(seed: int, coupled: bool = True) -> StructuredMicp:
    """Random block problem with up to 3 blocks, 2 continuous and 2 binary variables per block.

    Coupling rows are dense with right-hand side ``A x0`` for a random
    ``x0`` inside the boxes, so the continuous feasible set is never empty.
    """
    rng = np.random.default_rng(seed)
    N = int(rng.integers(2, 4))
    blocks, x0 = [], []
    for _ in range(N):
        nx, nz = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        lo = rng.uniform(-2.0, 0.0, nx)
        hi = lo + rng.uniform(1.0, 3.0, nx)
        xi = rng.uniform(lo, hi)
        x0.append(xi)
        C = d = None
        if rng.random() < 0.3:
            C = rng.normal(size=(1, nx))
            d = C @ xi + rng.uniform(0.0, 1.0, 1)
        terms = []
        for _ in range(int(rng.integers(1, 4))):
            kind = rng.integers(0, 3)
            v = rng.normal(size=nx + nz)
            if kind == 0:
                terms.append(Affine(v, float(rng.normal())))
            elif kind == 1:
                terms.append(Power(v, float(rng.normal()), 2, float(rng.uniform(0.5, 2.0))))
            else:
                terms.append(AbsL1(v, float(rng.normal()), float(rng.uniform(0.5, 2.0))))
        blocks.append(BlockSpec(nx, nz, lo, hi, np.zeros(nz), np.ones(nz), C, d, tuple(terms)))
    x0 = np.concatenate(x0)
    if not coupled:
        return StructuredMicp(tuple(blocks))
    m = int(rng.integers(1, 3))
    A = rng.normal(size=(m, x0.size))
    trip = [(r, c, float(A[r, c])) for r in range(m) for c in range(x0.size)]
    return StructuredMicp(tuple(blocks), CouplingConstraint.from_triplets(trip, A @ x0))


def suite(n: int = 50, start: int = 0, coupled: bool = True) -> list[StructuredMicp]:
    return [random_instance(start + s, coupled) for s in range(n)]
