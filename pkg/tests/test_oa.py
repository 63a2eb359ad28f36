import csv
import io
import math

import numpy as np
import pytest

from oracles import enumerate_value, fixed_z_value
from padoa.instances import random_instance
from padoa.model import Affine, BlockSpec, CouplingConstraint, Power, StructuredMicp
from padoa.oa import TRACE_COLUMNS, Status, master_cutoff, oa_solve


def test_tiny_from_far_corner(tiny_problem):
    res = oa_solve(tiny_problem, 1e-6, z0=np.array([1.0, 1.0]))
    assert res.status is Status.OPTIMAL
    assert res.value == pytest.approx(0.5, abs=1e-6)
    assert res.z.tolist() == [0.0, 0.0]


def test_linear_single_point_one_iteration():
    blk = BlockSpec(2, 1, [0, 0], [1, 1], [1], [1], terms=(Affine([1.0, -2.0, 3.0]),))
    p = StructuredMicp((blk,), CouplingConstraint.from_triplets([(0, 0, 1), (0, 1, 1)], [1.5]))
    res = oa_solve(p, 1e-6)
    assert res.iterations == 1
    assert res.value == pytest.approx(0.5 - 2 + 3)


def test_infeasible_coupling():
    blk = BlockSpec(1, 1, [0], [1], [0], [1], terms=(Power([1.0, 0.0], 0, 2, 1),))
    p = StructuredMicp((blk,), CouplingConstraint.from_triplets([(0, 0, 1.0)], [5.0]))
    res = oa_solve(p, 1e-6)
    assert res.status is Status.INFEASIBLE
    assert res.iterations == 0
    assert res.certificate.verify()


@pytest.mark.parametrize("seed", range(12))
def test_bounds_bracket_the_optimum(seed):
    p = random_instance(seed)
    best, _ = enumerate_value(p)
    res = oa_solve(p, 1e-6)
    assert res.value == pytest.approx(best, abs=1e-6)
    for row in res.trace:
        assert row.U >= best - 1e-7
        assert row.LB <= best + 1e-7
    keys = [tuple(v.astype(int)) for v in res.visited]
    assert len(keys) == len(set(keys))
    assert res.iterations <= p.cardinality_z()
    # one outer cut per block per evaluated point
    for i in range(p.N):
        assert len(res.pool.block_cuts(i)) <= len(res.visited)
    assert fixed_z_value(p, res.z) == pytest.approx(res.value, abs=1e-6)


def test_trace_csv_layout(tiny_problem):
    res = oa_solve(tiny_problem, 1e-6, z0=np.array([1.0, 1.0]))
    rows = list(csv.reader(io.StringIO(res.trace.to_csv(timings=False))))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == res.iterations + 1
    assert all(float(r[-2]) == 0.0 and float(r[-1]) == 0.0 for r in rows[1:])


def test_cutoff_leaves_room_for_eps():
    for U in (0.0, 1.0, -3.5, 1e6):
        c = master_cutoff(U, 1e-6)
        assert U - 1e-6 <= c < U
    assert master_cutoff(math.inf, 1e-6) == math.inf


def test_bad_eps(tiny_problem):
    with pytest.raises(ValueError):
        oa_solve(tiny_problem, 0.0)


def test_bad_start_point(tiny_problem):
    with pytest.raises(ValueError):
        oa_solve(tiny_problem, 1e-6, z0=np.array([2.0, 0.0]))
