import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_value
from padoa.model import (
    AbsL1,
    Affine,
    BlockSpec,
    CouplingConstraint,
    InvalidProblem,
    Power,
    StructuredMicp,
    ensure_valid,
    evaluate_objective,
    reformulate_integer_coupling,
    subgradient,
    validate,
)
from padoa.tcl import TclConfig, generate


def one_block(terms, nx=1, nz=0, lo=-5.0, hi=5.0):
    return BlockSpec(nx, nz, [lo] * nx, [hi] * nx, [0.0] * nz, [1.0] * nz, terms=tuple(terms))


def test_term_values():
    assert Affine([1, 0], 2).value(np.array([3.0, 1.0])) == 5
    assert Power([1], 1, 2, 1).value(np.array([3.0])) == 4
    assert AbsL1([1, -1], 0, 10).value(np.array([0.5, 1.0])) == 5


def test_term_subgradients():
    assert Power([1], 0, 2, 1).subgradient(np.array([3.0])).tolist() == [6]
    assert AbsL1([1], 0, 1).subgradient(np.array([0.0])).tolist() == [0]
    assert Power([1], 1, 4, 1).subgradient(np.array([2.0])).tolist() == [4]


@pytest.mark.parametrize("term", [Power([1.0], 0, 3, 1), AbsL1([1.0], 0, -1), Power([1.0], 0, 2, -0.5)])
def test_nonconvex_terms_fail_validation(term):
    rep = validate(StructuredMicp((one_block([term]),)))
    assert [c.name for c in rep.failures] == ["convex objective terms"]


def test_block_value_is_sum_of_terms():
    terms = [Affine([1.0, 2.0]), Power([1.0, -1.0], 0.5, 4, 2.0), AbsL1([0.0, 1.0], 1.0, 3.0)]
    blk = BlockSpec(1, 1, [0], [1], [0], [1], terms=tuple(terms))
    x, z = np.array([0.3]), np.array([1.0])
    v = np.concatenate([x, z])
    assert evaluate_objective(blk, x, z) == pytest.approx(sum(t.value(v) for t in terms))


def test_problem_value_is_sum_of_blocks(tiny_problem):
    p = tiny_problem
    x, z = np.array([0.2, 0.8]), np.array([1.0, 0.0])
    assert p.evaluate(x, z) == pytest.approx(p.block_value(0, x, z) + p.block_value(1, x, z))
    assert p.evaluate(x, z) == pytest.approx(0.64 + 1 + 0.64)


_coef = st.floats(-3, 3, allow_nan=False)


@st.composite
def term_and_points(draw):
    n = draw(st.integers(1, 3))
    kind = draw(st.sampled_from(["affine", "power2", "power4", "abs"]))
    q = np.array(draw(st.lists(_coef, min_size=n, max_size=n)))
    r = draw(_coef)
    w = draw(st.floats(0, 3))
    term = {
        "affine": lambda: Affine(q, r),
        "power2": lambda: Power(q, r, 2, w),
        "power4": lambda: Power(q, r, 4, w),
        "abs": lambda: AbsL1(q, r, w),
    }[kind]()
    v = np.array(draw(st.lists(_coef, min_size=n, max_size=n)))
    v2 = np.array(draw(st.lists(_coef, min_size=n, max_size=n)))
    return term, v, v2


@settings(max_examples=1000, deadline=None)
@given(term_and_points())
def test_subgradient_inequality(case):
    term, v, v2 = case
    g = term.subgradient(v)
    lhs = term.value(v2)
    rhs = term.value(v) + g @ (v2 - v)
    assert lhs >= rhs - 1e-9 * max(1.0, abs(lhs), abs(rhs))


def test_block_subgradient_splits_x_and_z():
    blk = BlockSpec(1, 1, [0], [2], [0], [1], terms=(Power([1.0, -1.0], 0.0, 2, 1.0), Affine([0.0, 1.0])))
    gx, gz = subgradient(blk, np.array([0.5]), np.array([1.0]))
    assert gx.tolist() == [-1.0]
    assert gz.tolist() == [2.0]


def test_reformulation_example():
    b1 = one_block([Power([1.0], 0.0, 2, 1.0)], lo=0, hi=2)
    b2 = BlockSpec(0, 1, [], [], [0], [1], terms=(Affine([1.0]),))
    p = StructuredMicp((b1, b2), CouplingConstraint.from_triplets([(0, 0, 1.0)], [1.0]))
    q = reformulate_integer_coupling(p, [(0, 0, 1.0)], penalty=100.0)
    assert q.blocks[1].nx == 1
    assert q.blocks[1].lb_x.tolist() == [0.0] and q.blocks[1].ub_x.tolist() == [1.0]
    assert sorted(q.coupling.triplets()) == [(0, 0, 1.0), (0, 1, 1.0)]
    pen = q.blocks[1].terms[-1]
    assert isinstance(pen, AbsL1) and pen.w == 100.0
    assert pen.q.tolist() == [1.0, -1.0]


def test_reformulation_without_integer_entries_is_identity(tiny_problem):
    assert reformulate_integer_coupling(tiny_problem, []) is tiny_problem


def test_reformulation_counts_on_tcl():
    p = generate(TclConfig(3, 8))
    assert p.n_x == 3 * (9 + 8)
    assert p.n_z == 24


def _integer_coupled(seed):
    rng = np.random.default_rng(seed)
    blocks = []
    for _ in range(2):
        blocks.append(
            BlockSpec(1, 1, [-2.0], [2.0], [0.0], [1.0],
                      terms=(Power([1.0, rng.normal()], rng.normal(), 2, 1.0), Affine(rng.normal(size=2))))
        )
    base = StructuredMicp(tuple(blocks), CouplingConstraint.from_triplets([(0, 0, 1.0), (0, 1, 1.0)], [0.0]))
    B = [(0, 0, float(rng.normal())), (0, 1, float(rng.normal()))]
    return base, B


def _value_with_integer_coupling(base, B):
    best = math.inf
    for z in base.integer_points():
        shift = sum(v * z[c] for _, c, v in B)
        p = StructuredMicp(base.blocks, CouplingConstraint.from_triplets(base.coupling.triplets(), base.b - shift))
        best = min(best, enumerate_value(p.with_integer_bounds(z, z))[0])
    return best


@pytest.mark.parametrize("seed", range(5))
def test_reformulation_preserves_optimum(seed):
    base, B = _integer_coupled(seed)
    direct = _value_with_integer_coupling(base, B)
    reform = enumerate_value(reformulate_integer_coupling(base, B, 1e4))[0]
    assert reform == pytest.approx(direct, abs=1e-6)


def test_validate_unbounded_integer():
    blk = BlockSpec(1, 1, [0], [1], [math.inf], [math.inf], terms=())
    rep = validate(StructuredMicp((blk,)))
    assert any(c.message == "Z_i not compact" for c in rep.failures)


def test_validate_empty_polytope():
    blk = BlockSpec(1, 0, [-10], [10], [], [], C=[[1.0], [-1.0]], d=[-1.0, 0.0], terms=())
    rep = validate(StructuredMicp((blk,)))
    assert [c.message for c in rep.failures] == ["X_i empty"]
    with pytest.raises(InvalidProblem):
        ensure_valid(StructuredMicp((blk,)))


def test_validate_tcl_instance():
    assert validate(generate(TclConfig(3, 8, gamma=1.0, order=4))).ok


def test_cardinality_does_not_overflow():
    p = generate(TclConfig(3, 24))
    assert p.cardinality_z() == 2**72
