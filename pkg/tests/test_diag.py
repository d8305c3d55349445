"""Diagonal representation, HLT evaluation, and BSGS plans."""

import random

import pytest

from permdec.diag import (
    BsgsPlan,
    DiagMatrix,
    PlanCoverageError,
    apply_hlt_bsgs,
    apply_hlt_direct,
    convert_r,
    matmul,
    matvec,
    perm_to_diag,
    plan_bsgs,
    signed_rep,
    to_permutation,
)
from permdec.ledger import CostLedger
from permdec.slots import Permutation, SlotVector

from util import transpose_perm


def test_signed_rep():
    assert signed_rep(3, 16) == 3
    assert signed_rep(13, 16) == -3
    assert signed_rep(8, 16) == 8  # tie goes positive
    assert signed_rep(-3, 16) == -3


def test_perm_to_diag_identity():
    m = perm_to_diag(Permutation.identity(4))
    assert m.diag_set() == [0]
    assert m.mask(0) == [1, 1, 1, 1]


def test_perm_to_diag_rotation():
    # left-rotation by 1 is realized by u_1 alone
    m = perm_to_diag(Permutation.rotation(4, 1))
    assert m.diag_set() == [1]


def test_perm_to_diag_transpose_diag_sets():
    m2 = perm_to_diag(transpose_perm(2))
    assert m2.signed_diag_set() == [-1, 0, 1]
    m4 = perm_to_diag(transpose_perm(4))
    # the 2d-1 diagonals are (d-1)*i mod n; min-abs reps differ (9 -> -7)
    assert set(m4.diag_set()) == {(3 * i) % 16 for i in range(-3, 4)}


def test_perm_roundtrip():
    rng = random.Random(5)
    for _ in range(20):
        p = Permutation.random(32, rng)
        m = perm_to_diag(p)
        assert m.is_permutation()
        assert to_permutation(m) == p


def test_hlt_direct_equals_oracle():
    rng = random.Random(6)
    for n in (8, 64):
        for _ in range(50):
            p = Permutation.random(n, rng)
            m = perm_to_diag(p)
            v = SlotVector(tuple(rng.randrange(1000) for _ in range(n)))
            with CostLedger() as lg:
                out = apply_hlt_direct(m, v)
            assert list(out.slots) == p.apply(v.slots)
            assert lg.rotation_count == len([k for k in m.diag_set() if k])
            assert lg.rescale_count == 1
            assert out.level == v.level - 1


def test_hlt_direct_identity_no_rotations():
    v = SlotVector((5, 6, 7, 8))
    with CostLedger() as lg:
        out = apply_hlt_direct(DiagMatrix.identity(4), v)
    assert out.slots == v.slots
    assert lg.rotation_count == 0


def test_hlt_direct_transpose_2x2():
    v = SlotVector((1, 2, 3, 4))
    out = apply_hlt_direct(perm_to_diag(transpose_perm(2)), v)
    assert out.slots == (1, 3, 2, 4)


def test_matmul_against_dense():
    rng = random.Random(7)
    for _ in range(20):
        n = 8
        a = DiagMatrix(n)
        b = DiagMatrix(n)
        for m in (a, b):
            for _ in range(12):
                m.set_entry(rng.randrange(n), rng.randrange(n), rng.randrange(1, 5))
        da, db = a.to_dense(), b.to_dense()
        expect = [[sum(da[i][k] * db[k][j] for k in range(n)) for j in range(n)]
                  for i in range(n)]
        assert matmul(a, b).to_dense() == expect


def test_matmul_permutations_compose():
    rng = random.Random(8)
    for _ in range(20):
        p = Permutation.random(16, rng)
        q = Permutation.random(16, rng)
        prod = matmul(perm_to_diag(p), perm_to_diag(q))
        assert to_permutation(prod) == p.compose(q)


def test_matvec_oracle():
    rng = random.Random(9)
    p = Permutation.random(16, rng)
    vals = [rng.randrange(100) for _ in range(16)]
    assert matvec(perm_to_diag(p), vals) == p.apply(vals)


def test_convert_r_examples():
    assert convert_r(6, 3, 6, 16) == 3
    assert convert_r(3, 0, 6, 16) == 13
    for k in range(8):
        for l in range(8):
            assert convert_r(k, l, 0, 8) == (k + l) % 8


# -- BSGS ---------------------------------------------------------------------


def check_assignment(plan: BsgsPlan):
    for t, (g, j) in plan.assign.items():
        assert plan.n1 * g + j == t
        if j:
            assert j in plan.baby_window
        if g:
            assert g in plan.giant_window


@pytest.mark.parametrize("dmax,n1,d1,d2", [
    (7, 3, 3, 2),     # range 8
    (3, 2, 2, 1),     # range 4
    (15, 5, 4, 3),    # range 16
    (31, 10, 10, 3),  # range 32
    (127, 18, 18, 7),  # range 128
])
def test_plan_symmetric_frozen(dmax, n1, d1, d2):
    plan = plan_bsgs(range(-dmax, dmax + 1), n=4 * (dmax + 1), stride=1)
    assert plan.style == "symmetric"
    assert plan.n1 == n1
    assert (plan.d1, plan.d2) == (d1, d2)
    assert plan.rotation_count() == d1 + 2 * d2
    check_assignment(plan)


def test_plan_onesided():
    plan = plan_bsgs(range(16), n=64, stride=1)
    assert plan.style == "onesided"
    assert plan.rotation_count() == plan.d1 + plan.d2
    check_assignment(plan)


def test_plan_single_offset_one_rotation():
    plan = plan_bsgs([5], n=32, stride=1, n1=1)
    assert plan.rotation_count() == 1


def full_range_matrix(n, stride, dmax, rng):
    """Non-permutation matrix with every diagonal stride*t, |t| <= dmax,
    populated on several rows (so every plan step is exercised)."""
    m = DiagMatrix(n)
    for t in range(-dmax, dmax + 1):
        k = (stride * t) % n
        for _ in range(3):
            m.set_entry(k, rng.randrange(n), rng.randrange(1, 9))
    return m


def test_bsgs_equals_direct_symmetric():
    rng = random.Random(10)
    n, stride, dmax = 64, 3, 7
    m = full_range_matrix(n, stride, dmax, rng)
    plan = plan_bsgs(range(-dmax, dmax + 1), n=n, stride=stride)
    v = SlotVector(tuple(rng.randrange(50) for _ in range(n)))
    with CostLedger() as lg:
        out = apply_hlt_bsgs(m, plan, v)
    base = apply_hlt_direct(m, v)
    assert out.slots == base.slots
    assert lg.rotation_count == plan.rotation_count() == plan.d1 + 2 * plan.d2
    assert lg.rescale_count == 1


def test_bsgs_equals_direct_random_structured():
    rng = random.Random(11)
    for _ in range(50):
        n = 64
        stride = rng.choice([1, 2, 3, 5])
        dmax = rng.randrange(2, 9)
        m = full_range_matrix(n, stride, dmax, rng)
        plan = plan_bsgs(range(-dmax, dmax + 1), n=n, stride=stride)
        v = SlotVector(tuple(rng.randrange(50) for _ in range(n)))
        assert apply_hlt_bsgs(m, plan, v).slots == apply_hlt_direct(m, v).slots


def test_bsgs_full_16_perm_six_rotations():
    # generic 16x16 permutation, unsigned diagonals [0,16) with n1 = n2 = 4
    rng = random.Random(12)
    p = Permutation.random(16, rng)
    m = perm_to_diag(p)
    plan = plan_bsgs(range(16), n=16, stride=1, n1=4, style="onesided")
    v = SlotVector(tuple(rng.randrange(100) for _ in range(16)))
    with CostLedger() as lg:
        out = apply_hlt_bsgs(m, plan, v)
    assert list(out.slots) == p.apply(v.slots)
    assert lg.rotation_count <= 6


def test_bsgs_eager_forced_split_d128():
    # transpose for d=128: diagonals 127*t, t in [-127, 127]; the fixed
    # (d1, d2) = (32, 4) split executes exactly d1 + 2*d2 = 40 rotations
    d = 128
    n = d * d
    p = transpose_perm(d)
    m = perm_to_diag(p)
    assert m.nnz() == n
    plan = plan_bsgs(range(-(d - 1), d), n=n, stride=d - 1, d1=32, d2=4)
    assert plan.style == "eager"
    rng = random.Random(13)
    v = SlotVector(tuple(rng.randrange(100) for _ in range(n)))
    with CostLedger() as lg:
        out = apply_hlt_bsgs(m, plan, v)
    assert list(out.slots) == p.apply(v.slots)
    assert lg.rotation_count == 40


def test_bsgs_plan_coverage_error():
    m = DiagMatrix(16)
    m.set_entry(7, 0, 1)
    plan = plan_bsgs([0, 1, 2], n=16, stride=1)
    with pytest.raises(PlanCoverageError):
        apply_hlt_bsgs(m, plan, SlotVector.zeros(16))


def test_bsgs_key_steps():
    plan = plan_bsgs(range(-7, 8), n=64, stride=3)
    keys = plan.key_steps()
    assert 0 not in keys
    assert len(keys) <= plan.rotation_count()
