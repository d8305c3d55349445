"""Scalar-multiplication pricing.

Closed-form submodule counts are frozen against hand expansions; the
fused-drop saving is checked exactly over the whole (level, alpha) grid;
structure costing is cross-checked against replay ledgers and against the
published per-permutation ScalarMult totals.
"""

import json
import random
from fractions import Fraction

import pytest

from permdec.benes import benes_decompose, collapse_benes, restrict_keys
from permdec.chain import DecompositionChain
from permdec.costmodel import (CostParams, CostReport, chain_cost,
                               submodule_cost)
from permdec.diag import perm_to_diag
from permdec.ledger import CostLedger
from permdec.network import build_network, reduce_masks
from permdec.slots import DepthExhaustedError, Permutation, SlotVector

N = 1 << 15
LOGN = 15

# mean ScalarMult totals for one random permutation, level schedule 17 - lv
REFERENCE_TOTALS = {1 << 10: 2.484e9, 1 << 11: 2.814e9, 1 << 12: 3.101e9}


def _reduced_net(n, seed):
    p = Permutation.random(n, random.Random(seed))
    return reduce_masks(build_network(p))


# ---------------------------------------------------------------- params

def test_params_validation():
    with pytest.raises(ValueError, match="power of two"):
        CostParams(N=3000)
    with pytest.raises(ValueError, match="alpha"):
        CostParams(alpha=0)
    with pytest.raises(ValueError, match="level"):
        CostParams(level=18)
    with pytest.raises(ValueError, match="level"):
        CostParams(level=-1)


def test_params_derived_quantities():
    cp = CostParams()
    assert (cp.N, cp.L, cp.alpha, cp.level) == (1 << 15, 18, 3, 17)
    assert cp.log_n == 15
    assert cp.beta == 6  # ceil(18 / 3)
    assert cp.at(4).level == 4 and cp.at(4).alpha == cp.alpha


# ------------------------------------------------------------ submodules

def test_rescale_matches_hand_count():
    # one drop from level 17 to 16: 2N((l+1) + (l+2)(logN+1)) at l=16
    assert submodule_cost("rescale", CostParams(level=16)) == 19_988_480
    assert 2 * N * (17 + 18 * (LOGN + 1)) == 19_988_480


def test_rotation_parts_match_hand_counts():
    # full-width rotation, l=17, alpha=3: width 18, beta 6
    cp = CostParams()
    assert submodule_cost("decompose", cp) == N * (15 * 18 + 6 * (3 + 18 * 18))
    assert submodule_cost("multsum", cp) == 2 * N * 6 * (18 + 3)
    assert submodule_cost("moddown", cp) == 2 * N * (18 * 19 + 3 * 16)


def test_separate_rotation_prices_incoming_width():
    # at parameter l the operand sits one level higher: width l+2 moduli,
    # then a rescale lands it on l
    l, a = 7, 3
    cp = CostParams(alpha=a, level=l)
    w = l + 2
    b = -(-w // a)
    dec = N * LOGN * w + b * N * (a + w * (LOGN + a))
    ms = 2 * N * b * (w + a)
    md = 2 * N * (w * (a + LOGN + 1) + a * (LOGN + 1))
    res = 2 * N * ((l + 1) + (l + 2) * (LOGN + 1))
    assert submodule_cost("rotation_separate", cp) == dec + ms + md + res


def test_merged_rotation_fuses_the_drop():
    l, a = 7, 3
    cp = CostParams(alpha=a, level=l)
    w = l + 2
    b = -(-w // a)
    dec = N * LOGN * w + b * N * (a + w * (LOGN + a))
    ms = 2 * N * b * (w + a)
    fused = 2 * N * (l * ((a + 1) + LOGN + 1) + (a + 1) * (LOGN + 1))
    assert submodule_cost("rotation_merged", cp) == dec + ms + fused


def test_mask_scales_with_level():
    assert submodule_cost("mask", CostParams(level=17)) == 2 * N * 18
    assert submodule_cost("mask", CostParams(level=0)) == 2 * N


def test_all_submodules_positive_at_minimal_params():
    cp = CostParams(N=2, alpha=1, level=0)
    for kind in ("rescale", "decompose", "multsum", "moddown",
                 "rotation_separate", "rotation_merged", "mask"):
        assert submodule_cost(kind, cp) > 0


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown submodule"):
        submodule_cost("ntt", CostParams())


def test_saving_closed_form():
    # hand expansion: separate minus merged collapses to 2N(16l + 2a + 49)
    # when logN = 15, independent of the ceiling bumps
    for a in (1, 2, 3, 4):
        for l in range(17):
            cp = CostParams(alpha=a, level=l)
            diff = (submodule_cost("rotation_separate", cp)
                    - submodule_cost("rotation_merged", cp))
            assert diff == 2 * N * (16 * l + 2 * a + 49)


def test_saving_meets_published_bound_everywhere():
    # N(l logN + 3.5 logN - l + 8), exact rational comparison
    for a in (2, 3):
        for l in range(17):
            cp = CostParams(alpha=a, level=l)
            diff = (submodule_cost("rotation_separate", cp)
                    - submodule_cost("rotation_merged", cp))
            bound = (N * l * LOGN + Fraction(7, 2) * N * LOGN
                     - N * l + 8 * N)
            assert Fraction(diff) >= bound, (a, l)


# ---------------------------------------------------------- chain reports

def test_single_rotation_chain_frozen_breakdown():
    # one rotation of a fresh operand (width 18) plus its rescale and mask
    ch = DecompositionChain(64, [perm_to_diag(Permutation.rotation(64, 5))])
    rep = chain_cost(ch)
    assert rep.breakdown == {
        "rescale": 19_988_480,
        "decompose": 73_138_176,
        "multsum": 8_257_536,
        "moddown": 25_559_040,
        "mask": 1_179_648,
    }
    assert rep.total == 128_122_880
    assert rep.rotation_total == rep.total - 1_179_648
    assert rep.per_level == {1: 1}
    assert rep.key_set == {5}
    assert rep.depth == 1


def test_chain_rotations_match_replay(rng):
    p = Permutation.random(256, rng)
    ch = collapse_benes(benes_decompose(p)).to_chain()
    rep = chain_cost(ch)
    with CostLedger() as led:
        ch.evaluate(SlotVector.zeros(256))
    assert sum(rep.per_level.values()) == led.rotation_count
    assert rep.key_set == led.key_set()
    expect_mask = sum(2 * N * (lv + 1)
                      for lv in led.cmults_by_level().elements())
    assert rep.breakdown["mask"] == expect_mask
    assert rep.breakdown["rescale"] > 0


def test_chain_additivity():
    # splitting a chain and costing the parts at their true start levels
    # reproduces the whole-chain report entry by entry
    p = Permutation.random(64, random.Random(41))
    ch = collapse_benes(benes_decompose(p)).to_chain()
    assert ch.depth == 5
    cut = 2
    head = DecompositionChain(64, ch.factors[:cut], ch.plans[:cut])
    tail = DecompositionChain(64, ch.factors[cut:], ch.plans[cut:])
    cp0 = CostParams()
    full = chain_cost(ch, cp0)
    first = chain_cost(tail, cp0)  # applied first, right to left
    second = chain_cost(head, cp0.at(cp0.level - tail.depth))
    for key in full.breakdown:
        assert full.breakdown[key] == (first.breakdown[key]
                                       + second.breakdown[key])
    assert full.total == first.total + second.total


def test_chain_level_underflow():
    f = perm_to_diag(Permutation.rotation(16, 1))
    ch = DecompositionChain(16, [f, f, f])
    with pytest.raises(DepthExhaustedError):
        chain_cost(ch, CostParams(level=2))
    assert chain_cost(ch, CostParams(level=3)).depth == 3


def test_restricted_keys_raise_rotation_cost(rng):
    p = Permutation.random(256, rng)
    bc = collapse_benes(benes_decompose(p))
    rc = restrict_keys(bc)
    free = chain_cost(bc)
    tight = chain_cost(rc)
    assert sum(tight.per_level.values()) == rc.total_rotations()
    assert tight.rotation_total >= free.rotation_total
    assert tight.key_set <= rc.key_set()
    assert tight.breakdown["mask"] == free.breakdown["mask"]


# -------------------------------------------------------- network reports

def test_identity_network_costs_nothing():
    rep = chain_cost(build_network(Permutation.identity(64)))
    assert rep.total == 0
    assert rep.depth == 0
    assert not rep.per_level and not rep.key_set


def test_network_report_matches_profile(rng):
    from permdec.network import rotation_profile
    net = _reduced_net(256, 123)
    rep = chain_cost(net)
    prof = rotation_profile(net)
    assert rep.per_level == prof.per_level
    assert rep.key_set == prof.key_set
    assert rep.depth == max(prof.per_level)
    assert rep.breakdown["rescale"] == 0  # drops ride the fused moddown
    assert rep.breakdown["mask"] > 0
    with CostLedger() as led:
        from permdec.network import evaluate_network
        evaluate_network(net, SlotVector.zeros(256))
    expect_mask = sum(2 * N * (lv + 1)
                      for lv in led.cmults_by_level().elements())
    assert rep.breakdown["mask"] == expect_mask


def test_network_level_underflow():
    net = _reduced_net(256, 7)
    with pytest.raises(DepthExhaustedError):
        chain_cost(net, CostParams(level=3))


def test_network_total_matches_reference_mean():
    n = 1 << 10
    totals = [chain_cost(_reduced_net(n, 5000 + i)).total
              for i in range(20)]
    mean = sum(totals) / len(totals)
    assert abs(mean - REFERENCE_TOTALS[n]) <= 0.10 * REFERENCE_TOTALS[n]


# ---------------------------------------------------------------- report

def test_report_serialization(tmp_path):
    rep = chain_cost(_reduced_net(64, 3))
    obj = rep.to_json()
    assert obj["total"] == rep.total == sum(obj["breakdown"].values())
    assert obj["key_set"] == sorted(rep.key_set)
    assert list(obj["per_level"]) == sorted(obj["per_level"], key=int)
    csv_text = rep.to_csv()
    header, row = csv_text.strip().splitlines()
    assert header.startswith("n,depth,keys")
    assert header.endswith("total")
    assert row.split(",")[0] == "64"
    assert row.split(",")[-1] == str(rep.total)

    jp, cs = tmp_path / "r.json", tmp_path / "r.csv"
    rep.save(jp)
    rep.save(cs, fmt="csv")
    assert json.loads(jp.read_text()) == obj
    assert cs.read_text() == csv_text


def test_unsupported_source_rejected():
    with pytest.raises(TypeError, match="cannot cost"):
        chain_cost([1, 2, 3])
