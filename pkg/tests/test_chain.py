import random

from permdec.chain import DecompositionChain
from permdec.diag import DiagMatrix, perm_to_diag, plan_bsgs, to_permutation
from permdec.ledger import CostLedger
from permdec.slots import Permutation, SlotVector

from util import random_perm_with_diags


def random_chain(n, rng, nfactors=3):
    factors = []
    for _ in range(nfactors):
        allowed = {0, 1, n - 1, 2, n - 2}
        factors.append(perm_to_diag(random_perm_with_diags(n, allowed, rng)))
    return DecompositionChain(n, factors)


def test_product_matches_permutation_composition(rng):
    n = 16
    chain = random_chain(n, rng)
    perm = Permutation.identity(n)
    # factors are in product order: the last one is applied first
    for f in reversed(chain.factors):
        perm = to_permutation(f).compose(perm)
    assert to_permutation(chain.product()).targets == perm.targets


def test_evaluate_matches_product(rng):
    n = 16
    chain = random_chain(n, rng)
    v = SlotVector.from_list([rng.randrange(-9, 10) for _ in range(n)])
    out = chain.evaluate(v)
    want = to_permutation(chain.product()).apply_vector(v)
    assert out.slots == want.slots
    assert out.depth_used == chain.depth


def test_evaluate_with_bsgs_plans(rng):
    n = 32
    chain = random_chain(n, rng, nfactors=2)
    plans = [plan_bsgs(sorted(f.signed_diag_set()), n) for f in chain.factors]
    planned = DecompositionChain(n, chain.factors, plans)
    v = SlotVector.from_list([rng.randrange(-9, 10) for _ in range(n)])
    with CostLedger() as led:
        out = planned.evaluate(v)
    want = to_permutation(chain.product()).apply_vector(v)
    assert out.slots == want.slots
    assert led.rescale_count == chain.depth
    budget = sum(p.rotation_count() for p in plans)
    assert led.rotation_count <= budget


def test_json_roundtrip(tmp_path, rng):
    n = 8
    chain = random_chain(n, rng, nfactors=2)
    # a non-unit entry exercises the [row, value] serialization form
    m = DiagMatrix(n)
    m.set_entry(0, 0, 2)
    m.set_entry(1, 1, 1)
    chain = DecompositionChain(n, chain.factors + [m])
    path = tmp_path / "chain.json"
    chain.save(path)
    again = DecompositionChain.load(path)
    assert again.n == chain.n
    assert again.factors == chain.factors
    assert path.read_text() == again_text(again, path)


def again_text(chain, path):
    p2 = path.parent / "again.json"
    chain.save(p2)
    return p2.read_text()


def test_depth_counts_factors(rng):
    chain = random_chain(8, rng, nfactors=4)
    assert chain.depth == 4
