"""Switching-network baseline for arbitrary slot permutations.

A permutation of n = 2^m slots splits as U = S . R . T where T and S are
switch stages (each slot either stays put or trades places with its partner
half a block away) and R acts independently on the two halves. Recursing on R
yields 2m - 1 stage factors whose round-i members only touch diagonals
{0, +-2^(m-i-1)}. That depth is rarely affordable, so adjacent stages are
multiplied back together ("collapsed") down to a target depth, each merged
factor evaluated as one masked-rotation transform. Rotation keys can further
be restricted to roughly log n steps, with missing steps carried out as short
chains of available ones.

The routing is the classical looping construction: pair constraints (input
partners and output partners must use different halves) form even cycles, so
walking each cycle and alternating the half assignment always succeeds.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace

from .chain import DecompositionChain
from .diag import (BsgsPlan, DiagMatrix, apply_hlt_bsgs, perm_to_diag,
                   plan_bsgs, signed_rep, to_permutation)
from .slots import Permutation, SlotVector


def _two_color(dest):
    """Half assignment per element under both pairing constraints."""
    n = len(dest)
    half = n // 2
    src = [0] * n
    for i, d in enumerate(dest):
        src[d] = i
    color = [-1] * n
    for s in range(n):
        if color[s] >= 0:
            continue
        e, c = s, 0
        while True:
            if color[e] >= 0:
                assert color[e] == c, "odd cycle in the pair graph"
                break
            color[e] = c
            mate = (e + half) % n  # shares e's input switch
            if color[mate] >= 0:
                assert color[mate] == 1 - c, "odd cycle in the pair graph"
                break
            color[mate] = 1 - c
            # the element sharing mate's output switch goes opposite to it
            e = src[(dest[mate] + half) % n]
    return color


def _plan_for(f: DiagMatrix) -> BsgsPlan:
    offs = f.signed_diag_set()
    stride = 0
    for o in offs:
        stride = math.gcd(stride, abs(o))
    stride = stride or 1
    ts = [o // stride for o in offs]
    dmax = max(abs(t) for t in ts)
    if dmax <= 64:
        return plan_bsgs(ts, f.n, stride=stride)
    # wide spreads: full n1 sweep is wasteful, try small splits and powers
    cands = list(range(1, 65)) + [1 << b for b in range(7, dmax.bit_length())]
    best = None
    for n1 in sorted(set(cands)):
        plan = plan_bsgs(ts, f.n, stride=stride, n1=n1, style="sparse")
        if best is None or plan.rotation_count() < best.rotation_count():
            best = plan
    return best


def _window_steps(plan: BsgsPlan) -> list[int]:
    return plan.executed_steps()


@dataclass
class BenesChain:
    """Stage factors in product order; evaluation applies them right to left.

    `allowed[i]` bounds the signed diagonals factor i may occupy, `groups[i]`
    records which pre-collapse stages it merges. With `key_steps` set, every
    window rotation is realized as the chain of keys in `key_paths`.
    """

    n: int
    factors: list[DiagMatrix]
    allowed: list[set[int]]
    groups: list[tuple[int, int]]
    plans: list[BsgsPlan] = field(default_factory=list)
    key_steps: set[int] | None = None
    key_paths: dict[int, tuple[int, ...]] | None = None

    def __post_init__(self):
        if not self.plans:
            self.plans = [_plan_for(f) for f in self.factors]
        assert len(self.factors) == len(self.allowed) == len(self.groups) \
            == len(self.plans)

    @property
    def depth(self) -> int:
        return len(self.factors)

    def product(self) -> DiagMatrix:
        return self.to_chain().product()

    def permutation(self) -> Permutation:
        out = Permutation.identity(self.n)
        for f in self.factors:
            out = out.compose(to_permutation(f))
        return out

    def diag_counts(self) -> list[int]:
        return [len(f.diags) for f in self.factors]

    def factor_steps(self, i: int) -> list[int]:
        return _window_steps(self.plans[i])

    def rotation_counts(self) -> list[int]:
        out = []
        for i in range(self.depth):
            steps = self.factor_steps(i)
            if self.key_paths is None:
                out.append(len(steps))
            else:
                out.append(sum(len(self.key_paths[s]) for s in steps))
        return out

    def total_rotations(self) -> int:
        return sum(self.rotation_counts())

    def key_set(self) -> set[int]:
        if self.key_steps is not None:
            return set(self.key_steps)
        used = set()
        for i in range(self.depth):
            used |= set(self.factor_steps(i))
        return used

    def to_chain(self) -> DecompositionChain:
        return DecompositionChain(self.n, list(self.factors), list(self.plans))

    def to_json(self) -> dict:
        return self.to_chain().to_json()

    def save(self, path) -> None:
        self.to_chain().save(path)


def benes_decompose(p: Permutation) -> BenesChain:
    """Full-depth stage factorization, 2 log n - 1 factors."""
    n = p.n
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    if n == 1:
        return BenesChain(1, [], [], [])
    m = n.bit_length() - 1
    sigmas: list[Permutation] = []
    taus: list[Permutation] = []
    tasks = [(0, list(p.targets))]  # (block base, block-local permutation)
    for rnd in range(m - 1):
        sz = n >> rnd
        hf = sz // 2
        tau_t = list(range(n))
        sigma_t = list(range(n))
        nxt = []
        for base, dest in tasks:
            color = _two_color(dest)
            top = [-1] * hf
            bot = [-1] * hf
            for i, c in enumerate(color):
                j = dest[i]
                tau_t[base + i] = base + c * hf + (i % hf)
                sigma_t[base + c * hf + (j % hf)] = base + j
                (top if c == 0 else bot)[i % hf] = j % hf
            assert -1 not in top and -1 not in bot
            nxt.append((base, top))
            nxt.append((base + hf, bot))
        taus.append(Permutation(tau_t))
        sigmas.append(Permutation(sigma_t))
        tasks = nxt
    middle = list(range(n))
    for base, dest in tasks:  # size-2 blocks form one switch stage
        for i, j in enumerate(dest):
            middle[base + i] = base + j
    perms = sigmas + [Permutation(middle)] + taus[::-1]
    outer = [{0, 1 << (m - i - 1), -(1 << (m - i - 1))} for i in range(m - 1)]
    allowed = outer + [{0, 1, -1}] + outer[::-1]
    factors = [perm_to_diag(q) for q in perms]
    groups = [(i, i + 1) for i in range(2 * m - 1)]
    return BenesChain(n, factors, allowed, groups)


def _sum_set(sets, n):
    acc = {0}
    for s in sets:
        acc = {(x + y) % n for x in acc for y in s}
    return {signed_rep(x, n) for x in acc}


def collapse_benes(chain: BenesChain, target_depth: int | None = None
                   ) -> BenesChain:
    """Merge adjacent factors down to target_depth (default log n - 1).

    Contiguous groupings are scored by the merged factors' executed rotation
    counts and the cheapest split is taken (first found on ties, scanning
    boundaries left to right).
    """
    n = chain.n
    if target_depth is None:
        target_depth = max(n.bit_length() - 2, 1)
    if target_depth < 1:
        raise ValueError("target depth must be >= 1")
    nf = chain.depth
    if target_depth >= nf:
        return chain
    perms = [to_permutation(f) for f in chain.factors]

    span_max = nf - target_depth + 1
    cost: dict[tuple[int, int], int] = {}
    merged: dict[tuple[int, int], Permutation] = {}
    for a in range(nf):
        q = perms[a]
        for b in range(a + 1, min(a + span_max, nf) + 1):
            if b > a + 1:
                q = q.compose(perms[b - 1])
            merged[a, b] = q
            cost[a, b] = len(_window_steps(_plan_for(perm_to_diag(q))))

    INF = float("inf")
    best = [[INF] * (target_depth + 1) for _ in range(nf + 1)]
    back = [[-1] * (target_depth + 1) for _ in range(nf + 1)]
    best[0][0] = 0
    for i in range(1, nf + 1):
        for g in range(1, min(i, target_depth) + 1):
            if nf - i < target_depth - g:  # not enough factors left
                continue
            for a in range(max(g - 1, i - span_max), i):
                prev = best[a][g - 1]
                if prev is INF or (a, i) not in cost:
                    continue
                c = prev + cost[a, i]
                if c < best[i][g]:
                    best[i][g] = c
                    back[i][g] = a
    assert best[nf][target_depth] is not INF

    bounds = [nf]
    i, g = nf, target_depth
    while g:
        i = back[i][g]
        bounds.append(i)
        g -= 1
    bounds.reverse()

    factors, allowed, groups = [], [], []
    for a, b in zip(bounds, bounds[1:]):
        factors.append(perm_to_diag(merged[a, b]))
        allowed.append(_sum_set(chain.allowed[a:b], n))
        groups.append((chain.groups[a][0], chain.groups[b - 1][1]))
    return BenesChain(n, factors, allowed, groups)


def _short_sum(step, keys, n):
    if step in keys:
        return True
    return any((step - k) % n in keys for k in keys)


def _key_paths(steps, keys, n):
    """Shortest composition of each step from the key set, or None."""
    order = sorted(keys)
    dist = [-1] * n
    pred = [0] * n
    dist[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for k in order:
                y = (x + k) % n
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    pred[y] = k
                    nxt.append(y)
        frontier = nxt
    paths = {}
    for s in steps:
        s %= n
        if dist[s] < 0:
            return None
        path = []
        x = s
        while x:
            path.append(pred[x])
            x = (x - pred[x]) % n
        paths[s] = tuple(reversed(path))
    return paths


def restrict_keys(chain: BenesChain, budget: int | None = None) -> BenesChain:
    """Cap the rotation-key set at roughly log n steps.

    The busiest steps are kept outright unless already a sum of two kept
    keys; whatever budget remains goes to the busiest skipped steps. Steps
    left out are rotated in several hops, so totals can only grow.
    """
    n = chain.n
    if budget is None:
        budget = n.bit_length() - 1
    if budget < 1:
        raise ValueError("key budget must be >= 1")
    counts: Counter = Counter()
    for i in range(chain.depth):
        counts.update(chain.factor_steps(i))
    if not counts:
        return replace(chain, key_steps=set(), key_paths={})

    ordered = sorted(counts, key=lambda s: (-counts[s], s))
    keys: list[int] = []
    for s in ordered:
        if len(keys) >= budget:
            break
        if not _short_sum(s, keys, n):
            keys.append(s)
    for s in ordered:
        if len(keys) >= budget:
            break
        if s not in keys:
            keys.append(s)
    kset = set(keys)
    paths = _key_paths(counts, kset, n)
    pw = n >> 1
    while paths is None and pw:  # guarantee coverage via power steps
        kset.add(pw)
        pw >>= 1
        paths = _key_paths(counts, kset, n)
    assert paths is not None
    return replace(chain, key_steps=kset, key_paths=paths)


def evaluate_benes(chain: BenesChain, v: SlotVector,
                   tag: str = "benes") -> SlotVector:
    if v.n != chain.n:
        raise ValueError(f"slot length mismatch: {v.n} != {chain.n}")
    rot = None
    if chain.key_paths is not None:
        paths, n = chain.key_paths, chain.n

        def rot(vec, step, t):
            for k in paths[step % n]:
                vec = vec.rotate(k, t)
            return vec

    out = v
    for i in range(chain.depth - 1, -1, -1):
        out = apply_hlt_bsgs(chain.factors[i], chain.plans[i], out,
                             tag=f"{tag}.f{i}", rot=rot)
    return out
