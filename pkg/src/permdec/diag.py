"""Diagonal-form matrices and homomorphic linear transforms.

A matrix is stored as a map from diagonal index k (normalized to [0, n)) to
the rows holding a non-zero entry on that diagonal, where the entry at
diagonal k, row l is A[l, (l + k) mod n]. Evaluating U x homomorphically is

    (U x)[l] = sum_k  u_k[l] * x[(l + k) mod n]

so each non-zero diagonal costs one rotation (k != 0) and one mask multiply,
with a single rescale after the sum. The BSGS evaluator regroups the sum as

    U x = sum_g Rot( sum_j Rot(u_{n1 g + j}, -a n1 g) . Rot(x, a j), a n1 g )

cutting rotations from the diagonal count to babies + giants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .slots import Permutation, SlotVector, rotate_tuple


def signed_rep(k: int, n: int) -> int:
    """Signed representative of k mod n with minimum magnitude, ties positive."""
    k %= n
    return k if k <= n - k else k - n


class DiagMatrix:
    __slots__ = ("n", "diags")

    def __init__(self, n: int, diags: dict[int, dict[int, int]] | None = None):
        self.n = n
        self.diags: dict[int, dict[int, int]] = {}
        if diags:
            for k, rows in diags.items():
                k %= n
                bucket = self.diags.setdefault(k, {})
                for l, val in rows.items():
                    if val:
                        bucket[l % n] = val
                if not bucket:
                    del self.diags[k]

    # -- construction --------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "DiagMatrix":
        return cls(n, {0: {l: 1 for l in range(n)}})

    @classmethod
    def from_permutation(cls, p: Permutation) -> "DiagMatrix":
        return perm_to_diag(p)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[int]]) -> "DiagMatrix":
        n = len(rows)
        m = cls(n)
        for l in range(n):
            assert len(rows[l]) == n
            for c in range(n):
                if rows[l][c]:
                    m.set_entry((c - l) % n, l, rows[l][c])
        return m

    def set_entry(self, k: int, l: int, val: int) -> None:
        assert val != 0
        self.diags.setdefault(k % self.n, {})[l % self.n] = val

    # -- views ---------------------------------------------------------------

    def entries(self) -> Iterator[tuple[int, int, int]]:
        """Yields (diagonal k, row l, value)."""
        for k in sorted(self.diags):
            rows = self.diags[k]
            for l in sorted(rows):
                yield k, l, rows[l]

    def diag_set(self) -> list[int]:
        return sorted(self.diags)

    def signed_diag_set(self) -> list[int]:
        return sorted(signed_rep(k, self.n) for k in self.diags)

    def mask(self, k: int) -> list[int]:
        """The diagonal k as a full-length mask vector u_k."""
        rows = self.diags.get(k % self.n, {})
        out = [0] * self.n
        for l, val in rows.items():
            out[l] = val
        return out

    def to_dense(self) -> list[list[int]]:
        out = [[0] * self.n for _ in range(self.n)]
        for k, l, val in self.entries():
            out[l][(l + k) % self.n] = val
        return out

    def nnz(self) -> int:
        return sum(len(rows) for rows in self.diags.values())

    def __eq__(self, other) -> bool:
        return (isinstance(other, DiagMatrix) and self.n == other.n
                and self.diags == other.diags)

    def __repr__(self) -> str:
        return f"DiagMatrix(n={self.n}, diags={self.diag_set()})"

    def is_permutation(self) -> bool:
        rows_seen = set()
        cols_seen = set()
        for k, l, val in self.entries():
            if val != 1 or l in rows_seen:
                return False
            c = (l + k) % self.n
            if c in cols_seen:
                return False
            rows_seen.add(l)
            cols_seen.add(c)
        return len(rows_seen) == self.n


def perm_to_diag(p: Permutation) -> DiagMatrix:
    """U with apply_hlt_direct(U, v) = p(v): entry for source s sits at
    row targets[s], diagonal (s - targets[s]) mod n."""
    n = p.n
    m = DiagMatrix(n)
    for src, dst in enumerate(p.targets):
        m.set_entry((src - dst) % n, dst, 1)
    return m


def to_permutation(m: DiagMatrix) -> Permutation:
    targets = [-1] * m.n
    for k, l, val in m.entries():
        assert val == 1, "not a permutation matrix"
        src = (l + k) % m.n
        assert targets[src] == -1, "column conflict"
        targets[src] = l
    assert -1 not in targets, "missing columns"
    return Permutation(targets)


def matmul(a: DiagMatrix, b: DiagMatrix) -> DiagMatrix:
    """C = A B in diagonal form; sparse in both factors."""
    assert a.n == b.n
    n = a.n
    out = DiagMatrix(n)
    acc: dict[int, dict[int, int]] = {}
    for ka, rows_a in a.diags.items():
        for kb, rows_b in b.diags.items():
            kc = (ka + kb) % n
            bucket = acc.setdefault(kc, {})
            for l, va in rows_a.items():
                vb = rows_b.get((l + ka) % n)
                if vb:
                    bucket[l] = bucket.get(l, 0) + va * vb
    for kc, rows in acc.items():
        for l, val in rows.items():
            if val:
                out.set_entry(kc, l, val)
    return out


def matvec(m: DiagMatrix, vals: Sequence[int]) -> list[int]:
    """Free reference product for oracles."""
    n = m.n
    out = [0] * n
    for k, l, val in m.entries():
        out[l] += val * vals[(l + k) % n]
    return out


def apply_hlt_direct(m: DiagMatrix, v: SlotVector, tag: str = "") -> SlotVector:
    """One rotation per non-zero off diagonal, one rescale at the end."""
    assert m.n == v.n, "dimension mismatch"
    acc = None
    for k in sorted(m.diags):
        term = v.rotate(k, tag).cmult(m.mask(k), tag)
        acc = term if acc is None else acc + term
    if acc is None:
        acc = SlotVector.zeros(v.n, v.level)
    return acc.rescale(tag)


# -- BSGS ---------------------------------------------------------------------


class PlanCoverageError(Exception):
    """A diagonal of the matrix is not covered by the BSGS plan."""


@dataclass(frozen=True)
class BsgsPlan:
    """Grouping t = n1*g + j of diagonal offsets k = a*t mod n.

    d1 counts executed baby rotations, d2 the giants per side (symmetric
    style) or in total (one-sided); rotation_count() is the exact number of
    rotations apply_hlt_bsgs records when every covered diagonal is present.
    In the lazy styles every step in the windows is genuinely used by some
    offset; the eager style (forced split) executes the full window
    regardless, matching the d1 + 2*d2 accounting of a plan that
    precomputes all rotants.
    """

    n: int
    stride: int
    n1: int
    style: str  # 'symmetric' | 'onesided' | 'sparse' | 'eager'
    assign: dict[int, tuple[int, int]] = field(hash=False)  # t -> (g, j)
    baby_window: tuple[int, ...]  # j values the evaluator rotates by (no 0)
    giant_window: tuple[int, ...]  # g values the evaluator rotates by (no 0)
    d1: int
    d2: int

    def offsets(self) -> list[int]:
        return sorted(self.assign)

    def rotation_count(self) -> int:
        return len(self.baby_window) + len(self.giant_window)

    def key_steps(self) -> set[int]:
        babies = {(self.stride * j) % self.n for j in self.baby_window}
        giants = {(self.stride * self.n1 * g) % self.n for g in self.giant_window}
        return (babies | giants) - {0}

    def executed_steps(self) -> list[int]:
        """One entry per rotation the evaluator performs; a window slot whose
        step wraps to 0 mod n costs nothing and is dropped."""
        steps = [(self.stride * j) % self.n for j in self.baby_window]
        steps += [(self.stride * self.n1 * g) % self.n
                  for g in self.giant_window]
        return [s for s in steps if s]


def _window_union(assign: dict[int, tuple[int, int]]):
    js = sorted({j for g, j in assign.values() if j != 0})
    gs = sorted({g for g, j in assign.values() if g != 0})
    return tuple(js), tuple(gs)


def _assign_symmetric(offsets: Iterable[int], n1: int) -> dict[int, tuple[int, int]]:
    # positive offsets: plain floor division, j in [0, n1)
    # negative offsets: floor shifted by s, j in [-s, n1-s) -- the union of
    # both sides is exactly the window [-s, n1), every value used
    dmax = max(abs(t) for t in offsets)
    q, s = divmod(dmax, n1)
    assign = {}
    for t in offsets:
        if t >= 0:
            g = t // n1
        else:
            g = (t + s) // n1
        assign[t] = (g, t - n1 * g)
    return assign


def _tie_penalty(d1: int, d2: int, ratio: float) -> float:
    if d1 <= 0 or d2 <= 0:
        return math.inf
    return abs(math.log2((d1 / d2) / ratio))


def plan_bsgs(offsets: Iterable[int], n: int, stride: int = 1,
              n1: int | None = None, style: str | None = None,
              ratio: float = 4.0, d1: int | None = None,
              d2: int | None = None) -> BsgsPlan:
    """Plan for diagonal offsets given in stride units (k = stride*t mod n).

    With d1/d2 given, builds the eager forced-split plan (window [1, d1],
    giants +-[1, d2], all executed). Otherwise picks n1 minimizing executed
    rotations; ties prefer d1/d2 nearest `ratio`, then smaller n1.
    """
    ts = sorted(set(offsets))
    assert ts, "empty offset set"
    if d1 is not None or d2 is not None:
        assert d1 is not None and d2 is not None and d1 >= 1 and d2 >= 0
        dmax = max(abs(t) for t in ts)
        assert d1 * max(d2, 1) + d1 >= dmax + 1 or d1 >= dmax, "split cannot cover range"
        assign = {}
        for t in ts:
            g = t // d1
            j = t - d1 * g
            assert abs(g) <= d2, "split cannot cover range"
            assign[t] = (g, j)
        return BsgsPlan(n, stride, d1, "eager", assign,
                        tuple(range(1, d1 + 1)),
                        tuple(g for g in range(-d2, d2 + 1) if g),
                        d1, d2)

    dmax = max(abs(t) for t in ts)
    if dmax == 0:
        return BsgsPlan(n, stride, 1, "trivial", {0: (0, 0)}, (), (), 0, 0)

    if style is None:
        pos = sorted(t for t in ts if t > 0)
        neg = sorted(-t for t in ts if t < 0)
        full_pos = pos == list(range(1, dmax + 1))
        full_neg = neg == list(range(1, dmax + 1))
        if full_pos and full_neg and 0 in ts:
            style = "symmetric"
        elif (full_pos and not neg) or (full_neg and not pos):
            style = "onesided"
        else:
            style = "sparse"

    candidates = []
    if n1 is not None:
        n1_range = [n1]
    else:
        n1_range = list(range(1, dmax + 1))
    for cand in n1_range:
        if style == "symmetric":
            if cand >= dmax + 1:
                continue
            assign = _assign_symmetric(ts, cand)
        elif style == "onesided":
            assign = {t: ((abs(t) // cand) * (1 if t >= 0 else -1),
                          (abs(t) % cand) * (1 if t >= 0 else -1)) for t in ts}
        else:
            assign = {t: ((t + cand // 2) // cand,
                          t - cand * ((t + cand // 2) // cand)) for t in ts}
        js, gs = _window_union(assign)
        count = len(js) + len(gs)
        if style == "symmetric":
            pd1, pd2 = len(js), len(gs) // 2
        else:
            pd1, pd2 = len(js), len(gs)
        candidates.append((count, _tie_penalty(pd1, pd2, ratio), cand,
                           BsgsPlan(n, stride, cand, style, assign, js, gs, pd1, pd2)))
    # pure-baby fallback: every offset its own rotation
    assign = {t: (0, t) for t in ts}
    js, gs = _window_union(assign)
    candidates.append((len(js), math.inf, dmax + 1,
                       BsgsPlan(n, stride, dmax + 1, style, assign, js, gs,
                                len(js), 0)))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    return candidates[0][3]


def apply_hlt_bsgs(m: DiagMatrix, plan: BsgsPlan, v: SlotVector,
                   tag: str = "", rot=None) -> SlotVector:
    """Same output as apply_hlt_direct, rotations per the plan's windows.

    `rot(vec, step, tag)` overrides how a single window rotation is carried
    out (a caller with a restricted key set chains several smaller rotations);
    it must still shift by exactly `step`.
    """
    assert m.n == v.n == plan.n, "dimension mismatch"
    if rot is None:
        rot = lambda vec, step, t: vec.rotate(step, t)
    n = m.n
    diag_for = {}
    for t in plan.assign:
        diag_for.setdefault((plan.stride * t) % n, t)
    groups: dict[int, list[tuple[int, int]]] = {}
    for k in m.diags:
        if k not in diag_for:
            raise PlanCoverageError(f"diagonal {k} not covered by plan")
        g, j = plan.assign[diag_for[k]]
        groups.setdefault(g, []).append((j, k))

    eager = plan.style == "eager"
    babies: dict[int, SlotVector] = {0: v}

    def baby(j: int) -> SlotVector:
        if j not in babies:
            babies[j] = rot(v, (plan.stride * j) % n, tag)
        return babies[j]

    if eager:
        for j in plan.baby_window:
            baby(j)

    acc = None
    giant_gs = sorted(set(plan.giant_window) | {0}) if eager else sorted(groups)
    for g in giant_gs:
        gstep = (plan.stride * plan.n1 * g) % n
        inner = None
        for j, k in sorted(groups.get(g, ())):
            mask = rotate_tuple(m.mask(k), -gstep)
            term = baby(j).cmult(mask, tag)
            inner = term if inner is None else inner + term
        if inner is None:
            if not eager:
                continue
            inner = SlotVector.zeros(n, v.level)
        out_g = rot(inner, gstep, tag) if gstep else inner
        acc = out_g if acc is None else acc + out_g
    if acc is None:
        acc = SlotVector.zeros(n, v.level)
    return acc.rescale(tag)


def convert_r(k: int, l: int, k_r: int, n: int) -> int:
    """Row of the right factor receiving entry (diag k, row l) routed through
    diagonal k_r; equals the entry's column minus k_r."""
    return (k + l - k_r) % n
