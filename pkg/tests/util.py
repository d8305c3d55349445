"""Shared test helpers: oracles and constrained permutation sampling."""

from __future__ import annotations

from permdec.diag import DiagMatrix
from permdec.slots import Permutation


def depth1_oracle(u: DiagMatrix, a: int, r: int, rc: int,
                  onesided: bool = False, count_all: bool = False):
    """Brute-force depth-1 factorization: assign each column of U a routing
    k_R in {0, +-rc} (gated so the induced left diagonal stays in
    [-(r-rc), r-rc]), U_R rows pairwise distinct. Returns the number of
    distinct valid U_R assignments (count_all) or the first one found as a
    frozenset of (row, k_R mod n), else None.

    Deliberately independent of the search: column-order backtracking over
    explicit per-column option lists, no conflict-driven moves.
    """
    n = u.n
    r_left = r - rc
    cols = []
    for k in sorted(u.diag_set()):
        for row in sorted(u.diags[k]):
            cols.append(((row + k) % n, k))
    cols.sort()
    assert len(cols) == n

    def signed_reps(k):
        if onesided:
            return [k] if k % a == 0 else []
        return [c for c in (k, k - n) if c % a == 0]

    options = []
    for c, k in cols:
        reps = signed_reps(k)
        assert reps
        kappa = min(reps, key=lambda x: (abs(x), -x))
        opts = []
        krs = [0, rc] if onesided else [0, rc, -rc]
        for kr in krs:
            lefts = signed_reps((kappa - kr) % n)
            if onesided:
                if any(0 <= x <= r_left for x in lefts):
                    opts.append(kr)
            elif any(abs(x) <= r_left for x in lefts):
                opts.append(kr)
        options.append((c, opts))

    solutions = set()
    used_rows = [False] * n
    chosen = []

    def rec(i: int) -> frozenset | None:
        if i == len(options):
            sol = frozenset(chosen)
            if count_all:
                solutions.add(sol)
                return None
            return sol
        c, opts = options[i]
        for kr in opts:
            row = (c - kr) % n
            if not used_rows[row]:
                used_rows[row] = True
                chosen.append((row, kr % n))
                got = rec(i + 1)
                used_rows[row] = False
                chosen.pop()
                if got is not None:
                    return got
        return None

    first = rec(0)
    if count_all:
        return len(solutions)
    return first


def transpose_perm(d: int, n: int | None = None) -> Permutation:
    """Row-major d x d transpose as a slot permutation (oracle-side builder)."""
    n = d * d if n is None else n
    targets = list(range(n))
    for r in range(d):
        for c in range(d):
            targets[d * r + c] = d * c + r
    return Permutation(targets)


def sigma_oracle(d: int, vals) -> list:
    """Diag-to-col by the definition: wrapped diagonal j of the matrix (the
    entries A[i][(i+j) mod d]) becomes column j. Tail slots pass through."""
    out = list(vals)
    for i in range(d):
        for j in range(d):
            out[i * d + j] = vals[i * d + (i + j) % d]
    return out


def tau_oracle(d: int, vals) -> list:
    """Diag-to-row: column j rises by j rows, so row i collects a wrapped
    diagonal. Tail slots pass through."""
    out = list(vals)
    for i in range(d):
        for j in range(d):
            out[i * d + j] = vals[((i + j) % d) * d + j]
    return out


def gamma_oracle(d: int, dp: int, vals) -> list:
    """Column-vector unit transpose: per block, unit (0, J) moves to (J, 0).
    Unused output slots are zero (the map is partial)."""
    blk = d * dp * dp
    out = [0] * len(vals)
    for base in range(0, len(vals), blk):
        for j in range(dp):
            for t in range(d):
                out[base + (j * d + t) * dp] = vals[base + t * dp + j]
    return out


def xi_oracle(d: int, dp: int, vals) -> list:
    """Row unit transpose: per block, row-unit (0, J) moves to (J, 0)."""
    blk = d * dp * dp
    out = [0] * len(vals)
    for base in range(0, len(vals), blk):
        for j in range(dp):
            for t in range(d):
                out[base + j * d * dp + t] = vals[base + j * d + t]
    return out


def mat_mul(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    """Schoolbook product, exact ints."""
    d = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(d)) for j in range(d)]
            for i in range(d)]


def rand_mat(d: int, rng, lo: int = -9, hi: int = 9) -> list[list[int]]:
    return [[rng.randint(lo, hi) for _ in range(d)] for _ in range(d)]


def perms_with_diags(n: int, allowed: list[int], limit: int | None = None):
    """All permutations whose matrix diagonals lie in `allowed` (signed steps):
    p(src) = (src - k) mod n for some k in allowed, bijectively. Backtracking
    over sources in order; yields Permutation objects."""
    allowed = list(dict.fromkeys(allowed))
    targets = [-1] * n
    used = [False] * n
    out_count = 0

    def rec(src: int):
        nonlocal out_count
        if limit is not None and out_count >= limit:
            return
        if src == n:
            out_count += 1
            yield Permutation(list(targets))
            return
        for k in allowed:
            dst = (src - k) % n
            if not used[dst]:
                used[dst] = True
                targets[src] = dst
                yield from rec(src + 1)
                used[dst] = False
                targets[src] = -1

    yield from rec(0)


def random_perm_with_diags(n: int, allowed: list[int], rng) -> Permutation:
    """One random permutation with diagonals in `allowed`. Backtracking with
    shuffled choice order; restarted when it thrashes (bad shuffles can be
    exponential), with one final unbounded attempt for feasibility."""

    def attempt(budget: int | None) -> Permutation | None:
        targets = [-1] * n
        used = [False] * n
        steps = 0

        def rec(src: int) -> bool:
            nonlocal steps
            if src == n:
                return True
            steps += 1
            if budget is not None and steps > budget:
                return False
            ks = list(allowed)
            rng.shuffle(ks)
            for k in ks:
                dst = (src - k) % n
                if not used[dst]:
                    used[dst] = True
                    targets[src] = dst
                    if rec(src + 1):
                        return True
                    used[dst] = False
                    targets[src] = -1
            return False

        return Permutation(targets) if rec(0) else None

    for _ in range(200):
        got = attempt(20 * n)
        if got is not None:
            return got
    got = attempt(None)
    assert got is not None, "no permutation with the requested diagonal support"
    return got
