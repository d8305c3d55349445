"""Ordered factor chains: U = factors[0] * factors[1] * ... * factors[-1].

Factors are stored in product order (leftmost first), so evaluation applies
them right to left. Each factor costs one HLT (one rescale); a factor may
carry a BSGS plan, otherwise it is evaluated diagonal by diagonal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .diag import BsgsPlan, DiagMatrix, apply_hlt_bsgs, apply_hlt_direct, matmul
from .slots import SlotVector


@dataclass
class DecompositionChain:
    n: int
    factors: list[DiagMatrix]
    plans: list[BsgsPlan | None] = field(default_factory=list)

    def __post_init__(self):
        if not self.plans:
            self.plans = [None] * len(self.factors)
        assert len(self.plans) == len(self.factors)
        assert all(f.n == self.n for f in self.factors)

    @property
    def depth(self) -> int:
        return len(self.factors)

    def product(self) -> DiagMatrix:
        out = DiagMatrix.identity(self.n)
        for f in self.factors:
            out = matmul(out, f)
        return out

    def evaluate(self, v: SlotVector, tag: str = "") -> SlotVector:
        assert v.n == self.n, "dimension mismatch"
        for f, plan in zip(reversed(self.factors), reversed(self.plans)):
            if plan is not None:
                v = apply_hlt_bsgs(f, plan, v, tag)
            else:
                v = apply_hlt_direct(f, v, tag)
        return v

    def diag_counts(self) -> list[int]:
        return [len(f.diags) for f in self.factors]

    # -- JSON (shared by the search and benes CLIs) --------------------------

    def to_json(self) -> dict:
        factors = []
        for f in self.factors:
            diags = {}
            for k in f.diag_set():
                rows = f.diags[k]
                if all(v == 1 for v in rows.values()):
                    diags[str(k)] = sorted(rows)
                else:
                    diags[str(k)] = [[l, rows[l]] for l in sorted(rows)]
            factors.append({"diags": diags})
        return {"n": self.n, "depth": self.depth, "factors": factors}

    @classmethod
    def from_json(cls, obj: dict) -> "DecompositionChain":
        n = obj["n"]
        factors = []
        for fobj in obj["factors"]:
            m = DiagMatrix(n)
            for kstr, rows in fobj["diags"].items():
                k = int(kstr)
                for item in rows:
                    if isinstance(item, list):
                        m.set_entry(k, item[0], item[1])
                    else:
                        m.set_entry(k, item, 1)
            factors.append(m)
        chain = cls(n, factors)
        assert chain.depth == obj["depth"]
        return chain

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DecompositionChain":
        with open(path) as fh:
            return cls.from_json(json.load(fh))
