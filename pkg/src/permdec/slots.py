"""Exact plaintext stand-in for a batch-encoded ciphertext.

A SlotVector carries n integer slots plus a level counter that mimics the
modulus chain of a leveled scheme: fresh vectors start at DEFAULT_LEVEL,
every rescale burns one level, and running out raises. Slot arithmetic is
exact (Python ints), so any two evaluation strategies for the same linear
map can be compared for bit equality.

Rotation is a left cyclic shift: rotate(v, k)[i] = v[(i + k) mod n].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .ledger import record_cmult, record_mult, record_rescale, record_rotation

# 18 moduli -> top level 17, matching the cost model's default chain.
DEFAULT_LEVEL = 17


class DepthExhaustedError(Exception):
    """Raised when a rescale is requested at level 0."""


def rotate_tuple(slots: Sequence[int], k: int) -> tuple[int, ...]:
    """Left cyclic shift by k, no cost recorded. Works for any sequence."""
    n = len(slots)
    k %= n
    return tuple(slots[k:]) + tuple(slots[:k])


@dataclass(frozen=True)
class SlotVector:
    slots: tuple[int, ...]
    level: int = DEFAULT_LEVEL
    depth_used: int = 0

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))

    @property
    def n(self) -> int:
        return len(self.slots)

    @classmethod
    def from_list(cls, vals: Iterable[int], level: int = DEFAULT_LEVEL) -> "SlotVector":
        return cls(tuple(vals), level)

    @classmethod
    def zeros(cls, n: int, level: int = DEFAULT_LEVEL) -> "SlotVector":
        return cls((0,) * n, level)

    # -- homomorphic ops (all exact, all recorded) ---------------------------

    def rotate(self, k: int, tag: str = "") -> "SlotVector":
        k %= self.n
        if k == 0:
            return self
        record_rotation(k, tag, self.level)
        return SlotVector(rotate_tuple(self.slots, k), self.level, self.depth_used)

    def cmult(self, mask: Sequence[int], tag: str = "") -> "SlotVector":
        """Multiply by a plaintext vector. No automatic rescale."""
        assert len(mask) == self.n
        record_cmult(tag, self.level)
        out = tuple(a * b for a, b in zip(self.slots, mask))
        return SlotVector(out, self.level, self.depth_used)

    def mult(self, other: "SlotVector", tag: str = "") -> "SlotVector":
        """Ciphertext-ciphertext product. No automatic rescale."""
        assert self.n == other.n
        record_mult(tag)
        out = tuple(a * b for a, b in zip(self.slots, other.slots))
        return SlotVector(out, min(self.level, other.level),
                          max(self.depth_used, other.depth_used))

    def add(self, other: "SlotVector") -> "SlotVector":
        assert self.n == other.n
        out = tuple(a + b for a, b in zip(self.slots, other.slots))
        return SlotVector(out, min(self.level, other.level),
                          max(self.depth_used, other.depth_used))

    def __add__(self, other: "SlotVector") -> "SlotVector":
        return self.add(other)

    def rescale(self, tag: str = "") -> "SlotVector":
        if self.level <= 0:
            raise DepthExhaustedError("no moduli left to rescale into")
        record_rescale(tag)
        return SlotVector(self.slots, self.level - 1, self.depth_used + 1)

    def to_list(self) -> list[int]:
        return list(self.slots)


class Permutation:
    """A permutation of n slots, stored as targets[i] = destination of entry i."""

    __slots__ = ("targets", "n")

    def __init__(self, targets: Sequence[int]):
        self.targets = tuple(targets)
        self.n = len(self.targets)
        assert sorted(self.targets) == list(range(self.n)), "not a permutation"

    def apply(self, vals: Sequence[int]) -> list[int]:
        """Plain (free) application: out[targets[i]] = vals[i]."""
        assert len(vals) == self.n
        out = [0] * self.n
        for i, t in enumerate(self.targets):
            out[t] = vals[i]
        return out

    def apply_vector(self, v: SlotVector) -> SlotVector:
        """Free reference application, for oracles. Not a homomorphic op."""
        return SlotVector(tuple(self.apply(v.slots)), v.level, v.depth_used)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, t in enumerate(self.targets):
            inv[t] = i
        return Permutation(inv)

    def compose(self, first: "Permutation") -> "Permutation":
        """self after first: (self . first)(v) = self(first(v))."""
        assert self.n == first.n
        return Permutation([self.targets[first.targets[i]] for i in range(self.n)])

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and self.targets == other.targets

    def __hash__(self) -> int:
        return hash(self.targets)

    def __repr__(self) -> str:
        return f"Permutation({list(self.targets)})"

    def is_identity(self) -> bool:
        return all(t == i for i, t in enumerate(self.targets))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))

    @classmethod
    def rotation(cls, n: int, k: int) -> "Permutation":
        """The permutation matching rotate(v, k): entry i goes to (i - k) mod n."""
        k %= n
        return cls([(i - k) % n for i in range(n)])

    @classmethod
    def random(cls, n: int, rng) -> "Permutation":
        targets = list(range(n))
        rng.shuffle(targets)
        return cls(targets)

    # -- file I/O ------------------------------------------------------------

    def to_json(self) -> dict:
        return {"n": self.n, "targets": list(self.targets)}

    @classmethod
    def from_json(cls, obj: dict) -> "Permutation":
        p = cls(obj["targets"])
        assert p.n == obj["n"]
        return p

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Permutation":
        with open(path) as fh:
            return cls.from_json(json.load(fh))
