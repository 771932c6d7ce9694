"""Site-subset algebra on bitmasks.

A region is a subset of the site set {0, ..., n-1} and indexes one swap
operator on the doubled Hilbert space.  Products of swaps correspond to
symmetric differences of their regions, so all the operator algebra needed
for purity dynamics reduces to mask arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

MAX_SITES = 64


@dataclass(frozen=True)
class Region:
    """An immutable subset of {0, ..., n-1} stored as a bitmask."""

    bits: int
    n: int

    def __post_init__(self):
        if not 0 <= self.n <= MAX_SITES:
            raise ValueError(f"site count must be in [0, {MAX_SITES}], got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"mask {self.bits:#x} has bits outside the {self.n}-site universe")

    @classmethod
    def of(cls, sites: Iterable[int], n: int) -> "Region":
        mask = 0
        for s in sites:
            if not 0 <= s < n:
                raise ValueError(f"site {s} outside universe of {n} sites")
            mask |= 1 << s
        return cls(mask, n)

    @classmethod
    def empty(cls, n: int) -> "Region":
        return cls(0, n)

    @classmethod
    def full(cls, n: int) -> "Region":
        return cls((1 << n) - 1, n)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    @property
    def is_empty(self) -> bool:
        return self.bits == 0

    def sites(self) -> tuple[int, ...]:
        return tuple(s for s in range(self.n) if self.bits >> s & 1)

    def complement(self) -> "Region":
        return Region(self.bits ^ ((1 << self.n) - 1), self.n)

    def union(self, other: "Region") -> "Region":
        return Region(self.bits | self._same_universe(other).bits, self.n)

    def intersection(self, other: "Region") -> "Region":
        return Region(self.bits & self._same_universe(other).bits, self.n)

    def difference(self, other: "Region") -> "Region":
        return Region(self.bits & ~self._same_universe(other).bits, self.n)

    def subset_of(self, other: "Region") -> bool:
        return self.bits & ~self._same_universe(other).bits == 0

    def _same_universe(self, other: "Region") -> "Region":
        if other.n != self.n:
            raise ValueError(f"mixed universes: {self.n} vs {other.n} sites")
        return other

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def __xor__(self, other: "Region") -> "Region":
        return Region(self.bits ^ self._same_universe(other).bits, self.n)

    def __contains__(self, site: int) -> bool:
        return 0 <= site < self.n and bool(self.bits >> site & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.sites())

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"Region({{{', '.join(map(str, self.sites()))}}}, n={self.n})"


def sym_diff(a: Region, b: Region) -> Region:
    """Symmetric difference of two regions; the group law of swap multiplication."""
    return a ^ b


def in_boundary(candidate: Region, target: Region) -> bool:
    """True when candidate intersects both target and its complement.

    Only such candidate regions act nontrivially on the swap indexed by target.
    """
    if candidate.n != target.n:
        raise ValueError(f"mixed universes: {candidate.n} vs {target.n} sites")
    inter = candidate.bits & target.bits
    outside = candidate.bits & ~target.bits
    return inter != 0 and outside != 0
