"""Rack dimensions and the rack state matrix.

The matrix has one row per bin and one column per slot.  Column 0 is the
retrieval face (slot 1), the last column is the storage face (slot q).
Entries are product type codes in ``1..n``; ``0`` marks an empty slot.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

from flowrack.errors import DimensionMismatch, NonContiguousBin

EMPTY = 0


@dataclass(frozen=True)
class Dimensions:
    """Bins ``m``, slots per bin ``q`` and product types ``n``."""

    m: int
    q: int
    n: int

    def __post_init__(self):
        for name in ("m", "q", "n"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise DimensionMismatch(f"{name} must be a positive integer, got {value!r}")

    @property
    def capacity(self) -> int:
        return self.m * self.q


@dataclass(frozen=True)
class RackStateMatrix:
    rows: tuple[tuple[int, ...], ...]
    n: int

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], n: int | None = None,
                  *, require_settled: bool = True) -> RackStateMatrix:
        """Build a validated matrix from nested sequences.

        When ``n`` is omitted the largest type code present is used.
        """
        frozen = tuple(tuple(int(v) for v in row) for row in rows)
        if not frozen:
            raise DimensionMismatch("rack must have at least one bin")
        q = len(frozen[0])
        if q == 0:
            raise DimensionMismatch("bins must have at least one slot")
        for k, row in enumerate(frozen, start=1):
            if len(row) != q:
                raise DimensionMismatch(f"bin {k} has {len(row)} slots, expected {q}")
        top = max(max(row) for row in frozen)
        if n is None:
            n = max(top, 1)
        for k, row in enumerate(frozen, start=1):
            for j, v in enumerate(row, start=1):
                if v < 0 or v > n:
                    raise DimensionMismatch(
                        f"entry at bin {k}, slot {j} is {v}; expected 0..{n}")
        rack = cls(frozen, n)
        if require_settled:
            rack.check_settled()
        return rack

    @classmethod
    def empty(cls, dims: Dimensions) -> RackStateMatrix:
        return cls(tuple((EMPTY,) * dims.q for _ in range(dims.m)), dims.n)

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def q(self) -> int:
        return len(self.rows[0])

    @property
    def dims(self) -> Dimensions:
        return Dimensions(self.m, self.q, self.n)

    def __getitem__(self, loc: tuple[int, int]) -> int:
        """Type at 1-based ``(bin, slot)``."""
        k, j = loc
        return self.rows[k - 1][j - 1]

    def fill(self, k: int) -> int:
        """Number of occupied slots in 1-based bin ``k``."""
        return sum(1 for v in self.rows[k - 1] if v != EMPTY)

    def fills(self) -> tuple[int, ...]:
        return tuple(sum(1 for v in row if v != EMPTY) for row in self.rows)

    def stock(self) -> Counter:
        """Count of items per product type."""
        return Counter(v for row in self.rows for v in row if v != EMPTY)

    def total_items(self) -> int:
        return sum(self.fills())

    def check_settled(self) -> None:
        for k, row in enumerate(self.rows, start=1):
            seen_empty = False
            for j, v in enumerate(row, start=1):
                if v == EMPTY:
                    seen_empty = True
                elif seen_empty:
                    raise NonContiguousBin(
                        f"bin {k} has an item at slot {j} behind an empty slot")

    def permuted(self, order: Sequence[int]) -> RackStateMatrix:
        """Rows reordered so that new row ``i`` is old row ``order[i]`` (0-based)."""
        return RackStateMatrix(tuple(self.rows[i] for i in order), self.n)

    def padded(self, extra: int) -> RackStateMatrix:
        """Append ``extra`` empty slots at the storage face of every bin."""
        return RackStateMatrix(tuple(row + (EMPTY,) * extra for row in self.rows), self.n)

    def tolist(self) -> list[list[int]]:
        return [list(row) for row in self.rows]


def as_rack(S: RackStateMatrix | Sequence[Sequence[int]], n: int | None = None) -> RackStateMatrix:
    """Coerce nested sequences to a settled :class:`RackStateMatrix`."""
    if isinstance(S, RackStateMatrix):
        if n is not None and n != S.n:
            # widen/narrow the type range to the caller's vector length
            return RackStateMatrix.from_rows(S.rows, n)
        return S
    return RackStateMatrix.from_rows(S, n)
