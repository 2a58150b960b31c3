"""Coloured Petri net marking of a gravity flow rack.

Places and their colours:

======  ==================  =========================================
place   colour              meaning
======  ==================  =========================================
V       (bin, slot)         the location is empty
W       (type, bin, slot)   the location holds a product of ``type``
R       (type,)             a product is on the restoring conveyor
D       (type,)             a product was delivered at the drop-off
======  ==================  =========================================

Transitions and the arc functions they realise:

=====  ===================  ===========================================
rule   colour               arc functions
=====  ===================  ===========================================
Ts     (type, bin)          u (into slot q), Proj on the V token
Tr     (type, bin)          u, Id on the R token, Proj on the V token
Td     (type, bin)          v (from slot 1), Dec of the W token into D
Tf     (type, bin)          v, Dec of the W token into R
T      (type, bin, slot)    Prec: moves slot j to j-1, frees slot j
=====  ===================  ===========================================

Every public firing function returns a new :class:`Marking`; a transition
that is not enabled raises :class:`NotEnabled` and the input is untouched.
Unless ``auto_settle=False`` the affected bin is settled (all enabled T
transitions fired) before the result is returned, since product moves
inside a bin take no time.  Td and Tf take only the bin; the type part of
their colour is whatever sits in slot 1 and is returned to the caller.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

from flowrack.errors import DimensionMismatch, NotEnabled
from flowrack.rack import EMPTY, Dimensions, RackStateMatrix

Location = tuple[int, int]  # (bin, slot), 1-based
Token = tuple[int, int, int]  # (type, bin, slot)


@dataclass(frozen=True)
class Marking:
    """Full net state.  ``conveyor`` and ``delivered`` are sorted multisets."""

    dims: Dimensions
    empty: frozenset[Location]
    occupied: frozenset[Token]
    conveyor: tuple[int, ...] = ()
    delivered: tuple[int, ...] = ()

    @cached_property
    def contents(self) -> dict[Location, int]:
        """Map from occupied location to its product type."""
        return {(k, j): p for p, k, j in self.occupied}

    def type_at(self, bin: int, slot: int) -> int:
        return self.contents.get((bin, slot), EMPTY)

    def bin_items(self, bin: int) -> list[tuple[int, int]]:
        """``(slot, type)`` pairs for one bin, front first."""
        return sorted((j, p) for p, k, j in self.occupied if k == bin)

    def type_counts(self) -> Counter:
        """Items of each type across W, R and D."""
        counts = Counter(p for p, _, _ in self.occupied)
        counts.update(self.conveyor)
        counts.update(self.delivered)
        return counts

    def is_settled(self, bin: int | None = None) -> bool:
        bins = range(1, self.dims.m + 1) if bin is None else (bin,)
        return all(not _enabled_moves(self, k) for k in bins)

    def check_invariants(self) -> None:
        """Raise AssertionError when PARTITION or UNIQUENESS is broken."""
        locs = [(k, j) for _, k, j in self.occupied]
        assert len(locs) == len(set(locs)), "a location holds two products"
        assert not (set(locs) & self.empty), "a location is both empty and occupied"
        assert len(self.empty) + len(self.occupied) == self.dims.capacity, "partition broken"
        for k, j in self.empty | set(locs):
            assert 1 <= k <= self.dims.m and 1 <= j <= self.dims.q, f"({k}, {j}) out of range"
        for p in (*(t[0] for t in self.occupied), *self.conveyor, *self.delivered):
            assert 1 <= p <= self.dims.n, f"type {p} out of range"


def _check_bin(mk: Marking, bin: int) -> None:
    if not 1 <= bin <= mk.dims.m:
        raise DimensionMismatch(f"bin {bin} outside 1..{mk.dims.m}")


def _check_type(mk: Marking, p: int) -> None:
    if not 1 <= p <= mk.dims.n:
        raise DimensionMismatch(f"product type {p} outside 1..{mk.dims.n}")


def _add(ms: tuple[int, ...], p: int) -> tuple[int, ...]:
    return tuple(sorted(ms + (p,)))


def _remove(ms: tuple[int, ...], p: int) -> tuple[int, ...]:
    items = list(ms)
    items.remove(p)
    return tuple(items)


def initial_marking(dims: Dimensions) -> Marking:
    """All ``m*q`` location tokens in V; R and D empty."""
    return Marking(
        dims,
        frozenset((k, j) for k in range(1, dims.m + 1) for j in range(1, dims.q + 1)),
        frozenset(),
    )


def init_marking(dims: Dimensions, contents: RackStateMatrix | list[list[int]]) -> Marking:
    """Marking whose W place reproduces a settled rack matrix."""
    rows = contents.rows if isinstance(contents, RackStateMatrix) else contents
    if len(rows) != dims.m or any(len(r) != dims.q for r in rows):
        raise DimensionMismatch(f"contents must be {dims.m}x{dims.q}")
    rack = RackStateMatrix.from_rows(rows, dims.n)
    empty, occupied = set(), set()
    for k, row in enumerate(rack.rows, start=1):
        for j, p in enumerate(row, start=1):
            if p == EMPTY:
                empty.add((k, j))
            else:
                occupied.add((p, k, j))
    return Marking(dims, frozenset(empty), frozenset(occupied))


def to_matrix(mk: Marking) -> RackStateMatrix:
    """Rack state matrix read from W; R and D are ignored."""
    rows = [[EMPTY] * mk.dims.q for _ in range(mk.dims.m)]
    for p, k, j in mk.occupied:
        rows[k - 1][j - 1] = p
    return RackStateMatrix(tuple(tuple(r) for r in rows), mk.dims.n)


def _enabled_moves(mk: Marking, bin: int) -> list[Token]:
    return [(p, k, j) for p, k, j in mk.occupied
            if k == bin and j > 1 and (k, j - 1) in mk.empty]


def enabled_moves(mk: Marking, bin: int) -> list[Token]:
    """Colours ``(type, bin, slot)`` for which T is enabled, sorted by slot."""
    _check_bin(mk, bin)
    return sorted(_enabled_moves(mk, bin), key=lambda t: t[2])


def fire_t(mk: Marking, p: int, bin: int, slot: int) -> Marking:
    """Move the product at ``slot`` one step towards the retrieval face."""
    _check_bin(mk, bin)
    token = (p, bin, slot)
    if token not in mk.occupied or slot <= 1 or (bin, slot - 1) not in mk.empty:
        raise NotEnabled(f"T{token} is not enabled")
    return Marking(
        mk.dims,
        (mk.empty - {(bin, slot - 1)}) | {(bin, slot)},
        (mk.occupied - {token}) | {(p, bin, slot - 1)},
        mk.conveyor,
        mk.delivered,
    )


def settle(mk: Marking, bin: int | None = None) -> Marking:
    """Fire T in ``bin`` (or every bin) until none is enabled."""
    bins = range(1, mk.dims.m + 1) if bin is None else (bin,)
    for k in bins:
        _check_bin(mk, k)
        while moves := _enabled_moves(mk, k):
            p, _, j = min(moves, key=lambda t: t[2])
            mk = fire_t(mk, p, k, j)
    return mk


def _insert_back(mk: Marking, p: int, bin: int, conveyor: tuple[int, ...],
                 auto_settle: bool) -> Marking:
    q = mk.dims.q
    out = Marking(
        mk.dims,
        mk.empty - {(bin, q)},
        mk.occupied | {(p, bin, q)},
        conveyor,
        mk.delivered,
    )
    return settle(out, bin) if auto_settle else out


def fire_ts(mk: Marking, p: int, bin: int, *, auto_settle: bool = True) -> Marking:
    """Store a new product of type ``p`` at the back of ``bin``."""
    _check_bin(mk, bin)
    _check_type(mk, p)
    if (bin, mk.dims.q) not in mk.empty:
        raise NotEnabled(f"Ts<p{p}, f{bin}>: slot {mk.dims.q} is occupied")
    return _insert_back(mk, p, bin, mk.conveyor, auto_settle)


def fire_tr(mk: Marking, p: int, bin: int, *, auto_settle: bool = True) -> Marking:
    """Reinsert a product of type ``p`` from the conveyor at the back of ``bin``."""
    _check_bin(mk, bin)
    _check_type(mk, p)
    if p not in mk.conveyor:
        raise NotEnabled(f"Tr<p{p}, f{bin}>: no type {p} product on the conveyor")
    if (bin, mk.dims.q) not in mk.empty:
        raise NotEnabled(f"Tr<p{p}, f{bin}>: slot {mk.dims.q} is occupied")
    return _insert_back(mk, p, bin, _remove(mk.conveyor, p), auto_settle)


def _evacuate(mk: Marking, bin: int, to_conveyor: bool, auto_settle: bool,
              name: str) -> tuple[Marking, int]:
    _check_bin(mk, bin)
    p = mk.type_at(bin, 1)
    if p == EMPTY:
        raise NotEnabled(f"{name}<f{bin}>: slot 1 is empty")
    out = Marking(
        mk.dims,
        mk.empty | {(bin, 1)},
        mk.occupied - {(p, bin, 1)},
        _add(mk.conveyor, p) if to_conveyor else mk.conveyor,
        mk.delivered if to_conveyor else _add(mk.delivered, p),
    )
    return (settle(out, bin) if auto_settle else out), p


def fire_td(mk: Marking, bin: int, *, auto_settle: bool = True) -> tuple[Marking, int]:
    """Deliver the front product of ``bin``; returns the new marking and its type."""
    return _evacuate(mk, bin, False, auto_settle, "Td")


def fire_tf(mk: Marking, bin: int, *, auto_settle: bool = True) -> tuple[Marking, int]:
    """Send the front product of ``bin`` to the restoring conveyor."""
    return _evacuate(mk, bin, True, auto_settle, "Tf")


def has_back_space(mk: Marking, bin: int) -> bool:
    return (bin, mk.dims.q) in mk.empty


def bins_with_back_space(mk: Marking) -> list[int]:
    q = mk.dims.q
    return [k for k in range(1, mk.dims.m + 1) if (k, q) in mk.empty]
