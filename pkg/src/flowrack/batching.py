"""Customer request aggregation and fixed-period batch release."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

from flowrack.errors import LengthMismatch, ScenarioError

RequestVector = tuple[int, ...]


def as_request(quantities: Iterable[int], n: int | None = None) -> RequestVector:
    vec = tuple(int(x) for x in quantities)
    if any(x < 0 for x in vec):
        raise ValueError(f"requested quantities must be non-negative: {vec}")
    if n is not None and len(vec) != n:
        raise LengthMismatch(f"request has {len(vec)} entries, expected {n}")
    return vec


def aggregate(requests: Sequence[Sequence[int]], n: int | None = None) -> RequestVector:
    """Elementwise sum of customer requests.

    An empty list needs ``n`` to know the length of the zero vector.
    """
    if not requests:
        if n is None:
            raise LengthMismatch("cannot infer the vector length of an empty batch")
        return (0,) * n
    vecs = [as_request(r) for r in requests]
    width = len(vecs[0]) if n is None else n
    for v in vecs:
        if len(v) != width:
            raise LengthMismatch(f"request has {len(v)} entries, expected {width}")
    return tuple(sum(col) for col in zip(*vecs))


def is_zero(vec: Sequence[int]) -> bool:
    return not any(vec)


@dataclass(frozen=True)
class BatchClock:
    """Pending requests waiting for the next period boundary.

    Boundaries are the positive multiples of ``period``.  A request that
    arrives exactly on a boundary waits for the following one.
    """

    period: int
    n: int
    pending: tuple[tuple[int, RequestVector], ...] = ()
    mode: str = "fixed"

    def __post_init__(self):
        if self.mode != "fixed":
            raise ScenarioError(
                f"batching mode {self.mode!r} is not supported; only 'fixed' periods are")
        if not isinstance(self.period, int) or self.period <= 0:
            raise ScenarioError(f"batch period must be a positive integer, got {self.period!r}")

    def is_boundary(self, tick: int) -> bool:
        return tick > 0 and tick % self.period == 0


def submit(clock: BatchClock, tick: int, request: Sequence[int]) -> BatchClock:
    vec = as_request(request, clock.n)
    return replace(clock, pending=clock.pending + ((tick, vec),))


def release_batch(clock: BatchClock, now: int) -> tuple[RequestVector, BatchClock]:
    """Aggregate every pending request that arrived before ``now``."""
    if not clock.is_boundary(now):
        raise ValueError(f"tick {now} is not a boundary of period {clock.period}")
    due = [vec for tick, vec in clock.pending if tick < now]
    if not due:
        return (0,) * clock.n, clock
    rest = tuple((tick, vec) for tick, vec in clock.pending if tick >= now)
    return aggregate(due, clock.n), replace(clock, pending=rest)
