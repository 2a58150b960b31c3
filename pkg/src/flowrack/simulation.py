"""Closed-loop control of the rack: batch, observe, optimise, execute.

The controller owns the marking.  On every batch boundary it snapshots the
rack matrix from the marking, solves for the cheapest plan, then works bin
by bin: the front item is delivered when the plan selected it and sent to
the restoring conveyor otherwise.  Once all bins are done the conveyor is
drained back into the rack.  Storage arrivals are placed first come, first
served at the back of a bin chosen by the storage policy.
"""

from __future__ import annotations

import json
import random
from collections import deque
from collections.abc import Callable, Iterable, Sequence
from dataclasses import asdict, dataclass, field

from flowrack.batching import BatchClock, RequestVector, as_request, release_batch, submit
from flowrack.cpn import (
    Marking,
    bins_with_back_space,
    fire_td,
    fire_tf,
    fire_tr,
    fire_ts,
    init_marking,
    to_matrix,
)
from flowrack.errors import Infeasible, ScenarioError
from flowrack.optimizer import RetrievalPlan, ShortfallReport, empty_plan, solve
from flowrack.rack import Dimensions, RackStateMatrix

POLICIES = ("random", "round_robin")


@dataclass(frozen=True)
class Policy:
    """Bin choice rule.  ``seed`` only matters for ``random``."""

    kind: str = "random"
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ScenarioError(f"unknown policy {self.kind!r}; expected one of {POLICIES}")


class BinChooser:
    def __init__(self, policy: Policy, fallback_seed: int):
        self.policy = policy
        seed = fallback_seed if policy.seed is None else policy.seed
        self._rng = random.Random(seed)
        self._next = 1

    def choose(self, candidates: Sequence[int], m: int) -> int:
        if self.policy.kind == "random":
            return candidates[self._rng.randrange(len(candidates))]
        # round robin: first candidate at or after the cursor, wrapping
        ordered = sorted(candidates, key=lambda k: (k - self._next) % m)
        k = ordered[0]
        self._next = k % m + 1
        return k


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    kind: str  # Ts, Tr, Td or Tf
    product: int
    bin: int
    empty: int
    occupied: int
    conveyor: int
    delivered: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BatchReport:
    batch_id: int
    tick: int
    request: RequestVector
    snapshot: RackStateMatrix
    plan: RetrievalPlan | None
    shortfall: ShortfallReport | None = None

    @property
    def feasible(self) -> bool:
        return self.plan is not None

    @property
    def objective(self) -> int:
        return self.plan.objective if self.plan else 0

    @property
    def delivered(self) -> int:
        return self.plan.delivered if self.plan else 0

    @property
    def restored(self) -> int:
        return self.plan.restored if self.plan else 0

    @property
    def delivery_rate(self) -> float | None:
        return self.plan.delivery_rate if self.plan else None

    @property
    def cut_depths(self) -> tuple[int, ...] | None:
        return self.plan.cut_depths if self.plan else None


@dataclass(frozen=True)
class TickRecord:
    tick: int
    rack: int
    conveyor: int
    delivered: int
    queued: int
    injected: int  # initial items plus storage arrivals so far


class Controller:
    """Single-writer owner of the marking and the machine queues."""

    def __init__(self, marking: Marking, *, restore_policy: Policy = Policy(),
                 storage_policy: Policy = Policy(), seed: int = 0):
        self.marking = marking
        self.dims = marking.dims
        self.conveyor: deque[int] = deque(sorted(marking.conveyor))
        self.storage_queue: deque[int] = deque()
        self.restore_chooser = BinChooser(restore_policy, seed)
        self.storage_chooser = BinChooser(storage_policy, seed + 1)
        self.deferred: RequestVector = (0,) * self.dims.n
        self.trace: list[TraceEvent] = []
        self.tick = 0
        self._batches = 0

    def _record(self, kind: str, product: int, bin: int) -> TraceEvent:
        mk = self.marking
        ev = TraceEvent(self.tick, kind, product, bin, len(mk.empty), len(mk.occupied),
                        len(mk.conveyor), len(mk.delivered))
        self.trace.append(ev)
        return ev

    def snapshot(self) -> RackStateMatrix:
        return to_matrix(self.marking)

    def drain_conveyor(self) -> list[TraceEvent]:
        """Reinsert conveyor items in arrival order until the rack is full."""
        events = []
        while self.conveyor:
            free = bins_with_back_space(self.marking)
            if not free:
                break
            k = self.restore_chooser.choose(free, self.dims.m)
            p = self.conveyor.popleft()
            self.marking = fire_tr(self.marking, p, k)
            events.append(self._record("Tr", p, k))
        return events

    def run_batch_cycle(self, batch: Sequence[int]) -> tuple[BatchReport, list[TraceEvent]]:
        """Serve one batch end to end.

        An infeasible batch fires nothing; it is kept in ``deferred`` and the
        report carries the shortfall.
        """
        batch = as_request(batch, self.dims.n)
        S = self.snapshot()
        self._batches += 1
        try:
            plan = solve(S, batch)
        except Infeasible as exc:
            self.deferred = batch
            return BatchReport(self._batches, self.tick, batch, S, None, exc.shortfall), []
        self.deferred = (0,) * self.dims.n
        if plan.objective == 0:
            return BatchReport(self._batches, self.tick, batch, S, empty_plan(S)), []

        events = []
        for k, depth in enumerate(plan.cut_depths, start=1):
            for j in range(1, depth + 1):
                expected = S[k, j]
                if plan.selection[k - 1][j - 1]:
                    self.marking, p = fire_td(self.marking, k)
                    kind = "Td"
                else:
                    self.marking, p = fire_tf(self.marking, k)
                    self.conveyor.append(p)
                    kind = "Tf"
                if p != expected:
                    raise RuntimeError(f"bin {k} slot {j}: expected type {expected}, got {p}")
                events.append(self._record(kind, p, k))
        events.extend(self.drain_conveyor())
        return BatchReport(self._batches, self.tick, batch, S, plan), events

    def process_storage(self, arrivals: Iterable[int] = ()) -> list[TraceEvent]:
        """Queue new arrivals and store as many queued items as fit, FCFS."""
        for p in arrivals:
            if not 1 <= p <= self.dims.n:
                raise ScenarioError(f"storage arrival of unknown type {p}")
            self.storage_queue.append(p)
        events = []
        while self.storage_queue:
            free = bins_with_back_space(self.marking)
            if not free:
                break
            k = self.storage_chooser.choose(free, self.dims.m)
            p = self.storage_queue.popleft()
            self.marking = fire_ts(self.marking, p, k)
            events.append(self._record("Ts", p, k))
        return events


@dataclass
class Scenario:
    dims: Dimensions
    initial: RackStateMatrix
    requests: list[tuple[int, RequestVector]] = field(default_factory=list)
    storage: list[tuple[int, int]] = field(default_factory=list)
    period: int = 1
    restore_policy: Policy = field(default_factory=Policy)
    storage_policy: Policy = field(default_factory=Policy)
    seed: int = 0
    horizon: int | None = None
    batching: str = "fixed"

    def validate(self) -> None:
        if self.initial.dims != self.dims:
            raise ScenarioError(f"rack is {self.initial.m}x{self.initial.q}, dims say "
                                f"{self.dims.m}x{self.dims.q}")
        BatchClock(self.period, self.dims.n, mode=self.batching)
        for seq, name in ((self.requests, "requests"), (self.storage, "storage")):
            ticks = [t for t, _ in seq]
            if ticks != sorted(ticks):
                raise ScenarioError(f"{name} stream is not sorted by tick")
            if any(t < 0 for t in ticks):
                raise ScenarioError(f"{name} stream has a negative tick")
        for t, vec in self.requests:
            if len(vec) != self.dims.n or any(v < 0 for v in vec):
                raise ScenarioError(f"request at tick {t} must be {self.dims.n} "
                                    "non-negative quantities")
        for t, p in self.storage:
            if not 1 <= p <= self.dims.n:
                raise ScenarioError(f"storage arrival at tick {t} has unknown type {p}")

    def last_tick(self) -> int:
        """Default horizon: the first boundary after the last request, and
        no earlier than the last storage arrival."""
        if self.horizon is not None:
            return self.horizon
        end = 0
        if self.requests:
            end = (self.requests[-1][0] // self.period + 1) * self.period
        if self.storage:
            end = max(end, self.storage[-1][0])
        return end


@dataclass
class SimulationResult:
    initial: Marking
    final: Marking
    reports: list[BatchReport]
    trace: list[TraceEvent]
    ticks: list[TickRecord]
    deferred: RequestVector
    conveyor: tuple[int, ...]
    storage_queue: tuple[int, ...]

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(ev.to_dict(), sort_keys=True) + "\n" for ev in self.trace)


def run(scenario: Scenario, on_tick: Callable[[Controller, TickRecord], None] | None = None
        ) -> SimulationResult:
    """Advance the scenario tick by tick up to its horizon.

    Per tick: queue arriving requests, release a batch on period boundaries
    (merged with any deferred batch) and serve it, then store arrivals.
    All-zero batches are skipped without a report.
    """
    scenario.validate()
    start = init_marking(scenario.dims, scenario.initial)
    ctl = Controller(start, restore_policy=scenario.restore_policy,
                     storage_policy=scenario.storage_policy, seed=scenario.seed)
    clock = BatchClock(scenario.period, scenario.dims.n, mode=scenario.batching)
    requests = deque(scenario.requests)
    storage = deque(scenario.storage)
    injected = scenario.initial.total_items()
    reports: list[BatchReport] = []
    ticks: list[TickRecord] = []

    for tick in range(scenario.last_tick() + 1):
        ctl.tick = tick
        while requests and requests[0][0] == tick:
            clock = submit(clock, tick, requests.popleft()[1])
        if clock.is_boundary(tick):
            batch, clock = release_batch(clock, tick)
            batch = tuple(a + b for a, b in zip(batch, ctl.deferred))
            if any(batch):
                report, _ = ctl.run_batch_cycle(batch)
                reports.append(report)
        arrivals = []
        while storage and storage[0][0] == tick:
            arrivals.append(storage.popleft()[1])
        injected += len(arrivals)
        ctl.process_storage(arrivals)
        mk = ctl.marking
        rec = TickRecord(tick, len(mk.occupied), len(mk.conveyor), len(mk.delivered),
                         len(ctl.storage_queue), injected)
        ticks.append(rec)
        if on_tick is not None:
            on_tick(ctl, rec)

    return SimulationResult(start, ctl.marking, reports, ctl.trace, ticks, ctl.deferred,
                            tuple(ctl.conveyor), tuple(ctl.storage_queue))


def replay(initial: Marking, trace: Iterable[TraceEvent]) -> Marking:
    """Re-fire a trace from ``initial``; raises if the trace diverges."""
    mk = initial
    for ev in trace:
        if ev.kind == "Ts":
            mk = fire_ts(mk, ev.product, ev.bin)
        elif ev.kind == "Tr":
            mk = fire_tr(mk, ev.product, ev.bin)
        elif ev.kind in ("Td", "Tf"):
            mk, p = (fire_td if ev.kind == "Td" else fire_tf)(mk, ev.bin)
            if p != ev.product:
                raise ValueError(f"tick {ev.tick}: {ev.kind} on bin {ev.bin} "
                                 f"evacuated type {p}, trace says {ev.product}")
        else:
            raise ValueError(f"unknown transition kind {ev.kind!r}")
    return mk
