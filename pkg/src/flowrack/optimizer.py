"""Minimum retrieval-cycle selection for a batch of requests.

A bin only gives up its front item, so taking anything at slot ``j`` costs
``j`` cycles and brings out everything in front of it too.  A plan is fully
described by one cut depth per bin; the cost of a plan is the sum of its
cut depths and it is feasible when, for every product type, the items at or
in front of the cuts cover the requested quantity.

Two exact solvers are provided:

* :func:`solve` runs a memoised branch and bound over the cut depths.
* :func:`solve_bruteforce` enumerates every cut-depth vector with numpy and
  serves as an independent oracle for the first.

Both return the lexicographically smallest optimal cut-depth vector, and
inside it select the required items per type in (bin, slot) order.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from flowrack.batching import as_request
from flowrack.errors import BudgetExceeded, DimensionMismatch, Infeasible
from flowrack.rack import EMPTY, RackStateMatrix, as_rack

DEFAULT_BUDGET = 4_000_000

Matrix = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ShortfallReport:
    """``(type, requested, available)`` for every under-stocked type."""

    entries: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class SearchStats:
    method: str
    explored: int
    optima: int | None = None


@dataclass(frozen=True)
class RetrievalPlan:
    cut_depths: tuple[int, ...]
    selection: Matrix
    objective: int
    delivered: int
    stats: SearchStats | None = field(default=None, compare=False)

    @property
    def restored(self) -> int:
        return self.objective - self.delivered

    @property
    def delivery_rate(self) -> float:
        """Delivered over retrieved; 1.0 for an empty plan."""
        return 1.0 if self.objective == 0 else self.delivered / self.objective

    @property
    def delivery_fraction(self) -> Fraction:
        return Fraction(1) if self.objective == 0 else Fraction(self.delivered, self.objective)

    @property
    def marks(self) -> Matrix:
        q = len(self.selection[0]) if self.selection else 0
        return depths_to_marks(self.cut_depths, q)


def depths_to_marks(depths: Sequence[int], q: int) -> Matrix:
    return tuple(tuple(1 if j == d else 0 for j in range(1, q + 1)) for d in depths)


def canonical_depths(selection: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Deepest selected slot of every bin (0 when nothing is selected)."""
    return tuple(max((j for j, x in enumerate(row, start=1) if x), default=0)
                 for row in selection)


def check_feasible(S, C) -> ShortfallReport | None:
    """``None`` when the rack stocks every requested quantity."""
    C = as_request(C)
    rack = as_rack(S, len(C))
    stock = rack.stock()
    entries = tuple((i, c, stock.get(i, 0)) for i, c in enumerate(C, start=1)
                    if c > stock.get(i, 0))
    return ShortfallReport(entries) if entries else None


def _prepare(S, C) -> tuple[RackStateMatrix, tuple[int, ...]]:
    C = as_request(C)
    rack = as_rack(S, len(C))
    shortfall = check_feasible(rack, C)
    if shortfall is not None:
        raise Infeasible(shortfall)
    return rack, C


def _select(rack: RackStateMatrix, C: Sequence[int], depths: Sequence[int]) -> Matrix:
    need = list(C)
    X = [[0] * rack.q for _ in range(rack.m)]
    for k, (row, d) in enumerate(zip(rack.rows, depths)):
        for j in range(d):
            i = row[j]
            if i != EMPTY and need[i - 1] > 0:
                need[i - 1] -= 1
                X[k][j] = 1
    return tuple(tuple(r) for r in X)


def _plan(rack, C, depths, stats) -> RetrievalPlan:
    depths = tuple(int(d) for d in depths)
    return RetrievalPlan(depths, _select(rack, C, depths), sum(depths), sum(C), stats)


def empty_plan(rack: RackStateMatrix) -> RetrievalPlan:
    return RetrievalPlan((0,) * rack.m, tuple((0,) * rack.q for _ in range(rack.m)), 0, 0)


# -- branch and bound -------------------------------------------------------

def _suffix_costs(rows, types, C):
    """``table[b][t][r]``: cheapest total depth to collect ``r`` items of
    ``types[t]`` using bins ``b..m-1`` alone, each bin cut independently."""
    m = len(rows)
    inf = math.inf
    table = [None] * (m + 1)
    table[m] = [[0] + [inf] * C[i - 1] for i in types]
    for b in range(m - 1, -1, -1):
        nxt = table[b + 1]
        cur = []
        for t, i in enumerate(types):
            pos = [j for j, v in enumerate(rows[b], start=1) if v == i]
            need = C[i - 1]
            row = list(nxt[t])
            for r in range(1, need + 1):
                for take in range(1, min(r, len(pos)) + 1):
                    cand = pos[take - 1] + nxt[t][r - take]
                    if cand < row[r]:
                        row[r] = cand
            cur.append(row)
        table[b] = cur
    return table


def _greedy(rows, types, C) -> tuple[int, ...]:
    """Feasible cut depths built by extending the cut with the best
    newly-covered items per extra cycle."""
    m = len(rows)
    depths = [0] * m
    residual = {i: C[i - 1] for i in types}
    while any(residual.values()):
        best = None
        for k in range(m):
            gained = dict.fromkeys(types, 0)
            for d in range(depths[k] + 1, len(rows[k]) + 1):
                v = rows[k][d - 1]
                if v == EMPTY:
                    break
                if v in gained:
                    gained[v] += 1
                useful = sum(min(residual[i], g) for i, g in gained.items())
                if useful:
                    score = (useful / (d - depths[k]), -(d - depths[k]), -k)
                    if best is None or score > best[0]:
                        best = (score, k, d)
        _, k, d = best
        for j in range(depths[k], d):
            v = rows[k][j]
            if residual.get(v, 0) > 0:
                residual[v] -= 1
        depths[k] = d
    return tuple(depths)


def solve(S, C) -> RetrievalPlan:
    """Exact minimum-cycle plan: bounded, memoised search over per-bin cut
    depths, seeded with a greedy upper bound.  Among optimal plans the
    lexicographically smallest depth vector is returned.

    Raises :class:`Infeasible` when some type is under-stocked.
    """
    rack, C = _prepare(S, C)
    if not any(C):
        return empty_plan(rack)
    rows = rack.rows
    m = rack.m
    types = [i for i, c in enumerate(C, start=1) if c > 0]
    tix = {i: t for t, i in enumerate(types)}
    table = _suffix_costs(rows, types, C)

    # per bin: cumulative requested-type counts at every depth
    prefix = []
    for row in rows:
        acc = [0] * len(types)
        counts = [tuple(acc)]
        for v in row:
            if v in tix:
                acc[tix[v]] += 1
            counts.append(tuple(acc))
        prefix.append(counts)

    def bound(b, residual):
        lb = sum(residual)
        for t, r in enumerate(residual):
            if r:
                c = table[b][t][r]
                if c > lb:
                    lb = c
        return lb

    def options(b, residual):
        # an optimal cut always ends on an item that is still needed
        out = [0]
        for d, v in enumerate(rows[b], start=1):
            if v == EMPTY:
                break
            t = tix.get(v)
            if t is not None and residual[t] > 0:
                out.append(d)
        return out

    def after(b, residual, d):
        return tuple(max(0, r - g) for r, g in zip(residual, prefix[b][d]))

    # (bin, residual demand) -> (exact?, cycles); inexact entries are lower bounds
    memo: dict[tuple[int, tuple[int, ...]], tuple[bool, float]] = {}
    explored = 0

    def least(b, residual, cap):
        """Fewest cycles clearing ``residual`` from bins ``b..``: exact when
        it is at most ``cap``, otherwise any lower bound above ``cap``."""
        nonlocal explored
        if not any(residual):
            return 0
        key = (b, residual)
        hit = memo.get(key)
        lb = bound(b, residual)
        if hit is not None:
            if hit[0] or hit[1] > cap:
                return hit[1]
            lb = max(lb, hit[1])
        if lb > cap:
            memo[key] = (False, lb)
            return lb
        explored += 1
        best = math.inf
        for d in options(b, residual):
            limit = min(cap, best - 1) - d
            if limit < 0:
                break
            got = d + least(b + 1, after(b, residual, d), limit)
            if got < best:
                best = got
        if best <= cap:
            memo[key] = (True, best)
            return best
        memo[key] = (False, max(lb, cap + 1))
        return cap + 1

    start = tuple(C[i - 1] for i in types)
    remaining = least(0, start, sum(_greedy(rows, types, C)))

    # smallest depth per bin, in bin order, that still admits an optimal completion
    depths = []
    residual = start
    for b in range(m):
        for d in options(b, residual):
            nxt = after(b, residual, d)
            if d <= remaining and d + least(b + 1, nxt, remaining - d) == remaining:
                depths.append(d)
                residual, remaining = nxt, remaining - d
                break
    return _plan(rack, C, depths, SearchStats("branch-and-bound", explored))


# -- exhaustive oracle ------------------------------------------------------

def enumeration_size(S) -> int:
    rack = as_rack(S)
    return (rack.q + 1) ** rack.m


def solve_bruteforce(S, C, budget: int = DEFAULT_BUDGET) -> RetrievalPlan:
    """Exact plan by scoring all ``(q+1)**m`` cut-depth vectors.

    Raises :class:`BudgetExceeded` when that count is above ``budget``.
    """
    rack, C = _prepare(S, C)
    size = (rack.q + 1) ** rack.m
    if size > budget:
        raise BudgetExceeded(size, budget)
    types = [i for i, c in enumerate(C, start=1) if c > 0]
    q = rack.q
    if not types:
        return _plan(rack, C, (0,) * rack.m, SearchStats("brute-force", size, 1))

    arr = np.asarray(rack.rows, dtype=np.int64)
    onehot = (arr[:, :, None] == np.asarray(types)[None, None, :]).astype(np.int32)
    # prefix[k, d, t]: type-t items among the first d slots of bin k
    prefix = np.zeros((rack.m, q + 1, len(types)), dtype=np.int32)
    prefix[:, 1:, :] = np.cumsum(onehot, axis=1)

    steps = np.arange(q + 1, dtype=np.int32)
    cover = prefix[0]
    cost = steps
    for k in range(1, rack.m):
        cover = (cover[:, None, :] + prefix[k][None, :, :]).reshape(-1, len(types))
        cost = (cost[:, None] + steps[None, :]).reshape(-1)

    need = np.asarray([C[i - 1] for i in types], dtype=np.int32)
    feasible = (cover >= need).all(axis=1)
    scored = np.where(feasible, cost, np.iinfo(np.int32).max)
    idx = int(np.argmin(scored))
    optimum = int(scored[idx])
    optima = int(np.count_nonzero(scored == optimum))

    depths = []
    for _ in range(rack.m):
        idx, d = divmod(idx, q + 1)
        depths.append(d)
    depths.reverse()
    return _plan(rack, C, depths, SearchStats("brute-force", size, optima))


# -- plan checking ----------------------------------------------------------

RULES: dict[str, str] = {
    "shape": "plan matrices match the rack dimensions",
    "single-cut": "at most one cut mark per bin",
    "binary-cut": "cut marks are 0 or 1",
    "cut-on-item": "cut marks only on occupied slots",
    "demand-met": "selected quantity of each type equals the request",
    "binary-selection": "selections are 0 or 1",
    "select-item": "selections only on occupied slots",
    "within-cut": "every selection lies at or in front of its bin's cut mark",
}


@dataclass(frozen=True)
class Violation:
    rule: str
    bin: int | None = None
    slot: int | None = None
    type: int | None = None
    detail: str = ""


@dataclass(frozen=True)
class PlanEvaluation:
    objective: int
    delivered: int
    restored: int
    delivery_rate: float
    cut_depths: tuple[int, ...]
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def failed_rules(self) -> set[str]:
        return {v.rule for v in self.violations}


def evaluate_plan(S, C, plan, marks=None, cut_depths=None) -> PlanEvaluation:
    """Recompute the cost of a plan and list every broken constraint.

    ``plan`` is a :class:`RetrievalPlan` or a selection matrix.  For a bare
    selection the cut marks come from ``marks`` or ``cut_depths``; if both
    are missing they are placed at the deepest selected slot of each bin.
    """
    C = as_request(C)
    rack = as_rack(S, len(C))
    m, q = rack.m, rack.q
    if isinstance(plan, RetrievalPlan):
        X, M = plan.selection, plan.marks
    else:
        X = tuple(tuple(int(v) for v in row) for row in plan)
        if marks is not None:
            M = tuple(tuple(int(v) for v in row) for row in marks)
        elif cut_depths is not None:
            if len(cut_depths) != m or any(not 0 <= d <= q for d in cut_depths):
                raise DimensionMismatch(f"cut depths must be {m} values in 0..{q}")
            M = depths_to_marks(cut_depths, q)
        else:
            M = depths_to_marks(canonical_depths(X), q)

    delivered = sum(C)
    violations: list[Violation] = []
    for name, mat in (("selection", X), ("cut marks", M)):
        if len(mat) != m or any(len(row) != q for row in mat):
            violations.append(Violation("shape", detail=f"{name} must be {m}x{q}"))
    if violations:
        return PlanEvaluation(0, delivered, -delivered, 0.0, (), tuple(violations))

    selected: dict[int, int] = {}
    for k in range(1, m + 1):
        xrow, mrow, srow = X[k - 1], M[k - 1], rack.rows[k - 1]
        if sum(mrow) > 1:
            violations.append(Violation("single-cut", k, detail=f"{sum(mrow)} marks"))
        for j in range(1, q + 1):
            x, mk, s = xrow[j - 1], mrow[j - 1], srow[j - 1]
            if mk not in (0, 1):
                violations.append(Violation("binary-cut", k, j, detail=f"value {mk}"))
            if x not in (0, 1):
                violations.append(Violation("binary-selection", k, j, detail=f"value {x}"))
            if mk and s == EMPTY:
                violations.append(Violation("cut-on-item", k, j))
            if x and s == EMPTY:
                violations.append(Violation("select-item", k, j))
            if x and s != EMPTY:
                selected[s] = selected.get(s, 0) + x
            if x > sum(mrow[j - 1:]):
                violations.append(Violation("within-cut", k, j, s or None,
                                            "selected slot lies behind the cut mark"))
    for i in sorted(set(selected) | {i for i, c in enumerate(C, start=1) if c}):
        got, want = selected.get(i, 0), C[i - 1] if i <= len(C) else 0
        if got != want:
            violations.append(Violation("demand-met", type=i,
                                        detail=f"selected {got}, requested {want}"))

    objective = sum(mk * j for row in M for j, mk in enumerate(row, start=1))
    depths = tuple(max((j for j, v in enumerate(row, start=1) if v), default=0) for row in M)
    rate = 1.0 if objective == 0 else delivered / objective
    return PlanEvaluation(objective, delivered, objective - delivered, rate, depths,
                          tuple(violations))


def cycles_per_bin(plan: RetrievalPlan) -> tuple[int, ...]:
    """Retrieval cycles each bin incurs, delivered and restored together."""
    return tuple(sum(mk * j for j, mk in enumerate(row, start=1)) for row in plan.marks)


def selected_locations_by_type(plan: RetrievalPlan, S) -> Mapping[int, list[tuple[int, int]]]:
    """Selected ``(bin, slot)`` locations grouped by product type."""
    rack = as_rack(S)
    out: dict[int, list[tuple[int, int]]] = {}
    for k, (xrow, srow) in enumerate(zip(plan.selection, rack.rows), start=1):
        for j, (x, s) in enumerate(zip(xrow, srow), start=1):
            if x and s != EMPTY:
                out.setdefault(s, []).append((k, j))
    return dict(sorted(out.items()))
