import itertools
import random

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from flowrack.errors import BudgetExceeded, DimensionMismatch, Infeasible
from flowrack.optimizer import (
    RetrievalPlan,
    check_feasible,
    cycles_per_bin,
    enumeration_size,
    evaluate_plan,
    selected_locations_by_type,
    solve,
    solve_bruteforce,
)
from flowrack.rack import RackStateMatrix

from helpers import random_instance, random_rack, random_request


def min_cost_by_selection(rack: RackStateMatrix, C) -> int | None:
    """Cheapest plan found by trying every set of item locations whose type
    counts equal the request.  Shares no code with the solvers."""
    items = [(k, j, v) for k, row in enumerate(rack.rows) for j, v in enumerate(row, start=1)
             if v]
    total = sum(C)
    best = None
    for combo in itertools.combinations(items, total):
        counts = [0] * len(C)
        for _, _, v in combo:
            counts[v - 1] += 1
        if counts != list(C):
            continue
        deepest = {}
        for k, j, _ in combo:
            deepest[k] = max(deepest.get(k, 0), j)
        cost = sum(deepest.values())
        best = cost if best is None else min(best, cost)
    return best


# -- case study -------------------------------------------------------------

def test_case_study_solve(case_rack, case_request):
    plan = solve(case_rack, case_request)
    assert plan.objective == 24
    assert plan.cut_depths == (7, 7, 0, 3, 5, 2)
    assert plan.delivered == 16 and plan.restored == 8
    assert plan.delivery_rate == pytest.approx(16 / 24, abs=1e-12)


def test_case_study_oracle_finds_unique_optimum(case_rack, case_request):
    plan = solve_bruteforce(case_rack, case_request)
    assert plan.objective == 24
    assert plan.cut_depths == (7, 7, 0, 3, 5, 2)
    assert plan.stats.explored == 8 ** 6 == 262_144
    assert plan.stats.optima == 1


def test_case_study_selection_matches_published(case_rack, case_request, case_selection):
    # the optimum is unique and every covered item of each type is needed,
    # so the selection is forced
    assert solve(case_rack, case_request).selection == case_selection


def test_published_selection_is_valid(case_rack, case_request, case_selection):
    ev = evaluate_plan(case_rack, case_request, case_selection)
    assert ev.ok
    assert ev.objective == 24 and ev.restored == 8
    assert ev.delivery_rate == pytest.approx(16 / 24)
    assert ev.cut_depths == (7, 7, 0, 3, 5, 2)


def test_cycles_per_bin(case_rack, case_request):
    plan = solve(case_rack, case_request)
    assert cycles_per_bin(plan) == (7, 7, 0, 3, 5, 2)
    assert sum(cycles_per_bin(plan)) == plan.objective


def test_locations_by_type(case_rack, case_request):
    locs = selected_locations_by_type(solve(case_rack, case_request), case_rack)
    assert locs[1] == [(1, 1), (4, 1), (6, 2)]
    assert locs[2] == [(1, 2), (1, 7), (5, 2)]
    # the published by-type listing gives (f1, e6) for type 4; the selection
    # matrix and the rack both put it at slot 5
    assert locs[4] == [(1, 5), (2, 3), (2, 5), (4, 2), (5, 4)]
    assert locs[10] == [(2, 2), (2, 7), (4, 3), (5, 1), (5, 5)]
    assert {i: len(v) for i, v in locs.items()} == {1: 3, 2: 3, 4: 5, 10: 5}


def test_check_feasible_case(case_rack, case_request):
    assert check_feasible(case_rack, case_request) is None


# -- small and degenerate instances ----------------------------------------

def test_zero_request_gives_empty_plan(case_rack):
    plan = solve(case_rack, (0,) * 10)
    assert plan.objective == 0 and plan.cut_depths == (0,) * 6
    assert plan.delivery_rate == 1.0
    assert cycles_per_bin(plan) == (0,) * 6
    assert selected_locations_by_type(plan, case_rack) == {}
    assert check_feasible(case_rack, (0,) * 10) is None


def test_single_slot_rack():
    for solver in (solve, solve_bruteforce):
        plan = solver([[1]], [1])
        assert plan.objective == 1 and plan.selection == ((1,),)
    assert solve_bruteforce([[1]], [1]).stats.explored == 2


def test_shortfall_reported():
    S = [[1, 2, 1], [2, 0, 0]]
    report = check_feasible(S, [3, 1])
    assert report.entries == ((1, 3, 2),)
    for solver in (solve, solve_bruteforce):
        with pytest.raises(Infeasible) as exc:
            solver(S, [4, 3])
        assert exc.value.shortfall.entries == ((1, 4, 2), (2, 3, 2))


def test_budget_exceeded():
    S = [[1, 1, 1]] * 6
    assert enumeration_size(S) == 4 ** 6
    with pytest.raises(BudgetExceeded):
        solve_bruteforce(S, [1], budget=100)


def test_request_type_out_of_range():
    with pytest.raises(DimensionMismatch):
        solve([[3, 0]], [1, 0])


def test_batch_beats_greedy_front_picks():
    # taking the shallowest item of each type separately costs 1 + 2 = 3,
    # taking both from the second bin costs 2
    S = [[1, 0], [2, 1]]
    plan = solve(S, [1, 1])
    assert plan.objective == 2
    assert plan.cut_depths == (0, 2)


def test_ties_resolve_to_smallest_depth_vector():
    S = [[1, 0], [1, 0]]
    assert solve(S, [1]).cut_depths == (0, 1)
    assert solve_bruteforce(S, [1]).cut_depths == (0, 1)
    assert solve(S, [1]).selection == ((0, 0), (1, 0))
    assert solve_bruteforce(S, [1]).stats.optima == 2


@pytest.mark.parametrize("seed", range(40))
def test_solvers_match_selection_enumeration(seed):
    rng = random.Random(seed)
    rack = random_rack(rng, rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 3))
    C = random_request(rng, rack, 0.5)
    expected = min_cost_by_selection(rack, C)
    assert solve(rack, C).objective == expected
    assert solve_bruteforce(rack, C).objective == expected


# -- plan evaluation --------------------------------------------------------

# three product types in a 6x4 rack, request of four type-1 and two type-3
MIXED_RACK = (
    (1, 2, 1, 2),
    (2, 1, 2, 2),
    (2, 2, 3, 2),
    (2, 2, 1, 2),
    (2, 2, 2, 3),
    (2, 3, 2, 1),
)
MIXED_REQUEST = (4, 0, 2)
ONE_PER_BIN = (
    (1, 0, 0, 0),
    (0, 1, 0, 0),
    (0, 0, 1, 0),
    (0, 0, 1, 0),
    (0, 0, 0, 1),
    (0, 0, 0, 1),
)
FIVE_BINS = (
    (1, 0, 1, 0),
    (0, 1, 0, 0),
    (0, 0, 1, 0),
    (0, 0, 1, 0),
    (0, 0, 0, 0),
    (0, 1, 0, 0),
)


def test_evaluate_one_item_per_bin():
    ev = evaluate_plan(MIXED_RACK, MIXED_REQUEST, ONE_PER_BIN)
    assert ev.ok
    assert sorted(ev.cut_depths) == [1, 2, 3, 3, 4, 4]
    assert ev.objective == 17 and ev.restored == 11


def test_evaluate_shared_bin():
    ev = evaluate_plan(MIXED_RACK, MIXED_REQUEST, FIVE_BINS)
    assert ev.ok
    assert sorted(d for d in ev.cut_depths if d) == [2, 2, 3, 3, 3]
    assert ev.objective == 13 and ev.restored == 7


def test_evaluate_flags_selection_behind_cut(case_rack, case_request, case_selection):
    depths = [7, 7, 0, 3, 4, 2]  # bin 5 selects slot 5
    ev = evaluate_plan(case_rack, case_request, case_selection, cut_depths=depths)
    assert ev.failed_rules() == {"within-cut"}
    [v] = ev.violations
    assert (v.bin, v.slot) == (5, 5)


def test_evaluate_flags_missing_item(case_rack, case_request, case_selection):
    X = [list(r) for r in case_selection]
    X[5][1] = 0
    ev = evaluate_plan(case_rack, case_request, X)
    assert ev.failed_rules() == {"demand-met"}
    assert ev.violations[0].type == 1


def test_evaluate_flags_empty_slot_and_marks():
    S = [[1, 0], [1, 1]]
    ev = evaluate_plan(S, [1], [[0, 1], [0, 0]], marks=[[1, 1], [0, 0]])
    assert ev.failed_rules() == {"select-item", "cut-on-item", "single-cut", "demand-met"}
    ev = evaluate_plan(S, [1], [[2, 0], [0, 0]])
    assert "binary-selection" in ev.failed_rules()
    ev = evaluate_plan(S, [1], [[1, 0], [0, 0]], marks=[[2, 0], [0, 0]])
    assert "binary-cut" in ev.failed_rules()


def test_evaluate_slack_mark_costs_more():
    S = [[1, 2, 2]]
    ev = evaluate_plan(S, [1, 0], [[1, 0, 0]], cut_depths=[3])
    assert ev.ok and ev.objective == 3 and ev.restored == 2


def test_evaluate_wrong_shape():
    ev = evaluate_plan([[1, 0]], [1], [[1, 0, 0]])
    assert ev.failed_rules() == {"shape"}


def test_evaluate_accepts_plan_object(case_rack, case_request):
    plan = solve(case_rack, case_request)
    ev = evaluate_plan(case_rack, case_request, plan)
    assert ev.ok and ev.objective == plan.objective
    assert isinstance(plan, RetrievalPlan)


# -- properties -------------------------------------------------------------

@st.composite
def instances(draw, max_m=4, max_q=4, max_n=3):
    m = draw(st.integers(1, max_m))
    q = draw(st.integers(1, max_q))
    n = draw(st.integers(1, max_n))
    rows = []
    for _ in range(m):
        fill = draw(st.integers(0, q))
        rows.append(tuple(draw(st.lists(st.integers(1, n), min_size=fill, max_size=fill)))
                    + (0,) * (q - fill))
    rack = RackStateMatrix(tuple(rows), n)
    stock = rack.stock()
    C = tuple(draw(st.integers(0, stock.get(i, 0))) for i in range(1, n + 1))
    return rack, C


@given(instances())
@settings(max_examples=300, deadline=None)
def test_oracle_equivalence(inst):
    rack, C = inst
    plan = solve(rack, C)
    oracle = solve_bruteforce(rack, C)
    assert plan.objective == oracle.objective
    assert plan.cut_depths == oracle.cut_depths
    assert evaluate_plan(rack, C, plan).ok


@given(instances())
@settings(max_examples=200, deadline=None)
def test_lower_bound_and_tightness(inst):
    rack, C = inst
    plan = solve(rack, C)
    assert plan.objective >= sum(C)
    # equality exactly when some cut vector takes out the request and nothing else
    exact = any(
        all(sum(1 for k, d in enumerate(depths) for v in rack.rows[k][:d] if v == i)
            == C[i - 1] for i in range(1, rack.n + 1))
        for depths in itertools.product(*(range(f + 1) for f in rack.fills()))
    )
    assert (plan.objective == sum(C)) == exact


@given(instances(), st.data())
@settings(max_examples=200, deadline=None)
def test_monotone_in_request(inst, data):
    rack, C = inst
    stock = rack.stock()
    room = [i for i in range(1, rack.n + 1) if C[i - 1] < stock.get(i, 0)]
    assume(room)
    i = data.draw(st.sampled_from(room))
    bigger = tuple(c + (1 if t == i else 0) for t, c in enumerate(C, start=1))
    assert solve(rack, bigger).objective >= solve(rack, C).objective


@given(instances(), st.randoms())
@settings(max_examples=200, deadline=None)
def test_bin_permutation(inst, rnd):
    rack, C = inst
    order = list(range(rack.m))
    rnd.shuffle(order)
    base = solve(rack, C)
    moved = solve(rack.permuted(order), C)
    assert moved.objective == base.objective
    if solve_bruteforce(rack, C).stats.optima == 1:
        assert moved.cut_depths == tuple(base.cut_depths[i] for i in order)


@given(instances(), st.integers(1, 3))
@settings(max_examples=150, deadline=None)
def test_padding_with_empty_slots(inst, extra):
    rack, C = inst
    assert solve(rack.padded(extra), C).objective == solve(rack, C).objective


@pytest.mark.parametrize("seed", range(20))
def test_larger_racks_against_oracle(seed):
    rng = random.Random(1000 + seed)
    rack, C = random_instance(rng, max_m=6, max_q=6, max_n=5)
    assert solve(rack, C).objective == solve_bruteforce(rack, C).objective
