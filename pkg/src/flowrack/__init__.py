"""Flow-rack AS/RS model: Petri-net rack state, request batching, an exact
minimum retrieval-cycle optimizer and a closed-loop simulator."""

from flowrack.batching import BatchClock, aggregate, release_batch, submit
from flowrack.cpn import (
    Marking,
    fire_td,
    fire_tf,
    fire_tr,
    fire_ts,
    init_marking,
    initial_marking,
    settle,
    to_matrix,
)
from flowrack.errors import (
    BudgetExceeded,
    DimensionMismatch,
    FlowRackError,
    Infeasible,
    LengthMismatch,
    NonContiguousBin,
    NotEnabled,
    ScenarioError,
)
from flowrack.optimizer import (
    RetrievalPlan,
    ShortfallReport,
    check_feasible,
    cycles_per_bin,
    evaluate_plan,
    selected_locations_by_type,
    solve,
    solve_bruteforce,
)
from flowrack.rack import Dimensions, RackStateMatrix
from flowrack.simulation import Controller, Policy, Scenario, replay, run

__version__ = "0.1.0"
