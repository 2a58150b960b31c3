"""JSON file formats and report rendering.

Rack rows are written front slot first, so ``[1, 2, 0]`` is a bin holding a
type-1 item at the retrieval face, a type-2 item behind it and one free
slot at the back.  Bins and slots are 1-based in every report.

Rack file::

    {"dims": {"m": 2, "q": 3, "n": 2}, "rack": [[1, 2, 0], [2, 0, 0]]}

``dims`` is optional; a bare list of rows is also accepted.

Request file::

    {"request": [1, 1]}

Plan file: ``{"selection": [[...], ...]}`` plus optionally ``"marks"`` (a
cut-mark matrix) or ``"cut_depths"``.  The structured output of ``solve``
is itself a valid plan file.

Scenario file::

    {
      "dims": {"m": 6, "q": 7, "n": 10},
      "rack": [[...], ...],
      "requests": [{"tick": 0, "quantities": [...]}],
      "storage": [{"tick": 3, "type": 4}],
      "period": 1,
      "policies": {"restore": "random", "storage": {"kind": "round_robin"}},
      "seed": 0,
      "horizon": 20
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from flowrack.batching import as_request
from flowrack.cpn import to_matrix
from flowrack.errors import FlowRackError, ScenarioError
from flowrack.optimizer import RetrievalPlan, selected_locations_by_type
from flowrack.rack import Dimensions, RackStateMatrix
from flowrack.simulation import BatchReport, Policy, Scenario, SimulationResult


def load_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc


def _dims(doc: Any) -> Dimensions | None:
    if doc is None:
        return None
    try:
        return Dimensions(int(doc["m"]), int(doc["q"]), int(doc["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"dims must have integer m, q and n: {doc!r}") from exc


def _int_matrix(rows: Any, what: str) -> list[list[int]]:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ScenarioError(f"{what} must be a list of rows")
    try:
        return [[int(v) for v in row] for row in rows]
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{what} must hold integers") from exc


def parse_rack(doc: Any, n: int | None = None) -> RackStateMatrix:
    if isinstance(doc, list):
        doc = {"rack": doc}
    if not isinstance(doc, dict) or "rack" not in doc:
        raise ScenarioError("rack file needs a 'rack' list")
    dims = _dims(doc.get("dims"))
    rows = _int_matrix(doc["rack"], "rack")
    if dims is not None:
        if n is not None and n != dims.n:
            raise ScenarioError(f"rack declares n={dims.n} but the request has {n} types")
        n = dims.n
    try:
        rack = RackStateMatrix.from_rows(rows, n)
    except FlowRackError as exc:
        raise ScenarioError(str(exc)) from exc
    if dims is not None and (rack.m, rack.q) != (dims.m, dims.q):
        raise ScenarioError(f"rack is {rack.m}x{rack.q} but dims say {dims.m}x{dims.q}")
    return rack


def parse_request(doc: Any) -> tuple[int, ...]:
    if isinstance(doc, dict):
        doc = doc.get("request", doc.get("quantities"))
    if not isinstance(doc, list):
        raise ScenarioError("request file needs a 'request' list")
    try:
        return as_request(doc)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad request vector: {exc}") from exc


def parse_plan(doc: Any) -> dict:
    """Selection plus optional ``marks`` / ``cut_depths`` for evaluate_plan."""
    if not isinstance(doc, dict) or "selection" not in doc:
        raise ScenarioError("plan file needs a 'selection' matrix")
    out = {"selection": _int_matrix(doc["selection"], "selection")}
    if doc.get("marks") is not None:
        out["marks"] = _int_matrix(doc["marks"], "marks")
    elif doc.get("cut_depths") is not None:
        try:
            out["cut_depths"] = [int(d) for d in doc["cut_depths"]]
        except (TypeError, ValueError) as exc:
            raise ScenarioError("cut_depths must be integers") from exc
    return out


def _policy(doc: Any) -> Policy:
    if doc is None:
        return Policy()
    if isinstance(doc, str):
        return Policy(doc)
    if isinstance(doc, dict):
        seed = doc.get("seed")
        return Policy(doc.get("kind", "random"), None if seed is None else int(seed))
    raise ScenarioError(f"bad policy {doc!r}")


def parse_scenario(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    try:
        dims = _dims(doc["dims"])
        rack = parse_rack({"dims": doc["dims"], "rack": doc["rack"]})
        requests = [(int(r["tick"]), as_request(r["quantities"], dims.n))
                    for r in doc.get("requests", [])]
        storage = [(int(s["tick"]), int(s["type"])) for s in doc.get("storage", [])]
        policies = doc.get("policies", {})
        horizon = doc.get("horizon")
        scenario = Scenario(
            dims=dims,
            initial=rack,
            requests=requests,
            storage=storage,
            period=int(doc.get("period", 1)),
            restore_policy=_policy(policies.get("restore")),
            storage_policy=_policy(policies.get("storage")),
            seed=int(doc.get("seed", 0)),
            horizon=None if horizon is None else int(horizon),
            batching=doc.get("batching", "fixed"),
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario is missing {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"bad scenario: {exc}") from exc
    scenario.validate()
    return scenario


def scenario_to_dict(sc: Scenario) -> dict:
    def pol(p: Policy) -> dict:
        return {"kind": p.kind} if p.seed is None else {"kind": p.kind, "seed": p.seed}

    doc = {
        "dims": {"m": sc.dims.m, "q": sc.dims.q, "n": sc.dims.n},
        "rack": sc.initial.tolist(),
        "requests": [{"tick": t, "quantities": list(v)} for t, v in sc.requests],
        "storage": [{"tick": t, "type": p} for t, p in sc.storage],
        "period": sc.period,
        "policies": {"restore": pol(sc.restore_policy), "storage": pol(sc.storage_policy)},
        "seed": sc.seed,
    }
    if sc.horizon is not None:
        doc["horizon"] = sc.horizon
    return doc


# -- plan reports -----------------------------------------------------------

@dataclass(frozen=True)
class BinRow:
    bin: int
    slots: tuple[int, ...]
    cycles: int


@dataclass(frozen=True)
class TypeRow:
    type: int
    requested: int
    locations: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class PlanReport:
    """Everything printed for one solved batch."""

    objective: int
    delivered: int
    restored: int
    delivery_rate: float
    cut_depths: tuple[int, ...]
    selection: tuple[tuple[int, ...], ...]
    bins: tuple[BinRow, ...]
    types: tuple[TypeRow, ...]

    @classmethod
    def from_plan(cls, plan: RetrievalPlan, S: RackStateMatrix, C) -> PlanReport:
        by_type = selected_locations_by_type(plan, S)
        bins = tuple(
            BinRow(k, tuple(j for j, x in enumerate(row, start=1) if x), d)
            for k, (row, d) in enumerate(zip(plan.selection, plan.cut_depths), start=1)
        )
        types = tuple(TypeRow(i, c, tuple(by_type.get(i, ())))
                      for i, c in enumerate(C, start=1) if c)
        return cls(plan.objective, plan.delivered, plan.restored, plan.delivery_rate,
                   plan.cut_depths, plan.selection, bins, types)

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "delivered": self.delivered,
            "restored": self.restored,
            "delivery_rate": self.delivery_rate,
            "cut_depths": list(self.cut_depths),
            "selection": [list(r) for r in self.selection],
            "bins": [{"bin": b.bin, "slots": list(b.slots), "cycles": b.cycles}
                     for b in self.bins],
            "types": [{"type": t.type, "requested": t.requested,
                       "locations": [list(loc) for loc in t.locations]} for t in self.types],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> PlanReport:
        return cls(
            int(doc["objective"]),
            int(doc["delivered"]),
            int(doc["restored"]),
            float(doc["delivery_rate"]),
            tuple(doc["cut_depths"]),
            tuple(tuple(r) for r in doc["selection"]),
            tuple(BinRow(b["bin"], tuple(b["slots"]), b["cycles"]) for b in doc["bins"]),
            tuple(TypeRow(t["type"], t["requested"], tuple(tuple(loc) for loc in t["locations"]))
                  for t in doc["types"]),
        )


def _rate(delivered: int, objective: int) -> str:
    if objective == 0:
        return "1.00 (no retrievals)"
    return f"{delivered / objective:.2f} ({delivered}/{objective})"


def render_table(report: PlanReport) -> str:
    lines = [
        f"objective: {report.objective} retrieval cycles",
        f"delivered: {report.delivered}  restored: {report.restored}  "
        f"delivery rate: {_rate(report.delivered, report.objective)}",
        "",
        f"{'bin':<5}{'locations to retrieve':<28}cycles",
    ]
    for b in report.bins:
        locs = ", ".join(f"e{j}" for j in b.slots) or "none"
        lines.append(f"{'f' + str(b.bin):<5}{locs:<28}{b.cycles}")
    lines += ["", f"{'type':<6}{'requested':<11}locations (bin, slot)"]
    for t in report.types:
        locs = ", ".join(f"(f{k}, e{j})" for k, j in t.locations)
        lines.append(f"{t.type:<6}{t.requested:<11}{locs}")
    return "\n".join(lines)


def render_rack(S: RackStateMatrix) -> str:
    width = max(len(str(S.n)), 2)
    return "\n".join(f"f{k:<3} " + " ".join(f"{v:>{width}}" for v in row)
                     for k, row in enumerate(S.rows, start=1))


def render_shortfall(entries) -> str:
    return "\n".join(f"shortfall: type {t} requested {req}, available {avail}"
                     for t, req, avail in entries)


# -- simulation output ------------------------------------------------------

def batch_to_dict(r: BatchReport) -> dict:
    doc = {"batch": r.batch_id, "tick": r.tick, "request": list(r.request),
           "feasible": r.feasible}
    if r.plan is not None:
        doc["plan"] = PlanReport.from_plan(r.plan, r.snapshot, r.request).to_dict()
    else:
        doc["shortfall"] = [{"type": t, "requested": q, "available": a}
                            for t, q, a in r.shortfall.entries]
    return doc


def summary(result: SimulationResult) -> dict:
    served = [r for r in result.reports if r.feasible]
    rates = [r.delivery_rate for r in served]
    return {
        "batches": len(result.reports),
        "infeasible": len(result.reports) - len(served),
        "delivered": sum(r.delivered for r in served),
        "restored": sum(r.restored for r in served),
        "mean_delivery_rate": sum(rates) / len(rates) if rates else None,
    }


def simulation_to_dict(result: SimulationResult) -> dict:
    return {
        "batches": [batch_to_dict(r) for r in result.reports],
        "final_rack": to_matrix(result.final).tolist(),
        "conveyor": list(result.conveyor),
        "storage_queue": list(result.storage_queue),
        "deferred": list(result.deferred),
        "summary": summary(result),
    }


def render_simulation(result: SimulationResult) -> str:
    blocks = []
    for r in result.reports:
        head = f"== batch {r.batch_id} at tick {r.tick}: request {list(r.request)}"
        if r.plan is not None:
            body = render_table(PlanReport.from_plan(r.plan, r.snapshot, r.request))
        else:
            body = "infeasible, deferred to the next period\n" + render_shortfall(
                r.shortfall.entries)
        blocks.append(f"{head}\n{body}")
    s = summary(result)
    mean = "n/a" if s["mean_delivery_rate"] is None else f"{s['mean_delivery_rate']:.2f}"
    tail = [
        "== final rack",
        render_rack(to_matrix(result.final)),
        f"conveyor: {list(result.conveyor)}  storage queue: {list(result.storage_queue)}",
        f"summary: {s['batches']} batches, delivered {s['delivered']}, "
        f"restored {s['restored']}, mean delivery rate {mean}",
    ]
    blocks.append("\n".join(tail))
    return "\n\n".join(blocks) + "\n"
