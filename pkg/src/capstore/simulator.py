"""End-to-end evaluation of one (workload, organization, cost source) triple.

``evaluate`` routes every operation's accesses to the organization's
blocks, replays the gate schedule through the sector FSMs as a safety
check, and aggregates dynamic, static and wakeup energy per block and per
operation, plus off-chip and accelerator energy and the stall-extended
latency. Replay mode substitutes published per-block energy/area anchors
for the block totals while keeping the same access counts, schedule and
latency as model mode; only the energy/area numbers differ between modes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .costmodel import (
    PJ_PER_MJ,
    CalibrationTable,
    CostParams,
    DEFAULT_PARAMS,
    dynamic_energy,
    replay_lookup,
    static_energy,
)
from .memsizer import BlockRole, MemoryOrg
from .powergate import BlockUsage, GateSchedule, route_op, simulate_schedule
from .workload import OP_ORDER, Workload, offchip_accesses


class CompareError(ValueError):
    """Reports being compared do not describe the same workload."""


def route_accesses(w: Workload, org: MemoryOrg) -> dict[str, dict[BlockRole, BlockUsage]]:
    """Per-operation, per-block residency and access counts (per execution)."""
    return {op.name: route_op(op, org) for op in w.ops}


@dataclass(frozen=True)
class EnergyTriple:
    dynamic_pj: float = 0.0
    static_pj: float = 0.0
    wakeup_pj: float = 0.0

    @property
    def total_pj(self) -> float:
        return self.dynamic_pj + self.static_pj + self.wakeup_pj

    def scaled(self, factor: float) -> "EnergyTriple":
        return EnergyTriple(self.dynamic_pj * factor, self.static_pj * factor, self.wakeup_pj * factor)


@dataclass(frozen=True)
class BlockSummary:
    area_mm2: float
    energy_mj: float


@dataclass(frozen=True)
class EvalReport:
    workload_label: str
    org_label: str
    mode: str
    per_block_per_op: dict[str, dict[str, EnergyTriple]]
    per_block: dict[str, BlockSummary]
    onchip_energy_mj: float
    offchip_energy_mj: float
    accelerator_energy_mj: float
    grand_total_mj: float
    latency_cycles: int
    breakdown_fractions: dict[str, float]

    @property
    def area_mm2(self) -> float:
        return sum(b.area_mm2 for b in self.per_block.values())

    def op_energy_mj(self, op_name: str) -> float:
        return sum(
            ops[op_name].total_pj for ops in self.per_block_per_op.values() if op_name in ops
        ) / PJ_PER_MJ

    def to_dict(self) -> dict:
        return {
            "workload_label": self.workload_label,
            "org_label": self.org_label,
            "mode": self.mode,
            "per_block_per_op": {
                blk: {
                    op: {"dynamic_pj": e.dynamic_pj, "static_pj": e.static_pj, "wakeup_pj": e.wakeup_pj}
                    for op, e in ops.items()
                }
                for blk, ops in self.per_block_per_op.items()
            },
            "per_block": {
                blk: {"area_mm2": s.area_mm2, "energy_mJ": s.energy_mj} for blk, s in self.per_block.items()
            },
            "onchip_energy_mJ": self.onchip_energy_mj,
            "offchip_energy_mJ": self.offchip_energy_mj,
            "accelerator_energy_mJ": self.accelerator_energy_mj,
            "grand_total_mJ": self.grand_total_mj,
            "latency_cycles": self.latency_cycles,
            "breakdown_fractions": dict(self.breakdown_fractions),
        }

    def to_csv_rows(self) -> list[list]:
        """Flat rows for plotting: one per block x op."""
        rows = [["block", "op", "dynamic_pj", "static_pj", "wakeup_pj"]]
        for blk in sorted(self.per_block_per_op):
            ops = self.per_block_per_op[blk]
            for op in OP_ORDER:
                if op in ops:
                    e = ops[op]
                    rows.append([blk, op, e.dynamic_pj, e.static_pj, e.wakeup_pj])
        return rows

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def report_from_dict(doc: dict) -> EvalReport:
    per_block_per_op = {
        blk: {
            op: EnergyTriple(e["dynamic_pj"], e["static_pj"], e["wakeup_pj"]) for op, e in ops.items()
        }
        for blk, ops in doc["per_block_per_op"].items()
    }
    per_block = {blk: BlockSummary(s["area_mm2"], s["energy_mJ"]) for blk, s in doc["per_block"].items()}
    return EvalReport(
        workload_label=doc["workload_label"],
        org_label=doc["org_label"],
        mode=doc["mode"],
        per_block_per_op=per_block_per_op,
        per_block=per_block,
        onchip_energy_mj=doc["onchip_energy_mJ"],
        offchip_energy_mj=doc["offchip_energy_mJ"],
        accelerator_energy_mj=doc["accelerator_energy_mJ"],
        grand_total_mj=doc["grand_total_mJ"],
        latency_cycles=doc["latency_cycles"],
        breakdown_fractions=dict(doc["breakdown_fractions"]),
    )


def load_report(path: str | Path) -> EvalReport:
    return report_from_dict(json.loads(Path(path).read_text()))


def _model_structure(
    w: Workload, org: MemoryOrg, schedule: GateSchedule, params: CostParams
) -> dict[BlockRole, dict[str, EnergyTriple]]:
    """Dynamic/static/wakeup energy per block per canonical operation (pJ)."""
    routed = {op.name: route_op(op, org) for op in w.ops}
    exec_ops = w.exec_sequence()
    acc: dict[BlockRole, dict[str, list[float]]] = {
        b.role: {op.name: [0.0, 0.0, 0.0] for op in w.ops} for b in org.blocks
    }
    for t, op in enumerate(exec_ops):
        for block in org.blocks:
            usage = routed[op.name][block.role]
            cell = acc[block.role][op.name]
            cell[0] += dynamic_energy(params, block, usage.reads, usage.writes)
            if block.gated:
                powered = min(schedule.active_groups[block.role][t] * block.group_bytes, block.capacity)
            else:
                powered = block.capacity
            cell[1] += static_energy(params, block, powered, op.cycles)
    for tr in schedule.transitions:
        if tr.woken == 0:
            continue
        block = org.block(tr.block)
        entered = schedule.exec_ops[tr.boundary]
        acc[tr.block][entered][2] += tr.woken * params.e_wake(block.group_bytes)
    return {
        role: {op: EnergyTriple(*cell) for op, cell in ops.items()} for role, ops in acc.items()
    }


def evaluate(
    w: Workload,
    org: MemoryOrg,
    schedule: GateSchedule,
    costs: CostParams | CalibrationTable,
    mode: str = "model",
) -> EvalReport:
    """Produce the full energy/area/latency report for one configuration.

    The schedule is replayed through the sector FSMs first; a schedule
    that would access a dark group raises ProtocolViolation rather than
    producing a report.
    """
    if mode not in ("model", "replay"):
        raise ValueError(f"mode must be 'model' or 'replay', got {mode!r}")
    simulate_schedule(schedule, org)

    if mode == "model":
        if not isinstance(costs, CostParams):
            raise TypeError("model mode requires CostParams")
        params = costs
        offchip_pj = params.offchip_pj_per_access
        accel_pj = params.accel_pj_per_cycle
    else:
        if not isinstance(costs, CalibrationTable):
            raise TypeError("replay mode requires a CalibrationTable")
        params = DEFAULT_PARAMS  # shapes the per-op split; block totals come from anchors
        offchip_pj = costs.offchip_pj_per_access
        accel_pj = costs.accel_pj_per_cycle

    structure = _model_structure(w, org, schedule, params)

    per_block_per_op: dict[str, dict[str, EnergyTriple]] = {}
    per_block: dict[str, BlockSummary] = {}
    onchip_mj = 0.0
    for block in org.blocks:
        ops = structure[block.role]
        if mode == "replay":
            anchor = replay_lookup(costs, org.label, block.role)
            target_pj = anchor.energy_mj * PJ_PER_MJ
            current = sum(e.total_pj for e in ops.values())
            if current > 0:
                ops = {op: e.scaled(target_pj / current) for op, e in ops.items()}
            else:
                # Nothing to apportion by; book the anchor as leakage on the
                # first operation so block totals still match.
                first = w.ops[0].name
                ops = {op: EnergyTriple() for op in ops}
                ops[first] = EnergyTriple(static_pj=target_pj)
            block_mj = anchor.energy_mj
            area = anchor.area_mm2
        else:
            block_mj = sum(e.total_pj for e in ops.values()) / PJ_PER_MJ
            area = params.area(block.capacity, block.ports, block.gated, block.sectors)
        per_block_per_op[block.role.value] = ops
        per_block[block.role.value] = BlockSummary(area_mm2=area, energy_mj=block_mj)
        onchip_mj += block_mj

    offchip_mj = offchip_accesses(w).total_accesses * offchip_pj / PJ_PER_MJ
    accel_mj = w.total_cycles * accel_pj / PJ_PER_MJ
    grand = onchip_mj + offchip_mj + accel_mj
    if grand > 0:
        fractions = {
            "accelerator": accel_mj / grand,
            "onchip": onchip_mj / grand,
            "offchip": offchip_mj / grand,
        }
    else:
        fractions = {"accelerator": 0.0, "onchip": 0.0, "offchip": 0.0}

    return EvalReport(
        workload_label=w.label,
        org_label=org.label,
        mode=mode,
        per_block_per_op=per_block_per_op,
        per_block=per_block,
        onchip_energy_mj=onchip_mj,
        offchip_energy_mj=offchip_mj,
        accelerator_energy_mj=accel_mj,
        grand_total_mj=grand,
        latency_cycles=w.total_cycles + schedule.stall_cycles(),
        breakdown_fractions=fractions,
    )


def all_onchip_baseline_report(table: CalibrationTable, w: Workload) -> EvalReport:
    """Report for the flat all-on-chip design the hierarchy is measured against.

    Its memory energy/area come from the published baseline anchor; there
    is no off-chip traffic, and the accelerator itself is unchanged.
    """
    accel_mj = w.total_cycles * table.accel_pj_per_cycle / PJ_PER_MJ
    onchip = table.baseline.energy_mj
    grand = onchip + accel_mj
    return EvalReport(
        workload_label=w.label,
        org_label="ALL-ONCHIP",
        mode="replay",
        per_block_per_op={BlockRole.SHARED.value: {}},
        per_block={BlockRole.SHARED.value: BlockSummary(table.baseline.area_mm2, onchip)},
        onchip_energy_mj=onchip,
        offchip_energy_mj=0.0,
        accelerator_energy_mj=accel_mj,
        grand_total_mj=grand,
        latency_cycles=w.total_cycles,
        breakdown_fractions={
            "accelerator": accel_mj / grand if grand else 0.0,
            "onchip": onchip / grand if grand else 0.0,
            "offchip": 0.0,
        },
    )


def _pct(a: float, b: float) -> float | None:
    if a == 0:
        return None  # undefined ratio
    return 100.0 * (1.0 - b / a)


def compare(a: EvalReport, b: EvalReport) -> dict[str, float | None]:
    """Savings of ``b`` relative to ``a`` in percent (positive = b cheaper)."""
    if a.workload_label != b.workload_label:
        raise CompareError(
            f"reports describe different workloads: {a.workload_label!r} vs {b.workload_label!r}"
        )
    return {
        "energy": _pct(a.grand_total_mj, b.grand_total_mj),
        "onchip_energy": _pct(a.onchip_energy_mj, b.onchip_energy_mj),
        "area": _pct(a.area_mm2, b.area_mm2),
        "onchip_area": _pct(a.area_mm2, b.area_mm2),
    }
