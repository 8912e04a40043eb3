"""Sector-level power gating: utilization, schedules and the sleep FSM.

Sectors with the same index across all banks form a sector group driven by
one sleep transistor. The power management unit talks to each group with a
two-way handshake (request then acknowledge); a full sleep cycle is
ON -> DRAINING -> OFF -> WAKING -> ON, with a fixed wakeup latency charged
once per operation boundary that wakes any group (groups wake in parallel,
each behind its own transistor).

Residency is compacted into a prefix of groups, so the "active" state of a
block is just a group count. Gating decisions are taken only at operation
boundaries; utilization is held constant inside an operation and across
routing iterations of the same operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .memsizer import COMPONENT_ROLE, BlockRole, MemBlock, MemoryOrg, OrgKind
from .workload import COMPONENTS, Workload, WorkloadOp


class GroupState(Enum):
    ON = "on"
    DRAINING = "draining"
    OFF = "off"
    WAKING = "waking"


class FsmEvent(Enum):
    REQUEST = "request"
    ACK = "ack"
    WAKE_COMPLETE = "wake_complete"
    ACCESS = "access"


class ProtocolViolation(RuntimeError):
    """Illegal event for the current sector-group state."""


class InfeasibleMappingError(ValueError):
    """An operation's residency does not fit the block it maps to."""


@dataclass
class SectorGroup:
    """One sleep-transistor domain: the same sector index in every bank."""

    index: int
    group_bytes: int
    state: GroupState = GroupState.ON
    pending_request: bool = False


def step_fsm(group: SectorGroup, event: FsmEvent) -> SectorGroup:
    """Advance one sector group by one event, mutating and returning it.

    Raises ProtocolViolation for any event that is illegal in the current
    state: accesses are only legal while ON, acknowledges require a pending
    sleep request, and requests cannot overlap an in-flight transition.
    """
    s = group.state
    if event is FsmEvent.ACCESS:
        if s is not GroupState.ON:
            raise ProtocolViolation(f"group {group.index}: access while {s.value}")
        return group
    if event is FsmEvent.REQUEST:
        if s is GroupState.ON:
            group.state = GroupState.DRAINING
            group.pending_request = True
            return group
        if s is GroupState.OFF:
            group.state = GroupState.WAKING
            group.pending_request = True
            return group
        raise ProtocolViolation(f"group {group.index}: request while {s.value}")
    if event is FsmEvent.ACK:
        if s is GroupState.DRAINING and group.pending_request:
            group.state = GroupState.OFF
            group.pending_request = False
            return group
        raise ProtocolViolation(f"group {group.index}: ack without pending sleep request")
    if event is FsmEvent.WAKE_COMPLETE:
        if s is GroupState.WAKING and group.pending_request:
            group.state = GroupState.ON
            group.pending_request = False
            return group
        raise ProtocolViolation(f"group {group.index}: wake_complete while {s.value}")
    raise ProtocolViolation(f"unknown event {event!r}")


# --- residency and access routing -------------------------------------------


@dataclass(frozen=True)
class BlockUsage:
    """Per-operation demand one block sees: bytes resident plus accesses.

    Access counts are fractional for the hybrid organization, where a
    component's accesses split proportionally to its resident bytes.
    """

    resident_bytes: int
    reads: float
    writes: float


def _hy_split(op: WorkloadOp, org: MemoryOrg) -> dict[BlockRole, BlockUsage]:
    shared = org.block(BlockRole.SHARED)
    usage = {role: [0, 0.0, 0.0] for role in (r.role for r in org.blocks)}
    for comp in COMPONENTS:
        sep_role = COMPONENT_ROLE[comp]
        sep_cap = org.block(sep_role).capacity
        fp = op.footprint[comp]
        reads, writes = op.reads[comp], op.writes[comp]
        sep_bytes = min(fp, sep_cap)
        shared_bytes = fp - sep_bytes
        if fp > 0:
            sep_frac = sep_bytes / fp
        else:
            # No residency to split by; land accesses on the component's own
            # block unless it has no capacity at all.
            sep_frac = 1.0 if sep_cap > 0 else 0.0
        usage[sep_role][0] += sep_bytes
        usage[sep_role][1] += reads * sep_frac
        usage[sep_role][2] += writes * sep_frac
        usage[BlockRole.SHARED][0] += shared_bytes
        usage[BlockRole.SHARED][1] += reads * (1.0 - sep_frac)
        usage[BlockRole.SHARED][2] += writes * (1.0 - sep_frac)
    if usage[BlockRole.SHARED][0] > shared.capacity:
        raise InfeasibleMappingError(
            f"op {op.name}: overflow of {usage[BlockRole.SHARED][0]} B exceeds shared block "
            f"({shared.capacity} B)"
        )
    return {role: BlockUsage(int(v[0]), v[1], v[2]) for role, v in usage.items()}


def route_op(op: WorkloadOp, org: MemoryOrg) -> dict[BlockRole, BlockUsage]:
    """Map one operation's footprint and accesses onto the org's blocks.

    SMP routes everything to the shared block; SEP routes each component to
    its own block; HY fills the separated blocks first and overflows into
    the shared block, splitting accesses proportionally to resident bytes.
    """
    if org.kind is OrgKind.SMP:
        block = org.block(BlockRole.SHARED)
        total = op.total_footprint
        if total > block.capacity:
            raise InfeasibleMappingError(
                f"op {op.name}: footprint {total} B exceeds shared block ({block.capacity} B)"
            )
        return {
            BlockRole.SHARED: BlockUsage(
                total,
                float(sum(op.reads.values())),
                float(sum(op.writes.values())),
            )
        }
    if org.kind is OrgKind.SEP:
        out = {}
        for comp in COMPONENTS:
            role = COMPONENT_ROLE[comp]
            block = org.block(role)
            fp = op.footprint[comp]
            if fp > block.capacity:
                raise InfeasibleMappingError(
                    f"op {op.name}: {role.value} footprint {fp} B exceeds block ({block.capacity} B)"
                )
            out[role] = BlockUsage(fp, float(op.reads[comp]), float(op.writes[comp]))
        return out
    return _hy_split(op, org)


def active_group_count(resident_bytes: int, block: MemBlock) -> int:
    """Groups that must be powered to hold the given residency (a prefix)."""
    if resident_bytes <= 0:
        return 0
    if block.group_bytes == 0:
        raise InfeasibleMappingError(f"{block.role.value}: resident bytes on a zero-capacity block")
    return min(block.sectors, math.ceil(resident_bytes / block.group_bytes))


def utilization(op: WorkloadOp, block: MemBlock, org: MemoryOrg) -> int:
    """Active sector groups the op needs on this block under this org."""
    usage = route_op(op, org)
    return active_group_count(usage[block.role].resident_bytes, block)


# --- schedule ----------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    boundary: int  # execution-step index being entered
    block: BlockRole
    woken: int
    slept: int


@dataclass(frozen=True)
class HandshakeEvent:
    boundary: int
    block: BlockRole
    group: int
    kind: FsmEvent
    direction: str  # "sleep" | "wake"


@dataclass(frozen=True)
class GateSchedule:
    """Per-step active group counts plus the boundary transition timeline."""

    exec_ops: tuple[str, ...]
    active_groups: dict[BlockRole, tuple[int, ...]]
    transitions: tuple[Transition, ...]
    events: tuple[HandshakeEvent, ...]
    wake_latency_cycles: int
    overlap_wakeup: bool = False

    def stall_cycles(self) -> int:
        """Serial wakeup stall: one latency per boundary that wakes anything."""
        if self.overlap_wakeup or self.wake_latency_cycles == 0:
            return 0
        boundaries = {t.boundary for t in self.transitions if t.woken > 0}
        return len(boundaries) * self.wake_latency_cycles

    def total_woken(self) -> int:
        return sum(t.woken for t in self.transitions)

    def total_slept(self) -> int:
        return sum(t.slept for t in self.transitions)

    def timeline(self) -> list[dict]:
        """Report-friendly transition rows with cumulative wake stalls."""
        rows = []
        stalled = set()
        cumulative = 0
        for t in self.transitions:
            if t.woken > 0 and t.boundary not in stalled and not self.overlap_wakeup:
                stalled.add(t.boundary)
                cumulative += self.wake_latency_cycles
            rows.append(
                {
                    "boundary": t.boundary,
                    "entering_op": self.exec_ops[t.boundary],
                    "block": t.block.value,
                    "woken": t.woken,
                    "slept": t.slept,
                    "cumulative_wake_cycles": cumulative,
                }
            )
        return rows


def _step_active(op: WorkloadOp, block: MemBlock, usage: BlockUsage) -> int:
    if not block.gated:
        return block.sectors  # ungated blocks are always fully powered
    groups = active_group_count(usage.resident_bytes, block)
    # Any accessed block keeps at least one group powered, even if the
    # profile claims a zero footprint, so accesses can never hit a dark group.
    if groups == 0 and (usage.reads > 0 or usage.writes > 0) and block.sectors > 0:
        groups = 1
    return groups


def build_schedule(
    w: Workload,
    org: MemoryOrg,
    wake_latency_cycles: int = 2,
    overlap_wakeup: bool = False,
) -> GateSchedule:
    """Derive the ON/OFF transition schedule for one inference.

    Transitions happen only at execution boundaries. The first operation's
    groups are already powered at time zero, so boundary 0 carries no
    events; repeated routing iterations with identical utilization generate
    none either.
    """
    if wake_latency_cycles < 0:
        raise ValueError("wake_latency_cycles must be >= 0")
    exec_ops = w.exec_sequence()
    roles = tuple(b.role for b in org.blocks)
    active: dict[BlockRole, list[int]] = {r: [] for r in roles}
    for op in exec_ops:
        usage = route_op(op, org)
        for role in roles:
            active[role].append(_step_active(op, org.block(role), usage[role]))

    transitions: list[Transition] = []
    events: list[HandshakeEvent] = []
    for t in range(1, len(exec_ops)):
        for role in roles:
            prev, nxt = active[role][t - 1], active[role][t]
            woken = max(0, nxt - prev)
            slept = max(0, prev - nxt)
            if woken == 0 and slept == 0:
                continue
            transitions.append(Transition(boundary=t, block=role, woken=woken, slept=slept))
            for g in range(nxt, prev):  # groups leaving the active prefix
                events.append(HandshakeEvent(t, role, g, FsmEvent.REQUEST, "sleep"))
                events.append(HandshakeEvent(t, role, g, FsmEvent.ACK, "sleep"))
            for g in range(prev, nxt):  # groups joining the active prefix
                events.append(HandshakeEvent(t, role, g, FsmEvent.REQUEST, "wake"))
                events.append(HandshakeEvent(t, role, g, FsmEvent.WAKE_COMPLETE, "wake"))
    return GateSchedule(
        exec_ops=tuple(op.name for op in exec_ops),
        active_groups={r: tuple(v) for r, v in active.items()},
        transitions=tuple(transitions),
        events=tuple(events),
        wake_latency_cycles=wake_latency_cycles,
        overlap_wakeup=overlap_wakeup,
    )


@dataclass(frozen=True)
class ScheduleStats:
    sleep_requests: int
    acks: int
    wake_requests: int
    wake_completes: int
    accesses: int


def simulate_schedule(schedule: GateSchedule, org: MemoryOrg) -> ScheduleStats:
    """Replay a schedule through the sector-group FSMs.

    This is the safety check behind every evaluation: each executed
    operation issues an access to every group in its active prefix, so a
    schedule that ever leaves a needed group dark raises ProtocolViolation.
    """
    groups: dict[BlockRole, list[SectorGroup]] = {}
    for block in org.blocks:
        initial = schedule.active_groups[block.role][0] if schedule.exec_ops else 0
        if not block.gated:
            initial = block.sectors
        groups[block.role] = [
            SectorGroup(
                index=g,
                group_bytes=block.group_bytes,
                state=GroupState.ON if g < initial else GroupState.OFF,
            )
            for g in range(block.sectors)
        ]

    events_by_boundary: dict[int, list[HandshakeEvent]] = {}
    for ev in schedule.events:
        events_by_boundary.setdefault(ev.boundary, []).append(ev)

    counts = {"sleep_requests": 0, "acks": 0, "wake_requests": 0, "wake_completes": 0, "accesses": 0}
    for t in range(len(schedule.exec_ops)):
        for ev in events_by_boundary.get(t, ()):
            step_fsm(groups[ev.block][ev.group], ev.kind)
            if ev.kind is FsmEvent.REQUEST:
                counts["sleep_requests" if ev.direction == "sleep" else "wake_requests"] += 1
            elif ev.kind is FsmEvent.ACK:
                counts["acks"] += 1
            else:
                counts["wake_completes"] += 1
        for role, per_step in schedule.active_groups.items():
            block_groups = groups[role]
            for g in range(per_step[t]):
                step_fsm(block_groups[g], FsmEvent.ACCESS)
                counts["accesses"] += 1
    return ScheduleStats(**counts)
