#!/usr/bin/env python3
"""Build and replay a sector power-gating schedule.

Sectors with the same index across all 16 banks share one sleep
transistor, so gating works on sector groups. The power management unit
changes group states only at operation boundaries, using a request/
acknowledge handshake; a full cycle is ON -> DRAINING -> OFF -> WAKING ->
ON. Replaying the schedule through the per-group state machines proves no
operation ever touches a dark group.
"""

from capstore import (
    BlockRole,
    apply_gating,
    build_schedule,
    footprint_stats,
    load_reference_workload,
    simulate_schedule,
    size_sep,
)
from capstore.memsizer import DEFAULT_PG_SECTORS
from capstore.memsizer import OrgKind

w = load_reference_workload()
org = apply_gating(size_sep(footprint_stats(w)), DEFAULT_PG_SECTORS[OrgKind.SEP])
schedule = build_schedule(w, org, wake_latency_cycles=2)

print("active sector groups per executed operation (PG-SEP):")
print(f"{'op':12s} " + " ".join(f"{r.value:>7s}" for r in (BlockRole.WEIGHT, BlockRole.DATA, BlockRole.ACC)))
for t, name in enumerate(schedule.exec_ops):
    counts = [schedule.active_groups[r][t] for r in (BlockRole.WEIGHT, BlockRole.DATA, BlockRole.ACC)]
    print(f"{name:12s} " + " ".join(f"{c:>7d}" for c in counts))

print("\ntransition timeline (only operation switches move any group; the")
print("routing loop re-runs the same two ops, so it never transitions):")
for row in schedule.timeline():
    print(
        f"  entering {row['entering_op']:10s} {row['block']:7s} "
        f"woken {row['woken']:>3d} slept {row['slept']:>3d} "
        f"cumulative wake stall {row['cumulative_wake_cycles']} cycles"
    )

stats = simulate_schedule(schedule, org)
print(f"\nreplayed through the group FSMs: {stats.accesses} accesses, "
      f"{stats.sleep_requests} sleep requests / {stats.acks} acks, "
      f"{stats.wake_requests} wake requests / {stats.wake_completes} completions")
print(f"wakeup stall added to the inference: {schedule.stall_cycles()} cycles "
      f"(out of {w.total_cycles} total)")
