#!/usr/bin/env python3
"""Size the six candidate on-chip memory organizations.

Three layouts are derived from the workload's footprint statistics:
a shared 3-port memory (SMP), one single-port memory per component (SEP),
and a hybrid (HY) whose separated blocks hold each component's minimum
while a shared block absorbs the variable overflow. Each comes with a
power-gated variant that splits blocks into sectors.
"""

from capstore import default_organizations, footprint_stats, load_reference_workload

w = load_reference_workload()
stats = footprint_stats(w)

print(f"{'config':8s} {'block':8s} {'bytes':>8s} {'banks':>5s} {'sectors':>7s} {'ports':>5s} {'sector B':>8s}")
for org in default_organizations(stats):
    for b in org.blocks:
        print(
            f"{org.label:8s} {b.role.value:8s} {b.capacity:>8d} {b.banks:>5d} "
            f"{b.sectors:>7d} {b.ports:>5d} {b.sector_bytes:>8d}"
        )
    total = org.total_capacity
    print(f"{'':8s} {'total':8s} {total:>8d}\n")

smp, _, sep, _, hy, _ = default_organizations(stats)
print("capacity identity: the hybrid re-partitions the shared memory, it never grows it")
print(f"  HY total {hy.total_capacity} B == SMP {smp.total_capacity} B")
print(f"  SEP total {sep.total_capacity} B >= SMP (component worst cases can happen in different ops)")
