#!/usr/bin/env python3
"""Walk through the inference workload: footprints, accesses, off-chip traffic.

The five operations of a capsule-network inference stress the on-chip
memory very differently. This script loads the checked-in reference
profile, prints the per-operation demand, and derives the off-chip
traffic: every byte written into the weight/data memories during the
feed-forward operations came from off-chip, and what the next operation
reads from data memory was spilled off-chip by its predecessor. The two
routing operations keep everything on-chip.
"""

from capstore import (
    CapsNetSpec,
    MemComponent,
    ReusePolicy,
    footprint_stats,
    generate_workload,
    load_reference_workload,
    offchip_accesses,
)

w = load_reference_workload()
print(f"profile: {w.label}\n")

print(f"{'op':10s} {'repeat':>6s} {'cycles':>8s} {'weight':>8s} {'data':>8s} {'acc':>8s} {'total':>8s}")
for op in w.ops:
    f = op.footprint
    print(
        f"{op.name:10s} {op.repeat:>6d} {op.cycles:>8d} "
        f"{f[MemComponent.WEIGHT]:>8d} {f[MemComponent.DATA]:>8d} {f[MemComponent.ACC]:>8d} "
        f"{op.total_footprint:>8d}"
    )

stats = footprint_stats(w)
print(f"\nworst-case total footprint: {stats.max_total} B during {stats.max_total_op}")
print("this single number sizes the shared multi-port organization\n")

off = offchip_accesses(w)
print(f"{'op':10s} {'offchip reads':>14s} {'offchip writes':>14s}")
for name in off.reads:
    print(f"{name:10s} {off.reads[name]:>14d} {off.writes[name]:>14d}")
print(f"total off-chip accesses: {off.total_accesses}\n")

# The analytic generator estimates a workload from network dimensions
# alone. It will not match a measured profile, but it reproduces the
# qualitative picture: the second convolution dominates.
generated = generate_workload(CapsNetSpec.mnist(), ReusePolicy(weight_reuse_conv=True))
gen_stats = footprint_stats(generated)
print("analytic generator on the standard MNIST network:")
print(f"  worst-case op: {gen_stats.max_total_op} ({gen_stats.max_total} B)")
print(f"  assumptions: {generated.label}")
