#!/usr/bin/env python3
"""Replay-mode evaluation: published anchors, whole-architecture totals.

Replay mode takes per-block energy/area anchors for the six reference
configurations and combines them with the simulated access routing,
gate schedule and latency. On top of the on-chip numbers it adds off-chip
and accelerator energy, which is what makes hierarchy-level comparisons
meaningful.
"""

from capstore import (
    all_onchip_baseline_report,
    build_schedule,
    compare,
    default_organizations,
    evaluate,
    footprint_stats,
    load_reference_calibration,
    load_reference_workload,
)

w = load_reference_workload()
table = load_reference_calibration()
stats = footprint_stats(w)

reports = {}
for org in default_organizations(stats):
    schedule = build_schedule(w, org)
    reports[org.label] = evaluate(w, org, schedule, table, mode="replay")

print(f"{'config':8s} {'onchip mJ':>10s} {'offchip mJ':>10s} {'accel mJ':>9s} {'total mJ':>9s} {'area mm2':>9s}")
for label in ("SMP", "PG-SMP", "HY", "PG-HY", "SEP", "PG-SEP"):
    r = reports[label]
    print(
        f"{label:8s} {r.onchip_energy_mj:>10.4f} {r.offchip_energy_mj:>10.4f} "
        f"{r.accelerator_energy_mj:>9.4f} {r.grand_total_mj:>9.4f} {r.area_mm2:>9.4f}"
    )

savings = compare(reports["SMP"], reports["PG-SEP"])
print("\nswitching the on-chip memory from SMP to PG-SEP:")
print(f"  on-chip energy  -{savings['onchip_energy']:.1f}%")
print(f"  on-chip area    -{savings['onchip_area']:.1f}%")
print(f"  total energy    -{savings['energy']:.1f}%")

baseline = all_onchip_baseline_report(table, w)
hierarchy = reports["SMP"]
vs_flat = compare(baseline, hierarchy)
print("\nhierarchy (on-chip + off-chip) vs the flat all-on-chip design:")
print(f"  all-on-chip total {baseline.grand_total_mj:.4f} mJ, hierarchy total {hierarchy.grand_total_mj:.4f} mJ")
print(f"  total energy saving {vs_flat['energy']:.1f}%")
frac = hierarchy.breakdown_fractions
print(f"  hierarchy breakdown: accelerator {frac['accelerator']:.1%}, "
      f"on-chip {frac['onchip']:.1%}, off-chip {frac['offchip']:.1%}")
