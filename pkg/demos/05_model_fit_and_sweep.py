#!/usr/bin/env python3
"""Fit the parametric cost model and sweep the design space.

The parametric model (access energy growing with bank size and port
count, linear leakage, sleep-transistor area overhead) is calibrated
against the published anchors by non-negative least squares on relative
residuals. The anchors come from a detailed memory compiler, so residuals
remain: they are printed, not hidden. What the fit must get right is the
energy ordering of the organizations, which makes model mode usable for
configurations that have no published numbers.
"""

from capstore import (
    BlockRole,
    OrgKind,
    SweepSpec,
    fit_params,
    load_reference_calibration,
    load_reference_workload,
    run_sweep,
)
from capstore.dse import sweep_csv_rows

w = load_reference_workload()
table = load_reference_calibration()

fit = fit_params(table, w)
print("calibrating the parametric model against the published anchors:")
for line in fit.summary_lines():
    print("  " + line)
p = fit.params
print(f"\nfitted forms: e_access = {p.read_coeff_pj:.3g} * (bytes/bank)^{p.size_exponent:g}"
      f" * (1 + {p.port_energy_step:g}*(ports-1)) pJ")
print(f"              p_leak = {p.leak_mw_base:.3g} + {p.leak_mw_per_byte:.3g} * powered_bytes  mW")

print("\nreplay-mode sweep over the six reference configurations:")
result = run_sweep(w, SweepSpec.reference(), table, mode="replay")
for row in sweep_csv_rows(result)[1:]:
    marker = " <- selected" if row[0] == result.selected.config_id else ""
    print(f"  {row[0]:8s} area {row[8]:>8.4f} mm2  onchip {row[9]:>7.4f} mJ  dominated={row[10]}{marker}")
print("  frontier: " + ", ".join(pt.config_id for pt in result.frontier.members))

print("\nmodel-mode sweep with the fitted parameters (same space):")
model_result = run_sweep(w, SweepSpec.reference(), fit.params, mode="model")
for pt in model_result.points:
    print(f"  {pt.config_id:8s} onchip {pt.energy_mj:>7.4f} mJ")
print(f"  selected: {model_result.selected.config_id}")

print("\ncustom sweep: gated separated memory, accumulator sector count 32..512:")
spec = SweepSpec(
    kinds=(OrgKind.SEP,),
    gating="on",
    sectors={BlockRole.WEIGHT: (64,), BlockRole.DATA: (16,), BlockRole.ACC: (32, 64, 128, 256, 512)},
)
custom = run_sweep(w, spec, fit.params, mode="model")
for pt in custom.points:
    acc_sectors = pt.org.block(BlockRole.ACC).sectors
    print(f"  acc sectors {acc_sectors:>3d}: onchip {pt.energy_mj:.4f} mJ, area {pt.area_mm2:.4f} mm2")
print(f"  best: {custom.selected.config_id}")
