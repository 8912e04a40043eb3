"""Command-line entry point.

Subcommands: analyze, size, simulate, sweep, compare. All outputs are
deterministic (re-running on identical inputs produces byte-identical
files) and every output directory carries a manifest with input digests
and the tool version.

Exit codes: 0 success, 2 input error, 3 infeasible configuration,
4 protocol violation detected during simulation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .costmodel import (
    CalibrationError,
    CostParams,
    DEFAULT_PARAMS,
    MissingAnchorError,
    fit_params,
    load_calibration,
)
from .dse import (
    SweepError,
    SweepSpec,
    frontier_csv_rows,
    load_sweep_spec,
    run_sweep,
    sweep_csv_rows,
)
from .memsizer import SizingError, default_organizations, load_org, org_to_dict
from .powergate import InfeasibleMappingError, ProtocolViolation, build_schedule
from .simulator import CompareError, compare, evaluate, load_report
from .workload import (
    COMPONENTS,
    WorkloadError,
    footprint_stats,
    load_workload,
    offchip_accesses,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_PROTOCOL = 4


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class OutputDir:
    """Collects written files so the manifest can record their digests."""

    def __init__(self, out: str, inputs: dict[str, Path]):
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.inputs = inputs
        self.written: list[str] = []

    def write_json(self, name: str, obj) -> Path:
        path = self.dir / name
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        self.written.append(name)
        return path

    def write_csv(self, name: str, rows) -> Path:
        path = self.dir / name
        with path.open("w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        self.written.append(name)
        return path

    def finish(self) -> None:
        manifest = {
            "tool": "capstore",
            "version": __version__,
            "inputs": {label: _sha256(p) for label, p in sorted(self.inputs.items())},
            "outputs": {name: _sha256(self.dir / name) for name in sorted(self.written)},
        }
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _require(path_arg: str | None, what: str) -> Path:
    if not path_arg:
        raise WorkloadError(f"missing required --{what} PATH")
    path = Path(path_arg)
    if not path.exists():
        raise WorkloadError(f"{what} file not found: {path}")
    return path


def _ops_table(w) -> list[list]:
    off = offchip_accesses(w)
    header = ["op", "repeat", "cycles"]
    header += [f"footprint_{c.value}" for c in COMPONENTS] + ["footprint_total"]
    header += [f"reads_{c.value}" for c in COMPONENTS]
    header += [f"writes_{c.value}" for c in COMPONENTS]
    header += ["reads_offchip", "writes_offchip"]
    rows = [header]
    for op in w.ops:
        row = [op.name, op.repeat, op.cycles]
        row += [op.footprint[c] for c in COMPONENTS] + [op.total_footprint]
        row += [op.reads[c] for c in COMPONENTS]
        row += [op.writes[c] for c in COMPONENTS]
        row += [off.reads[op.name], off.writes[op.name]]
        rows.append(row)
    return rows


def cmd_analyze(args) -> int:
    wpath = _require(args.workload, "workload")
    w = load_workload(wpath)
    stats = footprint_stats(w)
    off = offchip_accesses(w)
    out = OutputDir(args.out, {"workload": wpath})

    analysis = {
        "label": w.label,
        "routing_iterations": w.routing_iterations,
        "total_cycles": w.total_cycles,
        "max_total_footprint": {"bytes": stats.max_total, "op": stats.max_total_op},
        "component_max": {c.value: {"bytes": e.bytes, "op": e.op} for c, e in stats.component_max.items()},
        "component_min": {c.value: {"bytes": e.bytes, "op": e.op} for c, e in stats.component_min.items()},
        "offchip": {"reads": off.reads, "writes": off.writes, "total": off.total_accesses},
        "ops": {
            op.name: {
                "repeat": op.repeat,
                "cycles": op.cycles,
                "footprint": {c.value: op.footprint[c] for c in COMPONENTS},
                "reads": {c.value: op.reads[c] for c in COMPONENTS},
                "writes": {c.value: op.writes[c] for c in COMPONENTS},
            }
            for op in w.ops
        },
    }
    if args.format == "csv":
        out.write_csv("ops.csv", _ops_table(w))
    else:
        out.write_json("analysis.json", analysis)
    out.finish()

    print(f"workload: {w.label or wpath}")
    print(f"max total footprint: {stats.max_total} B at {stats.max_total_op}")
    for c in COMPONENTS:
        mx, mn = stats.component_max[c], stats.component_min[c]
        print(f"  {c.value:6s} max {mx.bytes:>9d} B at {mx.op:9s}  min {mn.bytes:>9d} B at {mn.op}")
    print(f"off-chip accesses: {off.total_accesses}")
    return EXIT_OK


def cmd_size(args) -> int:
    wpath = _require(args.workload, "workload")
    w = load_workload(wpath)
    stats = footprint_stats(w)
    orgs = default_organizations(stats, banks=args.banks)
    out = OutputDir(args.out, {"workload": wpath})

    rows = [["config", "block", "capacity_bytes", "banks", "sectors", "ports", "gated"]]
    for org in orgs:
        out.write_json(f"org_{org.label}.json", org_to_dict(org))
        for b in org.blocks:
            rows.append([org.label, b.role.value, b.capacity, b.banks, b.sectors, b.ports, int(b.gated)])
    if args.format == "csv":
        out.write_csv("sizes.csv", rows)
    out.finish()

    for row in rows:
        print("  ".join(f"{v}" for v in row))
    return EXIT_OK


def _cost_source(args, w):
    """Resolve (costs, mode) from the flags; replay requires a calibration."""
    if args.mode == "replay":
        cpath = _require(args.calibration, "calibration")
        return load_calibration(cpath), {"calibration": cpath}
    if args.calibration:
        cpath = _require(args.calibration, "calibration")
        table = load_calibration(cpath)
        fit = fit_params(table, w)
        return fit.params, {"calibration": cpath}
    return DEFAULT_PARAMS, {}


def cmd_simulate(args) -> int:
    wpath = _require(args.workload, "workload")
    opath = _require(args.org, "org")
    w = load_workload(wpath)
    org = load_org(opath)
    costs, extra_inputs = _cost_source(args, w)

    wake = costs.wake_latency_cycles if isinstance(costs, CostParams) else DEFAULT_PARAMS.wake_latency_cycles
    schedule = build_schedule(w, org, wake_latency_cycles=wake)
    report = evaluate(w, org, schedule, costs, mode=args.mode)

    out = OutputDir(args.out, {"workload": wpath, "org": opath, **extra_inputs})
    out.write_json("report.json", report.to_dict())
    out.write_json("schedule.json", schedule.timeline())
    if args.format == "csv":
        out.write_csv("report.csv", report.to_csv_rows())
    out.finish()

    print(f"{org.label} ({args.mode}): on-chip {report.onchip_energy_mj:.4f} mJ, "
          f"off-chip {report.offchip_energy_mj:.4f} mJ, accel {report.accelerator_energy_mj:.4f} mJ, "
          f"total {report.grand_total_mj:.4f} mJ, area {report.area_mm2:.4f} mm2, "
          f"latency {report.latency_cycles} cycles")
    return EXIT_OK


def cmd_sweep(args) -> int:
    wpath = _require(args.workload, "workload")
    w = load_workload(wpath)
    inputs = {"workload": wpath}
    if args.sweep:
        spath = _require(args.sweep, "sweep")
        spec = load_sweep_spec(spath)
        inputs["sweep"] = spath
    else:
        spec = SweepSpec.reference()
    costs, extra_inputs = _cost_source(args, w)
    inputs.update(extra_inputs)

    result = run_sweep(w, spec, costs, mode=args.mode)

    out = OutputDir(args.out, inputs)
    out.write_csv("sweep.csv", sweep_csv_rows(result))
    out.write_csv("frontier.csv", frontier_csv_rows(result))
    out.write_json("summary.json", result.summary())
    out.finish()

    print(f"evaluated {len(result.points)} configurations ({args.mode} mode)")
    print(f"selected: {result.selected.config_id} "
          f"({result.selected.energy_mj:.4f} mJ on-chip, {result.selected.area_mm2:.4f} mm2)")
    print("frontier: " + ", ".join(p.config_id for p in result.frontier.members))
    return EXIT_OK


def cmd_compare(args) -> int:
    path_a, path_b = Path(args.report_a), Path(args.report_b)
    for p in (path_a, path_b):
        if not p.exists():
            raise WorkloadError(f"report file not found: {p}")
    a, b = load_report(path_a), load_report(path_b)
    savings = compare(a, b)

    out = OutputDir(args.out, {"report_a": path_a, "report_b": path_b})
    out.write_json("savings.json", {"a": a.org_label, "b": b.org_label, "savings_pct": savings})
    out.finish()

    print(f"savings of {b.org_label} relative to {a.org_label}:")
    for key in ("energy", "onchip_energy", "area", "onchip_area"):
        val = savings[key]
        print(f"  {key:14s} {'undefined' if val is None else f'{val:.1f}%'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capstore",
        description="On-chip memory sizing, power gating and energy/area exploration "
        "for capsule-network inference accelerators.",
    )
    parser.add_argument("--version", action="version", version=f"capstore {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--format", choices=["csv", "structured"], default="structured")

    p = sub.add_parser("analyze", help="per-operation footprint/cycle/access tables and off-chip profile")
    p.add_argument("--workload", required=True)
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("size", help="derive the six reference memory organizations")
    p.add_argument("--workload", required=True)
    p.add_argument("--banks", type=int, default=16)
    common(p)
    p.set_defaults(func=cmd_size)

    p = sub.add_parser("simulate", help="evaluate one organization end to end")
    p.add_argument("--workload", required=True)
    p.add_argument("--org", required=True)
    p.add_argument("--calibration")
    p.add_argument("--mode", choices=["replay", "model"], default="model")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="enumerate and evaluate the design space")
    p.add_argument("--workload", required=True)
    p.add_argument("--sweep", help="sweep specification (default: the six reference configurations)")
    p.add_argument("--calibration")
    p.add_argument("--mode", choices=["replay", "model"], default="model")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="savings of report B relative to report A")
    p.add_argument("report_a")
    p.add_argument("report_b")
    common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProtocolViolation as exc:
        print(f"error: protocol violation: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except InfeasibleMappingError as exc:
        print(f"error: infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (
        WorkloadError,
        SizingError,
        CalibrationError,
        MissingAnchorError,
        SweepError,
        CompareError,
        json.JSONDecodeError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
