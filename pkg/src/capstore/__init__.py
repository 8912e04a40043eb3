"""capstore: on-chip memory design exploration for capsule-network accelerators.

The package models the five-operation capsule-network inference workload,
derives candidate on-chip memory organizations (shared multi-port,
separated, hybrid, each with optional sector-level power gating), and
evaluates their energy and area either against published per-block
anchors (replay mode) or with a fitted parametric cost model (model mode).
"""

from .workload import (
    CapsNetSpec,
    ConvLayer,
    FootprintStats,
    MemComponent,
    OffChipProfile,
    ReusePolicy,
    Workload,
    WorkloadError,
    WorkloadOp,
    footprint_stats,
    generate_workload,
    load_workload,
    offchip_accesses,
    save_workload,
    serialize_workload,
)
from .memsizer import (
    BlockRole,
    DEFAULT_PG_SECTORS,
    MemBlock,
    MemoryOrg,
    OrgKind,
    SizingError,
    apply_gating,
    default_organizations,
    load_org,
    save_org,
    size_hy,
    size_sep,
    size_smp,
)
from .powergate import (
    FsmEvent,
    GateSchedule,
    GroupState,
    InfeasibleMappingError,
    ProtocolViolation,
    SectorGroup,
    build_schedule,
    simulate_schedule,
    step_fsm,
    utilization,
)
from .costmodel import (
    Anchor,
    CalibrationError,
    CalibrationTable,
    CostParams,
    DEFAULT_PARAMS,
    FitResult,
    MissingAnchorError,
    dynamic_energy,
    fit_params,
    load_calibration,
    replay_lookup,
    static_energy,
)
from .simulator import (
    CompareError,
    EvalReport,
    all_onchip_baseline_report,
    compare,
    evaluate,
    load_report,
    route_accesses,
)
from .dse import ParetoSet, SweepError, SweepSpec, enumerate_orgs, pareto, run_sweep
from .refdata import (
    load_reference_calibration,
    load_reference_workload,
    reference_calibration_path,
    reference_workload_path,
)

__version__ = "0.1.0"
