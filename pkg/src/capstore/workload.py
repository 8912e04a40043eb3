"""Capsule-network inference workload model.

A workload is the fixed five-operation sequence of a capsule network
inference (two convolutions, the capsule fully-connected stage, and the
two routing operations that repeat once per routing iteration), annotated
with the on-chip memory footprint, read/write counts and cycle count of
each operation, split across the three memory components of the
accelerator (weight memory, data memory, accumulators).

Workloads come from two sources: a profile file (the source of truth,
see ``load_workload``) or the analytic generator (``generate_workload``),
which derives counts from network dimensions under documented dataflow
assumptions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path


class MemComponent(Enum):
    """The three on-chip memory components of the accelerator."""

    WEIGHT = "weight"
    DATA = "data"
    ACC = "acc"


COMPONENTS = (MemComponent.WEIGHT, MemComponent.DATA, MemComponent.ACC)

# Canonical operation order of one inference pass. The last two operations
# repeat once per routing iteration; the first three run exactly once.
OP_ORDER = ("C1", "PC", "CC-FC", "SumSquash", "UpdateSum")
FEEDFORWARD_OPS = ("C1", "PC", "CC-FC")
ROUTING_OPS = ("SumSquash", "UpdateSum")


class WorkloadError(ValueError):
    """Malformed or inconsistent workload document."""


def _component_map(raw, *, op: str, kind: str) -> dict[MemComponent, int]:
    if not isinstance(raw, dict):
        raise WorkloadError(f"op {op}: {kind} must be a mapping, got {type(raw).__name__}")
    out: dict[MemComponent, int] = {}
    for comp in COMPONENTS:
        if comp.value not in raw:
            raise WorkloadError(f"op {op}: {kind} missing component '{comp.value}'")
        val = raw[comp.value]
        if not isinstance(val, int) or isinstance(val, bool):
            raise WorkloadError(f"op {op}: {kind}.{comp.value} must be an integer")
        if val < 0:
            raise WorkloadError(f"op {op}: {kind}.{comp.value} is negative ({val})")
        out[comp] = val
    unknown = set(raw) - {c.value for c in COMPONENTS}
    if unknown:
        raise WorkloadError(f"op {op}: {kind} has unknown components {sorted(unknown)}")
    return out


@dataclass(frozen=True)
class WorkloadOp:
    """One inference operation with its memory demand.

    Footprints are bytes that must be resident on-chip while the operation
    runs; reads/writes are on-chip access counts per execution; ``repeat``
    is 1 for feed-forward operations and equals the routing iteration
    count for the two routing operations.
    """

    name: str
    footprint: dict[MemComponent, int]
    reads: dict[MemComponent, int]
    writes: dict[MemComponent, int]
    cycles: int
    repeat: int = 1

    @property
    def total_footprint(self) -> int:
        return sum(self.footprint.values())

    def total_accesses(self) -> int:
        return sum(self.reads.values()) + sum(self.writes.values())


@dataclass(frozen=True)
class Workload:
    """Ordered, validated operation sequence for one inference."""

    ops: tuple[WorkloadOp, ...]
    routing_iterations: int = 3
    label: str = ""

    def op(self, name: str) -> WorkloadOp:
        for op in self.ops:
            if op.name == name:
                return op
        raise KeyError(name)

    def exec_sequence(self) -> tuple[WorkloadOp, ...]:
        """Operations in execution order, routing iterations unrolled.

        The two routing operations alternate once per iteration:
        C1, PC, CC-FC, (SumSquash, UpdateSum) x routing_iterations.
        """
        head = [self.op(n) for n in FEEDFORWARD_OPS]
        tail = [self.op(n) for n in ROUTING_OPS]
        return tuple(head + tail * self.routing_iterations)

    @property
    def total_cycles(self) -> int:
        return sum(op.cycles * op.repeat for op in self.ops)


@dataclass(frozen=True)
class OffChipProfile:
    """Per-operation off-chip access counts derived from on-chip traffic."""

    reads: dict[str, int]
    writes: dict[str, int]

    @property
    def total_accesses(self) -> int:
        return sum(self.reads.values()) + sum(self.writes.values())


def _validate(ops: list[WorkloadOp], routing_iterations: int, label: str) -> Workload:
    if not isinstance(routing_iterations, int) or routing_iterations < 1:
        raise WorkloadError(f"routing_iterations must be a positive integer, got {routing_iterations!r}")
    by_name = {op.name: op for op in ops}
    if len(by_name) != len(ops):
        dupes = sorted({op.name for op in ops if sum(o.name == op.name for o in ops) > 1})
        raise WorkloadError(f"duplicate ops {dupes}")
    for name in OP_ORDER:
        if name not in by_name:
            raise WorkloadError(f"missing op '{name}'")
    unknown = set(by_name) - set(OP_ORDER)
    if unknown:
        raise WorkloadError(f"unknown op name(s) {sorted(unknown)}")
    normalized = []
    for name in OP_ORDER:
        op = by_name[name]
        repeat = routing_iterations if name in ROUTING_OPS else 1
        if op.cycles < 0:
            raise WorkloadError(f"op {name}: cycles is negative")
        normalized.append(
            WorkloadOp(
                name=name,
                footprint=dict(op.footprint),
                reads=dict(op.reads),
                writes=dict(op.writes),
                cycles=op.cycles,
                repeat=repeat,
            )
        )
    return Workload(ops=tuple(normalized), routing_iterations=routing_iterations, label=label)


def load_workload(source: str | Path | dict) -> Workload:
    """Load and validate a workload profile document.

    ``source`` may be a path to a JSON profile file, a JSON string, or an
    already-parsed mapping. Operations are reordered into canonical order
    and the ``repeat`` fields are populated from ``routing_iterations``.
    """
    if isinstance(source, (str, Path)):
        text = None
        if isinstance(source, str) and source.lstrip().startswith("{"):
            text = source
        else:
            path = Path(source)
            if not path.exists():
                raise WorkloadError(f"workload file not found: {path}")
            text = path.read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise WorkloadError(f"workload document is not valid JSON: {exc}") from exc
    elif isinstance(source, dict):
        doc = source
    else:
        raise WorkloadError(f"unsupported workload source type {type(source).__name__}")

    if not isinstance(doc, dict):
        raise WorkloadError("workload document must be a mapping")
    raw_ops = doc.get("ops")
    if not isinstance(raw_ops, list) or not raw_ops:
        raise WorkloadError("no operations")
    routing = doc.get("routing_iterations", 3)
    label = doc.get("label", "")

    ops = []
    for raw in raw_ops:
        if not isinstance(raw, dict) or "name" not in raw:
            raise WorkloadError("every op needs a 'name' field")
        name = raw["name"]
        if name not in OP_ORDER:
            raise WorkloadError(f"unknown op name '{name}'")
        cycles = raw.get("cycles")
        if not isinstance(cycles, int) or isinstance(cycles, bool) or cycles < 0:
            raise WorkloadError(f"op {name}: cycles must be a non-negative integer")
        ops.append(
            WorkloadOp(
                name=name,
                footprint=_component_map(raw.get("footprint"), op=name, kind="footprint"),
                reads=_component_map(raw.get("reads"), op=name, kind="reads"),
                writes=_component_map(raw.get("writes"), op=name, kind="writes"),
                cycles=cycles,
            )
        )
    return _validate(ops, routing, label)


def serialize_workload(w: Workload) -> dict:
    """Invert ``load_workload``; ``repeat`` is derived, so it is not stored."""
    return {
        "label": w.label,
        "routing_iterations": w.routing_iterations,
        "ops": [
            {
                "name": op.name,
                "footprint": {c.value: op.footprint[c] for c in COMPONENTS},
                "reads": {c.value: op.reads[c] for c in COMPONENTS},
                "writes": {c.value: op.writes[c] for c in COMPONENTS},
                "cycles": op.cycles,
            }
            for op in w.ops
        ],
    }


def save_workload(w: Workload, path: str | Path) -> None:
    Path(path).write_text(json.dumps(serialize_workload(w), indent=2, sort_keys=True) + "\n")


def offchip_accesses(w: Workload) -> OffChipProfile:
    """Derive off-chip access counts from on-chip traffic.

    Every byte written into the weight or data memory during one of the
    first three operations was fetched from off-chip; the data the next
    operation reads from data memory was spilled off-chip by its
    predecessor. The routing operations keep everything on-chip, so both
    counts are zero for them, and the capsule FC stage has no successor
    consuming through off-chip.
    """
    reads: dict[str, int] = {}
    writes: dict[str, int] = {}
    for i, name in enumerate(OP_ORDER):
        op = w.op(name)
        if name in ROUTING_OPS:
            reads[name] = 0
            writes[name] = 0
            continue
        reads[name] = op.writes[MemComponent.WEIGHT] + op.writes[MemComponent.DATA]
        if name == FEEDFORWARD_OPS[-1]:
            writes[name] = 0
        else:
            successor = w.op(OP_ORDER[i + 1])
            writes[name] = successor.reads[MemComponent.DATA]
    return OffChipProfile(reads=reads, writes=writes)


@dataclass(frozen=True)
class ComponentExtreme:
    bytes: int
    op: str


@dataclass(frozen=True)
class FootprintStats:
    """Footprint extremes over the operation sequence.

    Ties break toward the earliest operation in canonical order.
    """

    max_total: int
    max_total_op: str
    component_max: dict[MemComponent, ComponentExtreme]
    component_min: dict[MemComponent, ComponentExtreme]

    def sum_component_min(self) -> int:
        return sum(e.bytes for e in self.component_min.values())

    def sum_component_max(self) -> int:
        return sum(e.bytes for e in self.component_max.values())


def footprint_stats(w: Workload) -> FootprintStats:
    if not w.ops:
        raise WorkloadError("empty workload")
    max_total = -1
    max_total_op = ""
    cmax: dict[MemComponent, ComponentExtreme] = {}
    cmin: dict[MemComponent, ComponentExtreme] = {}
    for op in w.ops:  # canonical order makes strict comparisons the tie-break
        if op.total_footprint > max_total:
            max_total = op.total_footprint
            max_total_op = op.name
        for comp in COMPONENTS:
            b = op.footprint[comp]
            if comp not in cmax or b > cmax[comp].bytes:
                cmax[comp] = ComponentExtreme(b, op.name)
            if comp not in cmin or b < cmin[comp].bytes:
                cmin[comp] = ComponentExtreme(b, op.name)
    return FootprintStats(
        max_total=max_total,
        max_total_op=max_total_op,
        component_max=cmax,
        component_min=cmin,
    )


# --- analytic generator ----------------------------------------------------


@dataclass(frozen=True)
class ConvLayer:
    kernel: int
    stride: int
    out_channels: int


@dataclass(frozen=True)
class CapsNetSpec:
    """Network and array dimensions the analytic generator works from."""

    input_hw: tuple[int, int]
    input_channels: int
    conv1: ConvLayer
    primary_conv: ConvLayer
    primary_caps_dim: int
    primary_caps_count: int
    class_caps_in: int
    class_caps_out: int
    class_caps_in_dim: int
    class_caps_out_dim: int
    word_bytes: int = 1
    array_rows: int = 16
    array_cols: int = 16

    def __post_init__(self):
        dims = [
            *self.input_hw,
            self.input_channels,
            self.conv1.kernel,
            self.conv1.stride,
            self.conv1.out_channels,
            self.primary_conv.kernel,
            self.primary_conv.stride,
            self.primary_conv.out_channels,
            self.primary_caps_dim,
            self.primary_caps_count,
            self.class_caps_in,
            self.class_caps_out,
            self.class_caps_in_dim,
            self.class_caps_out_dim,
            self.word_bytes,
            self.array_rows,
            self.array_cols,
        ]
        if any((not isinstance(d, int)) or d < 1 for d in dims):
            raise WorkloadError("all network/array dimensions must be positive integers")

    @classmethod
    def mnist(cls) -> "CapsNetSpec":
        """The standard MNIST capsule network (28x28x1 input)."""
        return cls(
            input_hw=(28, 28),
            input_channels=1,
            conv1=ConvLayer(kernel=9, stride=1, out_channels=256),
            primary_conv=ConvLayer(kernel=9, stride=2, out_channels=256),
            primary_caps_dim=8,
            primary_caps_count=1152,
            class_caps_in=1152,
            class_caps_out=10,
            class_caps_in_dim=8,
            class_caps_out_dim=16,
        )


@dataclass(frozen=True)
class ReusePolicy:
    """Dataflow assumptions the generator bakes into its closed forms.

    weight_reuse_conv: keep only one column-tile of filters resident during
    convolutions (streamed from off-chip) instead of the full filter set.
    data_reuse_fc: keep all input capsules resident during the capsule FC
    stage and read each exactly once, instead of streaming a row tile and
    re-reading per output capsule.
    """

    weight_reuse_conv: bool = True
    data_reuse_fc: bool = True


def _conv_shape(h: int, w: int, layer: ConvLayer) -> tuple[int, int]:
    if layer.kernel > h or layer.kernel > w:
        raise WorkloadError(f"kernel {layer.kernel} larger than input {h}x{w}")
    return (h - layer.kernel) // layer.stride + 1, (w - layer.kernel) // layer.stride + 1


def _conv_op(name, h, w, in_ch, layer, spec, policy):
    oh, ow = _conv_shape(h, w, layer)
    in_elems = h * w * in_ch
    out_elems = oh * ow * layer.out_channels
    weight_elems = layer.kernel * layer.kernel * in_ch * layer.out_channels
    macs = out_elems * layer.kernel * layer.kernel * in_ch
    wb = spec.word_bytes
    if policy.weight_reuse_conv:
        weight_fp = layer.kernel * layer.kernel * in_ch * min(layer.out_channels, spec.array_cols) * wb
        weight_reads = math.ceil(macs / spec.array_rows)
    else:
        weight_fp = weight_elems * wb
        weight_reads = macs
    op = WorkloadOp(
        name=name,
        footprint={
            MemComponent.WEIGHT: weight_fp,
            MemComponent.DATA: in_elems * wb,
            MemComponent.ACC: out_elems * wb,
        },
        reads={
            MemComponent.WEIGHT: weight_reads,
            MemComponent.DATA: math.ceil(macs / spec.array_cols),
            MemComponent.ACC: math.ceil(macs / spec.array_rows),
        },
        writes={
            MemComponent.WEIGHT: weight_elems,
            MemComponent.DATA: in_elems,
            MemComponent.ACC: math.ceil(macs / spec.array_rows),
        },
        cycles=math.ceil(macs / (spec.array_rows * spec.array_cols)) + spec.array_rows + spec.array_cols,
    )
    return op, oh, ow


def generate_workload(
    spec: CapsNetSpec,
    policy: ReusePolicy = ReusePolicy(),
    routing_iterations: int = 3,
) -> Workload:
    """Derive a workload from network dimensions under a reuse policy.

    This is an estimation helper, not the source of truth: per-operation
    values follow the closed forms documented in the emitted label
    (conv output = (in - kernel)/stride + 1; footprints are live bytes
    under the declared policy; cycle count is MACs over the array plus one
    fill/drain). Measured profiles loaded with ``load_workload`` take
    precedence when reproducing reference numbers.
    """
    rows, cols = spec.array_rows, spec.array_cols
    wb = spec.word_bytes

    c1, h1, w1 = _conv_op("C1", *spec.input_hw, spec.input_channels, spec.conv1, spec, policy)
    pc, _, _ = _conv_op("PC", h1, w1, spec.conv1.out_channels, spec.primary_conv, spec, policy)

    n_in, n_out = spec.class_caps_in, spec.class_caps_out
    d_in, d_out = spec.class_caps_in_dim, spec.class_caps_out_dim
    fc_macs = n_in * n_out * d_in * d_out
    fc_weight_elems = fc_macs  # one scalar weight per (in cap, out cap, in dim, out dim) pair
    if policy.data_reuse_fc:
        fc_data_fp = n_in * d_in * wb
        fc_data_reads = n_in * d_in
    else:
        fc_data_fp = d_in * min(n_in, rows) * wb
        fc_data_reads = fc_macs
    ccfc = WorkloadOp(
        name="CC-FC",
        footprint={
            MemComponent.WEIGHT: d_in * d_out * min(n_out, cols) * min(n_in, rows) * wb,
            MemComponent.DATA: fc_data_fp,
            MemComponent.ACC: n_out * d_out * wb,
        },
        reads={
            MemComponent.WEIGHT: math.ceil(fc_macs / rows),
            MemComponent.DATA: fc_data_reads,
            MemComponent.ACC: math.ceil(fc_macs / rows),
        },
        writes={
            MemComponent.WEIGHT: fc_weight_elems,
            MemComponent.DATA: n_in * d_in,
            MemComponent.ACC: math.ceil(fc_macs / rows),
        },
        cycles=math.ceil(fc_macs / (rows * cols)) + rows + cols,
    )

    # Routing: coupling coefficients live in weight memory and are produced
    # on-chip; prediction vectors live in data memory; partial sums in the
    # accumulators. One squash/update pass per iteration.
    route_macs = n_in * n_out * d_out
    couplings = n_in * n_out
    pred_elems = n_in * n_out * d_out
    out_elems = n_out * d_out
    sum_squash = WorkloadOp(
        name="SumSquash",
        footprint={
            MemComponent.WEIGHT: couplings * wb,
            MemComponent.DATA: pred_elems * wb,
            MemComponent.ACC: out_elems * wb,
        },
        reads={
            MemComponent.WEIGHT: couplings,
            MemComponent.DATA: pred_elems,
            MemComponent.ACC: math.ceil(route_macs / rows),
        },
        writes={
            MemComponent.WEIGHT: 0,
            MemComponent.DATA: out_elems,
            MemComponent.ACC: math.ceil(route_macs / rows),
        },
        cycles=math.ceil(route_macs / (rows * cols)) + rows + cols,
    )
    update_sum = WorkloadOp(
        name="UpdateSum",
        footprint={
            MemComponent.WEIGHT: couplings * wb,
            MemComponent.DATA: pred_elems * wb,
            MemComponent.ACC: out_elems * wb,
        },
        reads={
            MemComponent.WEIGHT: couplings,
            MemComponent.DATA: pred_elems + out_elems,
            MemComponent.ACC: math.ceil(route_macs / rows),
        },
        writes={
            MemComponent.WEIGHT: couplings,
            MemComponent.DATA: 0,
            MemComponent.ACC: math.ceil(route_macs / rows),
        },
        cycles=math.ceil(route_macs / (rows * cols)) + rows + cols,
    )

    label = (
        f"generated: array={rows}x{cols} word={wb}B "
        f"weight_reuse_conv={policy.weight_reuse_conv} data_reuse_fc={policy.data_reuse_fc}; "
        "assumes conv_out=(in-k)/stride+1, stream-buffer fills (each input byte written once), "
        "in-array operand reuse of one array dimension, partial-sum traffic = MACs/rows, "
        "cycles = ceil(MACs/PEs) + rows + cols fill/drain"
    )
    return _validate([c1, pc, ccfc, sum_squash, update_sum], routing_iterations, label)
