"""Sizing of candidate on-chip memory organizations.

Three organizations are derived from workload footprint statistics:

* SMP: one shared 3-port memory sized for the worst-case total footprint.
* SEP: one single-port memory per component, each sized for that
  component's worst case.
* HY: per-component memories sized for the component minima (the bytes a
  component always needs), plus a shared 3-port memory covering the
  difference between the worst-case total and the sum of those minima.

Each memory block is split into N banks and S equal sectors per bank;
power-gating is applied per sector group (same sector index across all
banks, one sleep transistor per group).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .workload import COMPONENTS, FootprintStats, MemComponent

DEFAULT_BANKS = 16  # one bank per systolic-array lane


class OrgKind(Enum):
    SMP = "SMP"
    SEP = "SEP"
    HY = "HY"


class BlockRole(Enum):
    SHARED = "shared"
    WEIGHT = "weight"
    DATA = "data"
    ACC = "acc"


COMPONENT_ROLE = {
    MemComponent.WEIGHT: BlockRole.WEIGHT,
    MemComponent.DATA: BlockRole.DATA,
    MemComponent.ACC: BlockRole.ACC,
}


class SizingError(ValueError):
    """Sizing rules cannot be applied to the given statistics."""


@dataclass(frozen=True)
class MemBlock:
    """One physical memory block: N banks x S sectors per bank.

    The sector size is the ceiling of capacity over N*S, so the last
    sector group may be logically short. Ungated blocks always have S=1.
    """

    role: BlockRole
    capacity: int
    banks: int = DEFAULT_BANKS
    sectors: int = 1
    ports: int = 1
    gated: bool = False

    def __post_init__(self):
        if self.capacity < 0:
            raise SizingError(f"{self.role.value}: negative capacity")
        if self.banks < 1:
            raise SizingError(f"{self.role.value}: banks must be >= 1")
        if self.sectors < 1:
            raise SizingError(f"{self.role.value}: sectors must be >= 1")
        if self.ports < 1:
            raise SizingError(f"{self.role.value}: ports must be >= 1")
        if not self.gated and self.sectors != 1:
            raise SizingError(f"{self.role.value}: ungated blocks have exactly one sector")

    @property
    def sector_bytes(self) -> int:
        return math.ceil(self.capacity / (self.banks * self.sectors))

    @property
    def group_bytes(self) -> int:
        """Bytes controlled by one sleep transistor (one sector per bank)."""
        return self.banks * self.sector_bytes


@dataclass(frozen=True)
class MemoryOrg:
    kind: OrgKind
    blocks: tuple[MemBlock, ...]
    label: str

    def __post_init__(self):
        roles = [b.role for b in self.blocks]
        if len(set(roles)) != len(roles):
            raise SizingError("duplicate block roles")
        expected = {
            OrgKind.SMP: {BlockRole.SHARED},
            OrgKind.SEP: {BlockRole.WEIGHT, BlockRole.DATA, BlockRole.ACC},
            OrgKind.HY: {BlockRole.SHARED, BlockRole.WEIGHT, BlockRole.DATA, BlockRole.ACC},
        }[self.kind]
        if set(roles) != expected:
            raise SizingError(f"{self.kind.value} org requires blocks {sorted(r.value for r in expected)}")
        for b in self.blocks:
            want_ports = 3 if b.role is BlockRole.SHARED else 1
            if b.ports != want_ports:
                raise SizingError(f"{b.role.value}: expected {want_ports} ports, got {b.ports}")

    @property
    def power_gated(self) -> bool:
        return any(b.gated for b in self.blocks)

    def block(self, role: BlockRole) -> MemBlock:
        for b in self.blocks:
            if b.role is role:
                return b
        raise KeyError(role)

    def has(self, role: BlockRole) -> bool:
        return any(b.role is role for b in self.blocks)

    @property
    def total_capacity(self) -> int:
        return sum(b.capacity for b in self.blocks)

    @property
    def total_area_input(self):  # pragma: no cover - convenience alias
        return self.total_capacity


def size_smp(stats: FootprintStats, banks: int = DEFAULT_BANKS) -> MemoryOrg:
    """Shared multi-port memory sized for the worst-case total footprint."""
    if stats.max_total <= 0:
        raise SizingError("cannot size an organization for an all-zero workload")
    block = MemBlock(role=BlockRole.SHARED, capacity=stats.max_total, banks=banks, ports=3)
    return MemoryOrg(kind=OrgKind.SMP, blocks=(block,), label="SMP")


def size_sep(stats: FootprintStats, banks: int = DEFAULT_BANKS) -> MemoryOrg:
    """Per-component single-port memories sized for per-component maxima."""
    blocks = []
    for comp in COMPONENTS:
        cap = stats.component_max[comp].bytes
        if cap <= 0:
            raise SizingError(f"component {COMPONENT_ROLE[comp].value} never has a footprint; cannot size it")
        blocks.append(MemBlock(role=COMPONENT_ROLE[comp], capacity=cap, banks=banks))
    return MemoryOrg(kind=OrgKind.SEP, blocks=tuple(blocks), label="SEP")


def size_hy(stats: FootprintStats, banks: int = DEFAULT_BANKS) -> MemoryOrg:
    """Separated blocks at component minima plus a shared overflow block.

    The shared capacity is the worst-case total minus the sum of minima,
    which keeps HY total capacity exactly equal to SMP capacity.
    """
    if stats.max_total <= 0:
        raise SizingError("cannot size an organization for an all-zero workload")
    shared_cap = stats.max_total - stats.sum_component_min()
    assert shared_cap >= 0, "total max below sum of component minima"
    blocks = [MemBlock(role=BlockRole.SHARED, capacity=shared_cap, banks=banks, ports=3)]
    for comp in COMPONENTS:
        blocks.append(
            MemBlock(role=COMPONENT_ROLE[comp], capacity=stats.component_min[comp].bytes, banks=banks)
        )
    return MemoryOrg(kind=OrgKind.HY, blocks=tuple(blocks), label="HY")


def apply_gating(org: MemoryOrg, sectors: dict[BlockRole, int]) -> MemoryOrg:
    """Enable sector-level power-gating with the given per-block S.

    Blocks assigned S=1 stay ungated (a single full-block sector has no
    independently gateable slice). Capacities never change.
    """
    if org.power_gated:
        raise SizingError(f"{org.label} is already power-gated")
    for role, s in sectors.items():
        if s < 1:
            raise SizingError(f"{role.value}: sector count must be >= 1, got {s}")
    blocks = []
    for b in org.blocks:
        s = sectors.get(b.role, 1)
        blocks.append(replace(b, sectors=s, gated=s > 1))
    return MemoryOrg(kind=org.kind, blocks=tuple(blocks), label=f"PG-{org.label}")


# Reference sector counts for the gated variants of each organization.
# The hybrid organization gates only its shared block; its small separated
# blocks stay always-on.
DEFAULT_PG_SECTORS: dict[OrgKind, dict[BlockRole, int]] = {
    OrgKind.SMP: {BlockRole.SHARED: 256},
    OrgKind.SEP: {BlockRole.WEIGHT: 64, BlockRole.DATA: 16, BlockRole.ACC: 128},
    OrgKind.HY: {BlockRole.SHARED: 128, BlockRole.WEIGHT: 1, BlockRole.DATA: 1, BlockRole.ACC: 1},
}

_SIZERS = {OrgKind.SMP: size_smp, OrgKind.SEP: size_sep, OrgKind.HY: size_hy}


def size_org(kind: OrgKind, stats: FootprintStats, banks: int = DEFAULT_BANKS) -> MemoryOrg:
    return _SIZERS[kind](stats, banks)


def default_organizations(stats: FootprintStats, banks: int = DEFAULT_BANKS) -> list[MemoryOrg]:
    """The six reference configurations: each kind, ungated then gated."""
    orgs = []
    for kind in (OrgKind.SMP, OrgKind.SEP, OrgKind.HY):
        base = size_org(kind, stats, banks)
        orgs.append(base)
        orgs.append(apply_gating(base, DEFAULT_PG_SECTORS[kind]))
    return orgs


def org_to_dict(org: MemoryOrg) -> dict:
    return {
        "kind": org.kind.value,
        "label": org.label,
        "power_gated": org.power_gated,
        "blocks": [
            {
                "role": b.role.value,
                "capacity": b.capacity,
                "banks": b.banks,
                "sectors": b.sectors,
                "ports": b.ports,
                "gated": b.gated,
            }
            for b in org.blocks
        ],
    }


def org_from_dict(doc: dict) -> MemoryOrg:
    try:
        kind = OrgKind(doc["kind"])
        blocks = tuple(
            MemBlock(
                role=BlockRole(raw["role"]),
                capacity=raw["capacity"],
                banks=raw.get("banks", DEFAULT_BANKS),
                sectors=raw.get("sectors", 1),
                ports=raw.get("ports", 1),
                gated=raw.get("gated", False),
            )
            for raw in doc["blocks"]
        )
        return MemoryOrg(kind=kind, blocks=blocks, label=doc.get("label", kind.value))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SizingError):
            raise
        raise SizingError(f"malformed organization document: {exc}") from exc


def save_org(org: MemoryOrg, path: str | Path) -> None:
    Path(path).write_text(json.dumps(org_to_dict(org), indent=2, sort_keys=True) + "\n")


def load_org(path: str | Path) -> MemoryOrg:
    p = Path(path)
    if not p.exists():
        raise SizingError(f"organization file not found: {p}")
    try:
        return org_from_dict(json.loads(p.read_text()))
    except json.JSONDecodeError as exc:
        raise SizingError(f"organization file is not valid JSON: {exc}") from exc
