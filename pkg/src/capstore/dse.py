"""Design-space enumeration, sweep evaluation and Pareto filtering.

The space is (organization kind) x (gating on/off) x (sector counts per
block) x (bank count). At reference scale it is small enough to sweep
exhaustively; evaluations are independent and can run on a thread pool.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path

from .costmodel import CalibrationTable, CostParams
from .memsizer import (
    DEFAULT_BANKS,
    DEFAULT_PG_SECTORS,
    BlockRole,
    MemoryOrg,
    OrgKind,
    apply_gating,
    size_org,
)
from .powergate import build_schedule
from .simulator import EvalReport, evaluate
from .workload import FootprintStats, Workload, footprint_stats


class SweepError(ValueError):
    """Unusable sweep specification."""


POWERS_OF_TWO = tuple(2**i for i in range(10))  # 1 .. 512

# Which roles take a sector-count candidate when gating each kind. The
# hybrid's separated blocks default to a single always-on sector.
_GATEABLE_ROLES = {
    OrgKind.SMP: (BlockRole.SHARED,),
    OrgKind.SEP: (BlockRole.WEIGHT, BlockRole.DATA, BlockRole.ACC),
    OrgKind.HY: (BlockRole.SHARED, BlockRole.WEIGHT, BlockRole.DATA, BlockRole.ACC),
}

_KIND_ORDER = (OrgKind.SMP, OrgKind.SEP, OrgKind.HY)


@dataclass(frozen=True)
class SweepSpec:
    """What to enumerate and how to rank the results.

    ``sectors`` maps a block role to its candidate sector counts; a kind
    can override it via ``sectors_by_kind`` (needed to express different
    shared-block sector counts for SMP and HY). Ranking uses a weighted
    sum of max-normalized energy and area.
    """

    kinds: tuple[OrgKind, ...] = _KIND_ORDER
    gating: str = "both"  # off | on | both
    sectors: dict[BlockRole, tuple[int, ...]] = field(
        default_factory=lambda: {role: POWERS_OF_TWO for role in BlockRole}
    )
    sectors_by_kind: dict[OrgKind, dict[BlockRole, tuple[int, ...]]] = field(default_factory=dict)
    banks: tuple[int, ...] = (DEFAULT_BANKS,)
    energy_weight: float = 0.7
    area_weight: float = 0.3

    def __post_init__(self):
        if self.gating not in ("off", "on", "both"):
            raise SweepError(f"gating must be off|on|both, got {self.gating!r}")
        if not self.kinds or not self.banks:
            raise SweepError("empty design space: no kinds or no bank candidates")
        for role, cands in self.sectors.items():
            if not cands or any(s < 1 for s in cands):
                raise SweepError(f"{role.value}: sector candidates must be non-empty and >= 1")

    def candidates(self, kind: OrgKind, role: BlockRole) -> tuple[int, ...]:
        by_kind = self.sectors_by_kind.get(kind, {})
        return tuple(by_kind.get(role, self.sectors.get(role, (1,))))

    @classmethod
    def reference(cls) -> "SweepSpec":
        """The six-configuration reference sweep: each kind, with and
        without gating at the reference sector counts."""
        by_kind = {
            kind: {role: (s,) for role, s in DEFAULT_PG_SECTORS[kind].items()} for kind in _KIND_ORDER
        }
        return cls(sectors_by_kind=by_kind)


def enumerate_orgs(spec: SweepSpec, stats: FootprintStats) -> list[MemoryOrg]:
    """Deterministic enumeration: kind, then gating, then sectors ascending.

    Gated configurations whose sector counts differ from the reference
    defaults get the counts appended to their label, so published anchors
    are never silently reused for a different sectoring.
    """
    orgs: list[MemoryOrg] = []
    for kind in _KIND_ORDER:
        if kind not in spec.kinds:
            continue
        for banks in sorted(spec.banks):
            base = size_org(kind, stats, banks)
            if spec.gating in ("off", "both"):
                orgs.append(base)
            if spec.gating in ("on", "both"):
                roles = _GATEABLE_ROLES[kind]
                for combo in sorted(product(*(spec.candidates(kind, r) for r in roles))):
                    sectors = dict(zip(roles, combo))
                    gated = apply_gating(base, sectors)
                    defaults = DEFAULT_PG_SECTORS[kind]
                    if any(sectors.get(r, 1) != defaults.get(r, 1) for r in roles):
                        suffix = ",".join(f"{r.value}={s}" for r, s in zip(roles, combo))
                        gated = replace(gated, label=f"{gated.label}[{suffix}]")
                    orgs.append(gated)
    if not orgs:
        raise SweepError("empty design space: nothing to enumerate")
    return orgs


@dataclass(frozen=True)
class EvalPoint:
    config_id: str
    org: MemoryOrg
    area_mm2: float
    energy_mj: float  # on-chip energy
    report: EvalReport


@dataclass(frozen=True)
class ParetoSet:
    """Dominance filtering result over (area, energy), lower is better."""

    points: tuple[EvalPoint, ...]
    dominated: tuple[bool, ...]

    @property
    def members(self) -> tuple[EvalPoint, ...]:
        front = [p for p, d in zip(self.points, self.dominated) if not d]
        return tuple(sorted(front, key=lambda p: (p.area_mm2, p.energy_mj, p.config_id)))


def _dominates(a: EvalPoint, b: EvalPoint) -> bool:
    return (
        a.area_mm2 <= b.area_mm2
        and a.energy_mj <= b.energy_mj
        and (a.area_mm2 < b.area_mm2 or a.energy_mj < b.energy_mj)
    )


def pareto(points: list[EvalPoint]) -> ParetoSet:
    if not points:
        raise SweepError("pareto over an empty point set")
    dominated = tuple(
        any(_dominates(other, p) for other in points if other is not p) for p in points
    )
    return ParetoSet(points=tuple(points), dominated=dominated)


@dataclass(frozen=True)
class SweepResult:
    points: tuple[EvalPoint, ...]
    frontier: ParetoSet
    scores: dict[str, float]
    selected: EvalPoint

    def summary(self) -> dict:
        return {
            "evaluated": len(self.points),
            "selected": self.selected.config_id,
            "selected_energy_mJ": self.selected.energy_mj,
            "selected_area_mm2": self.selected.area_mm2,
            "frontier": [p.config_id for p in self.frontier.members],
            "scores": dict(sorted(self.scores.items())),
        }


def _worker_count(max_workers: int | None) -> int:
    if max_workers is None:
        env = os.environ.get("CAPSTORE_THREADS", "0")
        try:
            max_workers = int(env)
        except ValueError:
            raise SweepError(f"CAPSTORE_THREADS must be an integer, got {env!r}")
    if max_workers <= 0:
        max_workers = min(32, os.cpu_count() or 1)
    return max_workers


def run_sweep(
    w: Workload,
    spec: SweepSpec,
    costs: CostParams | CalibrationTable,
    mode: str = "model",
    wake_latency_cycles: int = 2,
    max_workers: int | None = None,
) -> SweepResult:
    """Evaluate every enumerated configuration and rank the results.

    Scores are energy_weight * E/E_max + area_weight * A/A_max; the lowest
    score wins, ties broken by enumeration order. Results do not depend on
    evaluation order or worker count.
    """
    stats = footprint_stats(w)
    orgs = enumerate_orgs(spec, stats)

    def run_one(org: MemoryOrg) -> EvalPoint:
        schedule = build_schedule(w, org, wake_latency_cycles=wake_latency_cycles)
        report = evaluate(w, org, schedule, costs, mode=mode)
        return EvalPoint(
            config_id=org.label,
            org=org,
            area_mm2=report.area_mm2,
            energy_mj=report.onchip_energy_mj,
            report=report,
        )

    workers = _worker_count(max_workers)
    if workers == 1 or len(orgs) == 1:
        points = [run_one(org) for org in orgs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(run_one, orgs))

    e_max = max(p.energy_mj for p in points) or 1.0
    a_max = max(p.area_mm2 for p in points) or 1.0
    scores = {
        p.config_id: spec.energy_weight * p.energy_mj / e_max + spec.area_weight * p.area_mm2 / a_max
        for p in points
    }
    selected = min(points, key=lambda p: scores[p.config_id])  # first minimum wins
    return SweepResult(points=tuple(points), frontier=pareto(points), scores=scores, selected=selected)


SWEEP_CSV_HEADER = [
    "config_id",
    "kind",
    "gating",
    "banks",
    "s_shared",
    "s_weight",
    "s_data",
    "s_acc",
    "area_mm2",
    "energy_mJ",
    "dominated",
]


def sweep_csv_rows(result: SweepResult) -> list[list]:
    rows = [list(SWEEP_CSV_HEADER)]
    for point, dominated in zip(result.frontier.points, result.frontier.dominated):
        org = point.org
        sectors = {b.role: b.sectors for b in org.blocks}
        rows.append(
            [
                point.config_id,
                org.kind.value,
                "on" if org.power_gated else "off",
                org.blocks[0].banks,
                sectors.get(BlockRole.SHARED, ""),
                sectors.get(BlockRole.WEIGHT, ""),
                sectors.get(BlockRole.DATA, ""),
                sectors.get(BlockRole.ACC, ""),
                point.area_mm2,
                point.energy_mj,
                int(dominated),
            ]
        )
    return rows


def frontier_csv_rows(result: SweepResult) -> list[list]:
    rows = [list(SWEEP_CSV_HEADER[:-1])]
    for point in result.frontier.members:
        org = point.org
        sectors = {b.role: b.sectors for b in org.blocks}
        rows.append(
            [
                point.config_id,
                org.kind.value,
                "on" if org.power_gated else "off",
                org.blocks[0].banks,
                sectors.get(BlockRole.SHARED, ""),
                sectors.get(BlockRole.WEIGHT, ""),
                sectors.get(BlockRole.DATA, ""),
                sectors.get(BlockRole.ACC, ""),
                point.area_mm2,
                point.energy_mj,
            ]
        )
    return rows


def sweep_spec_from_dict(doc: dict) -> SweepSpec:
    """Parse a sweep specification document (all fields optional)."""
    try:
        kwargs = {}
        if "kinds" in doc:
            kwargs["kinds"] = tuple(OrgKind(k) for k in doc["kinds"])
        if "gating" in doc:
            kwargs["gating"] = doc["gating"]
        if "sectors" in doc:
            kwargs["sectors"] = {BlockRole(r): tuple(v) for r, v in doc["sectors"].items()}
        if "sectors_by_kind" in doc:
            kwargs["sectors_by_kind"] = {
                OrgKind(k): {BlockRole(r): tuple(v) for r, v in roles.items()}
                for k, roles in doc["sectors_by_kind"].items()
            }
        if "banks" in doc:
            kwargs["banks"] = tuple(doc["banks"])
        if "energy_weight" in doc:
            kwargs["energy_weight"] = float(doc["energy_weight"])
        if "area_weight" in doc:
            kwargs["area_weight"] = float(doc["area_weight"])
        return SweepSpec(**kwargs)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SweepError):
            raise
        raise SweepError(f"malformed sweep specification: {exc}") from exc


def load_sweep_spec(path: str | Path) -> SweepSpec:
    p = Path(path)
    if not p.exists():
        raise SweepError(f"sweep specification not found: {p}")
    try:
        return sweep_spec_from_dict(json.loads(p.read_text()))
    except json.JSONDecodeError as exc:
        raise SweepError(f"sweep specification is not valid JSON: {exc}") from exc
