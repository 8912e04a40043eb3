import random

import pytest

from capstore import (
    BlockRole,
    OrgKind,
    apply_gating,
    footprint_stats,
    load_reference_calibration,
    load_reference_workload,
    load_workload,
    size_hy,
    size_sep,
    size_smp,
)
from capstore.workload import OP_ORDER


@pytest.fixture(scope="session")
def reference_workload():
    return load_reference_workload()


@pytest.fixture(scope="session")
def reference_calibration():
    return load_reference_calibration()


@pytest.fixture(scope="session")
def reference_stats(reference_workload):
    return footprint_stats(reference_workload)


def make_workload_doc(
    rng: random.Random,
    max_fp: int = 200_000,
    max_accesses: int = 500_000,
    max_cycles: int = 50_000,
    min_fp: int = 1,
) -> dict:
    """Random but schema-valid workload document."""
    return {
        "label": f"random-{rng.randrange(1 << 30)}",
        "routing_iterations": rng.randint(1, 4),
        "ops": [
            {
                "name": name,
                "footprint": {c: rng.randint(min_fp, max_fp) for c in ("weight", "data", "acc")},
                "reads": {c: rng.randint(0, max_accesses) for c in ("weight", "data", "acc")},
                "writes": {c: rng.randint(0, max_accesses) for c in ("weight", "data", "acc")},
                "cycles": rng.randint(1, max_cycles),
            }
            for name in OP_ORDER
        ],
    }


def make_random_workload(rng: random.Random, **kwargs):
    return load_workload(make_workload_doc(rng, **kwargs))


def make_random_org(rng: random.Random, stats, gated: bool | None = None, max_sectors: int = 16):
    """Random organization sized for the given stats, optionally gated."""
    kind = rng.choice([OrgKind.SMP, OrgKind.SEP, OrgKind.HY])
    banks = rng.choice([4, 8, 16])
    sizer = {OrgKind.SMP: size_smp, OrgKind.SEP: size_sep, OrgKind.HY: size_hy}[kind]
    org = sizer(stats, banks)
    if gated is None:
        gated = rng.random() < 0.7
    if not gated:
        return org
    gateable = {
        OrgKind.SMP: (BlockRole.SHARED,),
        OrgKind.SEP: (BlockRole.WEIGHT, BlockRole.DATA, BlockRole.ACC),
        OrgKind.HY: (BlockRole.SHARED, BlockRole.WEIGHT, BlockRole.DATA, BlockRole.ACC),
    }[kind]
    sectors = {role: rng.choice([1, 2, 4, 8, max_sectors]) for role in gateable}
    return apply_gating(org, sectors)
