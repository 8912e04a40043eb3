import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capstore import (
    CapsNetSpec,
    ConvLayer,
    MemComponent,
    ReusePolicy,
    WorkloadError,
    footprint_stats,
    generate_workload,
    load_workload,
    offchip_accesses,
    serialize_workload,
)
from capstore.workload import OP_ORDER, ROUTING_OPS

from conftest import make_random_workload, make_workload_doc

W, D, A = MemComponent.WEIGHT, MemComponent.DATA, MemComponent.ACC


def simple_doc(**overrides):
    doc = make_workload_doc(random.Random(7))
    doc.update(overrides)
    return doc


class TestLoad:
    def test_routing_repeat_populated(self):
        w = load_workload(simple_doc(routing_iterations=3))
        assert w.op("SumSquash").repeat == 3
        assert w.op("UpdateSum").repeat == 3
        assert all(w.op(n).repeat == 1 for n in ("C1", "PC", "CC-FC"))

    def test_single_iteration_routing(self):
        w = load_workload(simple_doc(routing_iterations=1))
        assert w.op("SumSquash").repeat == 1
        assert w.op("UpdateSum").repeat == 1

    def test_missing_op_named(self):
        doc = simple_doc()
        doc["ops"] = [op for op in doc["ops"] if op["name"] != "PC"]
        with pytest.raises(WorkloadError, match="PC"):
            load_workload(doc)

    def test_unknown_op_rejected(self):
        doc = simple_doc()
        doc["ops"][0]["name"] = "Softmax"
        with pytest.raises(WorkloadError, match="Softmax"):
            load_workload(doc)

    def test_negative_count_rejected_naming_field_and_op(self):
        doc = simple_doc()
        doc["ops"][1]["reads"]["data"] = -5
        with pytest.raises(WorkloadError, match=r"PC.*reads\.data"):
            load_workload(doc)

    def test_op_order_normalized(self):
        doc = simple_doc()
        doc["ops"] = list(reversed(doc["ops"]))
        w = load_workload(doc)
        assert tuple(op.name for op in w.ops) == OP_ORDER

    def test_empty_ops_rejected(self):
        with pytest.raises(WorkloadError, match="no operations"):
            load_workload({"ops": []})

    def test_bad_routing_iterations(self):
        with pytest.raises(WorkloadError, match="routing_iterations"):
            load_workload(simple_doc(routing_iterations=0))

    @given(st.integers(0, 2**32))
    @settings(max_examples=50)
    def test_round_trip_identity(self, seed):
        w = make_random_workload(random.Random(seed))
        again = load_workload(json.dumps(serialize_workload(w)))
        assert again == w


class TestOffchip:
    def test_direct_read_rule(self):
        doc = simple_doc()
        doc["ops"][0]["writes"] = {"weight": 100, "data": 200, "acc": 999}
        off = offchip_accesses(load_workload(doc))
        assert off.reads["C1"] == 300

    def test_direct_write_rule(self):
        doc = simple_doc()
        doc["ops"][1]["reads"] = {"weight": 7, "data": 500, "acc": 9}
        off = offchip_accesses(load_workload(doc))
        assert off.writes["C1"] == 500

    def test_routing_ops_never_touch_offchip(self):
        off = offchip_accesses(make_random_workload(random.Random(3)))
        for name in ROUTING_OPS:
            assert off.reads[name] == 0
            assert off.writes[name] == 0

    def test_last_feedforward_op_writes_nothing(self):
        off = offchip_accesses(make_random_workload(random.Random(4)))
        assert off.writes["CC-FC"] == 0

    @given(st.integers(0, 2**32), st.integers(1, 9))
    @settings(max_examples=30)
    def test_linearity_in_write_counts(self, seed, k):
        doc = make_workload_doc(random.Random(seed))
        base = offchip_accesses(load_workload(doc))
        for op in doc["ops"]:
            op["writes"] = {c: v * k for c, v in op["writes"].items()}
        scaled = offchip_accesses(load_workload(doc))
        assert all(scaled.reads[n] == k * base.reads[n] for n in OP_ORDER)


class TestFootprintStats:
    def test_reference_extremes(self, reference_workload, reference_stats):
        stats = reference_stats
        assert (stats.max_total, stats.max_total_op) == (471040, "PC")
        assert {c: e.bytes for c, e in stats.component_max.items()} == {W: 110592, D: 25600, A: 460800}
        assert {c: e.bytes for c, e in stats.component_min.items()} == {W: 1024, D: 1024, A: 204800}

    def test_tie_break_earliest_canonical_op(self):
        doc = simple_doc()
        for op in doc["ops"]:
            op["footprint"] = {"weight": 10, "data": 10, "acc": 10}
        stats = footprint_stats(load_workload(doc))
        assert stats.max_total_op == "C1"
        assert all(e.op == "C1" for e in stats.component_max.values())
        assert all(e.op == "C1" for e in stats.component_min.values())

    @given(st.integers(0, 2**32))
    @settings(max_examples=50)
    def test_max_total_bounded_by_component_maxima(self, seed):
        w = make_random_workload(random.Random(seed), min_fp=0)
        stats = footprint_stats(w)
        assert stats.max_total <= stats.sum_component_max()
        for comp in (W, D, A):
            assert stats.component_min[comp].bytes <= stats.component_max[comp].bytes


class TestGenerator:
    def test_mnist_max_total_is_primary_caps(self):
        w = generate_workload(CapsNetSpec.mnist(), ReusePolicy(weight_reuse_conv=True))
        assert footprint_stats(w).max_total_op == "PC"

    def test_mnist_fc_data_below_primary_caps_data(self):
        w = generate_workload(CapsNetSpec.mnist())
        assert w.op("CC-FC").footprint[D] < w.op("PC").footprint[D]

    def test_unit_network(self):
        spec = CapsNetSpec(
            input_hw=(1, 1),
            input_channels=1,
            conv1=ConvLayer(1, 1, 1),
            primary_conv=ConvLayer(1, 1, 1),
            primary_caps_dim=1,
            primary_caps_count=1,
            class_caps_in=1,
            class_caps_out=1,
            class_caps_in_dim=1,
            class_caps_out_dim=1,
        )
        w = generate_workload(spec)
        for op in w.ops:
            assert all(op.footprint[c] == spec.word_bytes for c in (W, D, A))
        for name in ("C1", "PC"):
            op = w.op(name)
            assert all(op.reads[c] == 1 for c in (W, D, A))
            assert all(op.writes[c] == 1 for c in (W, D, A))

    def test_kernel_larger_than_input_rejected(self):
        spec = CapsNetSpec(
            input_hw=(4, 4),
            input_channels=1,
            conv1=ConvLayer(9, 1, 8),
            primary_conv=ConvLayer(1, 1, 8),
            primary_caps_dim=1,
            primary_caps_count=1,
            class_caps_in=1,
            class_caps_out=1,
            class_caps_in_dim=1,
            class_caps_out_dim=1,
        )
        with pytest.raises(WorkloadError, match="kernel"):
            generate_workload(spec)

    def test_label_documents_assumptions(self):
        w = generate_workload(CapsNetSpec.mnist())
        assert "weight_reuse_conv=True" in w.label
        assert "conv_out" in w.label

    @given(
        st.integers(4, 40),
        st.integers(4, 40),
        st.integers(1, 8),
        st.integers(1, 4),
        st.integers(1, 3),
        st.integers(1, 64),
        st.integers(1, 64),
        st.integers(1, 16),
        st.integers(1, 16),
        st.booleans(),
        st.booleans(),
    )
    @settings(max_examples=60)
    def test_generated_workloads_are_valid(self, h, wdt, in_ch, kern, stride, caps_in, caps_out, d_in, d_out, wr, dr):
        kern = min(kern, h, wdt)
        spec = CapsNetSpec(
            input_hw=(h, wdt),
            input_channels=in_ch,
            conv1=ConvLayer(kern, stride, 4),
            primary_conv=ConvLayer(1, 1, 4),
            primary_caps_dim=2,
            primary_caps_count=caps_in,
            class_caps_in=caps_in,
            class_caps_out=caps_out,
            class_caps_in_dim=d_in,
            class_caps_out_dim=d_out,
        )
        w = generate_workload(spec, ReusePolicy(weight_reuse_conv=wr, data_reuse_fc=dr), routing_iterations=2)
        assert tuple(op.name for op in w.ops) == OP_ORDER
        for op in w.ops:
            assert op.cycles >= 0
            assert op.repeat == (2 if op.name in ROUTING_OPS else 1)
            for table in (op.footprint, op.reads, op.writes):
                assert all(v >= 0 for v in table.values())
            assert op.total_footprint == sum(op.footprint.values())
        # round-trips through the profile schema
        assert load_workload(serialize_workload(w)) == w
