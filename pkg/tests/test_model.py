import pytest

from aqflow.model import (
    CellKind, FlowConfig, Netlist, jj_and_net_stats, maj3_table,
    validate_netlist,
)
from aqflow.netlist_io import sample_library, structural_kinds


def net_id(nl, name):
    for n in nl.nets.values():
        if n.name == name:
            return n.id
    raise KeyError(name)


def test_maj3_table_is_majority():
    # three projections in, majority truth table out
    a, b, c = 0xAA, 0xCC, 0xF0
    assert maj3_table(a, b, c) == 0xE8
    assert maj3_table(a, b, 0x00) == a & b
    assert maj3_table(a, b, 0xFF) == a | b


def test_maj3_table_bitwise_definition():
    a, b, c = 0x3C, 0x9A, 0x55
    got = maj3_table(a, b, c)
    for i in range(8):
        bits = ((a >> i) & 1) + ((b >> i) & 1) + ((c >> i) & 1)
        assert (got >> i) & 1 == (1 if bits >= 2 else 0)


def build_chain():
    nl = Netlist("t")
    kinds = structural_kinds()
    a = nl.new_net("a", is_pi=True)
    b = nl.new_net("b", is_pi=True)
    t = nl.new_net("t")
    y = nl.new_net("y", is_po=True)
    nl.new_gate(kinds["AND"], [a.id, b.id], [t.id])
    nl.new_gate(kinds["NOT"], [t.id], [y.id])
    return nl


def test_new_gate_wires_driver_and_sinks():
    nl = build_chain()
    g1, g2 = sorted(nl.gates)
    t = net_id(nl, "t")
    assert nl.nets[t].driver == (g1, 0)
    assert nl.nets[t].sinks == [(g2, 0)]
    assert nl.driver_gate(t).id == g1


def test_topo_order_and_depth():
    nl = build_chain()
    order = nl.topo_order()
    assert order == sorted(nl.gates)
    assert nl.depth() == 2
    levels = nl.gate_levels()
    assert sorted(levels.values()) == [0, 1]


def test_topo_order_rejects_cycles():
    nl = Netlist("loop")
    kinds = structural_kinds()
    a = nl.new_net("a")
    b = nl.new_net("b")
    nl.new_gate(kinds["NOT"], [a.id], [b.id])
    nl.new_gate(kinds["NOT"], [b.id], [a.id])
    with pytest.raises(ValueError):
        nl.topo_order()


def test_clone_is_deep():
    nl = build_chain()
    cp = nl.clone()
    cp.remove_gate(min(cp.gates))
    assert len(nl.gates) == 2
    assert len(cp.gates) == 1
    # ids survive the copy
    assert set(nl.nets) >= set(cp.nets)


def test_remove_gate_detaches_nets():
    nl = build_chain()
    g1 = min(nl.gates)
    t = net_id(nl, "t")
    nl.remove_gate(g1)
    assert nl.nets[t].driver is None
    assert g1 not in nl.gates


def test_validate_clean_netlist():
    nl = build_chain()
    assert validate_netlist(nl) == []


def test_validate_flags_multi_sink():
    nl = build_chain()
    kinds = structural_kinds()
    a = net_id(nl, "a")
    z = nl.new_net("z", is_po=True)
    nl.new_gate(kinds["NOT"], [a], [z.id])
    # net t feeds one gate, net a now feeds two
    t_driver = nl.driver_gate(net_id(nl, "t"))
    rules = {v.rule for v in validate_netlist(nl)}
    assert rules == set() or "FanoutViolation" not in rules
    # fan-out discipline applies to gate outputs; overload one
    y = net_id(nl, "y")
    w = nl.new_net("w", is_po=True)
    nl.new_gate(kinds["NOT"], [net_id(nl, "t")], [w.id])
    rules = {v.rule for v in validate_netlist(nl)}
    assert "FanoutViolation" in rules
    assert t_driver is not None and y is not None
    loose = validate_netlist(nl, require_single_sink=False)
    assert all(v.rule != "FanoutViolation" for v in loose)


def test_validate_flags_undriven_and_phase_gap():
    nl = build_chain()
    kinds = structural_kinds()
    dangling = nl.new_net("d")
    y2 = nl.new_net("y2", is_po=True)
    nl.new_gate(kinds["NOT"], [dangling.id], [y2.id])
    rules = {v.rule for v in validate_netlist(nl, require_single_sink=False)}
    assert "DanglingNet" in rules

    ph = build_chain()
    for g in ph.gates.values():
        g.phase = 0  # both on one row: sink must sit one phase later
    rules = {v.rule for v in validate_netlist(ph, require_phases=True)}
    assert "UnbalancedFanin" in rules
    ph2 = build_chain()
    rules = {v.rule for v in validate_netlist(ph2, require_phases=True)}
    assert "MissingPhase" in rules


def test_jj_and_net_stats():
    nl = build_chain()
    jj, nets, depth = jj_and_net_stats(nl)
    assert nets == 4
    assert depth == 2
    lib = sample_library()
    assert jj == lib.kind("AND").jj_count + lib.kind("INV").jj_count


def test_cell_kind_check_catches_bad_pins():
    k = CellKind(name="BAD", n_inputs=1, n_outputs=1, width=40, height=30,
                 jj_count=2, input_pins=((20, 5),), output_pins=((20, 30),))
    assert any("bottom edge" in e for e in k.check())


def test_library_sample_is_sound():
    lib = sample_library()
    assert lib.check() == []
    assert lib.max_split == 4
    names = {k.name for k in lib.splitters()}
    assert names == {"SPL2", "SPL3", "SPL4"}


def test_config_validate_and_replace():
    cfg = FlowConfig()
    assert cfg.validate() == []
    assert cfg.phase_budget_ps() == pytest.approx(50.0)
    bad = cfg.replace(s_min=15)  # not a multiple of the grid
    assert bad.validate()
    assert cfg.replace(target_clock_ghz=2.5).phase_budget_ps() == pytest.approx(100.0)
