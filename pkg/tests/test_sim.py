import random

from aqflow import sim
from aqflow.model import Netlist
from aqflow.netlist_io import parse_netlist, structural_kinds

TEXT = """\
.inputs a b c
.outputs y z
AND t1 a b
XOR t2 t1 c
NOT y t2
OR  z a c
.end
"""


def test_output_tables_small():
    nl = parse_netlist(TEXT)
    tabs = sim.output_tables(nl)
    a, b, c = 0xAA, 0xCC, 0xF0
    assert tabs["y"] == (~((a & b) ^ c)) & 0xFF
    assert tabs["z"] == a | c


def test_evaluate_vectorized_matches_bit_loop():
    nl = parse_netlist(TEXT)
    rng = random.Random(5)
    pis = list(nl.primary_inputs)
    for _ in range(20):
        vec = {p: rng.getrandbits(32) for p in pis}
        out = sim.evaluate(nl, vec, width=32)
        for k in range(32):
            single = sim.evaluate(nl, {p: (vec[p] >> k) & 1 for p in pis},
                                  width=1)
            for net, word in out.items():
                assert (word >> k) & 1 == single[net] & 1


def test_equivalent_accepts_renamed_copy():
    a = parse_netlist(TEXT)
    b = parse_netlist(TEXT.replace("t1", "u1").replace("t2", "u2"))
    assert sim.equivalent(a, b)


def test_equivalent_rejects_wrong_logic():
    a = parse_netlist(TEXT)
    b = parse_netlist(TEXT.replace("AND t1 a b", "OR t1 a b"))
    assert not sim.equivalent(a, b)


def test_equivalent_checks_interface():
    a = parse_netlist(TEXT)
    b = parse_netlist(".inputs a b\n.outputs y\nAND y a b\n.end\n")
    assert not sim.equivalent(a, b)


def test_constant_cells_evaluate():
    nl = Netlist("k")
    kinds = structural_kinds()
    one = nl.new_net("one")
    a = nl.new_net("a", is_pi=True)
    nl.primary_inputs.append(a.id)
    y = nl.new_net("y", is_po=True)
    nl.primary_outputs.append(y.id)
    nl.new_gate(kinds["CONST1"], [], [one.id])
    nl.new_gate(kinds["AND"], [a.id, one.id], [y.id])
    tabs = sim.output_tables(nl)
    assert tabs["y"] == 0b10  # single-variable projection of a
