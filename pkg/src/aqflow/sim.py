"""Bit-parallel functional simulation of netlists.

Every net carries one Python integer whose bit i is the net's value under
input assignment i; with n primary inputs there are 2**n assignments, and
bit k of primary input j is (k >> j) & 1 with inputs ordered as declared.
This keeps exhaustive equivalence checks cheap up to a dozen or so inputs.
"""

from __future__ import annotations

from .model import Netlist


def evaluate(netlist: Netlist, input_values: dict[int, int], width: int) -> dict[int, int]:
    """Evaluate all nets given per-net input patterns of ``width`` bits."""
    mask = (1 << width) - 1
    values: dict[int, int] = {}
    for net_id in netlist.primary_inputs:
        values[net_id] = input_values[net_id] & mask
    for gid in netlist.topo_order():
        gate = netlist.gates[gid]
        kind = gate.kind
        if kind.name == "CONST0":
            out = 0
        elif kind.name == "CONST1":
            out = mask
        elif kind.is_splitter or kind.table is None:
            out = values[gate.fanin[0]]
        else:
            ins = [values[n] for n in gate.fanin]
            out = 0
            for minterm in range(1 << kind.n_inputs):
                if not (kind.table >> minterm) & 1:
                    continue
                term = mask
                for i, v in enumerate(ins):
                    term &= v if (minterm >> i) & 1 else ~v & mask
                out |= term
        for net_id in gate.fanout:
            values[net_id] = out
    return values


def output_tables(netlist: Netlist) -> dict[str, int]:
    """Exhaustive truth table of each primary output, keyed by net name.

    Bit k of the result is the output under the assignment where primary
    input j (declaration order) takes bit j of k.
    """
    n = len(netlist.primary_inputs)
    if n > 20:
        raise ValueError(f"too many inputs for exhaustive simulation: {n}")
    width = 1 << n
    stim = {}
    for j, net_id in enumerate(netlist.primary_inputs):
        pattern = 0
        block = 1 << j
        chunk = (1 << block) - 1
        # bit k is (k >> j) & 1: blocks of 2**j zeros then 2**j ones
        stride = block * 2
        for base in range(block, width, stride):
            pattern |= chunk << base
        stim[net_id] = pattern
    values = evaluate(netlist, stim, width)
    return {netlist.nets[net_id].name: values[net_id]
            for net_id in netlist.primary_outputs}


def equivalent(a: Netlist, b: Netlist) -> bool:
    """True when both netlists compute identical functions, matching primary
    inputs and outputs by name and declaration order."""
    a_ins = [a.nets[n].name for n in a.primary_inputs]
    b_ins = [b.nets[n].name for n in b.primary_inputs]
    if a_ins != b_ins:
        return False
    return output_tables(a) == output_tables(b)
