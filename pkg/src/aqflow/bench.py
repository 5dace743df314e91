"""Seeded random benchmark netlists.

Produces and-or-inverter DAGs over a requested gate and input budget.
Given the same seed and parameters the output is identical, which the
reproducibility tests rely on.
"""

from __future__ import annotations

import random

from .model import CellLibrary, Netlist
from .netlist_io import structural_kinds

_KINDS2 = ("AND", "OR", "NAND", "NOR")


class BenchSpecError(ValueError):
    pass


def gen_bench(seed: int, n_pis: int, n_gates: int, name: str = "bench",
              not_share: int = 6, xor: bool = False) -> Netlist:
    """Random logic DAG: n_pis inputs, n_gates gates, outputs are the
    signals nothing consumes.

    Roughly one gate in not_share is an inverter; xor=True mixes in
    XOR/XNOR.  Every input ends up used (a gate pin is rewired onto any
    input the first pass missed).
    """
    if n_pis < 1 or n_gates < 1:
        raise BenchSpecError("need at least one input and one gate")
    rng = random.Random(seed)
    kinds2 = _KINDS2 + (("XOR", "XNOR") if xor else ())
    arities = [1 if rng.randrange(not_share) == 0 else 2
               for _ in range(n_gates)]
    if sum(arities) < n_pis:
        raise BenchSpecError(
            f"{n_gates} gates offer {sum(arities)} input pins, "
            f"fewer than {n_pis} inputs")

    kinds = structural_kinds()
    nl = Netlist(name=name)
    pool = []
    for i in range(n_pis):
        net = nl.new_net(f"p{i}", is_pi=True)
        nl.primary_inputs.append(net.id)
        pool.append(net.id)
    for gi, ar in enumerate(arities):
        kind = "NOT" if ar == 1 else kinds2[rng.randrange(len(kinds2))]
        # bias toward recent signals so depth grows
        picks = []
        for _ in range(ar):
            if rng.random() < 0.6 and len(pool) > n_pis:
                lo = max(0, len(pool) - 2 * n_pis)
                cand = pool[lo + rng.randrange(len(pool) - lo)]
            else:
                cand = pool[rng.randrange(len(pool))]
            picks.append(cand)
        if ar == 2 and picks[0] == picks[1] and len(pool) > 1:
            alt = pool[rng.randrange(len(pool))]
            while alt == picks[0]:
                alt = pool[rng.randrange(len(pool))]
            picks[1] = alt
        out = nl.new_net(f"t{gi}")
        nl.new_gate(kinds[kind], picks, [out.id])
        pool.append(out.id)

    # make sure no input is dangling
    unused = [n for n in nl.primary_inputs if not nl.nets[n].sinks]
    gate_ids = sorted(nl.gates)
    for pi_net in unused:
        while True:
            g = nl.gates[gate_ids[rng.randrange(len(gate_ids))]]
            pin = rng.randrange(len(g.fanin))
            old = g.fanin[pin]
            if old in unused or not _other_sinks(nl, old, g.id, pin):
                continue  # keep every signal alive
            nl.nets[old].sinks.remove((g.id, pin))
            g.fanin[pin] = pi_net
            nl.nets[pi_net].sinks.append((g.id, pin))
            break

    for net in nl.nets.values():
        if not net.is_pi and not net.sinks:
            net.is_po = True
            nl.primary_outputs.append(net.id)
    nl.topo_order()  # raises on accidental cycles
    return nl


def _other_sinks(nl: Netlist, net_id: int, gid: int, pin: int) -> bool:
    return any((g, p) != (gid, pin) for g, p in nl.nets[net_id].sinks) \
        or nl.nets[net_id].is_po
