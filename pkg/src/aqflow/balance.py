"""Path balancing: splitter insertion for multi-fanout nets, then buffer
insertion so every gate's fanins arrive exactly one clock phase before it.

Phases are longest-path levels: primary inputs sit at virtual phase -1, a
gate's phase is one past its latest driver.  After balancing, every net
connects phase p to phase p+1, which is what row-based placement and
channel routing assume.
"""

from __future__ import annotations

from .model import CellKind, CellLibrary, Netlist


def assign_phases(netlist: Netlist) -> None:
    """Assign each gate its longest-path level as the clock phase."""
    for gid, lvl in netlist.gate_levels().items():
        netlist.gates[gid].phase = lvl


def _splitter_kind(lib: CellLibrary, arity: int) -> CellKind:
    for kind in lib.splitters():
        if kind.n_outputs == arity:
            return kind
    raise ValueError(f"library has no splitter of fan-out {arity}")


def _build_tree(work: Netlist, src_net: int, consumers: list, lib: CellLibrary,
                hint: str, counter: list[int]) -> None:
    """Attach consumers to src_net through a widest-first splitter tree.

    consumers: ("gate", gate_id, pin) entries plus at most one ("po", net_id)
    entry whose net must become the primary-output leaf.
    """
    if len(consumers) == 1:
        kind, *info = consumers[0]
        if kind == "gate":
            gid, pin = info
            work.gates[gid].fanin[pin] = src_net
            work.nets[src_net].sinks.append((gid, pin))
        else:
            # Graft the original output net onto this point of the tree.
            po_net = work.nets[info[0]]
            drv = work.nets[src_net].driver
            assert drv is not None
            gid, opin = drv
            work.gates[gid].fanout[opin] = po_net.id
            po_net.driver = (gid, opin)
            work.remove_net(src_net)
        return

    kmax = lib.max_split
    f = len(consumers)
    depth = 1
    cap = kmax
    while cap < f:
        depth += 1
        cap *= kmax
    arity = -(-f // (kmax ** (depth - 1)))  # ceil division
    spl = _splitter_kind(lib, arity)
    out_nets = []
    for _ in range(arity):
        out_nets.append(work.new_net(f"{hint}__s{counter[0]}").id)
        counter[0] += 1
    work.new_gate(spl, [src_net], out_nets)
    remaining = list(consumers)
    child_cap = kmax ** (depth - 1)
    for i, out_net in enumerate(out_nets):
        slots_left = arity - 1 - i
        take = min(child_cap, len(remaining) - slots_left)
        group, remaining = remaining[:take], remaining[take:]
        _build_tree(work, out_net, group, lib, hint, counter)
    assert not remaining


def insert_splitters(netlist: Netlist, lib: CellLibrary) -> Netlist:
    """Give every net a fan-out of one by inserting splitter trees.

    A primary output counts as one consumer; it is kept last so it lands in
    the shallowest branch, and the output net keeps its name and id."""
    work = netlist.clone()
    for net_id in sorted(netlist.nets):
        net = work.nets[net_id]
        fanout = len(net.sinks) + (1 if net.is_po else 0)
        if fanout < 2:
            continue
        consumers = [("gate", gid, pin) for gid, pin in
                     sorted(net.sinks, key=lambda s: (s[0], s[1]))]
        src = net_id
        if net.is_po:
            # The named output net moves to a tree leaf; the driver-side net
            # is a fresh internal one.
            drv = net.driver
            assert drv is not None, "primary outputs are gate-driven"
            root = work.new_net(f"{net.name}__root")
            gid, opin = drv
            work.gates[gid].fanout[opin] = root.id
            root.driver = (gid, opin)
            net.driver = None
            consumers.append(("po", net.id))
            net.sinks.clear()
            src = root.id
        else:
            net.sinks.clear()
        _build_tree(work, src, consumers, lib, work.nets[src].name, [0])
    return work


def insert_buffers(netlist: Netlist, lib: CellLibrary) -> Netlist:
    """Pad every net with buffers until each sink's phase is exactly one past
    its driver's phase, and align all primary outputs to the final phase."""
    work = netlist.clone()
    assign_phases(work)
    depth = work.depth()
    buf = lib.kind("BUF")

    for net_id in sorted(work.nets):
        net = work.nets[net_id]
        drv_phase = -1 if net.driver is None \
            else work.gates[net.driver[0]].phase
        for gid, pin in sorted(net.sinks, key=lambda s: (s[0], s[1])):
            need = work.gates[gid].phase - drv_phase - 1
            if need <= 0:
                continue
            cur = net_id
            for k in range(need):
                nxt = work.new_net(f"{net.name}__b{gid}_{k}")
                work.new_gate(buf, [cur], [nxt.id], phase=drv_phase + 1 + k)
                cur = nxt.id
            # retarget the sink onto the end of the chain
            work.nets[net_id].sinks.remove((gid, pin))
            work.gates[gid].fanin[pin] = cur
            work.nets[cur].sinks.append((gid, pin))

    # Align primary outputs to the last phase so all outputs appear together.
    for po in sorted(work.primary_outputs):
        net = work.nets[po]
        drv = net.driver
        drv_phase = -1 if drv is None else work.gates[drv[0]].phase
        need = (depth - 1) - drv_phase
        if need <= 0 or drv is None:
            continue
        gid, opin = drv
        cur = work.new_net(f"{net.name}__a0")
        work.gates[gid].fanout[opin] = cur.id
        cur.driver = (gid, opin)
        net.driver = None
        prev = cur.id
        for k in range(need - 1):
            nxt = work.new_net(f"{net.name}__a{k + 1}")
            work.new_gate(buf, [prev], [nxt.id], phase=drv_phase + 1 + k)
            prev = nxt.id
        work.new_gate(buf, [prev], [po], phase=depth - 1)

    assign_phases(work)
    return work


def balance_netlist(netlist: Netlist, lib: CellLibrary) -> Netlist:
    """Splitters, then buffers, then final phase assignment."""
    split = insert_splitters(netlist, lib)
    assign_phases(split)
    return insert_buffers(split, lib)
