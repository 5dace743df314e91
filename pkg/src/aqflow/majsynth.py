"""Majority-logic conversion.

Structural AND/OR/NOT netlists are rewritten into MAJ3/AND/OR/INV/BUF
netlists.  The rewrite is driven by a precomputed database mapping every
reachable 3-input truth table (8-bit integer, minterm index 4c+2b+a) to its
cheapest realization as either

  * Trivial   - a constant, a wire, or a single inverter,
  * OneLevel  - one majority gate over (possibly inverted) leaf literals,
    where a constant input specializes the cell to AND or OR,
  * TwoLevel  - a majority gate fed by up to three first-level majority
    gates, again with optional input/output inversions.

Costs are (jj_count, levels) compared lexicographically, with inverters
shared per inverted signal exactly as the materializer builds them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

from .model import CellLibrary, Netlist, maj3_table
from .netlist_io import sample_library

# Literal codes: 2v = variable v, 2v+1 = inverted variable v, 6/7 = const 0/1.
LIT_TABLES = (0xAA, 0x55, 0xCC, 0x33, 0xF0, 0x0F, 0x00, 0xFF)
CONST0_LIT, CONST1_LIT = 6, 7
TRIVIAL_TABLES = frozenset(LIT_TABLES)

DEFAULT_JJ = {"AND": 6, "OR": 6, "MAJ3": 6, "INV": 2, "BUF": 2,
              "CONST0": 2, "CONST1": 2}

SCHEME_TRIVIAL = "Trivial"
SCHEME_ONE = "OneLevel"
SCHEME_TWO = "TwoLevel"
_SCHEME_RANK = {SCHEME_TRIVIAL: 0, SCHEME_ONE: 1, SCHEME_TWO: 2}


@dataclass(frozen=True)
class MajMapping:
    table: int
    scheme: str
    jj: int
    levels: int
    detail: tuple

    @property
    def cost(self) -> tuple[int, int]:
        return self.jj, self.levels

    def sort_key(self):
        return (self.jj, self.levels, _SCHEME_RANK[self.scheme], self.detail)


class MappingTable:
    """table (8-bit int) -> cheapest MajMapping per scheme."""

    def __init__(self, entries: dict[int, dict[str, MajMapping]], jj_costs: dict[str, int]):
        self._entries = entries
        self.jj_costs = dict(jj_costs)

    def mappings(self, table: int) -> list[MajMapping]:
        """All stored realizations of a table, cheapest first."""
        found = self._entries.get(table & 0xFF, {})
        return sorted(found.values(), key=MajMapping.sort_key)

    def best(self, table: int) -> MajMapping | None:
        maps = self.mappings(table)
        return maps[0] if maps else None

    @property
    def reachable_tables(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()


def _gate_kind_for(lits: tuple[int, ...]) -> str | None:
    """Cell kind realizing a majority over these literal codes, or None when
    the configuration degenerates to something below one gate."""
    consts = [l for l in lits if l >= 6]
    var_lits = [l for l in lits if l < 6]
    if len(consts) >= 2:
        return None
    if len({l // 2 for l in var_lits}) != len(var_lits):
        return None  # repeated variable: majority collapses
    if len(consts) == 1:
        return "AND" if consts[0] == CONST0_LIT else "OR"
    return "MAJ3"


def _neg_vars(lits) -> frozenset[int]:
    return frozenset(l // 2 for l in lits if l < 6 and l % 2)


def build_mapping_table(jj_costs: dict[str, int] | None = None) -> MappingTable:
    """Exhaustively enumerate Trivial, OneLevel and TwoLevel realizations and
    keep the cheapest mapping per (truth table, scheme)."""
    key = tuple(sorted((jj_costs or DEFAULT_JJ).items()))
    return _build_cached(key)


@lru_cache(maxsize=4)
def _build_cached(jj_items: tuple) -> MappingTable:
    jj = dict(DEFAULT_JJ)
    jj.update(dict(jj_items))
    entries: dict[int, dict[str, MajMapping]] = {}

    def consider(m: MajMapping):
        slot = entries.setdefault(m.table, {})
        cur = slot.get(m.scheme)
        if cur is None or m.sort_key() < cur.sort_key():
            slot[m.scheme] = m

    # Trivial: constants, wires, single inverters.
    consider(MajMapping(0x00, SCHEME_TRIVIAL, 0, 0, ("const", 0)))
    consider(MajMapping(0xFF, SCHEME_TRIVIAL, 0, 0, ("const", 1)))
    for var in range(3):
        consider(MajMapping(LIT_TABLES[2 * var], SCHEME_TRIVIAL, 0, 0, ("wire", var)))
        consider(MajMapping(LIT_TABLES[2 * var + 1], SCHEME_TRIVIAL,
                            jj["INV"], 1, ("not", var)))

    # OneLevel: majority over three literal codes.
    one_best: dict[int, tuple] = {}  # table -> (jj, levels, lits) for level-1 reuse
    for lits in combinations_with_replacement(range(8), 3):
        kind = _gate_kind_for(lits)
        if kind is None:
            continue
        table = maj3_table(*(LIT_TABLES[l] for l in lits))
        negs = _neg_vars(lits)
        cost_jj = jj[kind] + jj["INV"] * len(negs)
        levels = 2 if negs else 1
        consider(MajMapping(table, SCHEME_ONE, cost_jj, levels, tuple(lits)))
        if table not in TRIVIAL_TABLES:
            cur = one_best.get(table)
            if cur is None or (cost_jj, levels, lits) < cur:
                one_best[table] = (cost_jj, levels, lits)

    # TwoLevel: majority over literals and first-level gate outputs.
    f_configs = [cfg for _, _, cfg in
                 sorted(one_best.values(), key=lambda t: t[2])]
    # Option encoding: 0..7 literals, then (8 + 2i) = f_i, (9 + 2i) = inverted f_i.
    opt_table = list(LIT_TABLES)
    opt_info: list[tuple] = [("lit", l) for l in range(8)]
    for i, cfg in enumerate(f_configs):
        t = maj3_table(*(LIT_TABLES[l] for l in cfg))
        opt_table.append(t)
        opt_info.append(("f", i, False))
        opt_table.append(~t & 0xFF)
        opt_info.append(("f", i, True))
    f_kind = [_gate_kind_for(cfg) for cfg in f_configs]
    f_negs = [_neg_vars(cfg) for cfg in f_configs]
    f_depth = [2 if f_negs[i] else 1 for i in range(len(f_configs))]

    n_opts = len(opt_table)
    for combo in combinations_with_replacement(range(n_opts), 3):
        infos = [opt_info[o] for o in combo]
        consts = [i for i in infos if i[0] == "lit" and i[1] >= 6]
        if len(consts) >= 2:
            continue
        f_used = [i for i in infos if i[0] == "f"]
        if not f_used:
            continue  # plain literals: that is a OneLevel configuration
        table = maj3_table(opt_table[combo[0]], opt_table[combo[1]],
                           opt_table[combo[2]])
        lit_codes = [i[1] for i in infos if i[0] == "lit"]
        neg = set()
        for l in lit_codes:
            if l < 6 and l % 2:
                neg.add(l // 2)
        used_f = sorted({i[1] for i in f_used})
        inv_f = sorted({i[1] for i in f_used if i[2]})
        for fi in used_f:
            neg |= f_negs[fi]
        top_kind = "AND" if consts and consts[0][1] == CONST0_LIT else \
                   "OR" if consts else "MAJ3"
        cost_jj = jj[top_kind] + jj["INV"] * (len(neg) + len(inv_f))
        for fi in used_f:
            cost_jj += jj[f_kind[fi]]
        depth = 0
        for info in infos:
            if info[0] == "lit":
                d = 1 if (info[1] < 6 and info[1] % 2) else 0
            else:
                d = f_depth[info[1]] + (1 if info[2] else 0)
            depth = max(depth, d)
        depth += 1
        # Canonical detail: used f configs in index order, inputs re-indexed.
        remap = {fi: k for k, fi in enumerate(used_f)}
        fs = tuple(f_configs[fi] for fi in used_f)
        ins = tuple(("lit", i[1]) if i[0] == "lit" else ("f", remap[i[1]], i[2])
                    for i in infos)
        consider(MajMapping(table, SCHEME_TWO, cost_jj, depth, (fs, ins)))

    return MappingTable(entries, jj)


def pad_table2(table2: int) -> int:
    """Lift a 2-input truth table to the 3-input index space (c ignored)."""
    t = table2 & 0xF
    return t | (t << 4)


@dataclass(frozen=True)
class CandidateCut:
    root_gate: int
    root_net: int
    leaves: tuple[int, ...]   # net ids, position k is variable k
    table: int                # root function over the leaves


class _TfiMemo:
    """Transitive-fanin net sets, memoized per netlist snapshot."""

    def __init__(self, netlist: Netlist):
        self.netlist = netlist
        self.cache: dict[int, frozenset[int]] = {}

    def tfi(self, net_id: int) -> frozenset[int]:
        got = self.cache.get(net_id)
        if got is not None:
            return got
        drv = self.netlist.nets[net_id].driver
        if drv is None:
            out = frozenset((net_id,))
        else:
            acc = {net_id}
            for fin in self.netlist.gates[drv[0]].fanin:
                acc |= self.tfi(fin)
            out = frozenset(acc)
        self.cache[net_id] = out
        return out


def _cone_table(netlist: Netlist, root_gate: int, leaves: tuple[int, ...]) -> int:
    """Truth table of the root gate's output over the leaf nets, by
    evaluating the cone with 8-bit projection patterns."""
    values = {net: LIT_TABLES[2 * k] for k, net in enumerate(leaves)}

    def value(net_id: int) -> int:
        got = values.get(net_id)
        if got is not None:
            return got
        drv = netlist.nets[net_id].driver
        if drv is None:
            raise ValueError("cone evaluation escaped its leaves")
        gate = netlist.gates[drv[0]]
        kind = gate.kind
        if kind.name == "CONST0":
            out = 0x00
        elif kind.name == "CONST1":
            out = 0xFF
        elif kind.is_splitter or kind.table is None:
            out = value(gate.fanin[0])
        else:
            ins = [value(n) for n in gate.fanin]
            out = 0
            for minterm in range(1 << kind.n_inputs):
                if not (kind.table >> minterm) & 1:
                    continue
                term = 0xFF
                for i, v in enumerate(ins):
                    term &= v if (minterm >> i) & 1 else ~v & 0xFF
                out |= term
        values[net_id] = out
        return out

    return value(netlist.gates[root_gate].fanout[0])


def enumerate_cut(netlist: Netlist, root_gate: int,
                  memo: _TfiMemo | None = None) -> CandidateCut | None:
    """Find the 3-leaf cut of a gate by synchronized frontier expansion.

    Every expansion step replaces all gate-driven frontier nets by their
    drivers' fanins at once.  The search succeeds when the frontier holds
    exactly three mutually independent nets; it fails when the frontier
    overshoots three, when two frontier nets are in each other's fanin
    cones, or when it bottoms out at fewer than three inputs.
    """
    if memo is None:
        memo = _TfiMemo(netlist)
    gate = netlist.gates[root_gate]
    frontier = sorted(set(gate.fanin))
    while True:
        if len(frontier) > 3:
            return None
        if len(frontier) == 3:
            for i in range(3):
                for j in range(3):
                    if i != j and frontier[i] in memo.tfi(frontier[j]):
                        return None
            leaves = tuple(frontier)
            table = _cone_table(netlist, root_gate, leaves)
            return CandidateCut(root_gate, gate.fanout[0], leaves, table)
        expandable = [n for n in frontier if netlist.nets[n].driver is not None]
        if not expandable:
            return None
        nxt: set[int] = set()
        for n in frontier:
            drv = netlist.nets[n].driver
            if drv is None:
                nxt.add(n)
            else:
                nxt.update(netlist.gates[drv[0]].fanin)
        frontier = sorted(nxt)
        if not frontier:
            return None


def enumerate_cuts(netlist: Netlist) -> list[CandidateCut]:
    """Candidate cuts for every gate, output-side roots first."""
    levels = netlist.gate_levels()
    memo = _TfiMemo(netlist)
    cuts = []
    for gid in sorted(netlist.gates, key=lambda g: (-levels[g], g)):
        cut = enumerate_cut(netlist, gid, memo)
        if cut is not None:
            cuts.append(cut)
    return cuts


def match_majority(cut: CandidateCut, table_db: MappingTable) -> list[MajMapping]:
    """All database realizations of the cut's function, cheapest first."""
    return table_db.mappings(cut.table)


class _Materializer:
    """Builds the gates of one mapping inside a netlist."""

    def __init__(self, netlist: Netlist, lib: CellLibrary, leaves, hint: str):
        self.nl = netlist
        self.lib = lib
        self.leaves = list(leaves)
        self.hint = hint
        self.counter = 0
        self.inv_cache: dict[int, int] = {}
        self.const_cache: dict[int, int] = {}
        self.new_gates: list[int] = []

    def _fresh_net(self) -> int:
        net = self.nl.new_net(f"{self.hint}__m{self.counter}")
        self.counter += 1
        return net.id

    def _gate(self, kind_name: str, fanin: list[int], out_net: int | None = None) -> int:
        if out_net is None:
            out_net = self._fresh_net()
        g = self.nl.new_gate(self.lib.kind(kind_name), fanin, [out_net])
        self.new_gates.append(g.id)
        return out_net

    def const_net(self, value: int) -> int:
        got = self.const_cache.get(value)
        if got is None:
            got = self._gate("CONST1" if value else "CONST0", [])
            self.const_cache[value] = got
        return got

    def leaf_net(self, var: int) -> int:
        net = self.leaves[var]
        if net is None:
            # The function does not depend on this variable; any value works.
            net = self.const_net(0)
            self.leaves[var] = net
        return net

    def inverted(self, net_id: int) -> int:
        got = self.inv_cache.get(net_id)
        if got is None:
            got = self._gate("INV", [net_id])
            self.inv_cache[net_id] = got
        return got

    def lit_net(self, code: int) -> int:
        if code >= 6:
            return self.const_net(code - 6)
        net = self.leaf_net(code // 2)
        return self.inverted(net) if code % 2 else net

    def majority(self, input_nets: list[int | None], const_vals: list[int | None],
                 out_net: int | None) -> int:
        """One majority gate over three inputs; const positions carry None in
        input_nets and 0/1 in const_vals, specializing the cell to AND/OR."""
        consts = [v for v in const_vals if v is not None]
        if len(consts) > 1:
            raise ValueError("degenerate majority configuration")
        if not consts:
            return self._gate("MAJ3", list(input_nets), out_net)
        keep = [n for n in input_nets if n is not None]
        return self._gate("AND" if consts[0] == 0 else "OR", keep, out_net)

    def onelevel(self, lits: tuple[int, ...], out_net: int | None) -> int:
        nets = [None if l >= 6 else self.lit_net(l) for l in lits]
        vals = [l - 6 if l >= 6 else None for l in lits]
        return self.majority(nets, vals, out_net)

    def twolevel(self, detail: tuple, out_net: int | None) -> int:
        fs, ins = detail
        f_nets = [self.onelevel(cfg, None) for cfg in fs]
        nets: list[int | None] = []
        vals: list[int | None] = []
        for item in ins:
            if item[0] == "lit":
                code = item[1]
                nets.append(None if code >= 6 else self.lit_net(code))
                vals.append(code - 6 if code >= 6 else None)
            else:
                _, fi, inv = item
                net = f_nets[fi]
                nets.append(self.inverted(net) if inv else net)
                vals.append(None)
        return self.majority(nets, vals, out_net)


def materialize_mapping(netlist: Netlist, mapping: MajMapping,
                        leaves, target_net: int, lib: CellLibrary,
                        hint: str) -> list[int]:
    """Instantiate a mapping so that ``target_net`` is driven by its output
    (or rewired for trivial wire/const mappings).  Returns new gate ids.
    The previous driver of target_net is left in place for the caller's
    dead-logic sweep."""
    mat = _Materializer(netlist, lib, leaves, hint)
    target = netlist.nets[target_net]

    def rebind_driver_to(source_net: int):
        # Move the target net's sinks onto the source net.
        for gid, pin in list(target.sinks):
            netlist.gates[gid].fanin[pin] = source_net
            netlist.nets[source_net].sinks.append((gid, pin))
        target.sinks.clear()

    if mapping.scheme == SCHEME_TRIVIAL:
        op = mapping.detail[0]
        if op == "const":
            old = target.driver
            mat._gate("CONST1" if mapping.detail[1] else "CONST0", [], target_net)
            _detach_old_driver(netlist, old, target_net)
        elif op == "wire":
            if target.is_po:
                raise ValueError("cannot alias a primary output to a wire")
            rebind_driver_to(mat.leaf_net(mapping.detail[1]))
        else:  # "not"
            old = target.driver
            src = mat.leaf_net(mapping.detail[1])
            g = netlist.new_gate(lib.kind("INV"), [src], [target_net])
            mat.new_gates.append(g.id)
            _detach_old_driver(netlist, old, target_net)
    elif mapping.scheme == SCHEME_ONE:
        old = target.driver
        mat.onelevel(mapping.detail, target_net)
        _detach_old_driver(netlist, old, target_net)
    else:
        old = target.driver
        mat.twolevel(mapping.detail, target_net)
        _detach_old_driver(netlist, old, target_net)
    return mat.new_gates


def _detach_old_driver(netlist: Netlist, old_driver, target_net: int):
    """After target_net got a new driver, give the old driver gate a stub
    output net so the netlist stays well-formed until the dead sweep."""
    if old_driver is None:
        return
    gid, pin = old_driver
    gate = netlist.gates.get(gid)
    if gate is None or gate.fanout[pin] != target_net:
        return
    stub = netlist.new_net(f"{netlist.nets[target_net].name}__old{gid}")
    gate.fanout[pin] = stub.id
    netlist.nets[stub.id].driver = (gid, pin)


def sweep_dead(netlist: Netlist) -> int:
    """Remove gates and nets that no primary output depends on.  Primary
    input nets always stay.  Returns the number of gates removed."""
    live_nets: set[int] = set(netlist.primary_outputs)
    stack = list(live_nets)
    live_gates: set[int] = set()
    while stack:
        net = netlist.nets[stack.pop()]
        if net.driver is None:
            continue
        gid = net.driver[0]
        if gid in live_gates:
            continue
        live_gates.add(gid)
        for fin in netlist.gates[gid].fanin:
            if fin not in live_nets:
                live_nets.add(fin)
                stack.append(fin)
    removed = [g for g in netlist.gates if g not in live_gates]
    for gid in removed:
        netlist.remove_gate(gid)
    for net_id in [n for n, net in netlist.nets.items()
                   if n not in live_nets and not net.is_pi]:
        netlist.remove_net(net_id)
    return len(removed)


def normalize_structural(netlist: Netlist, lib: CellLibrary,
                         table_db: MappingTable) -> Netlist:
    """Rewrite a structural netlist onto library kinds only: NOT becomes INV,
    NAND/NOR become AND/OR plus INV, XOR/XNOR get their cheapest majority
    realization."""
    work = netlist.clone()
    for gid in work.topo_order():
        gate = work.gates[gid]
        name = gate.kind.name
        if name in ("AND", "OR", "BUF", "INV", "MAJ3", "CONST0", "CONST1") \
                or gate.kind.is_splitter:
            gate.kind = lib.kind(name)
            continue
        if name == "NOT":
            gate.kind = lib.kind("INV")
            continue
        target = gate.fanout[0]
        hint = work.nets[target].name
        if name in ("NAND", "NOR"):
            inner = work.new_net(f"{hint}__n")
            work.new_gate(lib.kind("AND" if name == "NAND" else "OR"),
                          list(gate.fanin), [inner.id])
            work.remove_gate(gid)
            work.new_gate(lib.kind("INV"), [inner.id], [target])
        elif name in ("XOR", "XNOR"):
            table = pad_table2(gate.kind.table)
            mapping = table_db.best(table)
            if mapping is None:
                raise ValueError(f"no majority realization for {name}")
            leaves = [gate.fanin[0], gate.fanin[1], None]
            work.remove_gate(gid)
            materialize_mapping(work, mapping, leaves, target, lib, hint)
        else:
            raise ValueError(f"cannot normalize gate kind {name}")
    sweep_dead(work)
    return work


def convert_to_majority(netlist: Netlist, table_db: MappingTable,
                        lib: CellLibrary | None = None,
                        cut_mapping: bool = True) -> Netlist:
    """Full majority conversion: normalize onto library kinds, then rewrite
    3-leaf cut cones whenever the database realization strictly improves the
    netlist-wide (jj_count, depth) pair."""
    if lib is None:
        lib = sample_library()
    work = normalize_structural(netlist, lib, table_db)
    if not cut_mapping:
        return work

    levels = work.gate_levels()
    roots = sorted(work.gates, key=lambda g: (-levels[g], g))
    locked: set[int] = set()
    cur_jj = sum(g.kind.jj_count for g in work.gates.values())
    cur_depth = work.depth()
    memo = _TfiMemo(work)
    for root in roots:
        if root not in work.gates or root in locked:
            continue
        cut = enumerate_cut(work, root, memo)
        if cut is None:
            continue
        for mapping in match_majority(cut, table_db):
            if mapping.scheme == SCHEME_TRIVIAL and mapping.detail[0] == "wire" \
                    and work.nets[cut.root_net].is_po:
                continue
            trial = work.clone()
            new_gates = materialize_mapping(trial, mapping, cut.leaves,
                                            cut.root_net, lib,
                                            trial.nets[cut.root_net].name)
            sweep_dead(trial)
            new_jj = sum(g.kind.jj_count for g in trial.gates.values())
            new_depth = trial.depth()
            if (new_jj, new_depth) < (cur_jj, cur_depth):
                work = trial
                cur_jj, cur_depth = new_jj, new_depth
                locked.update(new_gates)
                memo = _TfiMemo(work)
                break
    sweep_dead(work)
    return work
