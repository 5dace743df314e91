"""Core data model: cells, nets, netlists, flow configuration, validation.

Coordinate convention: all geometry is in integer micrometres.  Cell origins
are lower-left corners, input pins sit on the bottom edge of a cell and
output pins on the top edge, so signal flow is upward through the rows.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace

# Gate kinds accepted in structural input netlists.
AOI_KINDS = ("AND", "OR", "NAND", "NOR", "XOR", "XNOR", "NOT", "BUF")

# Kinds a converted netlist is allowed to contain (splitters join later).
MAJ_KINDS = ("MAJ3", "AND", "OR", "BUF", "INV", "CONST0", "CONST1")

# Truth tables are 8-bit integers over three inputs; minterm index = 4c+2b+a.
PROJ_TABLES = (0xAA, 0xCC, 0xF0)
TABLE_BITS = 8


def maj3_table(x: int, y: int, z: int) -> int:
    """Bitwise three-way majority of 8-bit truth tables."""
    return ((x & y) | (x & z) | (y & z)) & 0xFF


@dataclass(frozen=True)
class CellKind:
    """A library cell: geometry, pin offsets and logic function.

    pin offsets are (dx, dy) from the cell origin; inputs first, then
    outputs.  ``table`` is the 8-bit truth table of the single output for
    logic cells (inputs beyond ``n_inputs`` are ignored); splitters and
    buffers carry the identity function per output.
    """

    name: str
    n_inputs: int
    n_outputs: int
    width: int
    height: int
    jj_count: int
    input_pins: tuple[tuple[int, int], ...]
    output_pins: tuple[tuple[int, int], ...]
    table: int | None = None

    @property
    def is_splitter(self) -> bool:
        return self.n_outputs > 1

    def check(self) -> list[str]:
        """Return invariant breaches for this kind (empty when sound)."""
        errs = []
        if self.width <= 0 or self.height <= 0:
            errs.append(f"{self.name}: non-positive dimensions")
        if self.jj_count < 0:
            errs.append(f"{self.name}: negative jj_count")
        if len(self.input_pins) != self.n_inputs:
            errs.append(f"{self.name}: input pin count mismatch")
        if len(self.output_pins) != self.n_outputs:
            errs.append(f"{self.name}: output pin count mismatch")
        for dx, dy in self.input_pins:
            if not (0 <= dx <= self.width) or dy != 0:
                errs.append(f"{self.name}: input pin ({dx},{dy}) not on bottom edge")
        for dx, dy in self.output_pins:
            if not (0 <= dx <= self.width) or dy != self.height:
                errs.append(f"{self.name}: output pin ({dx},{dy}) not on top edge")
        if self.n_outputs > 1 and self.n_inputs != 1:
            errs.append(f"{self.name}: splitter must have exactly one input")
        if self.n_outputs > 1 and not (2 <= self.n_outputs <= 4):
            errs.append(f"{self.name}: splitter fan-out must be 2..4")
        return errs


@dataclass
class CellLibrary:
    name: str
    kinds: dict[str, CellKind]

    def kind(self, name: str) -> CellKind:
        try:
            return self.kinds[name]
        except KeyError:
            raise KeyError(f"cell kind {name!r} not in library {self.name!r}") from None

    def splitters(self) -> list[CellKind]:
        """Splitter kinds sorted by fan-out ascending."""
        spl = [k for k in self.kinds.values() if k.is_splitter]
        spl.sort(key=lambda k: k.n_outputs)
        return spl

    @property
    def max_split(self) -> int:
        spl = self.splitters()
        return spl[-1].n_outputs if spl else 1

    def check(self) -> list[str]:
        errs = []
        for kind in self.kinds.values():
            errs.extend(kind.check())
        return errs


@dataclass
class Gate:
    id: int
    kind: CellKind
    fanin: list[int]      # net ids, positionally matched to input pins
    fanout: list[int]     # net ids, positionally matched to output pins
    phase: int | None = None
    name: str = ""


@dataclass
class Net:
    id: int
    name: str
    driver: tuple[int, int] | None = None   # (gate id, output pin index); None = primary input
    sinks: list[tuple[int, int]] = field(default_factory=list)
    is_pi: bool = False
    is_po: bool = False


class Netlist:
    """A gate-level netlist; gates and nets are keyed by stable integer ids."""

    def __init__(self, name: str = "top"):
        self.name = name
        self.gates: dict[int, Gate] = {}
        self.nets: dict[int, Net] = {}
        self.primary_inputs: list[int] = []   # net ids, in declaration order
        self.primary_outputs: list[int] = []
        self._next_gate = 0
        self._next_net = 0

    def new_net(self, name: str, is_pi: bool = False, is_po: bool = False) -> Net:
        net = Net(self._next_net, name, is_pi=is_pi, is_po=is_po)
        self.nets[net.id] = net
        self._next_net += 1
        return net

    def new_gate(self, kind: CellKind, fanin: list[int], fanout: list[int],
                 phase: int | None = None, name: str = "") -> Gate:
        gate = Gate(self._next_gate, kind, list(fanin), list(fanout), phase, name)
        self.gates[gate.id] = gate
        self._next_gate += 1
        for pin, net_id in enumerate(fanin):
            self.nets[net_id].sinks.append((gate.id, pin))
        for pin, net_id in enumerate(fanout):
            self.nets[net_id].driver = (gate.id, pin)
        return gate

    def remove_gate(self, gate_id: int) -> None:
        gate = self.gates.pop(gate_id)
        for pin, net_id in enumerate(gate.fanin):
            net = self.nets.get(net_id)
            if net is not None and (gate_id, pin) in net.sinks:
                net.sinks.remove((gate_id, pin))
        for net_id in gate.fanout:
            net = self.nets.get(net_id)
            if net is not None and net.driver is not None and net.driver[0] == gate_id:
                net.driver = None

    def remove_net(self, net_id: int) -> None:
        del self.nets[net_id]

    def driver_gate(self, net_id: int) -> Gate | None:
        drv = self.nets[net_id].driver
        return self.gates[drv[0]] if drv is not None else None

    def topo_order(self) -> list[int]:
        """Gate ids in topological order; raises ValueError on a cycle."""
        indeg = {}
        consumers: dict[int, list[int]] = {}
        for gate in self.gates.values():
            n = 0
            for net_id in gate.fanin:
                drv = self.nets[net_id].driver
                if drv is not None:
                    n += 1
                    consumers.setdefault(drv[0], []).append(gate.id)
            indeg[gate.id] = n
        ready = [g for g, n in indeg.items() if n == 0]
        order = []
        seen = 0
        heapq.heapify(ready)
        while ready:
            gid = heapq.heappop(ready)
            order.append(gid)
            seen += 1
            for nxt in consumers.get(gid, ()):  # noqa: B023
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    heapq.heappush(ready, nxt)
        if seen != len(self.gates):
            raise ValueError("netlist contains a combinational cycle")
        return order

    def gate_levels(self) -> dict[int, int]:
        """Longest-path level of each gate (primary inputs at level -1)."""
        levels: dict[int, int] = {}
        for gid in self.topo_order():
            gate = self.gates[gid]
            lvl = 0
            for net_id in gate.fanin:
                drv = self.nets[net_id].driver
                if drv is not None:
                    lvl = max(lvl, levels[drv[0]] + 1)
            levels[gid] = lvl
        return levels

    def depth(self) -> int:
        """Logic depth: max phase + 1 when phases are assigned, else
        longest gate chain length."""
        if not self.gates:
            return 0
        phases = [g.phase for g in self.gates.values()]
        if all(p is not None for p in phases):
            return max(phases) + 1
        return max(self.gate_levels().values()) + 1

    def clone(self) -> "Netlist":
        out = Netlist(self.name)
        out.primary_inputs = list(self.primary_inputs)
        out.primary_outputs = list(self.primary_outputs)
        out._next_gate = self._next_gate
        out._next_net = self._next_net
        for net in self.nets.values():
            out.nets[net.id] = Net(net.id, net.name, net.driver,
                                   list(net.sinks), net.is_pi, net.is_po)
        for gate in self.gates.values():
            out.gates[gate.id] = Gate(gate.id, gate.kind, list(gate.fanin),
                                      list(gate.fanout), gate.phase, gate.name)
        return out

    def net_fanout(self, net_id: int) -> int:
        """Number of consumers of a net; a primary output counts as one."""
        net = self.nets[net_id]
        return len(net.sinks) + (1 if net.is_po else 0)


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    gate_id: int | None = None
    net_id: int | None = None

    def key(self):
        return (self.rule,
                self.gate_id if self.gate_id is not None else -1,
                self.net_id if self.net_id is not None else -1,
                self.message)


# validate_netlist rule names
CYCLE = "Cycle"
DANGLING_NET = "DanglingNet"
FANOUT_VIOLATION = "FanoutViolation"
UNBALANCED_FANIN = "UnbalancedFanin"
BAD_ARITY = "BadArity"
MISSING_PHASE = "MissingPhase"


def validate_netlist(netlist: Netlist, *, require_single_sink: bool = True,
                     require_phases: bool = False) -> list[Violation]:
    """Structural audit of a netlist; returns every invariant breach.

    ``require_single_sink`` enforces the fan-out-of-one discipline (off for
    raw structural input where multi-sink nets are still legal).
    ``require_phases`` additionally checks that every gate carries a clock
    phase and that each gate's fanin drivers all sit exactly one phase
    earlier.
    """
    out: list[Violation] = []
    try:
        netlist.topo_order()
    except ValueError:
        out.append(Violation(CYCLE, "combinational cycle detected"))
        return out

    for net in netlist.nets.values():
        if net.driver is None and not net.is_pi:
            out.append(Violation(DANGLING_NET, f"net {net.name} has no driver",
                                 net_id=net.id))
        if not net.sinks and not net.is_po and not net.is_pi:
            # a primary input synthesis proved irrelevant keeps its pad but
            # carries no wire; only internal nets must have a consumer
            out.append(Violation(DANGLING_NET, f"net {net.name} has no consumer",
                                 net_id=net.id))

    for gate in netlist.gates.values():
        if len(gate.fanin) != gate.kind.n_inputs or len(gate.fanout) != gate.kind.n_outputs:
            out.append(Violation(BAD_ARITY,
                                 f"gate {gate.id} ({gate.kind.name}) pin count mismatch",
                                 gate_id=gate.id))
        if require_single_sink:
            for net_id in gate.fanout:
                if netlist.net_fanout(net_id) > 1:
                    out.append(Violation(
                        FANOUT_VIOLATION,
                        f"gate {gate.id} ({gate.kind.name}) drives net "
                        f"{netlist.nets[net_id].name} with fan-out "
                        f"{netlist.net_fanout(net_id)}",
                        gate_id=gate.id, net_id=net_id))

    if require_phases:
        for gate in sorted(netlist.gates.values(), key=lambda g: g.id):
            if gate.phase is None:
                out.append(Violation(MISSING_PHASE, f"gate {gate.id} has no phase",
                                     gate_id=gate.id))
                continue
            for net_id in gate.fanin:
                drv = netlist.nets[net_id].driver
                drv_phase = -1 if drv is None else netlist.gates[drv[0]].phase
                if drv_phase is None or drv_phase != gate.phase - 1:
                    out.append(Violation(
                        UNBALANCED_FANIN,
                        f"gate {gate.id} at phase {gate.phase} consumes net "
                        f"{netlist.nets[net_id].name} driven at phase {drv_phase}",
                        gate_id=gate.id, net_id=net_id))
    out.sort(key=Violation.key)
    return out


def jj_and_net_stats(netlist: Netlist) -> tuple[int, int, int]:
    """(total JJ count, net count, logic depth) of a netlist."""
    jj = sum(g.kind.jj_count for g in netlist.gates.values())
    return jj, len(netlist.nets), netlist.depth()


@dataclass
class FlowConfig:
    """Knobs for the whole flow; geometry knobs are integer micrometres."""

    lambda_t: float = 0.001          # timing term weight in the placement objective
    lambda_w: float = 1.0            # wirelength term weight
    w_max: int = 600                 # max routed net length
    s_min: int = 10                  # min spacing between cells / wires
    alpha: int = 2                   # timing penalty exponent
    gamma: float = 40.0              # wirelength smoothing temperature
    target_clock_ghz: float = 5.0
    grid_step: int = 10              # routing/placement grid pitch
    max_expansions: int = 20         # channel space-expansion attempts per gap
    rng_seed: int = 1
    d_gate_ps: float = 5.0           # fixed per-gate delay
    d_wire_ps_per_um: float = 0.02   # wire delay slope
    gp_iterations: int = 500         # gradient-descent iteration cap
    gp_beta: float = 0.9             # momentum coefficient
    gamma_decay: float = 0.7         # gamma multiplier every gamma_decay_every iterations
    gamma_decay_every: int = 50
    dp_window: int = 3               # detailed placement sliding window size
    dp_rounds: int = 8
    buffer_row_cap: int = 8          # max buffer rows inserted for long nets
    repair_rounds: int = 3
    die_margin: int = 10

    def validate(self) -> list[str]:
        errs = []
        if self.s_min <= 0:
            errs.append("s_min must be positive")
        if self.grid_step <= 0:
            errs.append("grid_step must be positive")
        if self.s_min % self.grid_step:
            errs.append("s_min must be a multiple of grid_step")
        if self.w_max <= self.s_min:
            errs.append("w_max must exceed s_min")
        if self.alpha < 1 or self.alpha != int(self.alpha):
            errs.append("alpha must be an integer >= 1")
        if self.gamma <= 0:
            errs.append("gamma must be positive")
        if self.target_clock_ghz <= 0:
            errs.append("target_clock_ghz must be positive")
        if self.max_expansions < 0:
            errs.append("max_expansions must be >= 0")
        if self.lambda_t < 0 or self.lambda_w < 0:
            errs.append("objective weights must be >= 0")
        return errs

    def phase_budget_ps(self) -> float:
        """Time available to one clock phase: a period is split four ways."""
        return 1000.0 / (4.0 * self.target_clock_ghz)

    def replace(self, **kw) -> "FlowConfig":
        return replace(self, **kw)
