"""Parsers and writers for the textual formats used by the flow.

Netlist (.nl): BLIF-like, line oriented.  ``#`` starts a comment.
Directives:

    .model NAME           optional, default "top"
    .inputs a b c
    .outputs y z
    .end                  optional terminator

Gate lines are ``KIND out... in... [@phase]`` with one output name per
cell output (splitters have several; the ``@phase`` suffix appears in
balanced intermediate artifacts).  Signals match
``[A-Za-z_][A-Za-z0-9_\\[\\].]*``, gate ids are assigned in file order,
and forward references are legal.  Primary outputs must be gate-driven
(a passthrough needs an explicit BUF).

Cell library (.lib):

    .library NAME
    .cell NAME jj=N width=W height=H [table=0xNN]
    in DX DY              one line per input pin, bottom edge
    out DX DY             one line per output pin, top edge
    .endcell

Flow config (.cfg): ``key = value`` lines matching FlowConfig fields.
"""

from __future__ import annotations

import re
from functools import lru_cache

from .model import (AOI_KINDS, CellKind, CellLibrary, FlowConfig, Netlist)

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_\[\].]*\Z")

# Kinds every usable cell library must define.
MANDATORY_KINDS = ("BUF", "INV", "MAJ3", "AND", "OR", "SPL2", "CONST0", "CONST1")


class NetlistSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


def _tokens(text: str):
    """Yield (line_no, [(col, token), ...]) for non-empty lines."""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = [(m.start() + 1, m.group(0)) for m in re.finditer(r"\S+", line)]
        if toks:
            yield line_no, toks


def structural_kinds() -> dict[str, CellKind]:
    """Kind registry for parsing: library cells plus the structural-only
    gate kinds that majority conversion eliminates."""
    kinds = dict(sample_library().kinds)
    # Structural-only kinds; geometry is a placeholder (never placed) and
    # jj counts reflect their cheapest realized form.
    two_in = (((20, 0), (40, 0)), ((30, 70),))
    kinds["NAND"] = CellKind("NAND", 2, 1, 60, 70, 8, *two_in, table=0x7)
    kinds["NOR"] = CellKind("NOR", 2, 1, 60, 70, 8, *two_in, table=0x1)
    kinds["XOR"] = CellKind("XOR", 2, 1, 60, 70, 20, *two_in, table=0x6)
    kinds["XNOR"] = CellKind("XNOR", 2, 1, 60, 70, 20, *two_in, table=0x9)
    kinds["NOT"] = kinds["INV"]
    return kinds


def parse_netlist(text: str, kinds: dict[str, CellKind] | None = None) -> Netlist:
    """Parse a .nl netlist; raises NetlistSyntaxError with position info."""
    if kinds is None:
        kinds = structural_kinds()

    module = "top"
    saw_model = False
    ended = False
    inputs: list[tuple[int, int, str]] = []
    outputs: list[tuple[int, int, str]] = []
    gate_lines: list[tuple[int, list[tuple[int, str]]]] = []
    for line_no, toks in _tokens(text):
        col0, head = toks[0]
        if ended:
            raise NetlistSyntaxError(f"content after .end: {head}", line_no, col0)
        if head == ".model":
            if len(toks) != 2:
                raise NetlistSyntaxError(".model takes one name", line_no, col0)
            if saw_model:
                raise NetlistSyntaxError("duplicate .model", line_no, col0)
            saw_model = True
            module = toks[1][1]
        elif head == ".inputs":
            inputs.extend((line_no, c, t) for c, t in toks[1:])
        elif head == ".outputs":
            outputs.extend((line_no, c, t) for c, t in toks[1:])
        elif head == ".end":
            if len(toks) != 1:
                raise NetlistSyntaxError(".end takes no arguments", line_no, col0)
            ended = True
        elif head.startswith("."):
            raise NetlistSyntaxError(f"unknown directive {head}", line_no, col0)
        else:
            gate_lines.append((line_no, toks))

    for line_no, col, name in inputs + outputs:
        if not IDENT_RE.match(name):
            raise NetlistSyntaxError(f"bad identifier {name!r}", line_no, col)

    # First pass: collect drivers so forward references resolve.
    declared: dict[str, tuple[int, int]] = {}
    for line_no, col, name in inputs:
        if name in declared:
            raise NetlistSyntaxError(f"duplicate input {name}", line_no, col)
        declared[name] = (line_no, col)
    parsed_gates: list[tuple[int, CellKind, str, list[str], int | None]] = []
    for line_no, toks in gate_lines:
        col0, kind_name = toks[0]
        kind = kinds.get(kind_name)
        if kind is None:
            raise NetlistSyntaxError(f"unknown gate kind {kind_name}", line_no, col0)
        rest = toks[1:]
        phase = None
        if rest and rest[-1][1].startswith("@"):
            col_p, tok = rest[-1]
            try:
                phase = int(tok[1:])
            except ValueError:
                raise NetlistSyntaxError(f"bad phase {tok}", line_no, col_p) from None
            if phase < 0:
                raise NetlistSyntaxError(f"negative phase {tok}", line_no, col_p)
            rest = rest[:-1]
        if len(rest) != kind.n_outputs + kind.n_inputs:
            raise NetlistSyntaxError(
                f"{kind_name} takes {kind.n_outputs} output(s) and "
                f"{kind.n_inputs} input(s), got {len(rest)} signals",
                line_no, col0)
        for col, tok in rest:
            if not IDENT_RE.match(tok):
                raise NetlistSyntaxError(f"bad identifier {tok!r}", line_no, col)
        out_names = [t for _, t in rest[:kind.n_outputs]]
        for col, tok in rest[:kind.n_outputs]:
            if tok in declared:
                raise NetlistSyntaxError(f"signal {tok} driven twice", line_no, col)
            declared[tok] = (line_no, col)
        parsed_gates.append((line_no, kind, out_names,
                             [t for _, t in rest[kind.n_outputs:]], phase))

    netlist = Netlist(module)
    net_of: dict[str, int] = {}
    for _, _, name in inputs:
        net = netlist.new_net(name, is_pi=True)
        net_of[name] = net.id
        netlist.primary_inputs.append(net.id)
    for line_no, kind, out_names, in_names, phase in parsed_gates:
        for name in out_names:
            if name not in net_of:
                net_of[name] = netlist.new_net(name).id
        for name in in_names:
            if name not in declared:
                raise NetlistSyntaxError(f"undeclared signal {name}", line_no)
            if name not in net_of:
                net_of[name] = netlist.new_net(name).id
        netlist.new_gate(kind, [net_of[n] for n in in_names],
                         [net_of[n] for n in out_names],
                         phase=phase, name=out_names[0])
    for line_no, col, name in outputs:
        if name not in declared:
            raise NetlistSyntaxError(f"undeclared output {name}", line_no, col)
        if name not in net_of:
            raise NetlistSyntaxError(f"output {name} is driven by no gate", line_no, col)
        net = netlist.nets[net_of[name]]
        if net.is_pi:
            raise NetlistSyntaxError(
                f"output {name} is a primary input; use an explicit BUF", line_no, col)
        if net.is_po:
            raise NetlistSyntaxError(f"duplicate output {name}", line_no, col)
        net.is_po = True
        netlist.primary_outputs.append(net.id)
    return netlist


def write_netlist(netlist: Netlist) -> str:
    """Textual form of a netlist; parse_netlist round-trips it."""
    lines = [f".model {netlist.name}"]
    if netlist.primary_inputs:
        lines.append(".inputs " + " ".join(netlist.nets[n].name
                                           for n in netlist.primary_inputs))
    if netlist.primary_outputs:
        lines.append(".outputs " + " ".join(netlist.nets[n].name
                                            for n in netlist.primary_outputs))
    for gid in sorted(netlist.gates):
        gate = netlist.gates[gid]
        toks = [gate.kind.name]
        toks += [netlist.nets[n].name for n in gate.fanout]
        toks += [netlist.nets[n].name for n in gate.fanin]
        if gate.phase is not None:
            toks.append(f"@{gate.phase}")
        lines.append(" ".join(toks))
    lines.append(".end")
    return "\n".join(lines) + "\n"


class LibrarySyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_cell_library(text: str) -> CellLibrary:
    name = "library"
    kinds: dict[str, CellKind] = {}
    cur: dict | None = None

    def finish(line_no: int):
        nonlocal cur
        kind = CellKind(cur["name"], len(cur["in"]), len(cur["out"]),
                        cur["width"], cur["height"], cur["jj"],
                        tuple(cur["in"]), tuple(cur["out"]), cur["table"])
        errs = kind.check()
        if kind.table is not None and not (0 <= kind.table < (1 << (1 << kind.n_inputs))):
            errs.append(f"{kind.name}: truth table does not fit {kind.n_inputs} inputs")
        if errs:
            raise LibrarySyntaxError("; ".join(errs), line_no)
        if kind.name in kinds:
            raise LibrarySyntaxError(f"duplicate cell {kind.name}", line_no)
        kinds[kind.name] = kind
        cur = None

    for line_no, toks in _tokens(text):
        head = toks[0][1]
        if head == ".library":
            name = toks[1][1]
        elif head == ".cell":
            if cur is not None:
                raise LibrarySyntaxError("nested .cell", line_no)
            if len(toks) < 2:
                raise LibrarySyntaxError(".cell needs a name", line_no)
            cur = {"name": toks[1][1], "jj": None, "width": None,
                   "height": None, "table": None, "in": [], "out": []}
            for _, tok in toks[2:]:
                if "=" not in tok:
                    raise LibrarySyntaxError(f"bad attribute {tok!r}", line_no)
                key, val = tok.split("=", 1)
                try:
                    if key == "table":
                        cur["table"] = int(val, 0)
                    elif key in ("jj", "width", "height"):
                        cur[key] = int(val)
                    else:
                        raise LibrarySyntaxError(f"unknown attribute {key!r}", line_no)
                except ValueError as exc:
                    if isinstance(exc, LibrarySyntaxError):
                        raise
                    raise LibrarySyntaxError(f"bad number in {tok!r}", line_no) from None
        elif head == ".endcell":
            if cur is None:
                raise LibrarySyntaxError(".endcell without .cell", line_no)
            for key in ("jj", "width", "height"):
                if cur[key] is None:
                    raise LibrarySyntaxError(f"cell {cur['name']} missing {key}", line_no)
            finish(line_no)
        elif head in ("in", "out"):
            if cur is None:
                raise LibrarySyntaxError("pin outside .cell", line_no)
            if len(toks) != 3:
                raise LibrarySyntaxError("pin line is: in|out DX DY", line_no)
            try:
                cur[head].append((int(toks[1][1]), int(toks[2][1])))
            except ValueError:
                raise LibrarySyntaxError("pin coordinates must be integers",
                                         line_no) from None
        else:
            raise LibrarySyntaxError(f"unexpected token {head!r}", line_no)
    if cur is not None:
        raise LibrarySyntaxError(f"unterminated cell {cur['name']}", 0)
    missing = [k for k in MANDATORY_KINDS if k not in kinds]
    if missing:
        raise LibrarySyntaxError(f"MissingKind: {', '.join(missing)}", 0)
    return CellLibrary(name, kinds)


SAMPLE_LIBRARY_TEXT = """\
# Sample AQFP cell library.  Dimensions in um; every edge and pin sits on
# the 10 um routing grid.  JJ counts: 2 per buffer/inverter stage, 6 per
# logic gate, 2 per splitter output branch.
.library sample

.cell BUF jj=2 width=40 height=30
in 20 0
out 20 30
.endcell

.cell INV jj=2 width=40 height=30 table=0x1
in 20 0
out 20 30
.endcell

.cell CONST0 jj=2 width=40 height=30 table=0x0
out 20 30
.endcell

.cell CONST1 jj=2 width=40 height=30 table=0x1
out 20 30
.endcell

.cell AND jj=6 width=60 height=70 table=0x8
in 20 0
in 40 0
out 30 70
.endcell

.cell OR jj=6 width=60 height=70 table=0xE
in 20 0
in 40 0
out 30 70
.endcell

.cell MAJ3 jj=6 width=60 height=70 table=0xE8
in 10 0
in 30 0
in 50 0
out 30 70
.endcell

.cell SPL2 jj=4 width=40 height=30
in 20 0
out 10 30
out 30 30
.endcell

.cell SPL3 jj=6 width=60 height=30
in 30 0
out 10 30
out 30 30
out 50 30
.endcell

.cell SPL4 jj=8 width=80 height=30
in 40 0
out 10 30
out 30 30
out 50 30
out 70 30
.endcell
"""


@lru_cache(maxsize=1)
def sample_library() -> CellLibrary:
    return parse_cell_library(SAMPLE_LIBRARY_TEXT)


def load_library(path) -> CellLibrary:
    with open(path, "r", encoding="utf-8") as fh:
        lib = parse_cell_library(fh.read())
    errs = lib.check()
    if errs:
        raise LibrarySyntaxError("; ".join(errs), 0)
    return lib


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> FlowConfig:
    cfg = FlowConfig()
    fields = {f: type(getattr(cfg, f)) for f in cfg.__dataclass_fields__}
    updates = {}
    for line_no, toks in _tokens(text):
        joined = " ".join(t for _, t in toks)
        if "=" not in joined:
            raise ConfigError(f"line {line_no}: expected key = value")
        key, val = (s.strip() for s in joined.split("=", 1))
        if key not in fields:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        typ = fields[key]
        try:
            updates[key] = typ(val) if typ is not int else int(val, 0)
        except ValueError:
            raise ConfigError(f"line {line_no}: bad {typ.__name__} value {val!r}") from None
    cfg = cfg.replace(**updates)
    errs = cfg.validate()
    if errs:
        raise ConfigError("; ".join(errs))
    return cfg
