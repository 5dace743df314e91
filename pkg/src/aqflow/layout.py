"""Layout assembly and design-rule checking.

The layout is the flattened geometric view: absolute cell rectangles,
pad points, and routed wire polylines.  DRC re-derives every rule from
the geometry alone so it cross-checks the placer and router instead of
trusting them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .model import CellLibrary, FlowConfig, Netlist
from .placer import Placement, insert_buffer_row, legalize_row
from .router import RouteDB, route_all

RULE_CELL_OVERLAP = "CellOverlap"
RULE_CELL_SPACING = "CellSpacing"
RULE_WIRE_SPACING = "WireSpacing"
RULE_ZIGZAG = "ZigzagSpacing"
RULE_MAX_WIRELENGTH = "MaxWirelength"
RULE_NON_ADJACENT = "NonAdjacentRoute"
RULE_OFF_GRID = "OffGrid"

ALL_RULES = (RULE_CELL_OVERLAP, RULE_CELL_SPACING, RULE_WIRE_SPACING,
             RULE_ZIGZAG, RULE_MAX_WIRELENGTH, RULE_NON_ADJACENT,
             RULE_OFF_GRID)


@dataclass(frozen=True)
class DrcViolation:
    rule: str
    subject: str            # cell or net the finding is anchored to
    x: int
    y: int
    message: str

    def key(self):
        return (self.rule, self.subject, self.x, self.y, self.message)


@dataclass
class CellInst:
    gate_id: int
    kind: str
    x: int
    y: int
    width: int
    height: int
    row: int


@dataclass
class Layout:
    die: tuple                  # (x0, y0, x1, y1)
    cells: list                 # CellInst, ordered by gate id
    routes: RouteDB
    pi_pads: dict               # name -> (x, y)
    po_pads: dict
    n_rows: int
    gaps: list
    band_h: int
    margin: int
    what: int

    def gap_span(self, g: int):
        bottom = self.margin + sum(self.gaps[:g]) + g * self.band_h
        return bottom, bottom + self.gaps[g]


def generate_layout(netlist: Netlist, lib: CellLibrary, pl: Placement,
                    routedb: RouteDB, cfg: FlowConfig) -> Layout:
    geom = pl.geom
    cells = []
    right = pl.what
    for gid in sorted(pl.cells):
        cp = pl.cells[gid]
        kind = netlist.gates[gid].kind
        cells.append(CellInst(gate_id=gid, kind=kind.name, x=cp.x,
                              y=geom.row_base_y(cp.row), width=kind.width,
                              height=kind.height, row=cp.row))
        right = max(right, cp.x + kind.width)
    for r in routedb.routes.values():
        for x, _, _ in r.nodes:
            right = max(right, x)
    pi_pads = {n: (x, geom.channel_span(0)[0]) for n, x in pl.pi_pads.items()}
    po_pads = {n: (x, geom.channel_span(geom.n_rows)[1])
               for n, x in pl.po_pads.items()}
    for x, _ in list(pi_pads.values()) + list(po_pads.values()):
        right = max(right, x)
    die = (-geom.margin, 0, right + geom.margin, geom.die_height())
    return Layout(die=die, cells=cells, routes=routedb, pi_pads=pi_pads,
                  po_pads=po_pads, n_rows=geom.n_rows, gaps=list(geom.gaps),
                  band_h=geom.band_h, margin=geom.margin, what=pl.what)


def _check_cells(layout: Layout, cfg: FlowConfig):
    """Overlap and spacing within each row."""
    out = []
    rows = {}
    for c in layout.cells:
        rows.setdefault(c.row, []).append(c)
    for r in sorted(rows):
        cells = sorted(rows[r], key=lambda c: (c.x, c.gate_id))
        for a, b in zip(cells, cells[1:]):
            gap = b.x - (a.x + a.width)
            if gap < 0:
                out.append(DrcViolation(
                    RULE_CELL_OVERLAP, f"cell{a.gate_id}/cell{b.gate_id}",
                    b.x, a.y, f"row {r}: cells overlap by {-gap}"))
            elif 0 < gap < cfg.s_min:
                out.append(DrcViolation(
                    RULE_CELL_SPACING, f"cell{a.gate_id}/cell{b.gate_id}",
                    a.x + a.width, a.y,
                    f"row {r}: gap {gap} below spacing {cfg.s_min}"))
    return out


def _seg_chebyshev(s1, s2) -> int:
    x11, y11, x12, y12 = min(s1[0], s1[2]), min(s1[1], s1[3]), \
        max(s1[0], s1[2]), max(s1[1], s1[3])
    x21, y21, x22, y22 = min(s2[0], s2[2]), min(s2[1], s2[3]), \
        max(s2[0], s2[2]), max(s2[1], s2[3])
    dx = max(x21 - x12, x11 - x22, 0)
    dy = max(y21 - y12, y11 - y22, 0)
    return max(dx, dy)


def _check_wire_spacing(layout: Layout, cfg: FlowConfig):
    """Same-layer clearance between different nets, per gap."""
    out = []
    by_gap = {}
    for r in layout.routes.routes.values():
        by_gap.setdefault(r.gap, []).append(r)
    for g in sorted(by_gap):
        routes = sorted(by_gap[g], key=lambda r: r.net_id)
        flat = []
        for r in routes:
            for seg in r.segments():
                flat.append((r.name, seg))
        for i in range(len(flat)):
            ni, si = flat[i]
            for j in range(i + 1, len(flat)):
                nj, sj = flat[j]
                if ni == nj or si[4] != sj[4]:
                    continue
                d = _seg_chebyshev(si, sj)
                if d < cfg.s_min:
                    out.append(DrcViolation(
                        RULE_WIRE_SPACING, f"{ni}/{nj}",
                        min(si[0], si[2]), min(si[1], si[3]),
                        f"gap {g} layer {si[4]}: clearance {d} "
                        f"below {cfg.s_min}"))
    return out


def _runs(nodes):
    """Direction-merged straight runs of a polyline, vias skipped."""
    runs = []
    for (x1, y1, _), (x2, y2, _) in zip(nodes, nodes[1:]):
        if x1 == x2 and y1 == y2:
            continue
        d = (0 if x2 == x1 else (1 if x2 > x1 else -1),
             0 if y2 == y1 else (1 if y2 > y1 else -1))
        ln = abs(x2 - x1) + abs(y2 - y1)
        if runs and runs[-1][0] == d:
            runs[-1] = (d, runs[-1][1] + ln, runs[-1][2])
        else:
            runs.append((d, ln, (x1, y1)))
    return runs


def _check_zigzag(layout: Layout, cfg: FlowConfig):
    """Interior straight runs must span at least s_min."""
    out = []
    for r in sorted(layout.routes.routes.values(), key=lambda r: r.net_id):
        runs = _runs(r.nodes)
        for d, ln, at in runs[1:-1]:
            if ln < cfg.s_min:
                out.append(DrcViolation(
                    RULE_ZIGZAG, r.name, at[0], at[1],
                    f"interior run of {ln} below {cfg.s_min}"))
    return out


def _check_max_wirelength(layout: Layout, cfg: FlowConfig):
    out = []
    for r in sorted(layout.routes.routes.values(), key=lambda r: r.net_id):
        if r.length > cfg.w_max:
            out.append(DrcViolation(
                RULE_MAX_WIRELENGTH, r.name, r.nodes[0][0], r.nodes[0][1],
                f"length {r.length} exceeds {cfg.w_max}"))
    return out


def _check_non_adjacent(layout: Layout, cfg: FlowConfig):
    """Wires must stay inside their own gap's y range."""
    out = []
    for r in sorted(layout.routes.routes.values(), key=lambda r: r.net_id):
        yb, yt = layout.gap_span(r.gap)
        yb -= layout.band_h   # driver stubs reach down into the band
        bad = [(x, y) for x, y, _ in r.nodes if not yb <= y <= yt]
        if bad:
            out.append(DrcViolation(
                RULE_NON_ADJACENT, r.name, bad[0][0], bad[0][1],
                f"wire leaves gap {r.gap} y-range"))
    return out


def _check_off_grid(layout: Layout, cfg: FlowConfig):
    """Cell origins and interior wire vertices sit on the grid;
    pin endpoints are exempt."""
    out = []
    step = cfg.grid_step
    for c in layout.cells:
        if c.x % step or c.y % step:
            out.append(DrcViolation(
                RULE_OFF_GRID, f"cell{c.gate_id}", c.x, c.y,
                f"cell origin off {step}um grid"))
    for r in sorted(layout.routes.routes.values(), key=lambda r: r.net_id):
        for x, y, _ in r.nodes[1:-1]:
            if x % step or y % step:
                out.append(DrcViolation(
                    RULE_OFF_GRID, r.name, x, y,
                    f"wire vertex off {step}um grid"))
    return out


_RULE_FUNCS = (
    (RULE_CELL_OVERLAP, _check_cells),
    (RULE_WIRE_SPACING, _check_wire_spacing),
    (RULE_ZIGZAG, _check_zigzag),
    (RULE_MAX_WIRELENGTH, _check_max_wirelength),
    (RULE_NON_ADJACENT, _check_non_adjacent),
    (RULE_OFF_GRID, _check_off_grid),
)


@dataclass
class DrcReport:
    violations: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.violations


def run_drc(layout: Layout, cfg: FlowConfig) -> DrcReport:
    """All rule classes over the layout; deterministic finding order.

    AQFLOW_THREADS > 1 runs rule classes concurrently; the merge order is
    fixed so the report does not depend on scheduling.
    """
    threads = int(os.environ.get("AQFLOW_THREADS", "1") or "1")
    results = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(fn, layout, cfg) for _, fn in _RULE_FUNCS]
            results = [f.result() for f in futs]
    else:
        results = [fn(layout, cfg) for _, fn in _RULE_FUNCS]
    violations = []
    for found in results:
        violations.extend(sorted(found, key=lambda v: v.key()))
    counts = {rule: 0 for rule in ALL_RULES}
    for v in violations:
        counts[v.rule] += 1
    return DrcReport(violations=violations, counts=counts)


def repair(netlist: Netlist, lib: CellLibrary, pl: Placement, cfg: FlowConfig,
           layout: Layout, report: DrcReport):
    """Dispatch violations back to the owning stage and re-run downstream.

    MaxWirelength splits the offending gap with a buffer row; wire
    clearance problems widen the gap; cell problems re-legalize the row.
    At most repair_rounds rounds; returns the final (layout, report,
    rounds, routedb).
    """
    rounds = 0
    routedb = layout.routes
    while not report.clean and rounds < cfg.repair_rounds:
        rounds += 1
        net_gap = {r.name: r.gap for r in routedb.routes.values()}
        # cell fixes first: they do not move gap indices
        bad_rows = set()
        for v in report.violations:
            if v.rule in (RULE_CELL_OVERLAP, RULE_CELL_SPACING):
                for tag in v.subject.split("/"):
                    for c in layout.cells:
                        if f"cell{c.gate_id}" == tag:
                            bad_rows.add(c.row)
        for row in sorted(bad_rows):
            members = [g for g, cp in pl.cells.items() if cp.row == row]
            widths = [netlist.gates[g].kind.width for g in members]
            placed, _ = legalize_row(
                members, widths, [float(pl.cells[g].x) for g in members], cfg)
            for gid, x in placed:
                pl.cells[gid].x = x
        widen = set()
        for v in report.violations:
            if v.rule in (RULE_WIRE_SPACING, RULE_ZIGZAG, RULE_NON_ADJACENT,
                          RULE_OFF_GRID):
                name = v.subject.split("/")[0]
                if name in net_gap:
                    widen.add(net_gap[name])
        for gap in sorted(widen):
            pl.geom.gaps[gap] += cfg.s_min
        # buffer rows last: they renumber every gap above the insert
        overlong = sorted({net_gap[v.subject] for v in report.violations
                           if v.rule == RULE_MAX_WIRELENGTH
                           and v.subject in net_gap})
        for off, gap in enumerate(overlong):
            insert_buffer_row(netlist, lib, pl, cfg, gap + off)
        routedb = route_all(netlist, lib, pl, cfg)
        layout = generate_layout(netlist, lib, pl, routedb, cfg)
        report = run_drc(layout, cfg)
    return layout, report, rounds, routedb
