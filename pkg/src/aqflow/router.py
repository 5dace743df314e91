"""Channel routing between cell rows.

Every net connects a driver pin on the lower boundary of a gap to a sink
pin on its upper boundary (the balanced netlist guarantees adjacency).
Routing runs gap by gap, shortest net first, on a two-layer grid: layer 0
prefers horizontal, layer 1 vertical, wrong-way segments cost double and
vias cost two grid steps.  A gap that cannot fit all its nets is expanded
in s_min increments and rerouted from scratch; cell x positions and row
assignments never change.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import CellLibrary, FlowConfig, Netlist
from .placer import NetPins, Placement, manhattan_length, net_pins


class CongestionError(Exception):
    def __init__(self, gap: int, net_name: str, congestion: dict):
        super().__init__(
            f"gap {gap} still unroutable at net {net_name!r} after expansion cap")
        self.gap = gap
        self.net_name = net_name
        self.congestion = congestion


@dataclass
class Route:
    net_id: int
    name: str
    gap: int
    nodes: list                    # [(x, y, layer)] start pin to sink pin
    length: int                    # wire length incl. driver stub, um
    cost: int                      # router cost (length + penalties)

    def segments(self):
        """Collinear-merged [(x1, y1, x2, y2, layer)], vias excluded."""
        segs = []
        for (x1, y1, l1), (x2, y2, l2) in zip(self.nodes, self.nodes[1:]):
            if l1 != l2:
                continue
            if x1 == x2 and y1 == y2:
                continue
            if segs:
                px1, py1, px2, py2, pl_ = segs[-1]
                if pl_ == l1 and (px2, py2) == (x1, y1):
                    if px1 == px2 == x2 or py1 == py2 == y2:
                        segs[-1] = (px1, py1, x2, y2, pl_)
                        continue
            segs.append((x1, y1, x2, y2, l1))
        return segs

    def vias(self):
        out = []
        for (x1, y1, l1), (x2, y2, l2) in zip(self.nodes, self.nodes[1:]):
            if l1 != l2 and x1 == x2 and y1 == y2:
                out.append((x1, y1))
        return out


@dataclass
class RouteDB:
    routes: dict = field(default_factory=dict)     # net id -> Route
    expansions: dict = field(default_factory=dict) # gap -> expansions used

    @property
    def total_length(self) -> int:
        return sum(r.length for r in self.routes.values())

    def lengths_by_name(self) -> dict:
        return {r.name: r.length for r in self.routes.values()}


class ChannelGrid:
    """Routing grid of one gap: columns x levels on two layers.

    Columns are the grid pitch plus every pin x; levels run at grid pitch
    from the lower boundary to the upper one.  Blockage lives on two
    planes, flat uint8 indexed layer*C*L + ci*L + li: wire_base carries
    committed wires (dilated to s_min), pin_base carries the boundary
    levels plus an access box over every pin (x radius s_min, reaching
    2*s_min into the channel) so no net can wall off another net's pin
    tap.  A net routes on wire_base|pin_base with its own boxes reduced
    to wire_base.
    """

    def __init__(self, cfg: FlowConfig, span, right: int, pin_cols):
        step = cfg.grid_step
        yb, yt = span
        cols = set(range(0, right + step, step)) | set(pin_cols)
        self.col_x = np.array(sorted(cols), dtype=np.int64)
        self.lvl_y = np.arange(yb, yt + 1, step, dtype=np.int64)
        self.col_index = {int(x): i for i, x in enumerate(self.col_x)}
        self.C = len(self.col_x)
        self.L = len(self.lvl_y)
        self.s_min = cfg.s_min
        self.via_cost = 2 * step
        self.wire_base = np.zeros(2 * self.C * self.L, dtype=np.uint8)
        self.pin_base = np.zeros_like(self.wire_base)
        self.work = np.empty_like(self.wire_base)
        rb = cfg.s_min + 1
        ns = self.C * self.L * 2 * 5 * rb
        self.dist = np.empty(ns, dtype=np.int64)
        self.version = np.zeros(ns, dtype=np.int32)
        self.parent = np.empty(ns, dtype=np.int32)
        self.stamp = 0
        cl = self.C * self.L
        for li in (0, self.L - 1):
            for ci in range(self.C):
                self.pin_base[ci * self.L + li] = 1
                self.pin_base[cl + ci * self.L + li] = 1

    def _box(self, ci: int, li: int, rx: int, ry: int):
        """Node indices within |dx| < rx and |dy| < ry of a node."""
        x0 = int(self.col_x[ci])
        y0 = int(self.lvl_y[li])
        cj = ci
        while cj > 0 and x0 - int(self.col_x[cj - 1]) < rx:
            cj -= 1
        out = []
        while cj < self.C and int(self.col_x[cj]) - x0 < rx:
            lj = li
            while lj > 0 and y0 - int(self.lvl_y[lj - 1]) < ry:
                lj -= 1
            while lj < self.L and int(self.lvl_y[lj]) - y0 < ry:
                out.append((cj, lj))
                lj += 1
            cj += 1
        return out

    def block_wire(self, layer: int, ci: int, li: int) -> None:
        """Commit a routed node: same-layer keep-out of s_min around it."""
        cl = self.C * self.L
        for cj, lj in self._box(ci, li, self.s_min, self.s_min):
            self.wire_base[layer * cl + cj * self.L + lj] = 1

    def block_pin(self, ci: int, li: int) -> None:
        """Reserve a pin's access: both layers, twice s_min deep."""
        cl = self.C * self.L
        for cj, lj in self._box(ci, li, self.s_min, 2 * self.s_min):
            self.pin_base[cj * self.L + lj] = 1
            self.pin_base[cl + cj * self.L + lj] = 1

    def open_own_pin(self, ci: int, li: int) -> None:
        """Drop pin reservations inside the box onto the work plane,
        keeping committed-wire blockage intact."""
        cl = self.C * self.L
        for cj, lj in self._box(ci, li, self.s_min, 2 * self.s_min):
            i0 = cj * self.L + lj
            self.work[i0] = self.wire_base[i0]
            self.work[cl + i0] = self.wire_base[cl + i0]

    def congestion(self) -> dict:
        """Blocked interior node count per column, for diagnostics."""
        b = np.bitwise_or(self.wire_base, self.pin_base).reshape(
            2, self.C, self.L)
        inner = b[:, :, 1:-1].sum(axis=(0, 2))
        return {int(x): int(n) for x, n in zip(self.col_x, inner)}


def build_channel_grid(cfg: FlowConfig, geom_span, right: int,
                       pins) -> ChannelGrid:
    """Fresh grid for one gap with every pin's keep-out applied."""
    pin_cols = [p.sx for p in pins] + [p.ex for p in pins]
    grid = ChannelGrid(cfg, geom_span, right, pin_cols)
    for p in pins:
        grid.block_pin(grid.col_index[p.sx], 0)
        grid.block_pin(grid.col_index[p.ex], grid.L - 1)
    return grid


def route_net(grid: ChannelGrid, p: NetPins, cfg: FlowConfig):
    """A* one net across the grid; commits its occupancy on success."""
    s_ci = grid.col_index[p.sx]
    g_ci = grid.col_index[p.ex]
    np.bitwise_or(grid.wire_base, grid.pin_base, out=grid.work)
    grid.open_own_pin(s_ci, 0)
    grid.open_own_pin(g_ci, grid.L - 1)
    grid.stamp += 1
    found, cost, length, path = kernels.astar_search(
        grid.col_x, grid.lvl_y, grid.work, s_ci, 0, g_ci, grid.L - 1,
        cfg.s_min, grid.via_cost, 1, grid.dist, grid.version, grid.parent,
        grid.stamp)
    if not found:
        return None
    nodes = []
    if p.stub > 0:
        first_layer = path[0][2]
        nodes.append((p.sx, p.sy, 1))
        if first_layer == 0:
            nodes.append((int(grid.col_x[path[0][0]]),
                          int(grid.lvl_y[path[0][1]]), 1))
    for ci, li, layer in path:
        nodes.append((int(grid.col_x[ci]), int(grid.lvl_y[li]), layer))
    for ci, li, layer in path:
        grid.block_wire(layer, ci, li)
    return Route(net_id=p.net_id, name=p.name, gap=p.gap, nodes=nodes,
                 length=length + p.stub, cost=cost)


def route_gap(netlist: Netlist, lib: CellLibrary, pl: Placement,
              cfg: FlowConfig, gap: int):
    """Route one gap, expanding its height until everything fits.

    Returns (routes dict, expansions used).  Raises CongestionError once
    the expansion cap is reached.
    """
    right = pl.what
    for p0 in net_pins(netlist, lib, pl):
        right = max(right, p0.sx, p0.ex)
    last_grid = None
    last_fail = ""
    for expansions in range(cfg.max_expansions + 1):
        pins = [p for p in net_pins(netlist, lib, pl) if p.gap == gap]
        pins.sort(key=lambda p: (manhattan_length(p), p.net_id))
        grid = build_channel_grid(cfg, pl.geom.channel_span(gap), right, pins)
        routes = {}
        failed = None
        for p in pins:
            r = route_net(grid, p, cfg)
            if r is None:
                failed = p
                break
            routes[p.net_id] = r
        if failed is None:
            return routes, expansions
        last_grid, last_fail = grid, failed.name
        pl.geom.gaps[gap] += cfg.s_min
    raise CongestionError(gap, last_fail,
                          last_grid.congestion() if last_grid else {})


def route_all(netlist: Netlist, lib: CellLibrary, pl: Placement,
              cfg: FlowConfig) -> RouteDB:
    db = RouteDB()
    for gap in range(pl.geom.n_rows + 1):
        routes, exp = route_gap(netlist, lib, pl, cfg, gap)
        db.routes.update(routes)
        if exp:
            db.expansions[gap] = exp
    return db
