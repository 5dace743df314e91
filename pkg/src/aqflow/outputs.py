"""Artifact writers: layout JSON, SVG rendering, reports.

Everything here must be byte-stable for a given design: fixed iteration
orders, sorted keys, integer micron coordinates, no timestamps.  Wall
clock readings live in the flow state file only, which is exempt from
the reproducibility guarantee.
"""

from __future__ import annotations

import json

from .layout import DrcReport, Layout
from .model import Netlist, jj_and_net_stats
from .placer import CellPlace, Placement, RowGeometry
from .router import Route, RouteDB

_SCHEMA = "aqflow-layout-1"
_PLACE_SCHEMA = "aqflow-placement-1"
_ROUTES_SCHEMA = "aqflow-routes-1"


def placement_to_dict(pl: Placement, netlist_text: str, source_sha: str) -> dict:
    """The placement artifact embeds the netlist it was computed for:
    buffer-row insertion during placement may have extended it beyond the
    balanced input, and routing must see exactly this version."""
    return {
        "schema": _PLACE_SCHEMA,
        "source_sha": source_sha,
        "netlist": netlist_text,
        "what": pl.what,
        "geom": {"n_rows": pl.geom.n_rows, "band_h": pl.geom.band_h,
                 "gaps": list(pl.geom.gaps), "margin": pl.geom.margin},
        "cells": {str(g): [c.x, c.row] for g, c in sorted(pl.cells.items())},
        "pi_pads": dict(sorted(pl.pi_pads.items())),
        "po_pads": dict(sorted(pl.po_pads.items())),
    }


def placement_from_dict(d: dict):
    if d.get("schema") != _PLACE_SCHEMA:
        raise ValueError("not a placement file")
    g = d["geom"]
    geom = RowGeometry(n_rows=g["n_rows"], band_h=g["band_h"],
                       gaps=list(g["gaps"]), margin=g["margin"])
    pl = Placement(
        cells={int(k): CellPlace(x=v[0], row=v[1])
               for k, v in d["cells"].items()},
        pi_pads=dict(d["pi_pads"]), po_pads=dict(d["po_pads"]),
        geom=geom, what=d["what"])
    return pl, d["netlist"], d["source_sha"]


def routes_to_dict(db: RouteDB, placement_sha: str, gaps: list) -> dict:
    return {
        "schema": _ROUTES_SCHEMA,
        "placement_sha": placement_sha,
        "gaps": list(gaps),           # post-expansion channel heights
        "total_length": db.total_length,
        "expansions": {str(g): n for g, n in sorted(db.expansions.items())},
        "routes": [
            {"net": r.name, "net_id": r.net_id, "gap": r.gap,
             "length": r.length, "cost": r.cost,
             "nodes": [list(n) for n in r.nodes]}
            for r in sorted(db.routes.values(), key=lambda r: r.net_id)
        ],
    }


def routes_from_dict(d: dict):
    if d.get("schema") != _ROUTES_SCHEMA:
        raise ValueError("not a routes file")
    db = RouteDB()
    for r in d["routes"]:
        db.routes[r["net_id"]] = Route(
            net_id=r["net_id"], name=r["net"], gap=r["gap"],
            nodes=[tuple(n) for n in r["nodes"]], length=r["length"],
            cost=r["cost"])
    db.expansions = {int(g): n for g, n in d["expansions"].items()}
    return db, list(d["gaps"]), d["placement_sha"]


def write_json(obj: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def layout_to_dict(layout: Layout) -> dict:
    return {
        "schema": _SCHEMA,
        "die": list(layout.die),
        "what": layout.what,
        "rows": {
            "count": layout.n_rows,
            "band_h": layout.band_h,
            "gaps": list(layout.gaps),
            "margin": layout.margin,
        },
        "cells": [
            {"id": c.gate_id, "kind": c.kind, "x": c.x, "y": c.y,
             "w": c.width, "h": c.height, "row": c.row}
            for c in sorted(layout.cells, key=lambda c: c.gate_id)
        ],
        "pads": {
            "inputs": {n: list(xy) for n, xy in sorted(layout.pi_pads.items())},
            "outputs": {n: list(xy) for n, xy in sorted(layout.po_pads.items())},
        },
        "routes": [
            {"net": r.name, "net_id": r.net_id, "gap": r.gap,
             "length": r.length, "cost": r.cost,
             "nodes": [list(n) for n in r.nodes]}
            for r in sorted(layout.routes.routes.values(),
                            key=lambda r: r.net_id)
        ],
        "expansions": {str(g): n
                       for g, n in sorted(layout.routes.expansions.items())},
    }


def write_layout_json(layout: Layout, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(layout_to_dict(layout), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_layout_json(path: str) -> Layout:
    with open(path) as fh:
        d = json.load(fh)
    if d.get("schema") != _SCHEMA:
        raise ValueError(f"{path}: not a layout file")
    from .layout import CellInst
    db = RouteDB()
    for r in d["routes"]:
        db.routes[r["net_id"]] = Route(
            net_id=r["net_id"], name=r["net"], gap=r["gap"],
            nodes=[tuple(n) for n in r["nodes"]], length=r["length"],
            cost=r["cost"])
    db.expansions = {int(g): n for g, n in d["expansions"].items()}
    rows = d["rows"]
    return Layout(
        die=tuple(d["die"]),
        cells=[CellInst(gate_id=c["id"], kind=c["kind"], x=c["x"], y=c["y"],
                        width=c["w"], height=c["h"], row=c["row"])
               for c in d["cells"]],
        routes=db,
        pi_pads={n: tuple(xy) for n, xy in d["pads"]["inputs"].items()},
        po_pads={n: tuple(xy) for n, xy in d["pads"]["outputs"].items()},
        n_rows=rows["count"], gaps=list(rows["gaps"]), band_h=rows["band_h"],
        margin=rows["margin"], what=d["what"])


_CELL_FILL = {
    "BUF": "#d9d9d9", "INV": "#c4b5e0", "SPL2": "#bfe3bf", "SPL3": "#bfe3bf",
    "SPL4": "#bfe3bf", "MAJ3": "#9fc5e8", "AND": "#a8d0f0", "OR": "#b4dcf5",
    "CONST0": "#f0d0a8", "CONST1": "#f0d0a8",
}
_LAYER_STROKE = {0: "#cc3333", 1: "#3355cc"}


def write_layout_svg(layout: Layout, path: str, title: str = "layout") -> None:
    """Plain SVG, one user unit per micron, y flipped so row 0 sits at
    the bottom."""
    x0, y0, x1, y1 = layout.die
    w, h = x1 - x0, y1 - y0

    def fy(y):
        return y1 - y + y0   # mirror vertically inside the die box

    parts = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{x0} {y0} {w} {h}" width="{w}" height="{h}">')
    parts.append(f"<title>{title}</title>")
    parts.append(
        f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" '
        f'fill="#fafaf7" stroke="#444444" stroke-width="2"/>')
    for c in sorted(layout.cells, key=lambda c: c.gate_id):
        fill = _CELL_FILL.get(c.kind, "#e8e8e8")
        parts.append(
            f'<rect x="{c.x}" y="{fy(c.y + c.height)}" width="{c.width}" '
            f'height="{c.height}" fill="{fill}" stroke="#555555" '
            f'stroke-width="1"/>')
    for r in sorted(layout.routes.routes.values(), key=lambda r: r.net_id):
        for sx, sy, ex, ey, layer in r.segments():
            parts.append(
                f'<line x1="{sx}" y1="{fy(sy)}" x2="{ex}" y2="{fy(ey)}" '
                f'stroke="{_LAYER_STROKE[layer]}" stroke-width="3" '
                f'stroke-linecap="round"/>')
        for vx, vy in r.vias():
            parts.append(
                f'<rect x="{vx - 3}" y="{fy(vy) - 3}" width="6" height="6" '
                f'fill="#222222"/>')
    for name in sorted(layout.pi_pads):
        px, py = layout.pi_pads[name]
        parts.append(f'<circle cx="{px}" cy="{fy(py)}" r="5" fill="#2d7d2d"/>')
    for name in sorted(layout.po_pads):
        px, py = layout.po_pads[name]
        parts.append(f'<circle cx="{px}" cy="{fy(py)}" r="5" fill="#7d2d2d"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")


def flow_report(maj_nl: Netlist, final_nl: Netlist, layout: Layout,
                hpwl_um: float, buffers: int, wns_ps: float,
                design: str) -> dict:
    """Summary mirroring the three result tables: logic stats after
    majority conversion, placement quality, and the routed design.
    runtime_s is reported as null here and tracked in the flow state
    file, keeping this artifact byte-stable."""
    jj0, nets0, depth0 = jj_and_net_stats(maj_nl)
    jj1, _, _ = jj_and_net_stats(final_nl)
    return {
        "design": design,
        "logic": {"jj": jj0, "nets": nets0, "depth": depth0},
        "placement": {
            "hpwl_um": round(hpwl_um, 1),
            "buffers": buffers,
            "wns_ps": "-" if wns_ps is None or wns_ps >= 0 else round(wns_ps, 3),
            "runtime_s": None,
        },
        "routing": {
            "jj": jj1,
            "nets": len(layout.routes.routes),
            "wirelength_um": layout.routes.total_length,
            "expansions": sum(layout.routes.expansions.values()),
        },
    }


def write_flow_report(report: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def drc_report_dict(report: DrcReport) -> dict:
    return {
        "clean": report.clean,
        "counts": dict(sorted(report.counts.items())),
        "violations": [
            {"rule": v.rule, "subject": v.subject, "x": v.x, "y": v.y,
             "message": v.message}
            for v in report.violations
        ],
    }


def write_drc_report(report: DrcReport, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(drc_report_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
