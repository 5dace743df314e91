"""Command line driver.

Subcommands cover the full pipeline (flow) and the individual stages
(synth, balance, place, route, drc) plus a benchmark generator.  Exit
codes: 0 success with clean DRC, 1 a DRC report with findings, 2 bad
input (syntax, validation, missing or stale files), 3 internal failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time

from . import balance as balance_mod
from . import bench, costs, layout as layout_mod, majsynth, outputs, placer, router, sim
from .model import FlowConfig, jj_and_net_stats, validate_netlist
from .netlist_io import (ConfigError, LibrarySyntaxError, NetlistSyntaxError,
                         load_library, parse_config, parse_netlist,
                         sample_library, structural_kinds, write_netlist)

STATE_SCHEMA = "aqflow-state-1"


class InputError(Exception):
    """User-facing input problem; maps to exit code 2."""


class InternalError(Exception):
    """Pipeline self-check failure; maps to exit code 3."""


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _read_json(path: str) -> dict:
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") \
            from None


def _load_cfg(args) -> FlowConfig:
    if getattr(args, "config", None):
        cfg = parse_config(_read(args.config))
    else:
        cfg = FlowConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(rng_seed=args.seed)
    return cfg


def _load_lib(args):
    if getattr(args, "lib", None):
        return load_library(args.lib)
    return sample_library()


def _parse_input_netlist(path: str, kinds=None):
    nl = parse_netlist(_read(path), kinds)
    errs = validate_netlist(nl, require_single_sink=False)
    if errs:
        msgs = "; ".join(f"{v.rule}: {v.message}" for v in errs[:5])
        raise InputError(f"{path}: {msgs}")
    return nl


def _outdir(args, netlist_path: str | None = None) -> str:
    out = args.out
    if not out:
        if netlist_path:
            stem = os.path.splitext(os.path.basename(netlist_path))[0]
            out = f"{stem}.aqflow"
        else:
            raise InputError("--out is required here")
    os.makedirs(out, exist_ok=True)
    return out


def _state_path(outdir: str) -> str:
    return os.path.join(outdir, "flow_state.json")


def _load_state(outdir: str) -> dict:
    path = _state_path(outdir)
    if os.path.exists(path):
        try:
            return json.loads(open(path).read())
        except json.JSONDecodeError:
            pass
    return {"schema": STATE_SCHEMA, "stages": {}}


def _save_state(outdir: str, state: dict, cfg: FlowConfig) -> None:
    state["schema"] = STATE_SCHEMA
    state["config"] = dataclasses.asdict(cfg)
    with open(_state_path(outdir), "w") as fh:
        json.dump(state, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _record(state: dict, stage: str, input_sha: str, outputs_: dict,
            wall_s: float) -> None:
    state.setdefault("stages", {})[stage] = {
        "input_sha": input_sha,
        "outputs": outputs_,
        "wall_s": round(wall_s, 4),
    }


def _write_text(path: str, text: str) -> str:
    with open(path, "w") as fh:
        fh.write(text)
    return _sha(text)


def _say(args, msg: str) -> None:
    if getattr(args, "verbose", False):
        print(msg)


# ---------------------------------------------------------------- stages

def _jj_costs(lib) -> dict:
    names = ("AND", "OR", "MAJ3", "INV", "BUF", "CONST0", "CONST1")
    return {n: lib.kind(n).jj_count for n in names if n in lib.kinds}


def _synth(nl, lib, args, cfg):
    db = majsynth.build_mapping_table(_jj_costs(lib))
    maj = majsynth.convert_to_majority(nl, db, lib)
    if len(nl.primary_inputs) <= 16 and not sim.equivalent(nl, maj):
        raise InternalError("majority conversion changed the logic function")
    if getattr(args, "dump_majtable", None):
        dump = {}
        for table in range(256):
            m = db.best(table)
            dump[f"0x{table:02x}"] = {"scheme": m.scheme, "jj": m.jj,
                                      "levels": m.levels}
        outputs.write_json(dump, args.dump_majtable)
    return maj


def cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    lib = _load_lib(args)
    text = _read(args.netlist)
    nl = _parse_input_netlist(args.netlist)
    outdir = _outdir(args, args.netlist)
    t0 = time.perf_counter()
    maj = _synth(nl, lib, args, cfg)
    sha = _write_text(os.path.join(outdir, "maj.nl"), write_netlist(maj))
    state = _load_state(outdir)
    _record(state, "synth", _sha(text), {"maj.nl": sha},
            time.perf_counter() - t0)
    _save_state(outdir, state, cfg)
    jj, nets, depth = jj_and_net_stats(maj)
    _say(args, f"[synth] jj={jj} nets={nets} depth={depth}")
    return 0


def cmd_balance(args) -> int:
    cfg = _load_cfg(args)
    lib = _load_lib(args)
    text = _read(args.netlist)
    nl = _parse_input_netlist(args.netlist)
    outdir = _outdir(args, args.netlist)
    t0 = time.perf_counter()
    bal = balance_mod.balance_netlist(nl, lib)
    errs = validate_netlist(bal, require_phases=True)
    if errs:
        raise InternalError(f"balancing broke invariants: {errs[0].message}")
    sha = _write_text(os.path.join(outdir, "balanced.nl"), write_netlist(bal))
    state = _load_state(outdir)
    _record(state, "balance", _sha(text), {"balanced.nl": sha},
            time.perf_counter() - t0)
    _save_state(outdir, state, cfg)
    _say(args, f"[balance] gates={len(bal.gates)} depth={bal.depth()}")
    return 0


def _place_and_fix(bal, lib, cfg):
    res = placer.place(bal, lib, cfg)
    added = placer.insert_buffer_rows(bal, lib, res.placement, cfg)
    return res, added


def _write_trace(path: str, trace) -> None:
    with open(path, "w") as fh:
        fh.write("iter,gamma,objective\n")
        for it, gamma, obj in trace:
            fh.write(f"{it},{gamma:.6g},{obj:.6f}\n")


def cmd_place(args) -> int:
    cfg = _load_cfg(args)
    lib = _load_lib(args)
    text = _read(args.netlist)
    bal = parse_netlist(text, dict(structural_kinds()))
    errs = validate_netlist(bal, require_phases=True)
    if errs:
        raise InputError(
            f"{args.netlist}: not a balanced netlist ({errs[0].rule}: "
            f"{errs[0].message})")
    outdir = _outdir(args, args.netlist)
    t0 = time.perf_counter()
    res, added = _place_and_fix(bal, lib, cfg)
    pd = outputs.placement_to_dict(res.placement, write_netlist(bal), _sha(text))
    ppath = os.path.join(outdir, "placement.json")
    outputs.write_json(pd, ppath)
    if getattr(args, "trace_objective", None):
        _write_trace(args.trace_objective, res.trace)
    state = _load_state(outdir)
    _record(state, "place", _sha(text),
            {"placement.json": _sha(open(ppath).read())},
            time.perf_counter() - t0)
    _save_state(outdir, state, cfg)
    _say(args, f"[place] hpwl {res.hpwl_start:.0f} -> {res.hpwl_final:.0f} "
               f"buffer_rows_added={added}")
    return 0


def cmd_route(args) -> int:
    cfg = _load_cfg(args)
    lib = _load_lib(args)
    outdir = _outdir(args)
    ppath = os.path.join(outdir, "placement.json")
    ptext = _read(ppath)
    try:
        pl, nl_text, _ = outputs.placement_from_dict(json.loads(ptext))
    except (ValueError, KeyError) as e:
        raise InputError(f"{ppath}: {e}") from None
    bal = parse_netlist(nl_text, dict(structural_kinds()))
    state = _load_state(outdir)
    placed = state.get("stages", {}).get("place", {}).get("outputs", {})
    if placed.get("placement.json") not in (None, _sha(ptext)):
        raise InputError(f"{ppath} does not match the recorded place stage; "
                         f"rerun place")
    t0 = time.perf_counter()
    db = router.route_all(bal, lib, pl, cfg)
    lay = layout_mod.generate_layout(bal, lib, pl, db, cfg)
    rpath = os.path.join(outdir, "routes.json")
    outputs.write_json(outputs.routes_to_dict(db, _sha(ptext), pl.geom.gaps),
                       rpath)
    outputs.write_layout_json(lay, os.path.join(outdir, "design.layout.json"))
    outputs.write_layout_svg(lay, os.path.join(outdir, "design.svg"),
                             title=bal.name)
    _record(state, "route", _sha(ptext),
            {"routes.json": _sha(open(rpath).read())},
            time.perf_counter() - t0)
    _save_state(outdir, state, cfg)
    _say(args, f"[route] nets={len(db.routes)} wl={db.total_length} "
               f"expansions={sum(db.expansions.values())}")
    return 0


def cmd_drc(args) -> int:
    cfg = _load_cfg(args)
    outdir = _outdir(args)
    lpath = args.layout or os.path.join(outdir, "design.layout.json")
    try:
        lay = outputs.read_layout_json(lpath)
    except ValueError as e:
        raise InputError(str(e)) from None
    t0 = time.perf_counter()
    report = layout_mod.run_drc(lay, cfg)
    outputs.write_drc_report(report, os.path.join(outdir, "drc.report.json"))
    state = _load_state(outdir)
    rpt_path = os.path.join(outdir, "drc.report.json")
    _record(state, "drc", _sha(open(lpath).read()),
            {"drc.report.json": _sha(open(rpt_path).read())},
            time.perf_counter() - t0)
    _save_state(outdir, state, cfg)
    for v in report.violations[: 20 if not args.verbose else None]:
        print(f"{v.rule} at ({v.x},{v.y}) {v.subject}: {v.message}")
    _say(args, f"[drc] clean={report.clean} "
               f"violations={len(report.violations)}")
    return 0 if report.clean else 1


def cmd_flow(args) -> int:
    cfg = _load_cfg(args)
    lib = _load_lib(args)
    text = _read(args.netlist)
    nl = _parse_input_netlist(args.netlist)
    outdir = _outdir(args, args.netlist)
    state = _load_state(outdir)

    t0 = time.perf_counter()
    maj = _synth(nl, lib, args, cfg)
    maj_text = write_netlist(maj)
    _record(state, "synth", _sha(text),
            {"maj.nl": _write_text(os.path.join(outdir, "maj.nl"), maj_text)},
            time.perf_counter() - t0)
    _say(args, f"[synth] gates={len(maj.gates)}")

    t0 = time.perf_counter()
    bal = balance_mod.balance_netlist(maj, lib)
    errs = validate_netlist(bal, require_phases=True)
    if errs:
        raise InternalError(f"balancing broke invariants: {errs[0].message}")
    if len(nl.primary_inputs) <= 16 and not sim.equivalent(nl, bal):
        raise InternalError("balancing changed the logic function")
    bal_text = write_netlist(bal)
    _record(state, "balance", _sha(maj_text),
            {"balanced.nl": _write_text(os.path.join(outdir, "balanced.nl"),
                                        bal_text)},
            time.perf_counter() - t0)
    _say(args, f"[balance] gates={len(bal.gates)} depth={bal.depth()}")

    t0 = time.perf_counter()
    res, _added = _place_and_fix(bal, lib, cfg)
    pl = res.placement
    pd = outputs.placement_to_dict(pl, write_netlist(bal), _sha(bal_text))
    ppath = os.path.join(outdir, "placement.json")
    outputs.write_json(pd, ppath)
    ptext = open(ppath).read()
    if getattr(args, "trace_objective", None):
        _write_trace(args.trace_objective, res.trace)
    _record(state, "place", _sha(bal_text),
            {"placement.json": _sha(ptext)}, time.perf_counter() - t0)
    _say(args, f"[place] hpwl {res.hpwl_start:.0f} -> {res.hpwl_final:.0f}")

    t0 = time.perf_counter()
    db = router.route_all(bal, lib, pl, cfg)
    lay = layout_mod.generate_layout(bal, lib, pl, db, cfg)
    report = layout_mod.run_drc(lay, cfg)
    if not report.clean:
        lay, report, rounds, db = layout_mod.repair(bal, lib, pl, cfg, lay,
                                                    report)
        _say(args, f"[repair] rounds={rounds} clean={report.clean}")
    rpath = os.path.join(outdir, "routes.json")
    outputs.write_json(outputs.routes_to_dict(db, _sha(ptext), pl.geom.gaps),
                       rpath)
    _record(state, "route", _sha(ptext),
            {"routes.json": _sha(open(rpath).read())},
            time.perf_counter() - t0)
    _say(args, f"[route] wl={db.total_length}")

    outputs.write_layout_json(lay, os.path.join(outdir, "design.layout.json"))
    outputs.write_layout_svg(lay, os.path.join(outdir, "design.svg"),
                             title=nl.name)
    timing = costs.analyze_timing(db.lengths_by_name(), cfg)
    buffers = sum(1 for g in bal.gates.values() if g.kind.name == "BUF")
    rep = outputs.flow_report(maj, bal, lay, placer.hpwl_of(bal, lib, pl),
                              buffers, timing.wns_ps, nl.name)
    outputs.write_flow_report(rep, os.path.join(outdir, "flow.report.json"))
    outputs.write_drc_report(report, os.path.join(outdir, "drc.report.json"))
    _save_state(outdir, state, cfg)
    _say(args, f"[drc] clean={report.clean}")
    if not args.verbose:
        wns = rep["placement"]["wns_ps"]
        print(f"{nl.name}: jj={rep['routing']['jj']} "
              f"wl={rep['routing']['wirelength_um']} wns={wns} "
              f"drc={'clean' if report.clean else 'VIOLATIONS'}")
    return 0 if report.clean else 1


def cmd_gen_bench(args) -> int:
    try:
        nl = bench.gen_bench(args.seed if args.seed is not None else 1,
                             args.pis, args.gates,
                             name=args.name, xor=args.xor)
    except bench.BenchSpecError as e:
        raise InputError(str(e)) from None
    text = write_netlist(nl)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ------------------------------------------------------------------ cli

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="aqflow",
        description="netlist-to-layout flow for phase-clocked majority logic")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, netlist=True):
        if netlist:
            p.add_argument("netlist", help="input .nl netlist")
        p.add_argument("--lib", help="cell library file (built-in if omitted)")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, help="override rng_seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("flow", help="run the full pipeline")
    common(p)
    p.add_argument("--trace-objective", metavar="CSV",
                   help="write the placement objective trace")
    p.add_argument("--dump-majtable", metavar="JSON",
                   help="dump the majority mapping table")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("synth", help="majority conversion only")
    common(p)
    p.add_argument("--dump-majtable", metavar="JSON")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("balance", help="splitter and buffer insertion")
    common(p)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("place", help="place a balanced netlist")
    common(p)
    p.add_argument("--trace-objective", metavar="CSV")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("route", help="route a placed design (needs --out dir "
                                     "with placement.json)")
    common(p, netlist=False)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("drc", help="check a layout file")
    common(p, netlist=False)
    p.add_argument("--layout", help="layout JSON (default <out>/design.layout.json)")
    p.set_defaults(func=cmd_drc)

    p = sub.add_parser("gen-bench", help="generate a random benchmark")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--pis", type=int, required=True)
    p.add_argument("--gates", type=int, required=True)
    p.add_argument("--name", default="bench")
    p.add_argument("--xor", action="store_true")
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.set_defaults(func=cmd_gen_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (NetlistSyntaxError, LibrarySyntaxError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except InternalError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 3
    except (router.CongestionError, placer.PlacementError) as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # noqa: BLE001  - last-resort guard for the CLI
        if getattr(args, "verbose", False):
            raise
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
