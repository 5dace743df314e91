"""Row placement: geometry, legalization, descent and buffer rows."""

import random

import pytest

from aqflow import balance, bench, costs, majsynth, placer, sim
from aqflow.model import FlowConfig, validate_netlist
from aqflow.netlist_io import sample_library
from aqflow.placer import PlacementError

TABLE_DB = majsynth.build_mapping_table()


def prepared(seed=3, n_inputs=5, n_gates=18):
    lib = sample_library()
    nl = bench.gen_bench(seed=seed, n_pis=n_inputs, n_gates=n_gates)
    nl = majsynth.convert_to_majority(nl, TABLE_DB, lib=lib)
    nl = balance.balance_netlist(nl, lib)
    return nl, lib, FlowConfig()


# ---------------------------------------------------------------- geometry


def test_geometry_rows_and_gaps():
    nl, lib, cfg = prepared()
    geom = placer.build_geometry(nl, lib, cfg)
    depth = max(g.phase for g in nl.gates.values()) + 1
    assert geom.n_rows == depth
    assert len(geom.gaps) == depth + 1
    assert all(g == 4 * cfg.grid_step for g in geom.gaps)
    assert geom.band_h == max(k.height for k in lib.kinds.values())


def test_geometry_vertical_bookkeeping():
    geom = placer.RowGeometry(n_rows=3, band_h=70, gaps=[40, 50, 40, 60],
                              margin=20)
    # row r sits above gaps 0..r and r bands
    assert geom.row_base_y(0) == 20 + 40
    assert geom.row_base_y(2) == 20 + 40 + 50 + 40 + 2 * 70
    for g in range(4):
        bot, top = geom.channel_span(g)
        assert top - bot == geom.gaps[g]
    # channel g ends exactly where row g starts
    assert geom.channel_span(1)[1] == geom.row_base_y(1)
    assert geom.die_height() == 2 * 20 + sum(geom.gaps) + 3 * 70


def test_geometry_clone_is_deep():
    geom = placer.RowGeometry(2, 70, [40, 40, 40], 20)
    g2 = geom.clone()
    g2.gaps[0] = 99
    assert geom.gaps[0] == 40


# ---------------------------------------------------------------- net pins


def test_net_pins_channel_matches_driver_phase():
    nl, lib, cfg = prepared()
    res = placer.place(nl, lib, cfg)
    pins = placer.net_pins(nl, lib, res.placement)
    # one entry per driven or PI net
    routable = [n for n in nl.nets.values()
                if n.driver is not None or n.is_pi]
    assert len(pins) == len(routable)
    for p in pins:
        assert p.gap == p.phase + 1
        assert p.ey > p.sy
        assert p.stub >= 0
        assert placer.manhattan_length(p) == \
            abs(p.ex - p.sx) + (p.ey - p.sy) + p.stub


def test_net_pins_rejects_unbalanced_fanout():
    lib = sample_library()
    nl = bench.gen_bench(seed=1, n_pis=4, n_gates=8)
    nl = majsynth.convert_to_majority(nl, TABLE_DB, lib=lib)
    # skipping balance leaves multi-sink nets
    assert any(len(n.sinks) > 1 for n in nl.nets.values())
    balance.assign_phases(nl)
    geom = placer.build_geometry(nl, lib, FlowConfig())
    pl = placer.Placement(
        cells={g.id: placer.CellPlace(0, g.phase) for g in nl.gates.values()},
        pi_pads={nl.nets[i].name: 0 for i in nl.primary_inputs},
        po_pads={nl.nets[o].name: 0 for o in nl.primary_outputs},
        geom=geom, what=600)
    with pytest.raises(PlacementError, match="fanout"):
        placer.net_pins(nl, lib, pl)


# ---------------------------------------------------------------- legalize


def row_is_legal(placed, widths_by_gid, cfg):
    xs = sorted(((x, gid) for gid, x in placed))
    cursor = None
    for x, gid in xs:
        assert x >= 0 and x % cfg.grid_step == 0
        if cursor is not None:
            gap = x - cursor
            assert gap == 0 or gap >= cfg.s_min, f"sliver gap {gap}"
        cursor = x + widths_by_gid[gid]


def test_legalize_row_random_rows():
    cfg = FlowConfig()
    rng = random.Random(42)
    for _ in range(300):
        n = rng.randint(1, 25)
        order = list(range(n))
        widths = [rng.choice([40, 50, 70, 90, 110]) for _ in range(n)]
        xs = [rng.uniform(-50, 900) for _ in range(n)]
        placed, disp = placer.legalize_row(order, widths, xs, cfg)
        assert len(placed) == n
        row_is_legal(placed, dict(zip(order, widths)), cfg)
        # input order sorted by (x, gid) is preserved left to right
        want = [g for g, _, _ in sorted(zip(order, widths, xs),
                                        key=lambda t: (t[2], t[0]))]
        got = [g for g, _ in sorted(placed, key=lambda t: (t[1], t[0]))]
        assert got == want
        assert disp >= 0


def test_legalize_row_deterministic():
    cfg = FlowConfig()
    order = [5, 1, 9]
    widths = [50, 70, 40]
    xs = [103.0, 99.0, 260.0]
    a = placer.legalize_row(order, widths, xs, cfg)
    b = placer.legalize_row(list(order), list(widths), list(xs), cfg)
    assert a == b


def test_legalize_row_already_legal_is_untouched():
    cfg = FlowConfig()
    placed, disp = placer.legalize_row([0, 1, 2], [50, 50, 50],
                                       [0.0, 60.0, 120.0], cfg)
    assert placed == [(0, 0), (1, 60), (2, 120)]
    assert disp == 0


# ---------------------------------------------------------------- descent


def test_global_place_objective_never_increases_within_window():
    nl, lib, cfg = prepared(seed=5, n_gates=24)
    geom = placer.build_geometry(nl, lib, cfg)
    rng = random.Random(cfg.rng_seed)
    pl = placer.Placement(cells={}, pi_pads={}, po_pads={}, geom=geom, what=0)
    w_est = placer._estimate_width(nl, lib, cfg)
    for g in nl.gates.values():
        pl.cells[g.id] = placer.CellPlace(
            x=int(rng.uniform(0, max(w_est - g.kind.width, 1))), row=g.phase)
    pl.pi_pads = placer._spread_pads(
        [nl.nets[i].name for i in sorted(nl.primary_inputs)], w_est,
        cfg.grid_step)
    pl.po_pads = placer._spread_pads(
        [nl.nets[o].name for o in sorted(nl.primary_outputs)], w_est,
        cfg.grid_step)
    prob, order = placer.build_gp_problem(nl, lib, cfg, pl, w_est)
    import numpy as np
    x0 = np.array([float(pl.cells[g].x) for g in order])
    x, trace = placer.global_place(x0, prob, cfg)
    assert trace[-1][2] <= trace[0][2]
    by_gamma = {}
    for it, gamma, f in trace:
        by_gamma.setdefault(gamma, []).append(f)
    for fs in by_gamma.values():
        assert all(b <= a + 1e-9 for a, b in zip(fs, fs[1:]))


def test_global_place_single_cell_centers_between_pads():
    # one movable cell fed by a pad at x=0 and feeding a pad at x=400;
    # any x between the pads is wirelength optimal, so descent from a
    # far-right start must end inside the span and lower the objective
    import numpy as np
    cfg = FlowConfig(lambda_t=0.0)
    prob = costs.GPProblem(
        widths=np.array([50.0]),
        rows=np.array([0], dtype=np.int64),
        drv_cell=np.array([-1, 0], dtype=np.int64),
        drv_off=np.array([0.0, 25.0]),
        snk_cell=np.array([0, -1], dtype=np.int64),
        snk_off=np.array([25.0, 400.0]),
        y_ext=np.array([70.0, 70.0]),
        phase=np.array([-1, 0], dtype=np.int64),
        what=400.0,
        net_ids=[0, 1],
    )
    x, trace = placer.global_place(np.array([390.0]), prob, cfg)
    assert -25.0 <= x[0] <= 400.0
    assert trace[-1][2] < trace[0][2]


# ---------------------------------------------------------------- detailed


def test_detailed_place_moves_all_improve():
    nl, lib, cfg = prepared(seed=7, n_gates=22)
    res = placer.place(nl, lib, cfg)
    # move log holds (cost before, cost after) per accepted window
    assert all(after < before - 1e-9 for before, after in res.dp_moves)
    # final placement is still row legal
    rows = {}
    for gid, cp in res.placement.cells.items():
        rows.setdefault(cp.row, []).append(gid)
    for members in rows.values():
        placed = [(g, res.placement.cells[g].x) for g in members]
        row_is_legal(placed,
                     {g: nl.gates[g].kind.width for g in members}, cfg)


def test_detailed_place_lowers_dp_cost():
    nl, lib, cfg = prepared(seed=11, n_gates=20)
    geom = placer.build_geometry(nl, lib, cfg)
    rng = random.Random(9)
    pl = placer.Placement(cells={}, pi_pads={}, po_pads={}, geom=geom, what=0)
    w_est = placer._estimate_width(nl, lib, cfg)
    xs = {}
    for g in nl.gates.values():
        pl.cells[g.id] = placer.CellPlace(x=0, row=g.phase)
        xs[g.id] = rng.uniform(0, w_est)
    pl.pi_pads = placer._spread_pads(
        [nl.nets[i].name for i in sorted(nl.primary_inputs)], w_est,
        cfg.grid_step)
    pl.po_pads = placer._spread_pads(
        [nl.nets[o].name for o in sorted(nl.primary_outputs)], w_est,
        cfg.grid_step)
    placer.legalize(nl, lib, pl, xs, cfg)
    before = placer.dp_total_cost(nl, lib, pl, cfg)
    moves = placer.detailed_place(nl, lib, pl, cfg)
    after = placer.dp_total_cost(nl, lib, pl, cfg)
    assert after <= before + 1e-9
    # same-row cells never share a net (driver and sink are a phase
    # apart), so window gains telescope into the global decrease
    gain = sum(b - a for b, a in moves)
    assert after == pytest.approx(before - gain, abs=1e-6)


# ---------------------------------------------------------------- place()


def test_place_end_to_end_improves_hpwl():
    nl, lib, cfg = prepared(seed=13, n_gates=30)
    res = placer.place(nl, lib, cfg)
    assert res.hpwl_final <= res.hpwl_start
    assert res.hpwl_final == pytest.approx(
        placer.hpwl_of(nl, lib, res.placement))
    assert res.displacement >= 0


def test_place_deterministic():
    nl1, lib, cfg = prepared(seed=17, n_gates=16)
    nl2, _, _ = prepared(seed=17, n_gates=16)
    r1 = placer.place(nl1, lib, cfg)
    r2 = placer.place(nl2, lib, cfg)
    assert {g: (c.x, c.row) for g, c in r1.placement.cells.items()} == \
           {g: (c.x, c.row) for g, c in r2.placement.cells.items()}
    assert r1.hpwl_final == r2.hpwl_final


# ---------------------------------------------------------------- buffers


def test_insert_buffer_row_shifts_and_preserves_function():
    nl, lib, cfg = prepared(seed=19, n_gates=14)
    ref = nl.clone()
    res = placer.place(nl, lib, cfg)
    pl = res.placement
    depth_before = pl.geom.n_rows
    gap = depth_before // 2
    crossing_before = sum(1 for p in placer.net_pins(nl, lib, pl)
                          if p.gap == gap)
    added = placer.insert_buffer_row(nl, lib, pl, cfg, gap)
    assert added == crossing_before
    assert pl.geom.n_rows == depth_before + 1
    assert validate_netlist(nl, require_phases=True) == []
    assert sim.equivalent(ref, nl)
    # every net still spans exactly one channel
    for p in placer.net_pins(nl, lib, pl):
        assert p.gap == p.phase + 1


def test_insert_buffer_rows_fixpoint_meets_cap():
    nl, lib, cfg = prepared(seed=23, n_gates=12)
    cfg = FlowConfig(w_max=260)
    res = placer.place(nl, lib, cfg)
    pl = res.placement
    if not placer.overlong_gaps(nl, lib, pl, cfg):
        # stretch the pads apart so at least one net is overlong
        pl.po_pads = {k: v + 400 for k, v in pl.po_pads.items()}
        pl.what = max(pl.what, max(pl.po_pads.values()) + cfg.grid_step)
    assert placer.overlong_gaps(nl, lib, pl, cfg)
    added = placer.insert_buffer_rows(nl, lib, pl, cfg)
    assert added > 0
    assert placer.overlong_gaps(nl, lib, pl, cfg) == []
    for p in placer.net_pins(nl, lib, pl):
        assert placer.manhattan_length(p) <= cfg.w_max
    assert validate_netlist(nl, require_phases=True) == []


def test_insert_buffer_rows_vertical_overflow_raises():
    nl, lib, cfg = prepared(seed=29, n_gates=10)
    res = placer.place(nl, lib, FlowConfig())
    # band 70 + gap 40 means any hop is at least 110 tall
    cfg = FlowConfig(w_max=100)
    with pytest.raises(PlacementError):
        placer.insert_buffer_rows(nl, lib, res.placement, cfg)
