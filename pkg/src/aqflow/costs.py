"""Wirelength and timing cost models used by placement.

Nets here are two-pin (driver -> sink), which is what the balanced
netlist guarantees: every logical net spans exactly one row gap.  The
vertical extent of a net is therefore fixed by its rows; only the x
coordinates move during global placement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import FlowConfig


def hpwl(pin_sets) -> float:
    """Half-perimeter wirelength over iterables of (x, y) pin coordinates."""
    total = 0.0
    for pins in pin_sets:
        xs = [p[0] for p in pins]
        ys = [p[1] for p in pins]
        if not xs:
            continue
        total += (max(xs) - min(xs)) + (max(ys) - min(ys))
    return total


@dataclass
class GPProblem:
    """Array form of a global-placement instance.

    Cells are the movable gates (one x variable each).  Each net stores
    its two endpoints as (cell index, pin offset); a cell index of -1
    marks a fixed endpoint (pad) whose offset is then the absolute x.
    """

    widths: np.ndarray
    rows: np.ndarray
    drv_cell: np.ndarray
    drv_off: np.ndarray
    snk_cell: np.ndarray
    snk_off: np.ndarray
    y_ext: np.ndarray
    phase: np.ndarray          # driver phase; negative = no timing term
    what: float                # design width estimate, feeds the phase-3 case
    net_ids: list = field(default_factory=list)

    @property
    def n_cells(self) -> int:
        return len(self.widths)

    @property
    def n_nets(self) -> int:
        return len(self.drv_off)

    def endpoints(self, x):
        xs = np.where(self.drv_cell >= 0, x[self.drv_cell] + self.drv_off, self.drv_off)
        xe = np.where(self.snk_cell >= 0, x[self.snk_cell] + self.snk_off, self.snk_off)
        return xs, xe


def _accumulate(prob: GPProblem, g_s, g_e):
    grad = np.zeros(prob.n_cells)
    m = prob.drv_cell >= 0
    np.add.at(grad, prob.drv_cell[m], g_s[m])
    m = prob.snk_cell >= 0
    np.add.at(grad, prob.snk_cell[m], g_e[m])
    return grad


def wa_wirelength(x, prob: GPProblem, gamma: float):
    """Smooth wirelength: weighted-average x extent plus exact y extent.

    Returns (value, gradient wrt cell x).  The y part is constant, so it
    shifts the value without touching the gradient.
    """
    xs, xe = prob.endpoints(x)
    ext, g_s, g_e = kernels.wa_extent_grad(xs, xe, gamma)
    value = float(np.sum(ext) + np.sum(prob.y_ext))
    return value, _accumulate(prob, g_s, g_e)


def timing_cost(xs: float, xe: float, phase: int, what: float, alpha: int) -> float:
    """Per-net timing cost, selected by the driver phase mod 4.

    The clock wave alternates direction row to row; the four cases score
    how far the sink lies against the wave.  Phases 1 and 3 clamp the
    base at zero before exponentiation.
    """
    if phase < 0:
        return 0.0
    case = phase % 4
    if case == 0:
        b = xe - xs
    elif case == 1:
        b = max(xe + xs, 0.0)
    elif case == 2:
        b = xs - xe
    else:
        b = max(2.0 * what - xe - xs, 0.0)
    return float(b) ** alpha


def timing_total(x, prob: GPProblem, alpha: int):
    xs, xe = prob.endpoints(x)
    case = np.where(prob.phase >= 0, prob.phase % 4, -1)
    cost, g_s, g_e = kernels.timing_batch(case, xs, xe, 2.0 * prob.what, alpha)
    return float(np.sum(cost)), _accumulate(prob, g_s, g_e)


def net_extents(x, prob: GPProblem, gamma: float):
    xs, xe = prob.endpoints(x)
    ext, g_s, g_e = kernels.wa_extent_grad(xs, xe, gamma)
    return ext + prob.y_ext, g_s, g_e


def total_objective(x, prob: GPProblem, cfg: FlowConfig, gamma: float):
    """Global placement objective and gradient.

    sum over nets of W + lambda_t * T + lambda_w * max(0, W - w_max)
    where W is the smooth net length.  With both lambdas zero this equals
    wa_wirelength.
    """
    w, g_s, g_e = net_extents(x, prob, gamma)
    over = w > cfg.w_max
    scale = np.where(over, 1.0 + cfg.lambda_w, 1.0)
    value = float(np.sum(w) + cfg.lambda_w * np.sum(w[over] - cfg.w_max))
    grad = _accumulate(prob, g_s * scale, g_e * scale)
    if cfg.lambda_t > 0.0:
        t_val, t_grad = timing_total(x, prob, cfg.alpha)
        value += cfg.lambda_t * t_val
        grad = grad + cfg.lambda_t * t_grad
    return value, grad


@dataclass
class TimingReport:
    budget_ps: float
    slack_ps: dict
    wns_ps: float | None      # None when no slack is negative
    worst_net: str


def analyze_timing(lengths_um: dict, cfg: FlowConfig) -> TimingReport:
    """Slack per net from wire lengths; every net has one phase budget."""
    budget = cfg.phase_budget_ps()
    slack = {}
    wns = float("inf")
    worst = ""
    for name, length in lengths_um.items():
        s = budget - (cfg.d_gate_ps + cfg.d_wire_ps_per_um * length)
        slack[name] = s
        if s < wns:
            wns = s
            worst = name
    if not slack or wns >= 0.0:
        wns = None
    return TimingReport(budget_ps=budget, slack_ps=slack, wns_ps=wns, worst_net=worst)
