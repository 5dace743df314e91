"""Reference numpy/python implementations of the hot kernels.

The compiled extension (_core) implements the same three entry points with
identical semantics; which lane is active is decided in
aqflow.kernels.__init__.  Keep the two lanes in lockstep: any behavior
change here must be mirrored in _core.pyx.
"""

from __future__ import annotations

import heapq

import numpy as np

# A* state encoding shared by both lanes:
#   idx = (((c * L + l) * 2 + layer) * 5 + dir) * (s_min + 1) + run
# dir: 0 none, 1 +col, 2 -col, 3 +lvl, 4 -lvl; run is the distance travelled
# since the last turn, saturated at s_min.  Path cost is the integer key
# cost * 2**20 + length so that ties in cost resolve by shorter length.
KEY_SHIFT = 20
WRONG_WAY_MULT = 2


def wa_extent_grad(x1, x2, gamma):
    """Smooth per-net x extent and its partials.

    For two pins the weighted-average max/min reduce to
    extent = d * (2*sigmoid(d/gamma) - 1) with d = x2 - x1, a smooth even
    function approaching |d| from below as gamma -> 0.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    d = x2 - x1
    t = np.clip(d / gamma, -60.0, 60.0)
    s = 1.0 / (1.0 + np.exp(-t))
    ext = d * (2.0 * s - 1.0)
    dd = (2.0 * s - 1.0) + d * 2.0 * s * (1.0 - s) / gamma
    return ext, -dd, dd


def timing_batch(case, xs, xe, two_w, alpha):
    """Four-phase timing cost per net with analytic partials.

    case is the driver phase mod 4 (negative = excluded, cost 0).  Cases 1
    and 3 clamp their base at 0 before exponentiation; cases 0 and 2 use a
    signed base with integer alpha.
    """
    case = np.asarray(case, dtype=np.int64)
    xs = np.asarray(xs, dtype=np.float64)
    xe = np.asarray(xe, dtype=np.float64)
    b = np.zeros_like(xs)
    dbs = np.zeros_like(xs)   # d(base)/d(xs)
    dbe = np.zeros_like(xs)   # d(base)/d(xe)
    m0 = case == 0
    b[m0] = xe[m0] - xs[m0]
    dbs[m0], dbe[m0] = -1.0, 1.0
    m1 = case == 1
    b[m1] = xe[m1] + xs[m1]
    dbs[m1], dbe[m1] = 1.0, 1.0
    m2 = case == 2
    b[m2] = xs[m2] - xe[m2]
    dbs[m2], dbe[m2] = 1.0, -1.0
    m3 = case == 3
    b[m3] = two_w - xe[m3] - xs[m3]
    dbs[m3], dbe[m3] = -1.0, -1.0
    clamped = (m1 | m3) & (b <= 0.0)
    b[clamped] = 0.0
    dbs[clamped] = 0.0
    dbe[clamped] = 0.0
    cost = np.power(b, float(alpha))
    slope = alpha * np.power(b, float(alpha - 1))
    excluded = case < 0
    cost[excluded] = 0.0
    slope[excluded] = 0.0
    return cost, slope * dbs, slope * dbe


def _heur(col_x, lvl_y, c, l, gc, gl):
    return abs(int(col_x[gc]) - int(col_x[c])) + abs(int(lvl_y[gl]) - int(lvl_y[l]))


def astar_search(col_x, lvl_y, blocked, s_col, s_lvl, g_col, g_lvl,
                 s_min, via_cost, use_heur, dist, version, parent, stamp):
    """Channel A* over the shared state encoding.

    blocked: uint8 flat array indexed layer*C*L + c*L + l.
    dist/version/parent: workspace arrays of size C*L*2*5*(s_min+1);
    version stamping makes reuse across calls O(1).
    Returns (found, cost, length, path) with path a list of (col, lvl,
    layer) node triples from start to goal.
    """
    C = len(col_x)
    L = len(lvl_y)
    RB = s_min + 1
    shift = 1 << KEY_SHIFT

    def idx(c, l, layer, d, run):
        return (((c * L + l) * 2 + layer) * 5 + d) * RB + run

    def node_free(layer, c, l):
        return blocked[layer * C * L + c * L + l] == 0

    if g_col == s_col and g_lvl == s_lvl:
        return True, 0, 0, [(s_col, s_lvl, 0)]

    heap = []
    for layer in (0, 1):
        if node_free(layer, s_col, s_lvl):
            i = idx(s_col, s_lvl, layer, 0, 0)
            dist[i] = 0
            version[i] = stamp
            parent[i] = -1
            h = _heur(col_x, lvl_y, s_col, s_lvl, g_col, g_lvl) * (shift + 1) \
                if use_heur else 0
            heapq.heappush(heap, (h, i))

    goal_state = -1
    while heap:
        f, i = heapq.heappop(heap)
        run = i % RB
        rest = i // RB
        d = rest % 5
        rest //= 5
        layer = rest % 2
        rest //= 2
        l = rest % L
        c = rest // L
        g = int(dist[i])
        h0 = _heur(col_x, lvl_y, c, l, g_col, g_lvl) * (shift + 1) if use_heur else 0
        if f != g + h0:
            continue  # stale entry
        if c == g_col and l == g_lvl:
            goal_state = i
            break

        def push(ni, ng):
            if version[ni] != stamp or ng < dist[ni]:
                dist[ni] = ng
                version[ni] = stamp
                parent[ni] = i
                if use_heur:
                    nrest = ni // (RB * 5)
                    nl = (nrest // 2) % L
                    nc = nrest // (2 * L)
                    hh = _heur(col_x, lvl_y, nc, nl, g_col, g_lvl) * (shift + 1)
                else:
                    hh = 0
                heapq.heappush(heap, (ng + hh, ni))

        # via: switch layer, direction and run carry over
        if node_free(1 - layer, c, l):
            push(idx(c, l, 1 - layer, d, run), g + via_cost * shift)
        # grid steps
        for nd, nc, nl in ((1, c + 1, l), (2, c - 1, l), (3, c, l + 1), (4, c, l - 1)):
            if nc < 0 or nc >= C or nl < 0 or nl >= L:
                continue
            if not node_free(layer, nc, nl):
                continue
            horizontal = nd in (1, 2)
            step = abs(int(col_x[nc]) - int(col_x[c])) if horizontal \
                else abs(int(lvl_y[nl]) - int(lvl_y[l]))
            if step == 0:
                continue
            if d == 0:
                nrun = min(step, s_min)
            elif nd == d:
                nrun = min(run + step, s_min)
            elif (d, nd) in ((1, 2), (2, 1), (3, 4), (4, 3)):
                continue  # no 180-degree reversals
            else:
                if run < s_min:
                    continue  # turns need a full straight run first
                nrun = min(step, s_min)
            preferred = (layer == 0) == horizontal
            cost_step = step if preferred else step * WRONG_WAY_MULT
            push(idx(nc, nl, layer, nd, nrun), g + cost_step * shift + step)

    if goal_state < 0:
        return False, 0, 0, []
    gkey = int(dist[goal_state])
    cost, length = gkey >> KEY_SHIFT, gkey & (shift - 1)
    path = []
    i = goal_state
    limit = C * L * 2 * 5 * RB + 1
    while i >= 0:
        rest = i // (RB * 5)
        layer = rest % 2
        rest //= 2
        l = rest % L
        c = rest // L
        path.append((c, l, layer))
        i = int(parent[i])
        if len(path) > limit:
            raise RuntimeError("path reconstruction runaway")
    path.reverse()
    return True, cost, length, path
