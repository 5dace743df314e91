# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled lane of the hot kernels.

Same entry points and semantics as _pykernels; that module is the
reference. State encoding and cost keys are documented there.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, pow
from libc.stdlib cimport malloc, realloc, free, llabs

cnp.import_array()

DEF KEY_SHIFT = 20
DEF WRONG_WAY_MULT = 2


def wa_extent_grad(x1, x2, double gamma):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(x1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(x2, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ext = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g1 = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g2 = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double d, t, s, dd
    for i in range(n):
        d = b[i] - a[i]
        t = d / gamma
        if t > 60.0:
            t = 60.0
        elif t < -60.0:
            t = -60.0
        s = 1.0 / (1.0 + exp(-t))
        ext[i] = d * (2.0 * s - 1.0)
        dd = (2.0 * s - 1.0) + d * 2.0 * s * (1.0 - s) / gamma
        g1[i] = -dd
        g2[i] = dd
    return ext, g1, g2


def timing_batch(case, xs, xe, double two_w, long alpha):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cs = np.ascontiguousarray(case, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s_ = np.ascontiguousarray(xs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e_ = np.ascontiguousarray(xe, dtype=np.float64)
    cdef Py_ssize_t n = cs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cost = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gs = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ge = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef long c
    cdef double b, dbs, dbe, slope
    for i in range(n):
        c = cs[i]
        if c < 0:
            continue
        if c == 0:
            b = e_[i] - s_[i]; dbs = -1.0; dbe = 1.0
        elif c == 1:
            b = e_[i] + s_[i]; dbs = 1.0; dbe = 1.0
        elif c == 2:
            b = s_[i] - e_[i]; dbs = 1.0; dbe = -1.0
        else:
            b = two_w - e_[i] - s_[i]; dbs = -1.0; dbe = -1.0
        if (c == 1 or c == 3) and b <= 0.0:
            b = 0.0; dbs = 0.0; dbe = 0.0
        cost[i] = pow(b, <double>alpha)
        slope = alpha * pow(b, <double>(alpha - 1))
        gs[i] = slope * dbs
        ge[i] = slope * dbe
    return cost, gs, ge


cdef struct HeapEnt:
    long long key
    long idx


cdef inline bint ent_lt(HeapEnt a, HeapEnt b):
    # ties broken by state index, matching the tuple ordering of the
    # reference lane so both backends pop in the same order
    if a.key != b.key:
        return a.key < b.key
    return a.idx < b.idx


cdef inline void heap_push(HeapEnt** heap, long* size, long* cap, long long key, long idx):
    cdef long i, p
    cdef HeapEnt tmp
    if size[0] >= cap[0]:
        cap[0] = cap[0] * 2
        heap[0] = <HeapEnt*>realloc(heap[0], cap[0] * sizeof(HeapEnt))
    heap[0][size[0]].key = key
    heap[0][size[0]].idx = idx
    i = size[0]
    size[0] += 1
    while i > 0:
        p = (i - 1) >> 1
        if not ent_lt(heap[0][i], heap[0][p]):
            break
        tmp = heap[0][p]; heap[0][p] = heap[0][i]; heap[0][i] = tmp
        i = p


cdef inline HeapEnt heap_pop(HeapEnt* heap, long* size):
    cdef HeapEnt top = heap[0]
    cdef long i = 0, ch
    cdef HeapEnt tmp
    size[0] -= 1
    heap[0] = heap[size[0]]
    while True:
        ch = 2 * i + 1
        if ch >= size[0]:
            break
        if ch + 1 < size[0] and ent_lt(heap[ch + 1], heap[ch]):
            ch += 1
        if not ent_lt(heap[ch], heap[i]):
            break
        tmp = heap[i]; heap[i] = heap[ch]; heap[ch] = tmp
        i = ch
    return top


def astar_search(col_x, lvl_y, blocked, long s_col, long s_lvl, long g_col,
                 long g_lvl, long s_min, long via_cost, long use_heur,
                 dist, version, parent, long stamp):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cx = np.ascontiguousarray(col_x, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ly = np.ascontiguousarray(lvl_y, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] blk = np.ascontiguousarray(blocked, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dst = dist
    cdef cnp.ndarray[cnp.int32_t, ndim=1] ver = version
    cdef cnp.ndarray[cnp.int32_t, ndim=1] par = parent
    cdef long C = cx.shape[0]
    cdef long L = ly.shape[0]
    cdef long RB = s_min + 1
    cdef long long shift = (<long long>1) << KEY_SHIFT
    cdef long long hmul = shift + 1

    if g_col == s_col and g_lvl == s_lvl:
        return True, 0, 0, [(s_col, s_lvl, 0)]

    cdef long cap = 1024, size = 0
    cdef HeapEnt* heap = <HeapEnt*>malloc(cap * sizeof(HeapEnt))
    if heap == NULL:
        raise MemoryError()

    cdef long layer, i, goal_state = -1
    cdef long long h
    for layer in range(2):
        if blk[layer * C * L + s_col * L + s_lvl] == 0:
            i = (((s_col * L + s_lvl) * 2 + layer) * 5 + 0) * RB + 0
            dst[i] = 0
            ver[i] = <cnp.int32_t>stamp
            par[i] = -1
            h = (llabs(cx[g_col] - cx[s_col]) + llabs(ly[g_lvl] - ly[s_lvl])) * hmul \
                if use_heur else 0
            heap_push(&heap, &size, &cap, h, i)

    cdef HeapEnt ent
    cdef long run, d, l, c, rest, nd, nc, nl, nrun, ni, k
    cdef long long g, ng, f, h0, step, cost_step
    cdef bint horizontal, preferred, ok
    try:
        while size > 0:
            ent = heap_pop(heap, &size)
            f = ent.key
            i = ent.idx
            run = i % RB
            rest = i // RB
            d = rest % 5
            rest //= 5
            layer = rest % 2
            rest //= 2
            l = rest % L
            c = rest // L
            g = dst[i]
            h0 = (llabs(cx[g_col] - cx[c]) + llabs(ly[g_lvl] - ly[l])) * hmul \
                if use_heur else 0
            if f != g + h0:
                continue
            if c == g_col and l == g_lvl:
                goal_state = i
                break
            # via
            if blk[(1 - layer) * C * L + c * L + l] == 0:
                ni = (((c * L + l) * 2 + (1 - layer)) * 5 + d) * RB + run
                ng = g + via_cost * shift
                if ver[ni] != stamp or ng < dst[ni]:
                    dst[ni] = ng
                    ver[ni] = <cnp.int32_t>stamp
                    par[ni] = <cnp.int32_t>i
                    heap_push(&heap, &size, &cap, ng + h0 if use_heur else ng, ni)
            for k in range(4):
                nd = k + 1
                nc = c; nl = l
                if nd == 1:
                    nc = c + 1
                elif nd == 2:
                    nc = c - 1
                elif nd == 3:
                    nl = l + 1
                else:
                    nl = l - 1
                if nc < 0 or nc >= C or nl < 0 or nl >= L:
                    continue
                if blk[layer * C * L + nc * L + nl] != 0:
                    continue
                horizontal = nd == 1 or nd == 2
                if horizontal:
                    step = llabs(cx[nc] - cx[c])
                else:
                    step = llabs(ly[nl] - ly[l])
                if step == 0:
                    continue
                ok = True
                if d == 0:
                    nrun = <long>step if step < s_min else s_min
                elif nd == d:
                    nrun = run + <long>step
                    if nrun > s_min:
                        nrun = s_min
                elif (d == 1 and nd == 2) or (d == 2 and nd == 1) or \
                     (d == 3 and nd == 4) or (d == 4 and nd == 3):
                    ok = False
                else:
                    if run < s_min:
                        ok = False
                    nrun = <long>step if step < s_min else s_min
                if not ok:
                    continue
                preferred = (layer == 0) == horizontal
                cost_step = step if preferred else step * WRONG_WAY_MULT
                ni = (((nc * L + nl) * 2 + layer) * 5 + nd) * RB + nrun
                ng = g + cost_step * shift + step
                if ver[ni] != stamp or ng < dst[ni]:
                    dst[ni] = ng
                    ver[ni] = <cnp.int32_t>stamp
                    par[ni] = <cnp.int32_t>i
                    if use_heur:
                        h = (llabs(cx[g_col] - cx[nc]) + llabs(ly[g_lvl] - ly[nl])) * hmul
                    else:
                        h = 0
                    heap_push(&heap, &size, &cap, ng + h, ni)
    finally:
        free(heap)

    if goal_state < 0:
        return False, 0, 0, []
    cdef long long gkey = dst[goal_state]
    cdef long long cost = gkey >> KEY_SHIFT
    cdef long long length = gkey & (shift - 1)
    path = []
    i = goal_state
    cdef long limit = C * L * 2 * 5 * RB + 1
    while i >= 0:
        rest = i // (RB * 5)
        layer = rest % 2
        rest //= 2
        l = rest % L
        c = rest // L
        path.append((c, l, layer))
        i = par[i]
        if len(path) > limit:
            raise RuntimeError("path reconstruction runaway")
    path.reverse()
    return True, <long>cost, <long>length, path
