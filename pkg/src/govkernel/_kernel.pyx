# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled enumeration kernels; mirrors ``_kernel_py`` exactly.

Scaled values are held in 64-bit integers. Callers must check that
``H * D**H * max_weight`` and ``base**H`` fit before dispatching here
(``reach.EncodedProblem.fits_int64``).
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

from govkernel.errors import ResourceBudgetError


cdef struct Item:
    int key
    int depth
    long long prob


cdef struct Ctx:
    int H
    int n_nodes
    int cap
    long long visited
    long long strategies
    long long max_nodes
    long long max_strategies
    const long long* key_node
    const long long* key_next
    const long long* act_off
    const long long* act_ids
    const long long* act_sym
    const long long* act_w
    const long long* br_off
    const long long* br_p
    const long long* br_succ
    const long long* pow_d
    long long* assign
    long long base


cdef int _explore(Ctx* c, set out, long long key, int depth, long long code) except -1:
    cdef long long node, lo, hi, cur, a, j, b, sym, nxt, row
    out.add(code)
    c.visited += 1
    if c.visited > c.max_nodes:
        raise ResourceBudgetError(f"reach enumeration exceeded {c.max_nodes} tree nodes")
    if depth == c.H:
        return 0
    node = c.key_node[key]
    lo = c.act_off[node]
    hi = c.act_off[node + 1]
    if lo == hi:
        return 0
    cur = c.assign[key]
    row = key * c.n_nodes
    if cur >= 0:
        lo = 0
        hi = 1
    j = lo
    while j < hi:
        if cur >= 0:
            a = cur
        else:
            a = c.act_ids[j]
            c.assign[key] = a
        sym = c.act_sym[a]
        nxt = code * c.base + sym + 1 if sym >= 0 else code
        for b in range(c.br_off[a], c.br_off[a + 1]):
            _explore(c, out, c.key_next[row + c.br_succ[b]], depth + 1, nxt)
        j += 1
    if cur < 0:
        c.assign[key] = -1
    return 0


cdef long long _search(Ctx* c, Item* stack, int sp, long long acc) except -2:
    cdef Item* local = <Item*> malloc(c.cap * sizeof(Item))
    cdef Item it
    cdef long long node, lo, hi, a, j, b, v, best, row
    if local == NULL:
        raise MemoryError()
    try:
        memcpy(local, stack, sp * sizeof(Item))
        while sp > 0:
            sp -= 1
            it = local[sp]
            c.visited += 1
            if c.visited > c.max_nodes:
                raise ResourceBudgetError(f"strategy search exceeded {c.max_nodes} tree nodes")
            node = c.key_node[it.key]
            lo = c.act_off[node]
            hi = c.act_off[node + 1]
            if lo == hi:
                continue
            a = c.assign[it.key]
            if a < 0:
                local[sp] = it
                sp += 1
                best = -1
                for j in range(lo, hi):
                    c.assign[it.key] = c.act_ids[j]
                    v = _search(c, local, sp, acc)
                    if v > best:
                        best = v
                c.assign[it.key] = -1
                return best
            acc += it.prob * c.act_w[a] * c.pow_d[c.H - 1 - it.depth]
            if it.depth + 1 < c.H:
                row = it.key * c.n_nodes
                for b in range(c.br_off[a], c.br_off[a + 1]):
                    local[sp].key = <int> c.key_next[row + c.br_succ[b]]
                    local[sp].depth = it.depth + 1
                    local[sp].prob = it.prob * c.br_p[b]
                    sp += 1
        c.strategies += 1
        if c.strategies > c.max_strategies:
            raise ResourceBudgetError(f"strategy enumeration exceeded {c.max_strategies} strategies")
        return acc
    finally:
        free(local)


def _q(seq):
    import array
    return array.array("q", seq)


def reach_codes(start_key, H, n_nodes, key_node, key_next, act_off, act_ids,
                act_sym, br_off, br_succ, base, max_nodes):
    cdef long long[::1] kn = _q(key_node), kx = _q(key_next), ao = _q(act_off)
    cdef long long[::1] ai = _q(act_ids), asy = _q(act_sym), bo = _q(br_off), bs = _q(br_succ)
    cdef long long[::1] assign = _q([-1] * max(1, len(key_node)))
    cdef long long[::1] dummy = _q([0])
    cdef Ctx c
    cdef set out = set()
    c.H = H
    c.n_nodes = n_nodes
    c.visited = 0
    c.max_nodes = max_nodes
    c.key_node = &kn[0]
    c.key_next = &kx[0] if len(kx) else &dummy[0]
    c.act_off = &ao[0]
    c.act_ids = &ai[0] if len(ai) else &dummy[0]
    c.act_sym = &asy[0] if len(asy) else &dummy[0]
    c.br_off = &bo[0]
    c.br_succ = &bs[0] if len(bs) else &dummy[0]
    c.assign = &assign[0]
    c.base = base
    _explore(&c, out, start_key, 0, 0)
    return out, c.visited


def max_expected(start_key, H, n_nodes, key_node, key_next, act_off, act_ids,
                 act_w, br_off, br_p, br_succ, pow_d, max_strategies, max_nodes):
    if H < 1:
        return 0, 1, 0
    cdef long long[::1] kn = _q(key_node), kx = _q(key_next), ao = _q(act_off)
    cdef long long[::1] ai = _q(act_ids), aw = _q(act_w), bo = _q(br_off)
    cdef long long[::1] bp = _q(br_p), bs = _q(br_succ), pd = _q(pow_d)
    cdef long long[::1] assign = _q([-1] * max(1, len(key_node)))
    cdef long long[::1] dummy = _q([0])
    cdef Ctx c
    cdef Item start
    cdef long long max_br = 1
    cdef Py_ssize_t a
    for a in range(len(bo) - 1):
        if bo[a + 1] - bo[a] > max_br:
            max_br = bo[a + 1] - bo[a]
    c.H = H
    c.n_nodes = n_nodes
    c.cap = <int> (2 + H * max_br)
    c.visited = 0
    c.strategies = 0
    c.max_nodes = max_nodes
    c.max_strategies = max_strategies
    c.key_node = &kn[0]
    c.key_next = &kx[0] if len(kx) else &dummy[0]
    c.act_off = &ao[0]
    c.act_ids = &ai[0] if len(ai) else &dummy[0]
    c.act_w = &aw[0] if len(aw) else &dummy[0]
    c.br_off = &bo[0]
    c.br_p = &bp[0] if len(bp) else &dummy[0]
    c.br_succ = &bs[0] if len(bs) else &dummy[0]
    c.pow_d = &pd[0]
    c.assign = &assign[0]
    start.key = start_key
    start.depth = 0
    start.prob = 1
    best = _search(&c, &start, 1, 0)
    return best, c.strategies, c.visited
