"""Pure-Python enumeration kernels.

Both functions work on an integer-encoded automaton (see
``reach.EncodedProblem``). A *key* is an (automaton node, memory word)
pair; a deterministic bounded-memory strategy is a table key -> action.
``key_next[k * n_nodes + succ]`` is the key reached from ``k`` when the
environment moves to node ``succ``.

The compiled module ``_kernel`` exposes the same two functions with the
same signatures and results.
"""

from .errors import ResourceBudgetError


def reach_codes(start_key, H, n_nodes, key_node, key_next, act_off, act_ids,
                act_sym, br_off, br_succ, base, max_nodes):
    """Codes of every boundary trace some strategy produces with positive probability.

    A trace ``(s1, ..., sk)`` over symbol ids is coded as the base-``base``
    number with digits ``s1+1, ..., sk+1``; the empty trace is 0.
    Returns ``(codes, visited)``.
    """
    assign = [-1] * (len(key_node))
    out = set()
    visited = 0

    def explore(key, depth, code):
        nonlocal visited
        out.add(code)
        visited += 1
        if visited > max_nodes:
            raise ResourceBudgetError(f"reach enumeration exceeded {max_nodes} tree nodes")
        if depth == H:
            return
        node = key_node[key]
        lo, hi = act_off[node], act_off[node + 1]
        if lo == hi:
            return
        cur = assign[key]
        choices = (cur,) if cur >= 0 else act_ids[lo:hi]
        for a in choices:
            if cur < 0:
                assign[key] = a
            sym = act_sym[a]
            nxt = code * base + sym + 1 if sym >= 0 else code
            row = key * n_nodes
            for b in range(br_off[a], br_off[a + 1]):
                explore(key_next[row + br_succ[b]], depth + 1, nxt)
        if cur < 0:
            assign[key] = -1

    explore(start_key, 0, 0)
    return out, visited


def max_expected(start_key, H, n_nodes, key_node, key_next, act_off, act_ids,
                 act_w, br_off, br_p, br_succ, pow_d, max_strategies, max_nodes):
    """Best scaled expected step-weight sum over all deterministic key tables.

    Probabilities are integers over a common denominator D and weights
    integers over a common denominator W; the returned value equals the
    expectation times ``D**(H-1) * W``. Only keys actually met in the
    execution tree are branched on, so each leaf is one distinct relevant
    strategy. Returns ``(best, strategies, visited)``.
    """
    if H < 1:
        return 0, 1, 0
    assign = [-1] * len(key_node)
    strategies = 0
    visited = 0

    def search(stack, acc):
        nonlocal strategies, visited
        stack = list(stack)
        while stack:
            key, depth, prob = stack.pop()
            visited += 1
            if visited > max_nodes:
                raise ResourceBudgetError(f"strategy search exceeded {max_nodes} tree nodes")
            node = key_node[key]
            lo, hi = act_off[node], act_off[node + 1]
            if lo == hi:
                continue
            a = assign[key]
            if a < 0:
                stack.append((key, depth, prob))
                best = -1
                for a in act_ids[lo:hi]:
                    assign[key] = a
                    v = search(stack, acc)
                    if v > best:
                        best = v
                assign[key] = -1
                return best
            acc += prob * act_w[a] * pow_d[H - 1 - depth]
            if depth + 1 < H:
                row = key * n_nodes
                for b in range(br_off[a], br_off[a + 1]):
                    stack.append((key_next[row + br_succ[b]], depth + 1, prob * br_p[b]))
        strategies += 1
        if strategies > max_strategies:
            raise ResourceBudgetError(f"strategy enumeration exceeded {max_strategies} strategies")
        return acc

    best = search([(start_key, 0, 1)], 0)
    return best, strategies, visited
