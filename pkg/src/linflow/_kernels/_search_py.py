"""Pure-Python depth-first search over finite domains with table constraints.

Constraint kinds (all read through the ``leq`` / ``imp`` tables):

    POS      imp[x][y] <= z
    NEG      z <= imp[x][y]
    LE       x <= y
    UNIT_LE  unit <= x
    LE_UNIT  x <= unit

Each constraint is a tuple ``(kind, x, y, z)`` of variable positions and is
checked once, right after its last variable is assigned.
"""

POS, NEG, LE, UNIT_LE, LE_UNIT = range(5)


def _holds(c, val, leq, imp, unit):
    k, x, y, z = c
    if k == POS:
        return leq[imp[val[x]][val[y]]][val[z]]
    if k == NEG:
        return leq[val[z]][imp[val[x]][val[y]]]
    if k == LE:
        return leq[val[x]][val[y]]
    if k == UNIT_LE:
        return leq[unit][val[x]]
    return leq[val[x]][unit]


def search(n_vars, leq, imp, unit, domains, triggers, limit=0, node_cap=0):
    """Return (solutions, nodes, capped). ``limit`` 0 means all solutions."""
    sols = []
    nodes = 0
    val = [0] * n_vars
    ptr = [0] * (n_vars + 1)
    i = 0
    while True:
        if i == n_vars:
            sols.append(tuple(val))
            if limit and len(sols) >= limit:
                return sols, nodes, False
            i -= 1
            if i < 0:
                return sols, nodes, False
            continue
        dom = domains[i]
        if ptr[i] >= len(dom):
            ptr[i] = 0
            i -= 1
            if i < 0:
                return sols, nodes, False
            continue
        val[i] = dom[ptr[i]]
        ptr[i] += 1
        nodes += 1
        if node_cap and nodes > node_cap:
            return sols, nodes, True
        if all(_holds(c, val, leq, imp, unit) for c in triggers[i]):
            i += 1
            ptr[i] = 0
