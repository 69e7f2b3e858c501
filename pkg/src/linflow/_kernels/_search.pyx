# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of ``_search_py.search`` with the same contract."""
from libc.stdlib cimport malloc, free

cdef enum:
    POS = 0
    NEG = 1
    LE = 2
    UNIT_LE = 3
    LE_UNIT = 4


def search(int n_vars, leq, imp, int unit, domains, triggers, long limit=0, long node_cap=0):
    cdef int k = len(leq)
    cdef int i, j, m, c, x, kind, a
    cdef bint ok
    cdef long nodes = 0
    cdef int n_cons = sum(len(t) for t in triggers)
    cdef int n_dom = sum(len(d) for d in domains)
    cdef unsigned char *L = <unsigned char *> malloc(k * k)
    cdef int *I = <int *> malloc(k * k * sizeof(int))
    cdef int *cons = <int *> malloc((4 * n_cons + 1) * sizeof(int))
    cdef int *coff = <int *> malloc((n_vars + 1) * sizeof(int))
    cdef int *dom = <int *> malloc((n_dom + 1) * sizeof(int))
    cdef int *doff = <int *> malloc((n_vars + 1) * sizeof(int))
    cdef int *val = <int *> malloc((n_vars + 1) * sizeof(int))
    cdef int *ptr = <int *> malloc((n_vars + 1) * sizeof(int))
    sols = []
    capped = False
    try:
        for i in range(k):
            for j in range(k):
                L[i * k + j] = 1 if leq[i][j] else 0
                I[i * k + j] = imp[i][j]
        m = 0
        a = 0
        for i in range(n_vars):
            coff[i] = m
            for t in triggers[i]:
                for j in range(4):
                    cons[4 * m + j] = t[j]
                m += 1
            doff[i] = a
            for x in domains[i]:
                dom[a] = x
                a += 1
            ptr[i] = 0
        coff[n_vars] = m
        doff[n_vars] = a
        ptr[n_vars] = 0
        i = 0
        while True:
            if i == n_vars:
                sols.append(tuple([val[j] for j in range(n_vars)]))
                if limit and len(sols) >= limit:
                    break
                i -= 1
                if i < 0:
                    break
                continue
            if ptr[i] >= doff[i + 1] - doff[i]:
                ptr[i] = 0
                i -= 1
                if i < 0:
                    break
                continue
            val[i] = dom[doff[i] + ptr[i]]
            ptr[i] += 1
            nodes += 1
            if node_cap and nodes > node_cap:
                capped = True
                break
            ok = True
            for c in range(coff[i], coff[i + 1]):
                kind = cons[4 * c]
                if kind == POS:
                    ok = L[I[val[cons[4 * c + 1]] * k + val[cons[4 * c + 2]]] * k + val[cons[4 * c + 3]]]
                elif kind == NEG:
                    ok = L[val[cons[4 * c + 3]] * k + I[val[cons[4 * c + 1]] * k + val[cons[4 * c + 2]]]]
                elif kind == LE:
                    ok = L[val[cons[4 * c + 1]] * k + val[cons[4 * c + 2]]]
                elif kind == UNIT_LE:
                    ok = L[unit * k + val[cons[4 * c + 1]]]
                else:
                    ok = L[val[cons[4 * c + 1]] * k + unit]
                if not ok:
                    break
            if ok:
                i += 1
                ptr[i] = 0
    finally:
        free(L); free(I); free(cons); free(coff); free(dom); free(doff); free(val); free(ptr)
    return sols, nodes, capped
