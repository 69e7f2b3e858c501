"""Time the compiled and pure-Python search kernels on the same flow problems.

    python benchmarks/bench_search.py [--repeat N]
"""
import argparse
import time

from linflow._kernels import _search_py
from linflow.flows import _constraints, _triggers
from linflow.imploid import builtin
from linflow.lambda_terms import all_terms, term_to_map

try:
    from linflow._kernels import _search as _compiled
except ImportError:
    _compiled = None


def problems(max_lams):
    out = []
    for name in ("hat2", "klein_four", "chain_heyting(3)"):
        P = builtin(name)
        leq = [list(map(int, r)) for r in P.order.leq]
        imp = [list(r) for r in P.imp]
        for n in range(1, max_lams + 1):
            for t in all_terms(n):
                M, O = term_to_map(t)
                k = len(list(M.edges()))
                trig = _triggers(k, _constraints(M, O))
                out.append((name, (k, leq, imp, P.unit, [list(range(P.size))] * k, trig, 0, 0)))
    return out


def run(impl, probs, repeat):
    best = float("inf")
    total = 0
    for _ in range(repeat):
        t0 = time.perf_counter()
        total = sum(len(impl(*args)[0]) for _, args in probs)
        best = min(best, time.perf_counter() - t0)
    return best, total


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--max-lams", type=int, default=3)
    args = ap.parse_args()
    probs = problems(args.max_lams)
    print(f"{len(probs)} problems (all flows on closed term maps up to {args.max_lams} lambdas)")
    t_py, n_py = run(_search_py.search, probs, args.repeat)
    print(f"python  {t_py:8.3f} s  {n_py} flows")
    if _compiled is None:
        print("cython  not built")
        return
    t_cy, n_cy = run(_compiled.search, probs, args.repeat)
    assert n_cy == n_py
    print(f"cython  {t_cy:8.3f} s  {n_cy} flows")
    print(f"speedup {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
