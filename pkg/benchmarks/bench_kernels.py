"""Time the compiled and numpy kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--users 4000] [--items 7500] [--L 50] [--repeat 3]

Sizes default to the larger purified dataset. Each row reports the best of
``--repeat`` runs and checks that both backends return identical results.
"""

import argparse
import timeit

import numpy as np
import scipy.sparse as sp

from csnfilter import kernels


def make_inputs(m, n, L, density, n_auc, seed):
    rng = np.random.default_rng(seed)
    scores = rng.random((m, n))
    scores[rng.random((m, n)) < 0.5] = 0.0  # many zeros, as in real CF scores
    scores = np.round(scores, 3)  # and plenty of ties
    train = sp.random(m, n, density, format="csr", random_state=seed, dtype=np.float64)
    train.sort_indices()
    test = sp.random(m, n, density / 9, format="csr", random_state=seed + 1, dtype=np.float64)
    test.sort_indices()
    users = rng.integers(0, m, n_auc)
    pos = rng.integers(0, n, n_auc)
    neg = rng.integers(0, n, n_auc)
    return scores, train, test, users, pos, neg


def bench(backend, args, inputs):
    k = kernels.get_backend(backend)
    scores, train, test, users, pos, neg = inputs
    out = {}
    jobs = {
        "top_l": lambda: k.top_l(scores, train.indptr, train.indices, args.L),
        "count_hits": lambda: k.count_hits(items, test.indptr, test.indices, args.L),
        "auc_tally": lambda: k.auc_tally(scores, users, pos, neg),
    }
    items = k.top_l(scores, train.indptr, train.indices, args.L)[0]
    for name, fn in jobs.items():
        t = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        out[name] = (t, fn())
    return out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, default=4000)
    ap.add_argument("--items", type=int, default=7500)
    ap.add_argument("--L", type=int, default=50)
    ap.add_argument("--density", type=float, default=0.005)
    ap.add_argument("--auc-samples", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    inputs = make_inputs(args.users, args.items, args.L, args.density, args.auc_samples, args.seed)
    backends = kernels.available_backends()
    results = {b: bench(b, args, inputs) for b in backends}
    print(f"{args.users} users x {args.items} items, L={args.L}, {args.auc_samples} AUC triples")
    print(f"{'kernel':<12}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'agree':>8}")
    for name in results["python"]:
        times = [results[b][name][0] for b in backends]
        row = f"{name:<12}" + "".join(f"{t:>11.3f}s" for t in times)
        if "cython" in results:
            speed = results["python"][name][0] / results["cython"][name][0]
            agree = same(results["python"][name][1], results["cython"][name][1])
            row += f"{speed:>9.1f}x{str(agree):>8}"
        print(row)
    if "cython" not in results:
        print("compiled kernels not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
