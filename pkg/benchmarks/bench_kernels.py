"""Compare the compiled kernels with the pure-Python fallback.

Times the fused Gram/projection kernel on a dense 38 x 7129 shard and one
s-step accelerated Lasso run, checks that both backends give identical
results, and prints one line per case.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--s 16] [--mu 4]
"""

import argparse
import time

import numpy as np

from sacd import LabeledDataset, LassoProblem, SAConfig, kernels, sa_accbcd_run
from sacd import _pykernels

try:
    from sacd import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def use_backend(impl):
    kernels._impl = impl


def bench_kernel(At, s, mu, repeat, impl, seed):
    rng = np.random.default_rng(seed)
    sel = rng.choice(At.num_rows, size=s * mu, replace=False)
    vecs = rng.standard_normal((2, At.num_cols))

    def call():
        parts = kernels.sel_partials(At, sel, vecs, impl=impl)
        return kernels.reduce_partials([parts], impl=impl)

    return best_of(call, repeat)


def bench_run(problem, H, s, repeat, impl):
    use_backend(impl)
    return best_of(lambda: sa_accbcd_run(problem, H, SAConfig(s), record=False).x, repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=38)
    ap.add_argument("--cols", type=int, default=7129)
    ap.add_argument("--s", type=int, default=16)
    ap.add_argument("--mu", type=int, default=4)
    ap.add_argument("--iters", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled kernels not built; run: python3 setup.py build_ext --inplace")

    rng = np.random.default_rng(args.seed)
    ds = LabeledDataset.from_dense(rng.standard_normal((args.rows, args.cols)),
                                   rng.standard_normal(args.rows))
    At = ds.A.transpose()
    problem = LassoProblem(ds, 0.1 * float(np.abs(ds.A.to_dense().T @ ds.labels).max()),
                           args.mu)
    original = kernels._impl
    try:
        rows = []
        res = {}
        for impl in (_ckernels, _pykernels):
            t_k, out_k = bench_kernel(At, args.s, args.mu, args.repeat, impl, args.seed)
            t_r, out_r = bench_run(problem, args.iters, args.s, args.repeat, impl)
            res[impl.BACKEND] = (out_k, out_r)
            rows.append((impl.BACKEND, t_k, t_r))
    finally:
        use_backend(original)

    same = all(np.array_equal(a, b) for a, b in zip(res["compiled"], res["python"]))
    print(f"shape {args.rows}x{args.cols}  s={args.s}  mu={args.mu}  H={args.iters}")
    print(f"{'backend':<10}{'kernel [ms]':>14}{'run [ms]':>12}")
    for name, t_k, t_r in rows:
        print(f"{name:<10}{1e3 * t_k:>14.2f}{1e3 * t_r:>12.2f}")
    (_, ck, cr), (_, pk, pr) = rows
    print(f"speedup   {pk / ck:>14.1f}x{pr / cr:>11.1f}x")
    print(f"identical results: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    raise SystemExit(main())
