#!/usr/bin/env python3
"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json results.json]

Times the special functions, the log-posterior/gradient kernel at several
data sizes, and one short end-to-end NUTS run per backend. The end-to-end
run swaps the kernel in ``dirreg._backend`` so both backends drive the same
sampler code.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from dirreg import _backend
from dirreg.hmc import SamplerConfig, run_chains
from dirreg.likelihood import EvalContext
from dirreg.model import DesignMatrix, FormulaSpec, ModelSpec
from dirreg.simulate import BLOOD_BETA, simulate_responses


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def make_ctx(n, patterns, seed=0):
    # ``patterns`` distinct covariate rows; the kernel cost scales with them
    rng = np.random.default_rng(seed)
    levels = rng.normal(size=patterns)
    X = np.column_stack([np.ones(n), levels[rng.integers(0, patterns, n)]])
    Z = np.ones((n, 1))
    Y = simulate_responses(X, BLOOD_BETA, Z, [np.log(68.0)], rng)
    spec = ModelSpec(FormulaSpec("Y", ("x",)))
    return EvalContext(Y, DesignMatrix(X, ["(Intercept)", "x"], {}, ("x",)), Z, spec)


def bench(repeat):
    backends = _backend.available_backends()
    if "cython" not in backends:
        sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    rows = []

    x = np.random.default_rng(1).uniform(0.01, 200.0, 10_000)
    for name in ("lgamma", "digamma"):
        t = {b: best_of(lambda m=m: getattr(m, name)(x), repeat, 20) for b, m in backends.items()}
        rows.append((f"{name} (10k values)", t))

    for n, patterns in ((30, 2), (1000, 2), (1000, 1000), (10_000, 10_000)):
        ctx = make_ctx(n, patterns)
        free = np.random.default_rng(2).normal(0, 0.3, ctx.dim)
        args = (free, ctx._Xv, ctx._Zv, ctx._log_y_sum, ctx._weights, ctx.reference,
                ctx._prior_prec, True)
        number = max(5, 20000 // patterns)
        t = {b: best_of(lambda m=m: m.free_logp_grad(*args), repeat, number)
             for b, m in backends.items()}
        rows.append((f"logp+grad n={n}, {patterns} patterns", t))

    ctx = make_ctx(30, 2)
    cfg = SamplerConfig(chains=2, iterations=1000, warmup=500, seed=1)
    saved = _backend.free_logp_grad
    t = {}
    try:
        for b, m in backends.items():
            _backend.free_logp_grad = m.free_logp_grad
            t[b] = best_of(lambda: run_chains(ctx, cfg), 1, 1)
    finally:
        _backend.free_logp_grad = saved
    rows.append(("NUTS 2 chains x 1000 iterations, n=30", t))
    return rows


def fmt(seconds):
    for unit, scale in (("s", 1.0), ("ms", 1e-3), ("us", 1e-6)):
        if seconds >= scale:
            return f"{seconds / scale:8.2f} {unit}"
    return f"{seconds / 1e-9:8.1f} ns"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)

    rows = bench(args.repeat)
    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'cython':>11}  {'python':>11}  speedup")
    for label, t in rows:
        print(f"{label:<{width}}  {fmt(t['cython'])}  {fmt(t['python'])}  "
              f"{t['python'] / t['cython']:6.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([{"case": label, **t} for label, t in rows], fh, indent=2)


if __name__ == "__main__":
    main()
