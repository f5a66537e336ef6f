"""Time the compiled kernels against the pure-Python fallback.

Runs a few micro-benchmarks on random inputs, then a full selective solve on a
generated scene with each backend swapped in. Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--seed 0]
"""
from __future__ import annotations

import argparse
import random
import timeit
from contextlib import contextmanager

from selectsim import bench, kernels
from selectsim.search import SearchConfig
from selectsim.selective import solve

PATCHED = ("footprint_overlap", "capsule_penetration", "capsule_hits", "sweep_gap",
           "propagate", "blocked_cells", "grid_distances")


@contextmanager
def backend(mod):
    saved = {name: getattr(kernels, name) for name in PATCHED}
    try:
        for name in PATCHED:
            setattr(kernels, name, getattr(mod, name))
        yield
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def overlap_cases(rng: random.Random, n: int):
    def shape():
        k = rng.choice((kernels.DISK, kernels.RECT))
        a = rng.uniform(0.05, 0.5)
        return k, a, (a if k == kernels.DISK else rng.uniform(0.05, 0.5))
    return [(*shape(), rng.uniform(0, 2), rng.uniform(0, 2), *shape(), rng.uniform(0, 2), rng.uniform(0, 2))
            for _ in range(n)]


def micro(mod, cases, grid_blocked, sources, repeat: int) -> dict[str, float]:
    fo = mod.footprint_overlap
    out = {}
    out["footprint_overlap x10k"] = min(timeit.repeat(lambda: [fo(*c) for c in cases], number=1, repeat=repeat))
    out["grid_distances 80x80"] = min(timeit.repeat(
        lambda: mod.grid_distances(80, 80, grid_blocked, sources), number=1, repeat=repeat))
    return out


def end_to_end(seed: int, repeat: int) -> float:
    scene = bench.generate_scene(bench.ExperimentSpec(seed=seed))
    cfg = SearchConfig(w=bench.DEFAULT_W, timeout=120.0)
    return min(timeit.repeat(lambda: solve(scene, cfg), number=1, repeat=repeat))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    cases = overlap_cases(rng, 10_000)
    blocked = bytearray(81 * 81)
    for i in rng.sample(range(len(blocked)), len(blocked) // 5):
        blocked[i] = 1
    sources = [40 * 81 + 40]
    blocked[40 * 81 + 40] = 0

    found = kernels.backends()
    results = {}
    for name, mod in found.items():
        row = micro(mod, cases, bytes(blocked), sources, args.repeat)
        with backend(mod):
            row[f"solve seed {args.seed}"] = end_to_end(args.seed, args.repeat)
        results[name] = row

    labels = list(next(iter(results.values())))
    width = max(map(len, labels)) + 2
    print("benchmark".ljust(width) + "".join(f"{n:>12}" for n in results) +
          ("     speedup" if len(results) > 1 else ""))
    for label in labels:
        times = [results[n][label] for n in results]
        line = label.ljust(width) + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) > 1:
            line += f"{times[0] / times[1]:>11.1f}x"
        print(line)
    if "cython" not in found:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
