"""Time the segment walk with the compiled and the pure-Python kernels.

    python3 benchmarks/bench_walk.py [--n-seg 200] [--h 0.125] [--repeat 3]

Both backends must produce identical breakpoints; the script checks that
before reporting timings.
"""
import argparse
import time

import numpy as np

from mixdim import kernels
from mixdim.config import GeneratorSpec
from mixdim.app import generate_segments
from mixdim.geometry import traverse
from mixdim.mesh import build_box_mesh


def bench(mesh, segments, backend, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = [traverse(mesh, s, backend=backend) for s in segments]
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-seg", type=int, default=200)
    ap.add_argument("--h", type=float, default=0.125)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    mesh = build_box_mesh(((-1, -1, -1), (1, 1, 1)), args.h)
    segs = generate_segments(GeneratorSpec(count=args.n_seg, seed=args.seed, mode="uniform-random"))
    mesh.node_star, mesh.node_tree  # build the caches outside the timed region
    crossings = None
    results = {}
    for name in sorted(kernels.BACKENDS):
        t, maps = bench(mesh, segs, name, args.repeat)
        results[name] = (t, maps)
        crossings = sum(m.n_pieces for m in maps)
    if "compiled" not in results:
        print("compiled kernel not built; only the python backend was timed")
    else:
        for a, b in zip(results["compiled"][1], results["python"][1]):
            if not (np.array_equal(a.tets, b.tets) and np.array_equal(a.breaks, b.breaks)):
                raise SystemExit("backends disagree")
    print(f"mesh: {mesh.n_nodes} nodes, {mesh.n_tets} tets; {len(segs)} segments, {crossings} tet pieces")
    for name, (t, _) in sorted(results.items()):
        print(f"{name:>9}: {t * 1e3:9.1f} ms  ({t / crossings * 1e6:.2f} us per piece)")
    if "compiled" in results:
        print(f"  speedup: {results['python'][0] / results['compiled'][0]:.1f}x")


if __name__ == "__main__":
    main()
