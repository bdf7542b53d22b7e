"""Time the numba and numpy flavours of each kernel on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Both flavours are called directly, so the result does not depend on
MESHWALK_DISABLE_JIT. The first numba call (compilation) is excluded.
"""
import argparse
import time

import numpy as np

from meshwalk import kernels
from meshwalk.pm.primitives import random_sphere


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    mesh = random_sphere(5000, seed)
    fq = kernels._np_face_quadrics(mesh.vertices, mesh.faces)
    vq = kernels._np_vertex_quadrics(fq, mesh.faces, mesh.n_vertices)
    e = np.unique(np.sort(mesh.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1), axis=0)
    a, b = np.ascontiguousarray(e[:, 0]), np.ascontiguousarray(e[:, 1])
    tris = np.ascontiguousarray(mesh.faces[:8])
    moved = np.zeros((8, 3), dtype=np.bool_)
    moved[:, 0] = True
    vpos = rng.uniform(0, 1000, (40, 3))
    opos = rng.uniform(0, 1000, (100, 3))
    starts = np.sort(rng.uniform(0, 900, 20000))
    ends = starts + rng.uniform(0, 0.05, starts.size)
    return {
        "face_quadrics": (mesh.vertices, mesh.faces),
        "vertex_quadrics": (fq, mesh.faces, mesh.n_vertices),
        "edge_costs": (vq, mesh.vertices, a, b),
        "fold_over": (mesh.vertices, tris, moved, mesh.vertices[0].copy()),
        "visibility": (vpos, np.full(40, 100.0), opos, np.full(100, 10.0), np.full(40, 8, dtype=np.int64)),
        "bin_overlap": (starts, ends, 60.0, 15),
    }


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':<16} {'numba_ms':>10} {'numpy_ms':>10} {'speedup':>8}")
    for name, inp in _inputs().items():
        nb = getattr(kernels, f"_nb_{name}")
        npf = getattr(kernels, f"_np_{name}")
        nb(*inp)  # compile
        t_nb = _time(nb, inp, args.repeat)
        t_np = _time(npf, inp, args.repeat)
        print(f"{name:<16} {t_nb * 1e3:>10.3f} {t_np * 1e3:>10.3f} {t_np / t_nb:>8.1f}")


if __name__ == "__main__":
    main()
