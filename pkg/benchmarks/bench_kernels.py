"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--h 0.02] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from symmspec import _backend
from symmspec.geometry import DomainSpec, build_mesh


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=0.02)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    mesh = build_mesh(DomainSpec.disk(1.0), args.h)
    nodes = np.ascontiguousarray(mesh.nodes)
    tris = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
    cent = np.ascontiguousarray(nodes[tris].mean(axis=1))
    w = np.ascontiguousarray(mesh.triangle_areas())
    x = np.ascontiguousarray(nodes[np.hypot(nodes[:, 0], nodes[:, 1]) <= 0.8][:500])
    print(f"mesh h={args.h}: {mesh.n_nodes} nodes, {len(tris)} triangles; {len(x)} Green targets")

    cases = {
        "p1_triplets": (nodes, tris),
        "green_p_sum": (x, cent, w),
    }
    for name, call_args in cases.items():
        py, cy = _backend.get(name)
        t_py = min(timeit.repeat(lambda: py(*call_args), number=1, repeat=args.repeat))
        line = f"{name:12s} python {t_py * 1e3:9.2f} ms"
        if cy is None:
            line += "   compiled: not built"
        else:
            t_cy = min(timeit.repeat(lambda: cy(*call_args), number=1, repeat=args.repeat))
            line += f"   compiled {t_cy * 1e3:9.2f} ms   speedup {t_py / t_cy:5.1f}x"
        print(line)


if __name__ == "__main__":
    main()
