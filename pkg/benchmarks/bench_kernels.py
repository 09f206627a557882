"""Time the compiled and pure-Python kernels on sphere refinements.

    python benchmarks/bench_kernels.py --levels 4 5 6 7 --repeat 5
"""
import argparse
import timeit

from bendcurv import Sphere, generate_refinement, kernels
from bendcurv.curvature import dihedral_table, sum_length_theta


def bench(mesh, repeat):
    out = {}
    for backend in ("python", "cython"):
        try:
            kernels.use_backend(backend)
        except ImportError:
            continue
        t_theta = min(timeit.repeat(lambda: dihedral_table(mesh), number=1, repeat=repeat))
        t_sum = min(timeit.repeat(lambda: sum_length_theta(mesh), number=1, repeat=repeat))
        out[backend] = (t_theta, t_sum, sum_length_theta(mesh))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[4, 5, 6, 7])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    initial = kernels.BACKEND
    print(f"{'level':>5} {'edges':>8} {'backend':>8} {'dihedral s':>11} {'sum s':>9} {'speedup':>8}")
    for j in args.levels:
        mesh = generate_refinement(Sphere(1.0), j)
        res = bench(mesh, args.repeat)
        base = res["python"][0]
        for name, (t, ts, _) in res.items():
            print(f"{j:>5} {mesh.n_edges:>8} {name:>8} {t:>11.5f} {ts:>9.5f} {base / t:>7.1f}x")
        if len(res) == 2:
            diff = abs(res["python"][2] - res["cython"][2])
            print(f"{'':>5} |sum difference| = {diff:.2e}")
    kernels.use_backend(initial)


if __name__ == "__main__":
    main()
