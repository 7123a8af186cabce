"""Compare the compiled stencil kernels with the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--sizes 64 128 256] [--repeat 20]``
"""

import argparse
import timeit

import numpy as np

from grwgraphs import _kernels_py

try:
    from grwgraphs import _kernels
except ImportError:
    _kernels = None

POLE = _kernels_py.POLE


def cases(n, rng):
    shape = (n, 2 * n)
    a, b, c = (rng.standard_normal(shape) for _ in range(3))
    w = 1.0 + rng.random(shape)
    h0, h1 = np.pi / n, np.pi / n
    return {
        "diff0": (a, h0, POLE),
        "diff1": (a, h1),
        "gradient": (a, w, 0.1 * b, w, h0, h1, POLE),
        "divergence": (a, b, w, h0, h1, POLE),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernels not built; only the fallback is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'grid':>10}{'python ms':>12}{'cython ms':>12}{'speedup':>10}{'max diff':>11}")
    for n in args.sizes:
        for name, call_args in cases(n, rng).items():
            py = getattr(_kernels_py, name)
            t_py = min(timeit.repeat(lambda: py(*call_args), number=1, repeat=args.repeat))
            line = f"{name:<12}{f'{n}x{2 * n}':>10}{1e3 * t_py:>12.3f}"
            if _kernels is not None:
                cy = getattr(_kernels, name)
                t_cy = min(timeit.repeat(lambda: cy(*call_args), number=1, repeat=args.repeat))
                ref, out = py(*call_args), cy(*call_args)
                ref = ref if isinstance(ref, tuple) else (ref,)
                out = out if isinstance(out, tuple) else (out,)
                diff = max(float(np.max(np.abs(np.asarray(x) - y))) for x, y in zip(out, ref))
                line += f"{1e3 * t_cy:>12.3f}{t_py / t_cy:>10.2f}{diff:>11.1e}"
            print(line)


if __name__ == "__main__":
    main()
