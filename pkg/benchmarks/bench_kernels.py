"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from pqvrf import _fallback, ring

try:
    from pqvrf import _kernels
except ImportError:
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    msg = rng.bytes(8192)
    short = rng.bytes(200)
    out = []
    for n, q in ((256, 7681), (512, ring.SIG_MODULUS)):
        zetas, n_inv = ring._ntt_tables(n, q)
        a = rng.integers(0, q, n, dtype=np.int64)
        out.append((f"ntt_forward n={n}", lambda m, a=a, z=zetas, q=q: m.ntt_forward(a, z, q)))
        ah = _fallback.ntt_forward(a, zetas, q)
        out.append((f"ntt_inverse n={n}", lambda m, a=ah, z=zetas, q=q, ni=n_inv: m.ntt_inverse(a, z, q, ni)))
    out.append(("keccak256 200 B", lambda m: m.keccak256(short)))
    out.append(("keccak256 8 KiB", lambda m: m.keccak256(msg)))
    bits = rng.integers(0, 2, 500).astype(np.uint8)
    out.append(("berlekamp_massey 500 bits", lambda m: m.berlekamp_massey(bits)))
    return out


def measure(fn, repeat):
    number = 1
    while True:
        t = timeit.timeit(fn, number=number)
        if t > 0.2 or number >= 1 << 16:
            break
        number *= 4
    best = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':<28} {'python':>12} {'cython':>12} {'speedup':>9}")
    for name, call in cases():
        tp = measure(lambda: call(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:<28} {tp * 1e6:>10.1f}us")
            continue
        tc = measure(lambda: call(_kernels), args.repeat)
        print(f"{name:<28} {tp * 1e6:>10.1f}us {tc * 1e6:>10.1f}us {tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
