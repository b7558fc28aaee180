"""Compare the compiled and pure-Python LCS kernels.

    python3 benchmarks/bench_lcs.py --lengths 50 200 800 --repeat 5
"""

from __future__ import annotations

import argparse
import random
import timeit

from malnarrate.metrics import _lcs_py

try:
    from malnarrate.metrics import _lcs_ext
except ImportError:
    _lcs_ext = None


def make_pair(n: int, vocab: int, rng: random.Random) -> tuple[list[int], list[int]]:
    return [rng.randrange(vocab) for _ in range(n)], [rng.randrange(vocab) for _ in range(n)]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--lengths", type=int, nargs="+", default=[50, 200, 800])
    parser.add_argument("--vocab", type=int, default=300, help="distinct token ids")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _lcs_ext is None:
        print("compiled extension not built; only the Python kernel is timed")
    rng = random.Random(args.seed)
    print(f"{'tokens':>8}  {'python ms':>10}  {'cython ms':>10}  {'speedup':>8}")
    for n in args.lengths:
        a, b = make_pair(n, args.vocab, rng)
        py = min(timeit.repeat(lambda: _lcs_py.lcs_length(a, b), number=1, repeat=args.repeat)) * 1000
        if _lcs_ext is None:
            print(f"{n:>8}  {py:>10.3f}  {'-':>10}  {'-':>8}")
            continue
        assert _lcs_ext.lcs_length(a, b) == _lcs_py.lcs_length(a, b)
        cy = min(timeit.repeat(lambda: _lcs_ext.lcs_length(a, b), number=1, repeat=args.repeat)) * 1000
        print(f"{n:>8}  {py:>10.3f}  {cy:>10.3f}  {py / cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
