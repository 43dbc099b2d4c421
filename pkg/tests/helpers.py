"""Independent oracles shared by the module tests and the acceptance suite.

Everything here recomputes results by a route different from the library:
direct term-by-term summation for complete sums, and an O(N^2) sweep over the
endpoint grid with all four one-sided-limit combinations for the discrepancy.
"""

import bisect

import numpy as np

TWO64 = 1 << 64


def direct_complete_sum(d, p, a):
    """T(a) by plain per-term evaluation (no FFT, no residue microbatching)."""
    total = 0j
    for n in range(1, p + 1):
        r = 0
        for j, aj in enumerate(a, start=1):
            r = (r + aj * pow(n, j, p)) % p
        total += np.exp(2j * np.pi * r / p)
    return total


def disc_oracle_units(fracs, N):
    """Exact D_N * 2^64 by brute force over the endpoint grid.

    Candidates a, b run over {0, 1} and all sample values; each pair is
    evaluated with the four inclusion-limit combinations, with two
    restrictions that encode the open-interval definition: an interval cannot
    include points at its left endpoint when that endpoint is 0 (a >= 0), and
    a zero-length pair needs both-inclusive limits.
    """
    ys = sorted(fracs)
    grid = sorted(set([0, TWO64] + ys))
    le = {v: bisect.bisect_right(ys, v) for v in grid}   # #{x <= v}
    lt = {v: bisect.bisect_left(ys, v) for v in grid}    # #{x < v}
    best = 0
    for i, v in enumerate(grid):
        for w in grid[i:]:
            for inc_lo in (False, True):
                if inc_lo and v == 0:
                    continue
                for inc_hi in (False, True):
                    if v == w and not (inc_lo and inc_hi):
                        continue
                    hi_cnt = le[w] if inc_hi else lt[w]
                    lo_cnt = lt[v] if inc_lo else le[v]
                    cnt = hi_cnt - lo_cnt
                    best = max(best, abs(cnt * TWO64 - (w - v) * N))
    return best


def lsq_slope(xs, ys):
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    return sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / sum(
        (x - xbar) ** 2 for x in xs
    )
