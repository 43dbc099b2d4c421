"""Exact discrepancy of polynomial sequences mod 1.

D_N = sup over open intervals (a, b), 0 <= a < b <= 1, of
|#{n <= N : x_n in (a, b)} - (b - a) N|  (unnormalized).

Point sets live on the 2^-64 phase grid, so every candidate value of the sup
is an integer over the denominator 2^64 and the whole computation is exact
integer arithmetic.  The sup over open intervals is attained in the limit at
sample values: an excess interval shrinks onto the extreme points it
contains, a deficit interval expands until its open endpoints sit exactly on
samples (or 0/1).  That endpoint restriction gives the O(N log N) algorithm;
the O(N^2) oracle over the full endpoint grid with all four one-sided-limit
combinations lives in the test suite and must agree exactly.

Open-interval fine print, followed literally: a point at 0 can never lie in
(a, b) with a >= 0, so zeros count toward N but are invisible to every
interval — the all-zero sequence has D_N = N via (0, 1).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from math import pi
from typing import Sequence

from .errors import LemmaCheckFailureError, PreconditionError
from .phasecore import TURN, Phase, RationalPoint, frac_array, residue_array
from .weyl_sums import _chunks, checkpoint_grid, exponent_vector, weyl_sum, weyl_sum_trace

KOKSMA_CONSTANT = 2.0 * pi  # total variation of t -> e(t) on [0, 1]


@dataclass(frozen=True)
class PointSet1D:
    """Sorted fractional parts as exact 2^-64 grid numerators."""

    fracs: tuple[int, ...]

    def __post_init__(self):
        if any(not 0 <= f < TURN for f in self.fracs):
            raise PreconditionError("fractional parts must lie in [0, 1)")
        if any(b < a for a, b in zip(self.fracs, self.fracs[1:])):
            raise PreconditionError("point set must be sorted")

    @property
    def count(self) -> int:
        return len(self.fracs)

    def values(self) -> list[float]:
        return [f / TURN for f in self.fracs]

    @classmethod
    def from_phases(cls, phases: Sequence[Phase]) -> "PointSet1D":
        return cls(fracs=tuple(sorted(p.frac for p in phases)))

    @classmethod
    def from_floats(cls, xs: Sequence[float]) -> "PointSet1D":
        return cls(fracs=tuple(sorted(round((x % 1.0) * TURN) % TURN for x in xs)))


def poly_sequence(x, N: int, m: Sequence[int] | None = None) -> PointSet1D:
    """Fractional parts of the polynomial phase at n = 1..N, sorted."""
    if N < 1:
        raise PreconditionError("N must be >= 1")
    if m is not None:
        m = exponent_vector(m)
    return PointSet1D(fracs=tuple(sorted(_sequence_fracs(x, N, m))))


def _sequence_fracs(x, N: int, m) -> list[int]:
    if isinstance(x, Phase):
        x = (x,)
    if isinstance(x, RationalPoint):
        exps = m if m is not None else tuple(range(1, x.dim + 1))
        out: list[int] = []
        for lo, hi in _chunks(N):
            r = residue_array(x.a, x.q, exps, lo, hi)
            # exact rational r/q mapped to the nearest grid point
            out.extend(int((int(v) * TURN * 2 + x.q) // (2 * x.q)) % TURN for v in r)
        return out
    fracs = [xi.frac for xi in x]
    exps = m if m is not None else tuple(range(1, len(fracs) + 1))
    out = []
    for lo, hi in _chunks(N):
        t = frac_array(fracs, exps, lo, hi)
        out.extend(int(v) for v in t)
    return out


def _discrepancy_units(sorted_fracs: Sequence[int], N: int) -> int:
    """Exact D_N * 2^64 over the sorted multiset of N grid fractions."""
    pos = [f for f in sorted_fracs if f > 0]
    best = 0
    # excess: sup over i <= j of (j - i + 1) - (y_j - y_i) N, attained shrinking
    # an open interval onto points i..j (points at 0 unreachable)
    run_best = None
    for j, f in enumerate(pos):
        cand = f * N - j * TURN
        if run_best is None or cand > run_best:
            run_best = cand
        val = (j + 1) * TURN - f * N + run_best
        if val > best:
            best = val
    # deficit: open endpoints on samples or 0/1; strict-inside count
    distinct = sorted(set(pos))
    a_cands = [(0, 0)] + [(v, bisect.bisect_right(pos, v)) for v in distinct]  # (value, #{x <= v})
    b_cands = [(v, bisect.bisect_left(pos, v)) for v in distinct] + [(TURN, len(pos))]  # (value, #{x < v})
    ai = 0
    best_a = None
    for bv, lb in b_cands:
        while ai < len(a_cands) and a_cands[ai][0] < bv:
            av, ra = a_cands[ai]
            t = ra * TURN - av * N
            if best_a is None or t > best_a:
                best_a = t
            ai += 1
        if best_a is not None:
            val = bv * N - lb * TURN + best_a
            if val > best:
                best = val
    return best


def discrepancy_exact(S: PointSet1D) -> float:
    """Exact unnormalized discrepancy D_N (float image of an exact dyadic)."""
    if S.count < 1:
        raise PreconditionError("need N >= 1")
    return _discrepancy_units(S.fracs, S.count) / TURN


def star_discrepancy(S: PointSet1D) -> float:
    """D*_N = N * sup_t |#{x_n < t}/N - t| via the sorted-sample formula."""
    if S.count < 1:
        raise PreconditionError("need N >= 1")
    N = S.count
    best = 0
    for i, f in enumerate(S.fracs, start=1):
        best = max(best, i * TURN - f * N, f * N - (i - 1) * TURN)
    return best / TURN


@dataclass(frozen=True)
class KoksmaReport:
    N: int
    s_magnitude: float
    d_star: float
    bound: float
    ratio: float
    passed: bool


def koksma_relation_check(x, N: int, m: Sequence[int] | None = None) -> KoksmaReport:
    """Assert |S(x;N)| <= 2*pi*D*_N + 1e-6 (explicit Koksma constant)."""
    seq = poly_sequence(x, N, m)
    s_mag = abs(weyl_sum(x, N, m))
    d_star = star_discrepancy(seq)
    bound = KOKSMA_CONSTANT * d_star + 1e-6
    report = KoksmaReport(
        N=N,
        s_magnitude=s_mag,
        d_star=d_star,
        bound=bound,
        ratio=s_mag / d_star if d_star > 0 else 0.0,
        passed=s_mag <= bound,
    )
    if not report.passed:
        raise LemmaCheckFailureError(f"Koksma check failed at N={N}: |S| = {s_mag} > {bound}")
    return report


def discrepancy_scan(x, alpha: float, n_max: int, m: Sequence[int] | None = None) -> list[int]:
    """Checkpoints N <= N_max with D_N >= N^alpha (same grid as exceptional_scan).

    The point multiset grows incrementally; D is recomputed exactly at each
    checkpoint.
    """
    if not 0.0 < alpha < 1.0:
        raise PreconditionError("need 0 < alpha < 1")
    if m is not None:
        m = exponent_vector(m)
    fracs = _sequence_fracs(x, n_max, m)
    grid = checkpoint_grid(n_max)
    out = []
    sorted_prefix: list[int] = []
    pos = 0
    for n in grid:
        while pos < n:
            bisect.insort(sorted_prefix, fracs[pos])
            pos += 1
        units = _discrepancy_units(sorted_prefix, n)
        # D_N is exact; the transcendental threshold N^alpha is compared at
        # float precision (exact integer ties like D_1 = 1 = 1^alpha survive)
        if units / TURN >= float(n) ** alpha:
            out.append(n)
    return out


def scan_rows(x, n_max: int, m: Sequence[int] | None = None) -> list[tuple[int, float, float, float, float]]:
    """(N, D_N, D*_N, |S|, |S|/D*) rows over the checkpoint grid, for CSV output."""
    if m is not None:
        m = exponent_vector(m)
    fracs = _sequence_fracs(x, n_max, m)
    grid = checkpoint_grid(n_max)
    trace = weyl_sum_trace(x, grid, m)
    rows = []
    sorted_prefix: list[int] = []
    pos = 0
    for n, mag in zip(grid, trace.magnitudes):
        while pos < n:
            bisect.insort(sorted_prefix, fracs[pos])
            pos += 1
        d_n = _discrepancy_units(sorted_prefix, n) / TURN
        ps = PointSet1D(fracs=tuple(sorted_prefix))
        d_star = star_discrepancy(ps)
        rows.append((n, d_n, d_star, mag, mag / d_star if d_star else 0.0))
    return rows
