"""Streaming evaluation of Weyl sums and their scaling diagnostics.

S(x; N) = sum_{n=1}^{N} e(x_1 n^{m_1} + ... + x_d n^{m_d}) with default
exponents (1, ..., d).  Coefficients are either quantized `Phase` values
(wrapping uint64 words, exact mod 1) or an exact `RationalPoint` a/q that is
evaluated through residue arithmetic mod q.

Canonical accumulation: terms are generated in fixed chunks of 2^16 and each
chunk is reduced with math.fsum; the final value is fsum over the list of
chunk sums plus the trailing partial chunk.  fsum is exactly rounded, so the
total error after N unit-modulus terms is below N ulp — inside the 4*N*ulp
budget — and a streaming trace that re-reduces the same chunk-sum list is
bit-identical to a fresh evaluation at every checkpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum, log
from typing import Iterator, Sequence

import numpy as np

from .errors import LemmaCheckFailureError, PreconditionError
from .phasecore import (
    Phase,
    RationalPoint,
    frac_array,
    residue_array,
    unit_terms,
)

CHUNK = 1 << 16

TorusPoint = tuple[Phase, ...]


def exponent_vector(m: Sequence[int]) -> tuple[int, ...]:
    """Validated sparse exponent vector: strictly increasing, m_1 >= 1."""
    m = tuple(int(v) for v in m)
    if not m or m[0] < 1 or any(b <= a for a, b in zip(m, m[1:])):
        raise PreconditionError(f"exponents must be strictly increasing positive integers, got {m}")
    return m


def _point_spec(x, m: Sequence[int] | None):
    """Normalize (x, m) to a term-generation closure."""
    if isinstance(x, RationalPoint):
        d = x.dim
        exps = exponent_vector(m if m is not None else range(1, d + 1))
        if len(exps) != d:
            raise PreconditionError("exponent vector length must match the point dimension")
        a, q = x.a, x.q

        def gen(lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
            r = residue_array(a, q, exps, lo, hi)
            return unit_terms(r.astype(np.float64) / q)

        return gen
    if isinstance(x, Phase):
        x = (x,)
    fracs = [xi.frac for xi in x]
    exps = exponent_vector(m if m is not None else range(1, len(fracs) + 1))
    if len(exps) != len(fracs):
        raise PreconditionError("exponent vector length must match the point dimension")

    def gen(lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        t = frac_array(fracs, exps, lo, hi)
        return unit_terms(t.astype(np.float64) * 2.0**-64)

    return gen


def _chunks(N: int) -> Iterator[tuple[int, int]]:
    lo = 1
    while lo <= N:
        hi = min(lo + CHUNK, N + 1)
        yield lo, hi
        lo = hi


def weyl_sum(x, N: int, m: Sequence[int] | None = None) -> complex:
    """S(x; N) with certified accumulation error below N ulp."""
    if N < 1:
        raise PreconditionError("N must be >= 1")
    gen = _point_spec(x, m)
    re_parts: list[float] = []
    im_parts: list[float] = []
    for lo, hi in _chunks(N):
        c, s = gen(lo, hi)
        re_parts.append(fsum(c))
        im_parts.append(fsum(s))
    value = complex(fsum(re_parts), fsum(im_parts))
    # trivial bound |S| <= N, with a few ulps of slack for the rounded terms
    if abs(value) > N * (1.0 + 1e-12):
        raise LemmaCheckFailureError(f"trivial bound violated: |S| = {abs(value)} > N = {N}")
    return value


def monomial_sum(x, N: int, d: int) -> complex:
    """sigma_d(x; N) = sum e(x n^d); same evaluator as weyl_sum with m=(d,)."""
    if d < 2:
        raise PreconditionError("monomial sums are for d >= 2")
    if isinstance(x, Phase):
        x = (x,)
    elif isinstance(x, RationalPoint) and x.dim != 1:
        raise PreconditionError("monomial sums take a one-dimensional point")
    return weyl_sum(x, N, m=(d,))


@dataclass(frozen=True)
class SumTrace:
    """(N, S(x;N)) samples along strictly increasing checkpoints."""

    checkpoints: tuple[int, ...]
    values: tuple[complex, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise PreconditionError("checkpoints must be strictly increasing")
        for n, v in zip(self.checkpoints, self.values):
            if abs(v) > n * (1.0 + 1e-12):
                raise PreconditionError("trace magnitude exceeds the trivial bound")

    @property
    def magnitudes(self) -> tuple[float, ...]:
        return tuple(abs(v) for v in self.values)

    def rows(self) -> list[tuple[int, float, float, float]]:
        return [(n, v.real, v.imag, abs(v)) for n, v in zip(self.checkpoints, self.values)]


def weyl_sum_trace(x, checkpoints: Sequence[int], m: Sequence[int] | None = None) -> SumTrace:
    """One generation pass; each entry bit-identical to a fresh weyl_sum call.

    Terms are produced once per chunk; a checkpoint inside a chunk re-reduces
    that chunk's prefix, reproducing exactly the operation sequence of a fresh
    evaluation truncated at the checkpoint.
    """
    cps = tuple(int(n) for n in checkpoints)
    if not cps or cps[0] < 1 or any(b <= a for a, b in zip(cps, cps[1:])):
        raise PreconditionError("checkpoints must be strictly increasing and >= 1")
    gen = _point_spec(x, m)
    n_max = cps[-1]
    re_parts: list[float] = []
    im_parts: list[float] = []
    values: list[complex] = []
    ci = 0
    for lo, hi in _chunks(n_max):
        c, s = gen(lo, hi)
        while ci < len(cps) and cps[ci] < hi:
            k = cps[ci] - lo + 1
            values.append(
                complex(fsum(re_parts + [fsum(c[:k])]), fsum(im_parts + [fsum(s[:k])]))
            )
            ci += 1
        re_parts.append(fsum(c))
        im_parts.append(fsum(s))
    return SumTrace(checkpoints=cps, values=tuple(values))


def checkpoint_grid(n_max: int, dense_limit: int = 1000) -> tuple[int, ...]:
    """All integers up to min(n_max, dense_limit), then dyadic up to n_max."""
    if n_max < 1:
        raise PreconditionError("N_max must be >= 1")
    grid = list(range(1, min(n_max, dense_limit) + 1))
    k = 1
    while 2**k <= dense_limit:
        k += 1
    while 2**k <= n_max:
        grid.append(2**k)
        k += 1
    return tuple(grid)


def dyadic_grid(n_max: int, start_exp: int = 4) -> tuple[int, ...]:
    if n_max < 2**start_exp:
        raise PreconditionError(f"N_max must be >= {2 ** start_exp}")
    return tuple(2**k for k in range(start_exp, n_max.bit_length()) if 2**k <= n_max)


# ---------------------------------------------------------------------------
# Menshov-Rademacher diagnostics


def mr_partial_series(x, K: int, gamma: float, m: Sequence[int] | None = None) -> np.ndarray:
    """|s(x; k)| for k = 1..K, s being the n^{-1/2} (log+ n)^{-gamma} weighted series.

    log+ n = max(1, log n).  Almost-everywhere boundedness of these partials
    is what drives the N^{1/2} (log N)^{3/2+o(1)} bound, so the whole prefix
    profile is returned for inspection.
    """
    if gamma <= 1.5:
        raise PreconditionError("need gamma > 3/2")
    if K < 1:
        raise PreconditionError("K must be >= 1")
    gen = _point_spec(x, m)
    out = np.empty(K)
    run_re, run_im = 0.0, 0.0
    pos = 0
    for lo, hi in _chunks(K):
        c, s = gen(lo, hi)
        n = np.arange(lo, hi, dtype=np.float64)
        w = n**-0.5 * np.maximum(1.0, np.log(n)) ** -gamma
        cre = np.cumsum(w * c) + run_re
        cim = np.cumsum(w * s) + run_im
        out[pos : pos + (hi - lo)] = np.hypot(cre, cim)
        run_re, run_im = float(cre[-1]), float(cim[-1])
        pos += hi - lo
    return out


@dataclass(frozen=True)
class MrScanReport:
    checkpoints: tuple[int, ...]
    ratios: tuple[float, ...]
    max_ratio: float


def mr_ratio_scan(x, n_max: int, m: Sequence[int] | None = None) -> MrScanReport:
    """max over dyadic N <= N_max of |S(x;N)| / (N^{1/2} (log N)^{3/2}).

    Reported, never asserted: the almost-everywhere bound says nothing about
    an individual x.
    """
    if n_max < 16:
        raise PreconditionError("N_max must be >= 16")
    cps = dyadic_grid(n_max)
    trace = weyl_sum_trace(x, cps, m)
    ratios = tuple(
        mag / (n**0.5 * log(n) ** 1.5) for n, mag in zip(cps, trace.magnitudes)
    )
    return MrScanReport(checkpoints=cps, ratios=ratios, max_ratio=max(ratios))


@dataclass(frozen=True)
class SigmaEstimate:
    value: float
    degenerate: bool


def sigma_estimate(trace: SumTrace) -> SigmaEstimate:
    """Finite-scale upper envelope of the growth exponent.

    Max of log|S|/log N over the largest half of the checkpoints; a max (not a
    regression) because the target is a limsup.  All-zero traces return 0 with
    the degenerate flag set.
    """
    if len(trace.checkpoints) < 8:
        raise PreconditionError("need at least 8 trace entries")
    tail = len(trace.checkpoints) // 2
    best = None
    for n, mag in list(zip(trace.checkpoints, trace.magnitudes))[tail:]:
        if mag <= 0.0 or n < 2:
            continue
        v = log(mag) / log(n)
        best = v if best is None or v > best else best
    if best is None:
        return SigmaEstimate(value=0.0, degenerate=True)
    return SigmaEstimate(value=best, degenerate=False)


def exceptional_scan(x, alpha: float, n_max: int, m: Sequence[int] | None = None) -> list[int]:
    """Checkpoints N <= N_max with |S(x;N)| >= N^alpha (finite-scale E-set probe)."""
    if not 0.0 < alpha < 1.0:
        raise PreconditionError("need 0 < alpha < 1")
    cps = checkpoint_grid(n_max)
    trace = weyl_sum_trace(x, cps, m)
    return [n for n, mag in zip(cps, trace.magnitudes) if mag >= float(n) ** alpha]
