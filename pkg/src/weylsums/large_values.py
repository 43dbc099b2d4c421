"""Large-value coefficient sets and the rational-neighborhood amplification checks.

L_p collects the a in F_p^d with a_d != 0 and |T(a)| >= gamma*sqrt(p); its
box density at scale p^{1-kappa_d} log p is what turns complete-sum lower
bounds into large Weyl sums on whole neighborhoods.  This module enumerates
those sets, computes the beta_d / kappa_d exponents in exact rationals, and
verifies the two amplification inequalities with their explicit proof
constants (0.25*gamma*N*p^{-1/2} for the full polynomial, 0.5*N/p for the
monomial).

All exponent and radius comparisons are done in exact integer arithmetic
(rational tau = u/v turns r < p^{-tau} into r^v * p^u < 1 over a common
denominator); floats appear only when a sum magnitude meets its bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, log, sqrt
from typing import Sequence

import numpy as np

from .complete_sums import (
    DEFAULT_CAP,
    CompleteSumTable,
    DiscreteBox,
    build_table,
    complete_sum,
    is_prime,
)
from .errors import (
    InvalidFieldError,
    InvalidNumeratorError,
    LemmaCheckFailureError,
    PreconditionError,
    PrimeTooSmallError,
    UndefinedForDegreeError,
    WitnessNotFoundError,
)
from .phasecore import TURN, Phase, phase_from_rational
from .weyl_sums import monomial_sum, weyl_sum

MEMBERSHIP_SLACK = 1e-9  # relative slack absorbing float noise at the threshold


def beta(d: int) -> Fraction:
    """max over nu = 1..d of min(d/nu, 2d/(2d - nu)), exact rational."""
    if d < 3:
        raise UndefinedForDegreeError(f"beta_d is defined for d >= 3, got {d}")
    return max(min(Fraction(d, nu), Fraction(2 * d, 2 * d - nu)) for nu in range(1, d + 1))


def kappa(d: int) -> Fraction:
    """beta_d / (2d) = max over nu of min(1/(2 nu), 1/(2d - nu))."""
    return beta(d) / (2 * d)


# ---------------------------------------------------------------------------
# exact comparisons for p^{-tau} radii and plan sizes


def _as_fraction(x) -> Fraction:
    f = Fraction(x)
    return f.limit_denominator(10**12) if isinstance(x, float) else f


def radius_units(p: int, tau: Fraction) -> int:
    """Largest r with r/2^64 < p^{-tau}: the open-ball radius on the phase grid."""
    u, v = tau.numerator, tau.denominator
    lo, hi = 0, TURN
    while lo < hi:  # largest r with r^v * p^u < 2^{64 v}
        mid = (lo + hi + 1) // 2
        if mid**v * p**u < (1 << (64 * v)):
            lo = mid
        else:
            hi = mid - 1
    return lo


def _wrapped_units(frac: int, target_num: int, target_den: int) -> Fraction:
    """Exact torus distance |frac/2^64 - target_num/target_den| as a Fraction."""
    diff = (Fraction(frac, TURN) - Fraction(target_num, target_den)) % 1
    return min(diff, 1 - diff)


def within_radius(x_frac: int, a: int, q: int, p: int, tau: Fraction) -> bool:
    """Exact test of |x - a/q| < p^{-tau} (torus distance)."""
    dist = _wrapped_units(x_frac, a % q, q)
    u, v = tau.numerator, tau.denominator
    return dist.numerator**v * p**u < dist.denominator**v


def plan_trial_count(p: int, tau: Fraction, d: int, gamma: Fraction) -> int:
    """floor(0.25 * gamma^{1/d} * p^{(2 tau - 1)/(2 d) - 1}) by exact integer search."""
    u, v = tau.numerator, tau.denominator
    # exponent (2 tau - 1)/(2d) - 1 = A / B
    A = 2 * u - v - 2 * d * v
    B = 2 * d * v
    gn, gd = gamma.numerator, gamma.denominator
    if gn <= 0:
        raise PreconditionError("gamma must be positive")
    if A <= 0 and gn <= gd:
        return 0

    def fits(m: int) -> bool:
        # m <= 0.25 gamma^{1/d} p^{A/B}, raised to the power B*d so every
        # factor is an integer
        return (4 * m) ** (B * d) * gd**B * p ** max(-A * d, 0) <= gn**B * p ** max(A * d, 0)

    lo, hi = 0, max(4, int(float(gamma) ** (1.0 / d) * float(p) ** (A / B)) + 4)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if fits(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


# ---------------------------------------------------------------------------
# the large-value sets


@dataclass(frozen=True)
class LargeSumSet:
    d: int
    p: int
    gamma: float
    members: tuple[tuple[int, ...], ...]
    density: float  # #L_p / p^d, the empirical c_d

    def member_set(self) -> set[tuple[int, ...]]:
        return set(self.members)


def threshold(p: int, gamma: float) -> float:
    return gamma * sqrt(p) * (1.0 - MEMBERSHIP_SLACK)


def enumerate_Lp(
    d: int,
    p: int,
    gamma: float = 1.0,
    table: CompleteSumTable | None = None,
    cap: int = DEFAULT_CAP,
    override: bool = False,
) -> LargeSumSet:
    """All a with a_d != 0 and |T(a)| >= gamma*sqrt(p), plus the achieved density."""
    if table is None:
        table = build_table(d, p, cap=cap, override=override)
    mask = np.zeros(table.mags.shape, dtype=bool)
    sl = (slice(None),) * (d - 1) + (slice(1, None),)
    mask[sl] = table.mags[sl] >= threshold(p, gamma)
    members = tuple(tuple(int(v) for v in idx) for idx in np.argwhere(mask))
    return LargeSumSet(
        d=d, p=p, gamma=gamma, members=members, density=len(members) / p**d
    )


def find_anchor(
    d: int,
    p: int,
    gamma: float = 1.0,
    seed: int = 0,
    max_tries: int = 10_000,
) -> tuple[int, ...]:
    """Seeded random search for a single member of L_p, verified by direct summation.

    The set has density bounded away from zero, so this stays cheap even when
    p^d is far beyond any enumerable cap.
    """
    if not is_prime(p):
        raise InvalidFieldError(f"{p} is not prime")
    rng = np.random.Generator(np.random.Philox(key=seed))
    thr = threshold(p, gamma)
    for _ in range(max_tries):
        a = tuple(int(v) for v in rng.integers(0, p, size=d - 1)) + (
            int(rng.integers(1, p)),
        )
        if abs(complete_sum(d, p, a)) >= thr:
            return a
    raise WitnessNotFoundError(
        f"no member of L_p found in {max_tries} tries (d={d}, p={p}, gamma={gamma})"
    )


@dataclass(frozen=True)
class OrbitCountReport:
    count: int
    reference: float  # 0.5 * L^k * p^{1-k}

    @property
    def passed(self) -> bool:
        return self.count >= self.reference


def orbit_in_box_count(a: Sequence[int], p: int, box: DiscreteBox) -> OrbitCountReport:
    """#{lambda in F_p^*: (a_1 lambda, ..., a_k lambda^k) in B} vs 0.5 L^k p^{1-k}."""
    if not is_prime(p):
        raise InvalidFieldError(f"{p} is not prime")
    a = tuple(int(ai) % p for ai in a)
    k = len(a)
    if k < 1 or box.dim != k:
        raise PreconditionError("box dimension must match the coefficient prefix")
    if any(ai == 0 for ai in a):
        raise PreconditionError("all prefix coefficients must be nonzero")
    axis_sets = [np.zeros(p, dtype=bool) for _ in range(k)]
    for j, vals in enumerate(box.axis_values(p)):
        axis_sets[j][vals] = True
    lam = np.arange(1, p, dtype=np.int64)
    inside = np.ones(p - 1, dtype=bool)
    pw = np.ones(p - 1, dtype=np.int64)
    for j in range(k):
        pw = (pw * lam) % p
        inside &= axis_sets[j][(a[j] * pw) % p]
    count = int(inside.sum())
    return OrbitCountReport(count=count, reference=0.5 * box.side**k * float(p) ** (1 - k))


def box_density_check(lp: LargeSumSet, box: DiscreteBox) -> tuple[int, ...] | None:
    """Some a in B intersect L_p, or None; first hit in lexicographic order."""
    if box.dim != lp.d:
        raise PreconditionError("box dimension must equal d")
    members = lp.member_set()
    axes = [np.sort(v) for v in box.axis_values(lp.p)]
    if box.side**lp.d <= len(members):
        for idx in np.ndindex(*(box.side,) * lp.d):
            cand = tuple(int(axes[j][i]) for j, i in enumerate(idx))
            if cand in members:
                return cand
        return None
    allowed = [set(v.tolist()) for v in axes]
    for cand in sorted(members):
        if all(cand[j] in allowed[j] for j in range(lp.d)):
            return cand
    return None


def minimal_witness_side(lp: LargeSumSet, start: int | None = None) -> dict:
    """Sweep origin-cornered boxes downward to the smallest side with a witness.

    Measures the empirical density threshold to compare against
    p^{1-kappa_d} log p (the lemma's unknown constant C).
    """
    p, d = lp.p, lp.d
    side = start if start is not None else p
    found = None
    while side >= 1:
        w = box_density_check(lp, DiscreteBox(starts=(0,) * d, side=side))
        if w is None:
            break
        found = side
        side -= 1
    reference = float(p) ** (1 - float(kappa(d))) * log(p) if d >= 3 else float("nan")
    return {
        "minimal_side": found,
        "reference_side": reference,
        "ratio": (found / reference) if found is not None else None,
    }


# ---------------------------------------------------------------------------
# amplification


@dataclass(frozen=True)
class AmplificationPlan:
    """Trial length and neighborhood for manufacturing a large Weyl sum.

    N = p * floor(0.25 * gamma^{1/d} * p^{(2 tau - 1)/(2 d) - 1}) and the
    neighborhood is the open L-infinity ball of radius p^{-tau} around
    anchor/p.
    """

    d: int
    p: int
    tau: Fraction
    gamma: Fraction
    anchor: tuple[int, ...]
    N: int

    @property
    def bound(self) -> float:
        """0.25 * gamma * N * p^{-1/2}."""
        return 0.25 * float(self.gamma) * self.N / sqrt(self.p)


def amplification_plan(
    p: int,
    tau,
    d: int,
    gamma=1,
    anchor: Sequence[int] | None = None,
    seed: int = 0,
) -> AmplificationPlan:
    """Build the trial plan; PrimeTooSmallError when the floor vanishes."""
    if not is_prime(p):
        raise InvalidFieldError(f"{p} is not prime")
    tau = _as_fraction(tau)
    gamma = _as_fraction(gamma)
    if 2 * tau <= 2 * d + 1:
        raise PreconditionError(f"need tau > d + 1/2, got tau={tau}, d={d}")
    m = plan_trial_count(p, tau, d, gamma)
    if m < 1:
        raise PrimeTooSmallError(
            f"0.25 gamma^(1/d) p^((2tau-1)/2d-1) < 1 at p={p}: no admissible trial length"
        )
    if anchor is None:
        anchor = find_anchor(d, p, float(gamma), seed=seed)
    anchor = tuple(int(ai) % p for ai in anchor)
    if anchor[-1] == 0:
        raise PreconditionError("anchor must have a_d != 0")
    return AmplificationPlan(d=d, p=p, tau=tau, gamma=gamma, anchor=anchor, N=p * m)


def neighborhood_point(plan: AmplificationPlan, axis: int, sign: int = 1, scale: Fraction = Fraction(1, 2)) -> tuple[Phase, ...]:
    """anchor/p displaced along one axis by scale * p^{-tau} (default half radius)."""
    if not 0 <= axis < plan.d:
        raise PreconditionError("axis out of range")
    offset = int(radius_units(plan.p, plan.tau) * scale)
    fracs = [phase_from_rational(ai, plan.p) for ai in plan.anchor]
    fracs[axis] = Phase(fracs[axis].frac + (offset if sign >= 0 else -offset))
    return tuple(fracs)


@dataclass(frozen=True)
class CheckReport:
    """JSON-able record of a single inequality check."""

    lemma: str
    params: dict
    value: float
    bound: float
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "params": self.params,
            "value": self.value,
            "bound": self.bound,
            "pass": self.passed,
        }


def amplified_sum_check(plan: AmplificationPlan, x: Sequence[Phase]) -> CheckReport:
    """Assert |S(x; N)| >= 0.25 * gamma * N * p^{-1/2} inside the neighborhood.

    The inequality is a theorem under the plan's preconditions, so a failure
    raises rather than returning a failing report.
    """
    if len(x) != plan.d:
        raise PreconditionError("point dimension must equal d")
    for xj, aj in zip(x, plan.anchor):
        if not within_radius(xj.frac, aj, plan.p, plan.p, plan.tau):
            raise PreconditionError("x lies outside the p^{-tau} neighborhood of anchor/p")
    value = abs(weyl_sum(tuple(x), plan.N))
    bound = plan.bound
    report = CheckReport(
        lemma="large-sum-neighborhood",
        params={
            "d": plan.d,
            "p": plan.p,
            "tau": str(plan.tau),
            "gamma": str(plan.gamma),
            "anchor": list(plan.anchor),
            "N": plan.N,
        },
        value=value,
        bound=bound,
        passed=value >= bound,
    )
    if not report.passed:
        raise LemmaCheckFailureError(
            f"amplified sum check failed: |S| = {value} < {bound} for {report.params}"
        )
    return report


def monomial_amplified_check(
    a: int,
    p: int,
    d: int,
    tau,
    x: Phase | None = None,
    N: int | None = None,
) -> CheckReport:
    """Assert |sigma_d(x; N)| >= 0.5 N / p near a/p^d.

    Default N = p^d (the range minimum) and default x at half the allowed
    radius.  The admissible range p^d <= N <= 0.25^{1/d} p^{(tau-1)/d} with
    p^d | N is validated exactly.
    """
    if not is_prime(p):
        raise InvalidFieldError(f"{p} is not prime")
    if gcd(a, p) != 1:
        raise InvalidNumeratorError(f"gcd({a}, {p}) != 1")
    tau = _as_fraction(tau)
    q = p**d
    if N is None:
        N = q
    u, v = tau.numerator, tau.denominator
    if N < q or N % q != 0:
        raise PreconditionError(f"need p^d | N and N >= p^d, got N={N}")
    # admissible iff 4 N^d <= p^{tau-1}, i.e. (4 N^d)^v <= p^{u-v} in integers
    if u <= v or (4 * N**d) ** v > p ** (u - v):
        raise PrimeTooSmallError(
            f"N={N} exceeds 0.25^(1/d) p^((tau-1)/d); admissible range is empty or smaller"
        )
    if x is None:
        offset = radius_units(p, tau) // 2
        x = Phase(phase_from_rational(a, q).frac + offset)
    if not within_radius(x.frac, a % q, q, p, tau):
        raise PreconditionError("x lies outside the p^{-tau} neighborhood of a/p^d")
    value = abs(monomial_sum(x, N, d))
    bound = 0.5 * N / p
    report = CheckReport(
        lemma="monomial-neighborhood",
        params={"d": d, "p": p, "tau": str(tau), "a": a, "N": N},
        value=value,
        bound=bound,
        passed=value >= bound,
    )
    if not report.passed:
        raise LemmaCheckFailureError(
            f"monomial amplified check failed: |sigma| = {value} < {bound} for {report.params}"
        )
    return report


# ---------------------------------------------------------------------------
# measure of the finite-N exceptional slices


@dataclass(frozen=True)
class MeasureReport:
    d: int
    alpha: float
    i: int
    samples: int
    estimate: float
    half_width: float  # 95% binomial confidence half-width
    threshold: float

    @property
    def inverse_i_ratio(self) -> float:
        """estimate * i: the constant against the lambda >> 1/i prediction."""
        return self.estimate * self.i


def measure_estimate(d: int, alpha: float, i: int, samples: int, seed: int = 0) -> MeasureReport:
    """Monte Carlo estimate of lambda{x : |S(x; i)| >= i^alpha}.

    Philox (counter-based) keyed by the seed, one draw stream in a fixed
    order, so the result is reproducible for a given seed under any split of
    the work.
    """
    if samples < 10**3:
        raise PreconditionError("need at least 10^3 samples")
    if not 0.0 < alpha < 0.5:
        raise PreconditionError("need 0 < alpha < 1/2")
    if i < 1:
        raise PreconditionError("i must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    thr = float(i) ** alpha
    # relative slack so exact ties (|S(x;1)| = 1 = threshold) are not decided
    # by trigonometric rounding noise
    cut = thr * (1.0 - 1e-12)
    hits = 0
    for _ in range(samples):
        x = tuple(Phase(int(f)) for f in rng.integers(0, TURN, size=d, dtype=np.uint64))
        if abs(weyl_sum(x, i)) >= cut:
            hits += 1
    est = hits / samples
    half = 1.96 * sqrt(max(est * (1.0 - est), 0.0) / samples)
    return MeasureReport(
        d=d, alpha=alpha, i=i, samples=samples, estimate=est, half_width=half, threshold=thr
    )
