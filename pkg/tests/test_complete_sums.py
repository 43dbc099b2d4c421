"""Complete-sum identities, moments, tables and the cache format."""

from math import sqrt

import numpy as np
import pytest

from helpers import direct_complete_sum
from weylsums import complete_sums as cs
from weylsums.errors import (
    BinomialVanishingError,
    ChecksumMismatchError,
    InvalidFieldError,
    InvalidNumeratorError,
    InvalidScalarError,
    NotAPermutationError,
    PreconditionError,
    ResourceLimitError,
)


def test_complete_sum_gauss_example():
    assert abs(abs(cs.complete_sum(2, 5, (0, 1))) - sqrt(5)) < 1e-9


def test_complete_sum_zero_vector_gives_p():
    for d, p in [(1, 5), (2, 7), (3, 11)]:
        assert abs(cs.complete_sum(d, p, (0,) * d) - p) < 1e-9


def test_complete_sum_vanishing_example():
    assert abs(cs.complete_sum(3, 5, (3, 3, 1))) < 1e-9


def test_complete_sum_rejects_composite():
    with pytest.raises(InvalidFieldError):
        cs.complete_sum(2, 9, (1, 1))


def test_is_prime():
    assert [n for n in range(2, 30) if cs.is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert cs.is_prime(4099) and cs.is_prime(2**31 - 1)
    assert not cs.is_prime(4097) and not cs.is_prime(1)


def test_prime_field_table():
    f = cs.PrimeField(7)
    assert np.allclose(np.abs(f.char_table), 1.0, atol=1e-12)
    assert abs(f.e(3) - np.exp(2j * np.pi * 3 / 7)) < 1e-12
    with pytest.raises(InvalidFieldError):
        cs.PrimeField(2)


def test_table_matches_direct_sums():
    table = cs.build_table(2, 7)
    for a in [(0, 0), (1, 0), (3, 5), (6, 6), (2, 1)]:
        assert abs(table.mag(a) - abs(direct_complete_sum(2, 7, a))) < 1e-9
    t3 = cs.build_table(3, 5)
    for a in [(0, 0, 0), (3, 3, 1), (1, 2, 3), (4, 0, 2)]:
        assert abs(t3.mag(a) - abs(direct_complete_sum(3, 5, a))) < 1e-9


def test_table_zero_entry_exact():
    assert cs.build_table(2, 11).mag((0, 0)) == 11.0


def test_gauss_magnitude_check():
    for p in (3, 13):
        rep = cs.gauss_magnitude_check(p)
        assert rep.passed and rep.max_deviation <= 1e-9 * sqrt(p)
    with pytest.raises(PreconditionError):
        cs.gauss_magnitude_check(2)


def test_monomial_complete_sum():
    assert abs(cs.monomial_complete_sum(2, 3, 1) - 3) < 1e-6 * 3
    assert abs(cs.monomial_complete_sum(3, 2, 1) - 4) < 1e-6 * 4
    with pytest.raises(InvalidNumeratorError):
        cs.monomial_complete_sum(2, 3, 3)


def test_weil_check():
    rep = cs.weil_check([0, 1], 7)  # f = X: full character sum
    assert rep.value < 1e-9 and rep.bound == 0.0
    rep = cs.weil_check([0, 0, 1], 5)  # f = X^2: Gauss equality
    assert abs(rep.value - sqrt(5)) < 1e-9 and abs(rep.bound - sqrt(5)) < 1e-12
    rep = cs.weil_check([0, 1, 0, 1], 7)  # f = X^3 + X
    assert rep.value <= 2 * sqrt(7) + 1e-9
    with pytest.raises(PreconditionError):
        cs.weil_check([3], 7)
    with pytest.raises(PreconditionError):
        cs.weil_check([0, 7], 7)  # reduces to a constant mod 7


def test_lambda_orbit():
    assert cs.lambda_orbit((1, 1), 1, 5) == (1, 1)
    assert cs.lambda_orbit((1, 1), 2, 5) == (2, 4)
    m1 = abs(cs.complete_sum(2, 5, (1, 1)))
    m2 = abs(cs.complete_sum(2, 5, (2, 4)))
    assert abs(m1 - m2) < 1e-9 * 5
    assert cs.lambda_orbit((0, 0, 0), 3, 7) == (0, 0, 0)
    with pytest.raises(InvalidScalarError):
        cs.lambda_orbit((1, 1), 0, 5)


def test_vanishing_family():
    fam = cs.vanishing_family(3, 5)
    assert len(fam) == 4
    assert (3, 3, 1) in fam
    with pytest.raises(NotAPermutationError):
        cs.vanishing_family(3, 7)
    with pytest.raises(BinomialVanishingError):
        cs.vanishing_family(3, 3)


def test_vanishing_family_p11():
    fam = cs.vanishing_family(3, 11)
    assert len(fam) == 10


def test_mordell_moments_p3():
    table = cs.build_table(2, 3)
    m2 = cs.mordell_moment(2, 3, 2, include_zero=True, table=table)
    assert abs(m2 - 135) < 1e-6 * 135
    m1 = cs.mordell_moment(2, 3, 1, include_zero=True, table=table)
    assert abs(m1 - 27) < 1e-6 * 27
    m2x = cs.mordell_moment(2, 3, 2, include_zero=False, table=table)
    assert abs(m2x - 54) < 1e-6 * 54
    with pytest.raises(PreconditionError):
        cs.mordell_moment(2, 3, 3, table=table)


def test_parseval_identity():
    for d, p in [(1, 13), (2, 13), (3, 13), (2, 7), (3, 5)]:
        m1 = cs.mordell_moment(d, p, 1, include_zero=True)
        assert abs(m1 - float(p) ** (d + 1)) < 1e-6 * float(p) ** (d + 1)


def test_degree2_fourth_moment_closed_form():
    for p in (3, 5, 7, 11, 13):
        m2 = cs.mordell_moment(2, p, 2, include_zero=True)
        expected = 2.0 * p**4 - p**3
        assert abs(m2 - expected) < 1e-6 * expected


def test_weil_layer_bound_in_tables():
    for d, p in [(2, 13), (3, 11)]:
        table = cs.build_table(d, p)
        mask = table.top_nonzero_mask()
        assert mask.sum() == p ** (d - 1) * (p - 1)
        assert float(table.mags[mask].max()) <= (d - 1) * sqrt(p) + 1e-9


def test_orbit_invariance_exhaustive():
    for d, p in [(2, 5), (2, 13), (3, 11), (3, 13)]:
        table = cs.build_table(d, p)
        grids = np.meshgrid(*[np.arange(p)] * d, indexing="ij")
        for lam in range(2, p):
            permuted = tuple((grids[j] * pow(lam, j + 1, p)) % p for j in range(d))
            assert np.abs(table.mags[permuted] - table.mags).max() <= 1e-9 * p


def test_orbit_partition_sizes_divide_p_minus_1():
    p, d = 11, 2
    seen = set()
    for a1 in range(p):
        for a2 in range(p):
            if (a1, a2) in seen:
                continue
            orbit = {cs.lambda_orbit((a1, a2), lam, p) for lam in range(1, p)}
            seen |= orbit
            assert (p - 1) % len(orbit) == 0


def test_box_moment_full_cube_consistency():
    table = cs.build_table(2, 5)
    rep = cs.box_moment(2, 5, 1, cs.full_box(2, 5), table=table)
    excl = cs.mordell_moment(2, 5, 1, include_zero=False, table=table)
    assert abs(rep.value - excl) < 1e-9
    assert abs(rep.value - 100.0) < 1e-6 * 100  # p^3 - p^2


def test_box_moment_single_vector():
    table = cs.build_table(2, 7)
    a = (3, 4)
    rep = cs.box_moment(2, 7, 2, cs.DiscreteBox(starts=(a[0] - 1, a[1] - 1), side=1), table=table)
    assert abs(rep.value - table.mag(a) ** 4) < 1e-9


def test_box_moment_wraparound():
    table = cs.build_table(2, 7)
    box = cs.DiscreteBox(starts=(5, 6), side=3)  # wraps past p
    sub = 0.0
    for a1 in (6, 0, 1):
        for a2 in (0, 1, 2):
            if (a1, a2) != (0, 0):
                sub += table.mag((a1, a2)) ** 2
    rep = cs.box_moment(2, 7, 1, box, table=table)
    assert abs(rep.value - sub) < 1e-9


def test_moment_main_term():
    assert cs.moment_main_term(2, 2) == 1  # d! - 1
    assert cs.moment_main_term(3, 3) == 5
    assert cs.moment_main_term(3, 2) == 2  # nu!


def test_discrete_box_validation():
    with pytest.raises(PreconditionError):
        cs.DiscreteBox(starts=(0,), side=0)
    box = cs.DiscreteBox(starts=(0, 0), side=12)
    with pytest.raises(PreconditionError):
        box.axis_values(11)  # side exceeds p
    vals = cs.DiscreteBox(starts=(0,), side=11).axis_values(11)[0]
    assert sorted(vals.tolist()) == list(range(11))  # cardinality L per axis


def test_resource_cap():
    with pytest.raises(ResourceLimitError):
        cs.build_table(2, 101, cap=100)
    table = cs.build_table(2, 101, cap=100, override=True)
    assert table.p == 101


def test_cache_round_trip(tmp_path):
    table = cs.build_table(2, 7)
    path = cs.save_table(table, tmp_path / "t.wslt")
    loaded = cs.load_table(path)
    assert loaded.d == 2 and loaded.p == 7
    assert np.array_equal(loaded.mags, table.mags)  # bit-exact


def test_cache_checksum_mismatch(tmp_path):
    table = cs.build_table(2, 5)
    path = cs.save_table(table, tmp_path / "t.wslt")
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumMismatchError):
        cs.load_table(path)


def test_cache_header_validation(tmp_path):
    p = tmp_path / "bad.wslt"
    p.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(ChecksumMismatchError):
        cs.load_table(p)


def test_cached_table_hits_disk(tmp_path):
    t1 = cs.cached_table(2, 7, cache_dir=tmp_path)
    assert cs.table_cache_path(tmp_path, 2, 7).exists()
    t2 = cs.cached_table(2, 7, cache_dir=tmp_path)
    assert np.array_equal(t1.mags, t2.mags)
