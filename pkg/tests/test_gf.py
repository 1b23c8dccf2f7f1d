"""Field arithmetic: exhaustive axioms, independent oracle, sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arcnc.gf import (
    GF,
    REDUCTION_POLYS,
    FieldElement,
    FieldMismatchError,
    ff_add,
    ff_inv,
    ff_mul,
    ff_sample,
    is_irreducible,
)


def naive_polymod_mul(a: int, b: int, poly: int, k: int) -> int:
    """Independent reference: schoolbook GF(2)[x] multiply then long division."""
    prod = 0
    for i in range(k):
        if (a >> i) & 1:
            for j in range(k):
                if (b >> j) & 1:
                    prod ^= 1 << (i + j)
    for deg in range(2 * k - 2, k - 1, -1):
        if (prod >> deg) & 1:
            prod ^= poly << (deg - k)
    return prod


@pytest.mark.parametrize("k", range(1, 9))
def test_field_axioms_exhaustive(k):
    field = GF(k)
    q = field.q
    elems = np.arange(q, dtype=np.int64)
    a = elems[:, None, None]
    b = elems[None, :, None]
    c = elems[None, None, :]
    assert np.array_equal((a ^ b) ^ c, a ^ (b ^ c))
    assert np.all((elems ^ elems) == 0)
    left = field.mul_arrays(a, b ^ c)
    right = field.mul_arrays(a, b) ^ field.mul_arrays(a, c)
    assert np.array_equal(left, right)


@pytest.mark.parametrize("k", [2, 3])
def test_mul_table_matches_naive_oracle(k):
    field = GF(k)
    for a in range(field.q):
        for b in range(field.q):
            assert field.mul(a, b) == naive_polymod_mul(a, b, field.poly, k)


@pytest.mark.parametrize("k", range(1, 9))
def test_table_path_equals_shift_reduce_reference(k):
    field = GF(k)
    for a in range(field.q):
        for b in range(field.q):
            assert field.mul(a, b) == field.mul_ref(a, b)


@pytest.mark.parametrize("k", [12, 16])
def test_table_path_equals_reference_large_fields(k):
    field = GF(k)
    rng = np.random.default_rng(k)
    for a, b in rng.integers(0, field.q, size=(500, 2)):
        assert field.mul(int(a), int(b)) == field.mul_ref(int(a), int(b))


def test_known_values():
    f2, f4, f8 = GF.for_q(2), GF.for_q(4), GF.for_q(8)
    assert f2.add(1, 1) == 0
    assert f4.add(2, 3) == 1
    assert f2.add(0, 1) == 1
    assert f4.mul(2, 2) == 3  # x*x = x+1 mod x^2+x+1
    assert f8.mul(4, 2) == 3  # x^2*x = x^3 = x+1 mod x^3+x+1
    assert f4.inv(2) == 3
    for q in (2, 4, 8, 256):
        field = GF.for_q(q)
        for a in range(1, field.q):
            assert field.mul(a, 1) == a
            assert field.mul(a, 0) == 0
            assert field.mul(a, field.inv(a)) == 1


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        GF.for_q(4).inv(0)


def test_exhaustive_inverse_search_matches():
    field = GF.for_q(4)
    for a in range(1, 4):
        brute = next(b for b in range(1, 4) if field.mul(a, b) == 1)
        assert field.inv(a) == brute


def test_field_element_ops_and_mismatch():
    f4, f8 = GF.for_q(4), GF.for_q(8)
    a = FieldElement(f4, 2)
    b = FieldElement(f4, 3)
    assert ff_add(a, b).value == 1
    assert ff_mul(a, a).value == 3
    assert ff_inv(a).value == 3
    with pytest.raises(FieldMismatchError):
        ff_add(a, FieldElement(f8, 1))
    with pytest.raises(ValueError):
        FieldElement(f4, 4)


def test_sampling_uniformity_and_determinism():
    f2 = GF.for_q(2)
    rng = np.random.default_rng(123)
    draws = [f2.sample(rng) for _ in range(10_000)]
    assert 0.45 <= np.mean(draws) <= 0.55

    seq1 = [ff_sample(f2, np.random.default_rng(7)).value for _ in range(1)]
    a = np.random.default_rng(99)
    b = np.random.default_rng(99)
    assert [f2.sample(a) for _ in range(50)] == [f2.sample(b) for _ in range(50)]

    f16 = GF.for_q(16)
    rng = np.random.default_rng(5)
    seen = {f16.sample(rng) for _ in range(10_000)}
    assert seen == set(range(16))


def test_pinned_polys_are_irreducible():
    for k, poly in REDUCTION_POLYS.items():
        assert is_irreducible(poly, k)


def test_reducible_poly_rejected():
    # x^4 + 1 = (x+1)^4 and x^4 + x^2 + 1 = (x^2+x+1)^2 over GF(2)
    for poly in (0b10001, 0b10101):
        assert not is_irreducible(poly, 4)
        with pytest.raises(ValueError):
            GF(4, reduction_poly=poly)


def test_for_q_rejects_bad_sizes():
    for q in (0, 1, 3, 6, 1 << 17):
        with pytest.raises(ValueError):
            GF.for_q(q)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 4, 9, 16]), st.data())
def test_division_roundtrip(k, data):
    field = GF(k)
    a = data.draw(st.integers(0, field.q - 1))
    b = data.draw(st.integers(1, field.q - 1))
    assert field.mul(field.div(a, b), b) == a


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([3, 5, 11]), st.data())
def test_mul_commutes_and_associates(k, data):
    field = GF(k)
    a, b, c = (data.draw(st.integers(0, field.q - 1)) for _ in range(3))
    assert field.mul(a, b) == field.mul(b, a)
    assert field.mul(field.mul(a, b), c) == field.mul(a, field.mul(b, c))


def test_mul_vec_matches_scalar():
    field = GF.for_q(16)
    rng = np.random.default_rng(0)
    arr = field.rand_array(rng, 40)
    for c in range(16):
        expect = np.array([field.mul(c, int(v)) for v in arr])
        assert np.array_equal(field.mul_vec(c, arr), expect)
    pairs = field.rand_array(rng, (2, 64))
    expect = np.array([field.mul(int(a), int(b)) for a, b in pairs.T])
    assert np.array_equal(field.mul_arrays(pairs[0], pairs[1]), expect)
