"""Tests for ring arithmetic, unimodular vectors and elementary row reduction."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dser.orthogonal.errors import RingError
from dser.orthogonal.matrix import mat_inverse, mat_mul, identity, parse_matrix
from dser.orthogonal.ring import (
    ElementaryOp,
    RingSpec,
    apply_elementary_ops,
    elementary_row_reduce,
    is_unimodular,
    stable_range_witness,
    unimodular_coefficients,
    witnessed_stable_rank,
)

ODD_MODULI = st.sampled_from([3, 5, 7, 9, 15, 25])


def test_parse_ring_specs() -> None:
    """Test that ring specs parse to the expected rings and labels."""
    assert RingSpec.parse("rationals") == RingSpec.rationals()
    assert RingSpec.parse("zmod:9").modulus == 9
    assert RingSpec.parse(" ZMOD:5 ").label == "zmod:5"


@pytest.mark.parametrize("text", ["zmod:1", "zmod:x", "integers", ""])
def test_parse_rejects_bad_specs(text: str) -> None:
    """Test that malformed ring specs raise RingError."""
    with pytest.raises(RingError):
        RingSpec.parse(text)


def test_even_modulus_has_no_half() -> None:
    """Test that 2 is not a unit modulo an even number."""
    ring = RingSpec.modular(4)
    assert not ring.has_half
    with pytest.raises(RingError, match="not a unit"):
        ring.half


def test_coerce_fraction_into_residues() -> None:
    """Test that 1/2 becomes the inverse of 2 modulo 5."""
    ring = RingSpec.modular(5)
    assert ring.coerce(Fraction(1, 2)) == 3
    assert ring.parse_value("-1") == 4


@settings(max_examples=200, deadline=None)
@given(modulus=ODD_MODULI, a=st.integers(), b=st.integers(), c=st.integers())
def test_ring_axioms_modular(modulus: int, a: int, b: int, c: int) -> None:
    """Test distributivity and additive inverses in Z/n."""
    ring = RingSpec.modular(modulus)
    x, y, z = ring.elem(a), ring.elem(b), ring.elem(c)
    assert x * (y + z) == x * y + x * z
    assert x + (-x) == ring.elem(0)
    assert (x - y) + y == x


@settings(max_examples=100, deadline=None)
@given(modulus=ODD_MODULI, a=st.integers(min_value=0, max_value=10_000))
def test_units_have_inverses(modulus: int, a: int) -> None:
    """Test that every unit times its inverse is 1."""
    ring = RingSpec.modular(modulus)
    x = ring.coerce(a)
    if ring.is_unit(x):
        assert ring.mul(x, ring.inv(x)) == 1
    else:
        with pytest.raises(RingError):
            ring.inv(x)


def test_is_unimodular() -> None:
    """Test unimodularity over Z/6 and the rationals."""
    z6 = RingSpec.modular(6)
    assert is_unimodular(z6, (2, 3))
    assert not is_unimodular(z6, (2, 4))
    assert is_unimodular(RingSpec.rationals(), (0, Fraction(1, 3)))
    assert not is_unimodular(RingSpec.rationals(), (0, 0))


def test_empty_vector_is_rejected() -> None:
    """Test that the empty vector raises with a clear message."""
    with pytest.raises(RingError, match="empty vector"):
        is_unimodular(RingSpec.modular(5), ())


def test_unimodular_coefficients_solve_the_equation() -> None:
    """Test that the returned coefficients pair to 1."""
    ring = RingSpec.modular(15)
    v = (6, 10)
    u = unimodular_coefficients(ring, v)
    assert sum(a * b for a, b in zip(v, u)) % 15 == 1


def test_stable_range_witness_known_case() -> None:
    """Test the witness for (2, 3) over Z/6 with l = 1."""
    ring = RingSpec.modular(6)
    witness = stable_range_witness(ring, (2, 3), 1)
    assert witness.b == (1,)
    assert is_unimodular(ring, witness.apply(ring, (2, 3)))


def test_stable_range_witness_errors() -> None:
    """Test that non-unimodular input and wrong lengths are rejected."""
    ring = RingSpec.modular(6)
    with pytest.raises(RingError, match="not unimodular"):
        stable_range_witness(ring, (2, 4), 1)
    with pytest.raises(RingError):
        stable_range_witness(ring, (1, 2, 3), 1)


@pytest.mark.parametrize("spec", ["zmod:3", "zmod:5", "zmod:9", "zmod:15", "rationals"])
def test_witnessed_stable_rank_is_one(spec: str) -> None:
    """Test that residue rings and the rationals have witnessed stable rank 1."""
    assert witnessed_stable_rank(RingSpec.parse(spec)) == 1


def test_witnessed_stable_rank_respects_limit() -> None:
    """Test that a zero limit leaves nothing to witness."""
    with pytest.raises(RingError, match="no stable rank"):
        witnessed_stable_rank(RingSpec.modular(5), limit=0)


def test_elementary_row_reduce_known_ops() -> None:
    """Test the deterministic operations for (1, 0) over Z/5."""
    ring = RingSpec.modular(5)
    ops = elementary_row_reduce(ring, (1, 0))
    assert ops == [ElementaryOp(1, 2, 1), ElementaryOp(2, 1, 4)]
    assert apply_elementary_ops(ring, (1, 0), ops) == (0, 1)


@settings(max_examples=100, deadline=None)
@given(modulus=ODD_MODULI, values=st.lists(st.integers(min_value=0, max_value=200), min_size=2, max_size=4))
def test_elementary_row_reduce_reaches_last_unit_vector(modulus: int, values: list[int]) -> None:
    """Test that every unimodular vector is carried to (0, ..., 0, 1)."""
    ring = RingSpec.modular(modulus)
    v = tuple(ring.coerce(x) for x in values)
    if not is_unimodular(ring, v):
        return
    target = tuple([0] * (len(v) - 1) + [1])
    assert apply_elementary_ops(ring, v, elementary_row_reduce(ring, v)) == target


def test_elementary_row_reduce_without_unit_entries() -> None:
    """Test the gcd pivot on (6, 10) over Z/15, which has no unit entry."""
    ring = RingSpec.modular(15)
    ops = elementary_row_reduce(ring, (6, 10))
    assert apply_elementary_ops(ring, (6, 10), ops) == (0, 1)


def test_elementary_row_reduce_over_rationals() -> None:
    """Test the reduction of a rational vector."""
    ring = RingSpec.rationals()
    v = (Fraction(2), Fraction(0), Fraction(-3, 2))
    assert apply_elementary_ops(ring, v, elementary_row_reduce(ring, v)) == (0, 0, 1)


def test_matrix_inverse_modular() -> None:
    """Test the adjugate inverse modulo 9."""
    ring = RingSpec.modular(9)
    a = parse_matrix(ring, "2 1; 1 1")
    assert mat_mul(ring, a, mat_inverse(ring, a)) == identity(ring, 2)


def test_matrix_inverse_rejects_non_units() -> None:
    """Test that a determinant sharing a factor with the modulus is rejected."""
    ring = RingSpec.modular(9)
    with pytest.raises(RingError, match="not invertible"):
        mat_inverse(ring, parse_matrix(ring, "3 0; 0 1"))
