"""Tests for the quadratic space, orthogonality and stabilization."""

from __future__ import annotations

import random

import pytest

from dser.orthogonal.errors import NotOrthogonalError, SetupError
from dser.orthogonal.matrix import identity, mat_mul
from dser.orthogonal.quadspace import (
    OrthMatrix,
    QuadSetup,
    block_equations,
    is_orthogonal,
    is_stabilized,
    stabilize,
    unstabilize,
)
from dser.orthogonal.ring import RingSpec
from dser.orthogonal.transvect import eval_word, random_word


def test_psi_layout() -> None:
    """Test that Psi is phi followed by the hyperbolic pairing."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 1, [[2]])
    assert setup.psi == ((2, 0, 0), (0, 0, 1), (0, 1, 0))
    assert setup.dim == 3


def test_setup_requires_half() -> None:
    """Test that an even modulus is rejected."""
    with pytest.raises(SetupError, match="2 not invertible"):
        QuadSetup.standard(RingSpec.modular(4), 1, 1)


def test_setup_rejects_singular_or_asymmetric_phi() -> None:
    """Test phi validation."""
    ring = RingSpec.modular(9)
    with pytest.raises(SetupError, match="not invertible"):
        QuadSetup.standard(ring, 1, 1, [[3]])
    with pytest.raises(SetupError, match="symmetric"):
        QuadSetup.standard(ring, 2, 1, [[1, 1], [0, 1]])


def test_identity_is_orthogonal() -> None:
    """Test that the identity passes the orthogonality check."""
    setup = QuadSetup.standard(RingSpec.rationals(), 2, 2)
    assert is_orthogonal(setup, identity(setup.ring, setup.dim))
    assert OrthMatrix(setup, identity(setup.ring, setup.dim)).is_identity()


def test_non_orthogonal_matrix_is_rejected() -> None:
    """Test that a scaling of Q by 2 is not orthogonal."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 1)
    scaled = ((2, 0, 0), (0, 1, 0), (0, 0, 1))
    assert not is_orthogonal(setup, scaled)
    with pytest.raises(NotOrthogonalError):
        OrthMatrix(setup, scaled)


def test_wrong_size_is_a_setup_error() -> None:
    """Test that a matrix of the wrong size raises SetupError."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 1)
    with pytest.raises(SetupError):
        is_orthogonal(setup, identity(setup.ring, 2))


@pytest.mark.parametrize("ring", [RingSpec.modular(7), RingSpec.rationals()])
def test_block_inverse_and_equations(ring: RingSpec) -> None:
    """Test that the block inverse inverts random words and all nine block identities hold."""
    setup = QuadSetup.standard(ring, 2, 2, [[1, 0], [0, 3]])
    rng = random.Random(11)
    for _ in range(5):
        t = eval_word(setup, random_word(setup, rng, 5))
        assert all(block_equations(t).values())
        assert mat_mul(ring, t.entries, t.inverse().entries) == identity(ring, setup.dim)


def test_stabilize_round_trip_keeps_orthogonality() -> None:
    """Test that stabilization fixes the new pair and unstabilize recovers the matrix."""
    small = QuadSetup.standard(RingSpec.modular(9), 1, 2)
    t = eval_word(small, random_word(small, random.Random(3), 6))
    big = stabilize(t)
    assert big.setup.m == 3
    assert is_orthogonal(big.setup, big.entries)
    assert is_stabilized(big.setup, big.entries)
    assert unstabilize(big).entries == t.entries


def test_unstabilize_rejects_moving_matrices() -> None:
    """Test that a matrix moving the last pair cannot be unstabilized."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 2)
    swap = [list(row) for row in identity(setup.ring, setup.dim)]
    p, q = setup.p_index(2), setup.pstar_index(2)
    swap[p][p] = swap[q][q] = 0
    swap[p][q] = swap[q][p] = 1
    t = OrthMatrix(setup, tuple(tuple(row) for row in swap))
    with pytest.raises(SetupError):
        unstabilize(t)


def test_quadratic_value_and_pairing() -> None:
    """Test q(u) = 1/2 <u, u> with a diagonal form."""
    setup = QuadSetup.standard(RingSpec.rationals(), 2, 0, [[1, 0], [0, 3]])
    assert setup.pair((1, 1), (1, 1)) == 4
    assert setup.q_value((1, 1)) == 2
