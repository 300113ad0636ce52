"""Tests for conjugation factorizations, the reduction to the smaller group and normality witnesses."""

from __future__ import annotations

import random

import pytest

from dser.orthogonal.errors import FactorizationError, NotOrthogonalError
from dser.orthogonal.matrix import identity, mat_mul
from dser.orthogonal.normalizer import (
    CLASSES,
    ConjCase,
    classify_generator,
    conjugate_factorization,
    conjugation_target,
    normality_witness,
    random_generator,
    reduce_to_smaller,
    run_conj_trials,
    witness_holds,
)
from dser.orthogonal.quadspace import QuadSetup, is_stabilized
from dser.orthogonal.ring import RingSpec
from dser.orthogonal.transvect import (
    Commutator,
    GenWord,
    random_atom,
    random_word,
    rank_one_atom,
    word_entries,
)


@pytest.mark.parametrize("modulus", [5, 7])
@pytest.mark.parametrize("cls", CLASSES)
def test_factorizations_match_direct_conjugation(modulus: int, cls: str) -> None:
    """Test each class factorization against T^-1 g T with n=1, m=3."""
    setup = QuadSetup.standard(RingSpec.modular(modulus), 1, 3)
    report = run_conj_trials(setup, cls, trials=4, seed=42)
    assert report.passed, report.to_json()


@pytest.mark.parametrize("cls", CLASSES)
def test_factorizations_with_two_dimensional_form(cls: str) -> None:
    """Test the factorizations with n=2 and a non-identity phi."""
    setup = QuadSetup.standard(RingSpec.modular(7), 2, 2, [[2, 1], [1, 1]])
    assert run_conj_trials(setup, cls, trials=3, seed=3).passed


@pytest.mark.parametrize("cls", CLASSES)
def test_identity_conjugation_returns_the_generator(cls: str) -> None:
    """Test that conjugating by the identity gives a word equal to the generator."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 3)
    gen = random_generator(setup, cls, random.Random(1))
    case = ConjCase(setup, identity(setup.ring, setup.dim - 2), gen)
    assert word_entries(setup, conjugate_factorization(case)) == word_entries(setup, GenWord((gen,)))


def test_factorization_has_four_factors() -> None:
    """Test the shape of the factorization for an a_m generator."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 2)
    small = setup.with_m(1)
    t = word_entries(small, random_word(small, random.Random(2), 3))
    case = ConjCase(setup, t, rank_one_atom(setup, "EA", 2, [1]))
    factors = conjugate_factorization(case)
    assert len(factors) == 4
    assert word_entries(setup, factors) == conjugation_target(case)


def test_classify_generator() -> None:
    """Test the class names and the swapped flag."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 3)
    a3 = rank_one_atom(setup, "EA", 3, [1])
    b1 = rank_one_atom(setup, "EB", 1, [2])
    assert classify_generator(setup, a3) == ("a_mj", False)
    assert classify_generator(setup, Commutator(a3, b1)) == ("a_mj_b_kl", False)
    assert classify_generator(setup, Commutator(b1, a3)) == ("a_mj_b_kl", True)
    with pytest.raises(FactorizationError):
        classify_generator(setup, rank_one_atom(setup, "EA", 1, [1]))


def test_swapped_commutator_is_factorized() -> None:
    """Test that a commutator written in the other order still factorizes."""
    setup = QuadSetup.standard(RingSpec.modular(7), 1, 3)
    small = setup.with_m(2)
    t = word_entries(small, random_word(small, random.Random(4), 4))
    gen = Commutator(rank_one_atom(setup, "EB", 1, [3]), rank_one_atom(setup, "EB", 3, [2]))
    case = ConjCase(setup, t, gen)
    assert word_entries(setup, conjugate_factorization(case)) == conjugation_target(case)


def test_non_orthogonal_conjugator_is_rejected() -> None:
    """Test that a non-orthogonal T raises NotOrthogonalError."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 2)
    t = ((2, 0, 0), (0, 1, 0), (0, 0, 1))
    with pytest.raises(NotOrthogonalError):
        conjugate_factorization(ConjCase(setup, t, rank_one_atom(setup, "EB", 2, [1])))


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_reduce_to_smaller_reaches_stabilized_image(seed: int) -> None:
    """Test that rho4 rho3 eta rho1 rho2 fixes the last hyperbolic pair over Z/9."""
    setup = QuadSetup.standard(RingSpec.modular(9), 1, 2)
    eta = random_word(setup, random.Random(seed), 6)
    trace = reduce_to_smaller(setup, eta)
    assert is_stabilized(setup, trace.residual.entries)
    product = word_entries(setup, trace.rho4 + trace.rho3 + eta + trace.rho1 + trace.rho2)
    assert product == trace.residual.entries
    assert trace.to_json()["stabilized"]


def test_reduce_identity_is_trivial() -> None:
    """Test that the identity needs no reduction words."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 2)
    trace = reduce_to_smaller(setup, identity(setup.ring, setup.dim))
    assert len(trace.rho1) == len(trace.rho2) == len(trace.rho3) == len(trace.rho4) == 0
    assert trace.residual.is_identity()


@pytest.mark.parametrize("seed", [5, 6, 7])
def test_normality_witness(seed: int) -> None:
    """Test that the witness word equals eta^-1 g eta over Z/3."""
    setup = QuadSetup.standard(RingSpec.modular(3), 1, 2)
    rng = random.Random(seed)
    eta = random_word(setup, rng, 4)
    g = random_atom(setup, rng)
    witness = normality_witness(setup, eta, g)
    assert witness_holds(setup, eta, g, witness)


def test_witness_for_commutator_generator() -> None:
    """Test the witness when g is itself an m-subscripted commutator."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 3)
    rng = random.Random(11)
    eta = random_word(setup, rng, 3)
    g = Commutator(rank_one_atom(setup, "EA", 1, [2]), rank_one_atom(setup, "EB", 3, [1]))
    assert witness_holds(setup, eta, g, normality_witness(setup, eta, g))
    ring = setup.ring
    entries = word_entries(setup, eta)
    assert mat_mul(ring, entries, word_entries(setup, eta.inverse(ring))) == identity(ring, setup.dim)
