"""Tests for the corner reduction, G-shape factoring and the eta . xi . mu decomposition."""

from __future__ import annotations

import random

import pytest

from dser.orthogonal import grouplab
from dser.orthogonal.errors import DecompositionError, FactorizationError, ReductionError
from dser.orthogonal.fdg import (
    TaggedWord,
    _antisymmetric_fix,
    check_triple,
    factor_g_shape,
    fdg_decompose,
    g_block_analysis,
    g_generators,
    gl_token,
    lower_tokens,
    reduce_corner,
    token_in_tag,
    verify_tag,
)
from dser.orthogonal.matrix import identity, vec_mat
from dser.orthogonal.quadspace import QuadSetup
from dser.orthogonal.ring import ElementaryOp, RingSpec, is_unimodular
from dser.orthogonal.transvect import (
    Commutator,
    GenAtom,
    GenWord,
    general_atom,
    random_word,
    rank_one_atom,
    word,
    word_entries,
)


def test_gl_token_has_elementary_p_block() -> None:
    """Test that the GL token carries I + s E(i, j) on P."""
    setup = QuadSetup.standard(RingSpec.modular(7), 1, 3)
    blocks = setup.blocks(word_entries(setup, word(gl_token(setup, ElementaryOp(1, 3, 2)))))
    assert blocks["e"] == ((1, 0, 2), (0, 1, 0), (0, 0, 1))
    assert blocks["a"] == ((1,),)


def test_lower_tokens_build_antisymmetric_block() -> None:
    """Test that lower tokens put S into the (P*, P) block."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 3)
    s = ((0, 4, 0), (1, 0, 3), (0, 2, 0))
    blocks = setup.blocks(word_entries(setup, GenWord(tuple(lower_tokens(setup, s)))))
    assert blocks["h"] == s
    assert blocks["e"] == identity(setup.ring, 3)


def test_reduce_corner_identity_is_empty() -> None:
    """Test that the identity already has 1 in the corner."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 3)
    tagged = reduce_corner(setup, identity(setup.ring, setup.dim))
    assert tagged == TaggedWord(GenWord(), "G")


@pytest.mark.parametrize("modulus", [3, 5, 9])
@pytest.mark.parametrize("seed", range(4))
def test_reduce_corner_reaches_one(modulus: int, seed: int) -> None:
    """Test that sigma . rho has 1 at (p_m, p_m) and rho is a G-word."""
    setup = QuadSetup.standard(RingSpec.modular(modulus), 1, 3)
    sigma = word_entries(setup, random_word(setup, random.Random(seed), 6))
    tagged = reduce_corner(setup, sigma)
    t = setup.p_index(setup.m)
    row = vec_mat(setup.ring, sigma[t], word_entries(setup, tagged.word))
    assert row[t] == 1
    assert verify_tag(setup, tagged)


def test_reduce_corner_needs_two_pairs() -> None:
    """Test that m at or below the stable rank of Z/5 is rejected."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 1)
    with pytest.raises(ReductionError, match="hyperbolic rank too small"):
        reduce_corner(setup, identity(setup.ring, setup.dim))


def test_g_block_analysis_reads_blocks() -> None:
    """Test the blocks of a product of G-generators and the row update."""
    setup = QuadSetup.standard(RingSpec.modular(7), 1, 2)
    mu = word(gl_token(setup, ElementaryOp(2, 1, 3)), rank_one_atom(setup, "EB", 1, [2]))
    form = g_block_analysis(setup, word_entries(setup, mu))
    assert form.epsilon == ((1, 0), (3, 1))
    assert form.epsilon_prime() is None
    row = word_entries(setup, mu)[setup.p_index(2)]
    u, v, w = form.propagate((0,), (0, 1), (0, 0))
    assert u + v + w == row


def test_g_block_analysis_rejects_other_shapes() -> None:
    """Test that an E_alpha atom is not G-shaped."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 2)
    with pytest.raises(FactorizationError, match="block c"):
        g_block_analysis(setup, word_entries(setup, word(rank_one_atom(setup, "EA", 1, [1]))))


@pytest.mark.parametrize("seed", range(5))
def test_factor_g_shape_reproduces_matrix(seed: int) -> None:
    """Test that a random G-element factors into G-generators."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 3)
    rng = random.Random(seed)
    gens = g_generators(setup)
    mu = word_entries(setup, GenWord(tuple(rng.choice(gens) for _ in range(6))))
    tagged = factor_g_shape(setup, mu)
    assert word_entries(setup, tagged.word) == mu
    assert verify_tag(setup, tagged)


def test_tag_membership() -> None:
    """Test generator membership for the C, D and G subgroups."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 3)
    a1, a3 = rank_one_atom(setup, "EA", 1, [1]), rank_one_atom(setup, "EA", 3, [1])
    b1, b3 = rank_one_atom(setup, "EB", 1, [1]), rank_one_atom(setup, "EB", 3, [1])
    assert token_in_tag(setup, b3, "C")
    assert token_in_tag(setup, Commutator(a1, b3), "C")
    assert token_in_tag(setup, a3, "D")
    assert token_in_tag(setup, Commutator(a3, b1), "D")
    assert token_in_tag(setup, b1, "G")
    assert not token_in_tag(setup, a1, "G")
    assert token_in_tag(setup, a1, "F")
    assert not token_in_tag(setup, a3, "F")


@pytest.mark.parametrize("ring", [RingSpec.modular(5), RingSpec.rationals()])
def test_c_generator_decomposes_into_itself(ring: RingSpec) -> None:
    """Test that b_m(w) gives xi = mu = 1 and eta = b_m(w)."""
    setup = QuadSetup.standard(ring, 1, 3)
    theta = word(rank_one_atom(setup, "EB", 3, [2]))
    triple = fdg_decompose(setup, theta)
    assert len(triple.xi.word) == 0
    assert len(triple.mu.word) == 0
    assert word_entries(setup, triple.eta.word) == word_entries(setup, theta)
    assert all(check_triple(setup, theta, triple).values())


def test_identity_decomposes_trivially() -> None:
    """Test the empty triple for the identity."""
    setup = QuadSetup.standard(RingSpec.modular(3), 1, 3)
    triple = fdg_decompose(setup, GenWord())
    assert triple.words() == GenWord()
    assert triple.reduced


@pytest.mark.parametrize("seed", [0, 1])
def test_random_words_decompose_over_z3(seed: int) -> None:
    """Test that random words over Z/3 with n=1, m=3 decompose with all certificates."""
    setup = QuadSetup.standard(RingSpec.modular(3), 1, 3)
    theta = random_word(setup, random.Random(seed), 8)
    triple = fdg_decompose(setup, theta)
    certificates = check_triple(setup, theta, triple)
    assert all(certificates.values()), certificates
    assert triple.to_json(setup)["reduced_entry"]["value"] == "0"


def test_decompose_needs_three_pairs() -> None:
    """Test that m < 3 is rejected."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 2)
    with pytest.raises(DecompositionError, match="hyperbolic rank too small"):
        fdg_decompose(setup, word(general_atom(setup, "EA", [[1], [0]])))


@pytest.mark.parametrize("seed", range(3))
def test_reduce_corner_words_lie_in_g_closure(seed: int) -> None:
    """Test that corner words evaluate inside the enumerated closure of the G-generators."""
    setup = QuadSetup.standard(RingSpec.modular(3), 2, 2)
    closure = grouplab.closure_from_tokens(setup, g_generators(setup), description="G")
    assert len(closure) == 5832
    sigma = word_entries(setup, random_word(setup, random.Random(seed), 6))
    tagged = reduce_corner(setup, sigma)
    assert word_entries(setup, tagged.word) in closure


@pytest.mark.parametrize(
    ("ring", "w", "expected"),
    [
        (RingSpec.modular(5), (0, 2, 0), ((0, 0, 0), (0, 0, 1), (0, 4, 0))),
        (RingSpec.rationals(), (0, 3, 0), ((0, -1, 0), (1, 0, 0), (0, 0, 0))),
    ],
)
def test_lower_corner_factor_comes_from_stable_range_witness(
    ring: RingSpec, w: tuple[int, ...], expected: tuple[tuple[int, ...], ...]
) -> None:
    """Test the antisymmetric S built from a witness and the G blocks of its word."""
    setup = QuadSetup.standard(ring, 1, 3)
    v = (0, 0, 0)
    s = _antisymmetric_fix(setup, v, w)
    assert s == expected
    assert is_unimodular(ring, tuple(a + b for a, b in zip(v, vec_mat(ring, w, s))))
    mu2 = word_entries(setup, GenWord(tuple(lower_tokens(setup, s))))
    form = g_block_analysis(setup, mu2, embedded=True)
    assert all(x == 0 for row in form.theta for x in row)
    assert form.epsilon == identity(ring, 3)
    assert form.epsilon_prime() == identity(ring, 2)
    assert form.psi == s


def test_g_block_analysis_checks_embedded_shape() -> None:
    """Test that eps must end in a unit corner when the embedded shape is asked for."""
    setup = QuadSetup.standard(RingSpec.modular(7), 1, 3)
    inner = word_entries(setup, word(gl_token(setup, ElementaryOp(1, 2, 3))))
    assert g_block_analysis(setup, inner, embedded=True).epsilon_prime() == ((1, 3), (0, 1))
    outer = word_entries(setup, word(gl_token(setup, ElementaryOp(3, 1, 3))))
    with pytest.raises(FactorizationError, match="shape"):
        g_block_analysis(setup, outer, embedded=True)


@pytest.mark.parametrize("seed", range(3))
def test_g_block_analysis_propagates_every_row(seed: int) -> None:
    """Test that a random G-element is reassembled row by row from its blocks."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 3)
    rng = random.Random(seed)
    gens = g_generators(setup)
    mu = word_entries(setup, GenWord(tuple(rng.choice(gens) for _ in range(6))))
    form = g_block_analysis(setup, mu)
    for k, unit in enumerate(identity(setup.ring, setup.dim)):
        u, v, w = form.propagate(unit[:1], unit[1:4], unit[4:])
        assert u + v + w == mu[k]


@pytest.mark.parametrize("ring", [RingSpec.modular(5), RingSpec.modular(9), RingSpec.rationals()])
@pytest.mark.parametrize("seed", range(3))
def test_random_words_decompose_beyond_z3(ring: RingSpec, seed: int) -> None:
    """Test that random words decompose with all certificates over other rings."""
    setup = QuadSetup.standard(ring, 1, 3)
    theta = random_word(setup, random.Random(seed), 6)
    triple = fdg_decompose(setup, theta)
    certificates = check_triple(setup, theta, triple)
    assert all(certificates.values()), certificates
    assert verify_tag(setup, triple.eta)


@pytest.mark.parametrize("ring", [RingSpec.modular(3), RingSpec.modular(5), RingSpec.rationals()])
def test_general_atoms_decompose(ring: RingSpec) -> None:
    """Test that full-rank E_alpha and E*_beta parameters and a commutator decompose."""
    setup = QuadSetup.standard(ring, 1, 3)
    alpha = general_atom(setup, "EA", [[1], [2], [1]])
    beta = general_atom(setup, "EB", [[2], [1], [1]])
    theta = word(alpha, beta, Commutator(alpha, beta))
    triple = fdg_decompose(setup, theta)
    assert all(check_triple(setup, theta, triple).values())


@pytest.mark.parametrize("ring", [RingSpec.modular(3), RingSpec.modular(5), RingSpec.rationals()])
def test_redecomposition_is_valid(ring: RingSpec) -> None:
    """Test that decomposing eta . xi . mu again yields a triple with every certificate."""
    setup = QuadSetup.standard(ring, 1, 3)
    theta = random_word(setup, random.Random(7), 6)
    first = fdg_decompose(setup, theta)
    product = first.words()
    second = fdg_decompose(setup, product)
    assert all(check_triple(setup, product, second).values())
    assert word_entries(setup, second.words()) == word_entries(setup, theta)


def test_decompose_errors_are_decomposition_errors() -> None:
    """Test that a malformed atom parameter surfaces as DecompositionError."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 3)
    with pytest.raises(DecompositionError):
        fdg_decompose(setup, word(general_atom(setup, "EA", [[1], [0], [0]]), GenAtom("EB", ((1, 1),))))
