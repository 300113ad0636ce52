"""Tests for the finite group census: enumeration, normality, cosets and stability."""

from __future__ import annotations

import random

import numpy as np
import pytest

from dser.orthogonal import grouplab
from dser.orthogonal.errors import CensusBudgetError, SetupError
from dser.orthogonal.grouplab import (
    closure_spot_check,
    coset_product_check,
    coset_space,
    count_hyperbolic_pairs,
    enumerate_elementary,
    enumerate_orthogonal,
    is_subgroup,
    k1_stability_check,
    normality_verdict,
)
from dser.orthogonal.quadspace import QuadSetup, is_orthogonal
from dser.orthogonal.ring import RingSpec
from dser.orthogonal.transvect import word_entries


@pytest.fixture(scope="module")
def z3_rank1() -> QuadSetup:
    return QuadSetup.standard(RingSpec.modular(3), 1, 1)


@pytest.fixture(scope="module")
def z3_rank2() -> QuadSetup:
    return QuadSetup.standard(RingSpec.modular(3), 1, 2)


@pytest.fixture(scope="module")
def o_rank1(z3_rank1: QuadSetup) -> grouplab.GroupCensus:
    return enumerate_orthogonal(z3_rank1)


@pytest.fixture(scope="module")
def o_rank2(z3_rank2: QuadSetup) -> grouplab.GroupCensus:
    return enumerate_orthogonal(z3_rank2)


def test_default_budget_reads_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test that DSER_BUDGET replaces the default budget and junk is ignored."""
    monkeypatch.setenv("DSER_BUDGET", "1234")
    assert grouplab.default_budget() == 1234
    monkeypatch.setenv("DSER_BUDGET", "many")
    assert grouplab.default_budget() == grouplab.DEFAULT_BUDGET


def test_orthogonal_order_rank1(o_rank1: grouplab.GroupCensus) -> None:
    """Test |O| = 48 for Z/3 with n=1, m=1 by direct scan."""
    assert len(o_rank1) == 48
    assert o_rank1.complete
    assert all(is_orthogonal(o_rank1.setup, o_rank1.matrix(k)) for k in range(len(o_rank1)))


def test_orthogonal_order_rank2(o_rank2: grouplab.GroupCensus) -> None:
    """Test |O| = 103680 for Z/3 with n=1, m=2, audited by the pair count."""
    assert len(o_rank2) == 103680
    assert o_rank2.audit["hyperbolic_pairs"] == 2160
    assert o_rank2.audit["smaller_order"] == 48
    assert o_rank2.complete


def test_count_hyperbolic_pairs(z3_rank1: QuadSetup) -> None:
    """Test that the pair count matches |O_1| / |O_0| = 48 / 2."""
    assert count_hyperbolic_pairs(z3_rank1) == 24


def test_elementary_subgroup_rank1(z3_rank1: QuadSetup, o_rank1: grouplab.GroupCensus) -> None:
    """Test that EO is a subgroup whose order divides |O|."""
    eo = enumerate_elementary(z3_rank1)
    assert is_subgroup(eo, o_rank1)
    assert len(o_rank1) % len(eo) == 0
    assert closure_spot_check(eo, random.Random(0), pairs=200)


def test_word_for_reproduces_elements(z3_rank1: QuadSetup) -> None:
    """Test that recorded generator words evaluate to the census elements."""
    eo = enumerate_elementary(z3_rank1)
    for position in range(0, len(eo), max(1, len(eo) // 5)):
        target = eo.matrix(position)
        assert word_entries(z3_rank1, eo.word_for(target)) == target


def test_word_for_requires_generator_tokens(o_rank1: grouplab.GroupCensus) -> None:
    """Test that a scanned census has no words."""
    with pytest.raises(SetupError, match="no generator words"):
        o_rank1.word_for(o_rank1.matrix(0))


def test_budget_is_enforced(z3_rank2: QuadSetup) -> None:
    """Test that a closure beyond the budget raises with the partial size."""
    with pytest.raises(CensusBudgetError) as info:
        enumerate_elementary(z3_rank2, budget=50)
    assert info.value.partial > 50


def test_enumeration_needs_finite_ring() -> None:
    """Test that the rationals cannot be enumerated."""
    with pytest.raises(SetupError, match="finite ring"):
        enumerate_orthogonal(QuadSetup.standard(RingSpec.rationals(), 1, 1))


def test_normality_and_cosets_rank2(z3_rank2: QuadSetup, o_rank2: grouplab.GroupCensus) -> None:
    """Test that EO is normal in O at m=2 and cosets multiply consistently."""
    eo = enumerate_elementary(z3_rank2)
    assert normality_verdict(o_rank2, eo)
    space = coset_space(o_rank2, eo)
    assert space.is_group
    assert space.size * len(eo) == len(o_rank2)
    assert coset_product_check(space, random.Random(1), trials=20)
    identity = np.eye(z3_rank2.dim, dtype=np.int64)
    assert space.label_of(space.representative_matrices()[space.label_of(identity)]) == space.label_of(identity)


def test_normality_rejects_non_subgroups(o_rank1: grouplab.GroupCensus, z3_rank2: QuadSetup) -> None:
    """Test that censuses from different setups are refused."""
    with pytest.raises(SetupError):
        normality_verdict(o_rank1, enumerate_elementary(z3_rank2))


def test_stability_between_ranks(
    z3_rank1: QuadSetup, z3_rank2: QuadSetup, o_rank1: grouplab.GroupCensus, o_rank2: grouplab.GroupCensus
) -> None:
    """Test the stabilization map on O/EO from m=1 to m=2."""
    lower = coset_space(o_rank1, enumerate_elementary(z3_rank1))
    upper = coset_space(o_rank2, enumerate_elementary(z3_rank2))
    report = k1_stability_check(lower, upper, seed=3)
    assert report.stabilized_outside == 0
    assert report.surjective
    data = report.to_json()
    assert data["levels"] == [1, 2]
    assert data["orders"]


def test_stability_rejects_mismatched_rings(o_rank1: grouplab.GroupCensus, z3_rank1: QuadSetup) -> None:
    """Test that levels over different rings are refused."""
    z5 = QuadSetup.standard(RingSpec.modular(5), 1, 1)
    lower = coset_space(o_rank1, enumerate_elementary(z3_rank1))
    upper = coset_space(enumerate_orthogonal(z5), enumerate_elementary(z5))
    with pytest.raises(SetupError, match="mismatched ring"):
        k1_stability_check(lower, upper)
