"""Tests for the commutator relations among indexed generators."""

from __future__ import annotations

from dataclasses import replace

import pytest

from dser.orthogonal.errors import IndexConstraintError
from dser.orthogonal.quadspace import QuadSetup
from dser.orthogonal.relations import (
    RELATION_IDS,
    RelationCase,
    generator_closure_check,
    lhs_rhs,
    resolve_commutator_convention,
    run_trials,
    unit_case,
    verify_relation,
)
from dser.orthogonal.ring import RingSpec


@pytest.fixture(scope="module")
def setup_z5() -> QuadSetup:
    return QuadSetup.standard(RingSpec.modular(5), 1, 3)


@pytest.mark.parametrize("relation", RELATION_IDS)
def test_relations_hold_over_z5(setup_z5: QuadSetup, relation: str) -> None:
    """Test that every relation holds on seeded random cases with n=1, m=3."""
    report = run_trials(setup_z5, relation, trials=10, seed=42)
    assert report.passed, report.to_json()
    assert report.trials == 10


@pytest.mark.parametrize("relation", ["i", "iv", "p-v"])
def test_relations_hold_with_nondiagonal_form(relation: str) -> None:
    """Test the relations with n=2 and a non-identity phi over Z/9."""
    setup = QuadSetup.standard(RingSpec.modular(9), 2, 3, [[1, 1], [1, 2]])
    assert run_trials(setup, relation, trials=5, seed=7).passed


@pytest.mark.parametrize("relation", ["i", "ii", "iii", "iv", "v"])
def test_relations_hold_over_rationals(relation: str) -> None:
    """Test the deterministic unit case over Q."""
    setup = QuadSetup.standard(RingSpec.rationals(), 1, 3)
    assert verify_relation(setup, unit_case(setup, relation))


@pytest.mark.parametrize("relation", ["i", "ii", "iii", "iv", "v"])
def test_mutated_relations_are_detected(setup_z5: QuadSetup, relation: str) -> None:
    """Test that negating a derived parameter breaks the relation."""
    report = run_trials(setup_z5, relation, trials=20, seed=42, mutate=True)
    assert report.failures > 0
    assert report.to_json()["first-failure-case"]["mutate"]


def test_relation_ii_reports_as_stated_signs(setup_z5: QuadSetup) -> None:
    """Test that (ii) runs with corrected signs and counts failures of the as-stated signs."""
    rationals = QuadSetup.standard(RingSpec.rationals(), 1, 3)
    case = unit_case(rationals, "ii")
    assert verify_relation(rationals, case)
    assert not verify_relation(rationals, replace(case, variant="as-stated"))
    report = run_trials(setup_z5, "ii", trials=20, seed=42)
    data = report.to_json()
    assert report.passed
    assert data["variant"] == "corrected"
    assert 0 < data["as-stated-failures"] <= 20
    assert "variant" not in run_trials(setup_z5, "i", trials=2, seed=42).to_json()


def test_small_rank_is_skipped() -> None:
    """Test that relations needing m >= 3 are skipped for m = 2."""
    setup = QuadSetup.standard(RingSpec.modular(5), 1, 2)
    report = run_trials(setup, "iii", trials=3, seed=1)
    assert report.skipped == "needs m >= 3"
    assert not report.passed
    assert run_trials(setup, "i", trials=3, seed=1).passed


def test_repeated_indices_are_rejected(setup_z5: QuadSetup) -> None:
    """Test that i = j raises IndexConstraintError."""
    one = setup_z5.q_basis(1)
    case = RelationCase("i", 1, 1, params=(("beta", one), ("alpha", one), ("gamma", one)))
    with pytest.raises(IndexConstraintError, match="distinct"):
        lhs_rhs(setup_z5, case)


def test_p_forms_require_m_index(setup_z5: QuadSetup) -> None:
    """Test that the p-forms insist on the m-subscripted position."""
    one = setup_z5.q_basis(1)
    params = tuple((name, one) for name in ("alpha", "beta", "delta", "gamma"))
    with pytest.raises(IndexConstraintError, match="j = m"):
        lhs_rhs(setup_z5, RelationCase("p-v", 1, 2, 3, params=params))
    with pytest.raises(IndexConstraintError, match="1..3"):
        lhs_rhs(setup_z5, RelationCase("v", 1, 2, 4, params=params))


def test_commutator_convention_is_resolved() -> None:
    """Test that relation (i) pins down [g, h] = g h g^-1 h^-1."""
    assert resolve_commutator_convention() == "ghg^-1h^-1"


def test_m_subscripted_generators_generate_the_same_group() -> None:
    """Test the closure comparison over Z/3 with n=1, m=2."""
    setup = QuadSetup.standard(RingSpec.modular(3), 1, 2)
    assert generator_closure_check(setup, budget=500_000)
