"""Commutator relations among the indexed generators, checked by exact evaluation.

Writing ``c(u, v) = <u, v>`` and ``a_i(u)``, ``b_i(u)`` for the indexed
generators, the relations are

* (i)   ``[b_i(u1), [a_i(u2), b_j(u3)]] = b_j(eta) [b_j(eta/2), b_i(-u1)]``,
  ``eta = -c(u2, u3) u1``;
* (ii)  ``[b_i(u1), [a_i(u2), a_j(u3)]] = a_j(lam) [a_j(lam/2), b_i(-u1)]``,
  ``lam = -c(u2, u3) u1``;
* (iii) ``[[b_i(u1), b_j(u2)], [a_j(u3), b_t(u4)]] = [b_i(zeta), b_t(nu)]``;
* (iv)  ``[[a_i(u1), a_j(u2)], [a_t(u3), b_j(u4)]] = [a_i(lam), a_t(eta)]``;
* (v)   ``[[a_i(u1), b_j(u2)], [a_j(u3), b_t(u4)]] = [a_i(eta), b_t(mu)]``;

where the right sides of (iii)-(v) route the scalar ``c(u1, u2) c(u3, u4)``
through a basis vector ``z_l`` of Q and its dual ``phi^-1 z_l``. The ``p-``
forms specialise i = m (relations i, ii) or j = m (iii-v) and rearrange so
the isolated atom is expressed through m-subscripted commutators.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, replace
from typing import Any

from .errors import IndexConstraintError, SetupError
from .matrix import Matrix, Vector, identity, mat_mul, vector_to_json
from .quadspace import QuadSetup, inverse_entries
from .ring import RingSpec
from .transvect import (
    COMMUTATOR_CONVENTION,
    Commutator,
    GenAtom,
    GenWord,
    Inverse,
    Token,
    commutator_entries,
    rank_one_atom,
    token_entries,
    word,
    word_entries,
)

logger = logging.getLogger(__name__)

RELATION_IDS = ("i", "ii", "iii", "iv", "v", "p-i", "p-ii", "p-iii", "p-iv", "p-v")

# Free parameters and the derived parameter negated by mutation tests.
PARAMETERS: dict[str, tuple[str, ...]] = {
    "i": ("beta", "alpha", "gamma"),
    "ii": ("beta", "alpha", "delta"),
    "iii": ("beta", "gamma", "alpha", "mu"),
    "iv": ("alpha", "delta", "xi", "beta"),
    "v": ("alpha", "beta", "delta", "gamma"),
}
MUTATION_TARGET = {"i": "eta", "ii": "lam", "iii": "zeta", "iv": "lam", "v": "eta"}

# Relation (ii) is checked with lam = -c(alpha, delta) beta and zeta = -beta.
# The "as-stated" variant keeps the signs lam = +c(alpha, delta) beta and
# zeta = +beta, which fail in general; it is evaluated alongside for the report.
VARIANTS = ("corrected", "as-stated")


def base_relation(relation: str) -> str:
    return relation.removeprefix("p-")


def minimum_rank(relation: str) -> int:
    return 2 if base_relation(relation) in ("i", "ii") else 3


@dataclass(frozen=True)
class RelationCase:
    """One instance of a relation: P-indices, Q-tags and parameter vectors."""

    relation: str
    i: int
    j: int
    t: int | None = None
    l: int = 1
    params: tuple[tuple[str, Vector], ...] = ()
    qtags: tuple[tuple[str, int], ...] = ()
    mutate: str | None = None
    variant: str = "corrected"

    def param(self, name: str) -> Vector:
        return dict(self.params)[name]

    def qtag(self, name: str) -> int | None:
        return dict(self.qtags).get(name)

    def to_json(self, ring: RingSpec) -> dict[str, Any]:
        data: dict[str, Any] = {"relation": self.relation, "i": self.i, "j": self.j}
        if self.t is not None:
            data["t"] = self.t
        data["l"] = self.l
        data["params"] = {name: vector_to_json(ring, v) for name, v in self.params}
        if self.mutate:
            data["mutate"] = self.mutate
        if self.variant != "corrected":
            data["variant"] = self.variant
        return data


def check_indices(setup: QuadSetup, case: RelationCase) -> None:
    """Enforce index ranges and the side conditions of each relation.

    Raises:
        IndexConstraintError: On any violated condition.
    """
    relation = case.relation
    if relation not in RELATION_IDS:
        raise IndexConstraintError(f"index constraint: unknown relation {relation!r}")
    used = [case.i, case.j] if base_relation(relation) in ("i", "ii") else [case.i, case.j, case.t]
    if any(k is None or not 1 <= k <= setup.m for k in used):
        raise IndexConstraintError(f"index constraint: P-indices {used} must lie in 1..{setup.m}")
    if len(set(used)) != len(used):
        raise IndexConstraintError(f"index constraint: P-indices {used} must be distinct")
    if not 1 <= case.l <= setup.n:
        raise IndexConstraintError(f"index constraint: Q-index l={case.l} outside 1..{setup.n}")
    if relation in ("p-i", "p-ii") and case.i != setup.m:
        raise IndexConstraintError("index constraint: the p-forms of (i), (ii) take i = m")
    if relation in ("p-iii", "p-iv", "p-v") and case.j != setup.m:
        raise IndexConstraintError("index constraint: the p-forms of (iii)-(v) take j = m")


def _scale(setup: QuadSetup, c, v: Vector) -> Vector:
    return tuple(setup.ring.mul(c, x) for x in v)


def derived_parameters(setup: QuadSetup, case: RelationCase) -> dict[str, Vector]:
    """The right-hand parameters composed from the case's free parameters."""
    ring = setup.ring
    p = dict(case.params)
    base = base_relation(case.relation)
    derived: dict[str, Vector] = {}
    if base == "i":
        c = setup.pair(p["alpha"], p["gamma"])
        derived["eta"] = _scale(setup, ring.neg(c), p["beta"])
        derived["nu"] = _scale(setup, setup.half, derived["eta"])
        derived["zeta"] = _scale(setup, ring.neg(ring.one), p["beta"])
    elif base == "ii":
        c = setup.pair(p["alpha"], p["delta"])
        sign = ring.one if case.variant == "as-stated" else ring.neg(ring.one)
        derived["lam"] = _scale(setup, ring.mul(sign, c), p["beta"])
        derived["xi"] = _scale(setup, setup.half, derived["lam"])
        derived["zeta"] = _scale(setup, sign, p["beta"])
    else:
        z, dual = setup.q_basis(case.l), setup.q_dual(case.l)
        if base == "iii":
            c1, c2 = setup.pair(p["beta"], p["gamma"]), setup.pair(p["alpha"], p["mu"])
            derived["zeta"] = _scale(setup, ring.neg(c1), z)
            derived["nu"] = _scale(setup, c2, dual)
        elif base == "iv":
            c1, c2 = setup.pair(p["alpha"], p["delta"]), setup.pair(p["xi"], p["beta"])
            derived["lam"] = _scale(setup, c1, z)
            derived["eta"] = _scale(setup, c2, dual)
        else:
            c1, c2 = setup.pair(p["alpha"], p["beta"]), setup.pair(p["delta"], p["gamma"])
            derived["eta"] = _scale(setup, ring.neg(c1), z)
            derived["mu"] = _scale(setup, c2, dual)
    if case.mutate:
        if case.mutate not in derived:
            raise IndexConstraintError(f"relation {case.relation} has no derived parameter {case.mutate!r}")
        derived[case.mutate] = _scale(setup, ring.neg(ring.one), derived[case.mutate])
    return derived


def relation_words(setup: QuadSetup, case: RelationCase) -> tuple[GenWord, GenWord]:
    """Left and right side of the relation as words (p-forms rearranged)."""
    check_indices(setup, case)
    p = dict(case.params)
    d = derived_parameters(setup, case)
    i, j, t = case.i, case.j, case.t
    tag = case.qtag

    def a(k: int, v: Vector, name: str | None = None) -> GenAtom:
        return rank_one_atom(setup, "EA", k, v, j=tag(name) if name else None)

    def b(k: int, v: Vector, name: str | None = None) -> GenAtom:
        return rank_one_atom(setup, "EB", k, v, j=tag(name) if name else None)

    base = base_relation(case.relation)
    if base == "i":
        lhs = word(Commutator(b(i, p["beta"], "beta"), Commutator(a(i, p["alpha"], "alpha"), b(j, p["gamma"], "gamma"))))
        atom, comm = b(j, d["eta"]), Commutator(b(j, d["nu"]), b(i, d["zeta"]))
    elif base == "ii":
        lhs = word(Commutator(b(i, p["beta"], "beta"), Commutator(a(i, p["alpha"], "alpha"), a(j, p["delta"], "delta"))))
        atom, comm = a(j, d["lam"]), Commutator(a(j, d["xi"]), b(i, d["zeta"]))
    elif base == "iii":
        lhs = word(
            Commutator(
                Commutator(b(i, p["beta"], "beta"), b(j, p["gamma"], "gamma")),
                Commutator(a(j, p["alpha"], "alpha"), b(t, p["mu"], "mu")),
            )
        )
        rhs = word(Commutator(b(i, d["zeta"]), b(t, d["nu"])))
    elif base == "iv":
        lhs = word(
            Commutator(
                Commutator(a(i, p["alpha"], "alpha"), a(j, p["delta"], "delta")),
                Commutator(a(t, p["xi"], "xi"), b(j, p["beta"], "beta")),
            )
        )
        rhs = word(Commutator(a(i, d["lam"]), a(t, d["eta"])))
    else:
        lhs = word(
            Commutator(
                Commutator(a(i, p["alpha"], "alpha"), b(j, p["beta"], "beta")),
                Commutator(a(j, p["delta"], "delta"), b(t, p["gamma"], "gamma")),
            )
        )
        rhs = word(Commutator(a(i, d["eta"]), b(t, d["mu"])))

    if base in ("i", "ii"):
        if case.relation.startswith("p-"):
            # isolate the atom: atom = lhs . comm^-1
            return word(atom), lhs + word(Inverse(comm))
        return lhs, word(atom, comm)
    if case.relation.startswith("p-"):
        return rhs, lhs
    return lhs, rhs


def lhs_rhs(setup: QuadSetup, case: RelationCase) -> tuple[Matrix, Matrix]:
    """Evaluated left and right sides.

    Raises:
        IndexConstraintError: If the case violates its side conditions.
    """
    lhs, rhs = relation_words(setup, case)
    return word_entries(setup, lhs), word_entries(setup, rhs)


def verify_relation(setup: QuadSetup, case: RelationCase) -> bool:
    lhs, rhs = lhs_rhs(setup, case)
    return lhs == rhs


def random_case(setup: QuadSetup, relation: str, rng: random.Random, *, mutate: bool = False) -> RelationCase:
    """An admissible random instance of a relation.

    Raises:
        IndexConstraintError: If m is too small for the relation.
    """
    base = base_relation(relation)
    if base not in PARAMETERS:
        raise IndexConstraintError(f"index constraint: unknown relation {relation!r}")
    need = minimum_rank(relation)
    if setup.m < need:
        raise IndexConstraintError(f"index constraint: relation ({relation}) needs m >= {need}")
    ring = setup.ring
    if base in ("i", "ii"):
        if relation.startswith("p-"):
            i, j = setup.m, rng.randint(1, setup.m - 1)
        else:
            i, j = rng.sample(range(1, setup.m + 1), 2)
        t = None
    else:
        if relation.startswith("p-"):
            j = setup.m
            i, t = rng.sample(range(1, setup.m), 2)
        else:
            i, j, t = rng.sample(range(1, setup.m + 1), 3)
    params = tuple(
        (name, tuple(ring.random_element(rng) for _ in range(setup.n))) for name in PARAMETERS[base]
    )
    qtags = tuple((name, rng.randint(1, setup.n)) for name in PARAMETERS[base])
    return RelationCase(
        relation,
        i,
        j,
        t,
        l=rng.randint(1, setup.n),
        params=params,
        qtags=qtags,
        mutate=MUTATION_TARGET[base] if mutate else None,
    )


def unit_case(setup: QuadSetup, relation: str, *, mutate: bool = False) -> RelationCase:
    """Deterministic case with every parameter equal to (1, 0, ..., 0)."""
    base = base_relation(relation)
    if base in ("i", "ii"):
        i, j, t = (setup.m, 1, None) if relation.startswith("p-") else (1, 2, None)
    else:
        i, j, t = (1, setup.m, 2) if relation.startswith("p-") else (1, 2, 3)
    one = setup.q_basis(1)
    params = tuple((name, one) for name in PARAMETERS[base])
    return RelationCase(relation, i, j, t, params=params, mutate=MUTATION_TARGET[base] if mutate else None)


@dataclass
class RelationReport:
    relation: str
    trials: int = 0
    failures: int = 0
    first_failure: dict[str, Any] | None = None
    skipped: str | None = None
    variant: str | None = None
    as_stated_failures: int | None = None

    @property
    def passed(self) -> bool:
        return self.skipped is None and self.failures == 0

    def to_json(self) -> dict[str, Any]:
        data: dict[str, Any] = {"trials": self.trials, "failures": self.failures, "first-failure-case": self.first_failure}
        if self.skipped:
            data["skipped"] = self.skipped
        if self.variant is not None:
            data["variant"] = self.variant
            data["as-stated-failures"] = self.as_stated_failures
        return data


def run_trials(setup: QuadSetup, relation: str, *, trials: int, seed: int, mutate: bool = False) -> RelationReport:
    """Verify ``trials`` random cases, each drawn from its own seeded stream.

    For (ii) and its p-form each case is also evaluated with the as-stated
    signs; the report carries that failure count next to the variant used.
    """
    report = RelationReport(relation)
    if setup.m < minimum_rank(relation):
        report.skipped = f"needs m >= {minimum_rank(relation)}"
        return report
    for trial in range(trials):
        rng = random.Random(f"{seed}:{setup.ring.label}:{setup.n}:{setup.m}:{relation}:{trial}")
        case = random_case(setup, relation, rng, mutate=mutate)
        report.trials += 1
        if base_relation(relation) == "ii" and not mutate:
            report.variant = case.variant
            stated = replace(case, variant="as-stated")
            report.as_stated_failures = (report.as_stated_failures or 0) + (not verify_relation(setup, stated))
        if not verify_relation(setup, case):
            report.failures += 1
            if report.first_failure is None:
                report.first_failure = case.to_json(setup.ring)
                logger.debug("relation (%s) failed on %s", relation, report.first_failure)
    return report


def resolve_commutator_convention() -> str:
    """Decide the commutator convention with relation (i) over the rationals.

    Both candidate conventions evaluate the same deterministic case (n = 1,
    m = 2, phi = (1), every parameter 1); the one under which the relation
    holds is returned.
    """
    setup = QuadSetup.standard(RingSpec.rationals(), 1, 2)
    case = unit_case(setup, "i")
    lhs_word, rhs_word = relation_words(setup, case)
    passing = []
    for convention in ("ghg^-1h^-1", "g^-1h^-1gh"):
        sides = [_entries_under(setup, w, convention) for w in (lhs_word, rhs_word)]
        if sides[0] == sides[1]:
            passing.append(convention)
    if passing != [COMMUTATOR_CONVENTION]:
        logger.warning("convention check found %s", passing)
    return passing[0] if passing else "undetermined"


def _entries_under(setup: QuadSetup, w: GenWord, convention: str) -> Matrix:
    def evaluate(token: Token) -> Matrix:
        if isinstance(token, GenAtom):
            return token_entries(setup, token)
        if isinstance(token, Inverse):
            return inverse_entries(setup, evaluate(token.token))
        return commutator_entries(setup, evaluate(token.left), evaluate(token.right), convention)

    result = identity(setup.ring, setup.dim)
    for token in w.tokens:
        result = mat_mul(setup.ring, result, evaluate(token))
    return result


def generator_closure_check(setup: QuadSetup, *, budget: int | None = None) -> bool:
    """Do the m-subscripted generators generate the same group as all indexed ones?

    The m-subscripted set is a_m(w), b_m(w) and, for i < m, the commutators
    [a_i, b_m], [a_m, b_i], [a_m, a_i], [b_i, b_m] over all ring vectors.

    Raises:
        SetupError: If m = 0 or the ring is infinite.
        CensusBudgetError: If a closure exceeds the budget.
    """
    from . import grouplab

    if setup.m < 1:
        raise SetupError("nothing to generate")
    if not setup.ring.is_finite:
        raise SetupError("closure comparison needs a finite ring")
    vectors = grouplab.ring_vectors(setup, nonzero=True)
    m = setup.m
    m_tokens: list[Token] = []
    for w in vectors:
        m_tokens.append(rank_one_atom(setup, "EA", m, w))
        m_tokens.append(rank_one_atom(setup, "EB", m, w))
    for i in range(1, m):
        for w in vectors:
            for v in vectors:
                m_tokens.extend(
                    [
                        Commutator(rank_one_atom(setup, "EA", i, w), rank_one_atom(setup, "EB", m, v)),
                        Commutator(rank_one_atom(setup, "EA", m, w), rank_one_atom(setup, "EB", i, v)),
                        Commutator(rank_one_atom(setup, "EA", m, w), rank_one_atom(setup, "EA", i, v)),
                        Commutator(rank_one_atom(setup, "EB", i, w), rank_one_atom(setup, "EB", m, v)),
                    ]
                )
    all_tokens: list[Token] = [
        rank_one_atom(setup, kind, i, w) for kind in ("EA", "EB") for i in range(1, m + 1) for w in vectors
    ]
    subgroup = grouplab.closure_from_tokens(setup, m_tokens, description="m-subscripted generators", budget=budget)
    full = grouplab.closure_from_tokens(setup, all_tokens, description="indexed generators", budget=budget)
    logger.info("closure sizes: m-subscripted %d, all indexed %d", len(subgroup), len(full))
    return subgroup.keys() == full.keys()
