"""Conjugation of m-subscripted generators by stabilized matrices, and the
reduction of an EO element to the stabilized image.

For T orthogonal at rank m-1 with blocks a..j of its stabilization, each of
the six generator classes has an explicit four-factor word for
``T^-1 . gen . T``: a commutator carrying a halved parameter, two mixed
commutators and one atom.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Any, Callable

from .errors import FactorizationError, NotOrthogonalError, ReductionError
from .fdg import reduce_corner
from .matrix import (
    Matrix,
    column,
    identity,
    mat_mul,
    mat_neg,
    mat_scale,
    mat_vec,
    matrix_to_json,
    transpose,
)
from .quadspace import OrthMatrix, QuadSetup, inverse_entries, is_orthogonal, is_stabilized, stabilize_entries
from .transvect import (
    Commutator,
    GenAtom,
    GenWord,
    Inverse,
    Token,
    general_atom,
    random_word,
    rank_one_atom,
    token_entries,
    word_entries,
    word_to_json,
)

logger = logging.getLogger(__name__)

CLASSES = ("a_mj", "b_mj", "a_mj_b_kl", "a_ij_b_mk", "a_mk_a_jl", "b_mk_b_jl")


@dataclass(frozen=True)
class ConjCase:
    """Conjugation of ``gen`` (in the rank m setup) by the stabilization of ``t``."""

    setup: QuadSetup
    t: Matrix
    gen: Token

    @property
    def small(self) -> QuadSetup:
        return self.setup.with_m(self.setup.m - 1)

    def to_json(self) -> dict[str, Any]:
        ring = self.setup.ring
        return {
            "class": classify_generator(self.setup, self.gen)[0],
            "T": matrix_to_json(ring, self.t),
            "gen": word_to_json(ring, GenWord((self.gen,))),
        }


def _atom_slot(setup: QuadSetup, token: Token) -> tuple[str, int] | None:
    if not isinstance(token, GenAtom):
        return None
    support = token.row_support()
    if len(support) != 1:
        return None
    return token.kind, next(iter(support))


def classify_generator(setup: QuadSetup, token: Token) -> tuple[str, bool]:
    """Class of an m-subscripted generator and whether its commutator is written swapped.

    Raises:
        FactorizationError: If the token is not in one of the six classes.
    """
    m = setup.m
    slot = _atom_slot(setup, token)
    if slot is not None and slot[1] == m:
        return ("a_mj" if slot[0] == "EA" else "b_mj"), False
    if isinstance(token, Commutator):
        left, right = _atom_slot(setup, token.left), _atom_slot(setup, token.right)
        if left is not None and right is not None:
            for (x, y), swapped in (((left, right), False), ((right, left), True)):
                (kx, ix), (ky, iy) = x, y
                if kx == "EA" and ix == m and ky == "EB" and iy < m:
                    return "a_mj_b_kl", swapped
                if kx == "EA" and ix < m and ky == "EB" and iy == m:
                    return "a_ij_b_mk", swapped
                if kx == "EA" and ix == m and ky == "EA" and iy < m:
                    return "a_mk_a_jl", swapped
                if kx == "EB" and ix == m and ky == "EB" and iy < m:
                    return "b_mk_b_jl", swapped
    raise FactorizationError("generator not in a recognized class")


def gen_word(case: ConjCase) -> GenWord:
    return GenWord((case.gen,))


def conjugate_factorization(case: ConjCase) -> GenWord:
    """Four-factor word equal to T^-1 . gen . T, T the stabilization of ``case.t``.

    Raises:
        NotOrthogonalError: If ``case.t`` is not orthogonal at rank m-1.
        FactorizationError: If the generator is not in a recognized class.
    """
    setup = case.setup
    if not is_orthogonal(case.small, case.t):
        raise NotOrthogonalError("conjugating matrix is not orthogonal at rank m-1")
    cls, swapped = classify_generator(setup, case.gen)
    if swapped:
        flipped = Commutator(case.gen.right, case.gen.left)
        return conjugate_factorization(ConjCase(setup, case.t, flipped)).inverse(setup.ring)
    ring = setup.ring
    bl = setup.blocks(stabilize_entries(setup, case.t))
    a, b, c, d, e, f, g, h, j = (bl[k] for k in "abcdefghj")
    phi, phi_inv = setup.phi, setup.phi_inv

    def mul(*factors: Matrix) -> Matrix:
        result = factors[0]
        for factor in factors[1:]:
            result = mat_mul(ring, result, factor)
        return result

    def half(x: Matrix) -> Matrix:
        return mat_scale(ring, setup.half, x)

    def ea(x: Matrix) -> GenAtom:
        return general_atom(setup, "EA", x)

    def eb(x: Matrix) -> GenAtom:
        return general_atom(setup, "EB", x)

    tr = transpose
    gen = case.gen
    if cls == "a_mj":
        ja = mul(tr(j), gen.param)
        factors = [
            Commutator(ea(mul(ja, b, tr(c), phi)), ea(half(ja))),
            Commutator(ea(mul(tr(c), phi)), ea(ja)),
            Commutator(eb(mul(tr(b), phi)), ea(ja)),
            ea(mul(ja, a)),
        ]
    elif cls == "b_mj":
        eb_ = mul(tr(e), gen.param)
        factors = [
            Commutator(eb(mul(eb_, c, tr(b), phi)), eb(half(eb_))),
            Commutator(eb(mul(tr(b), phi)), eb(eb_)),
            Commutator(ea(mul(tr(c), phi)), eb(eb_)),
            eb(mul(eb_, a)),
        ]
    elif cls == "a_mj_b_kl":
        ja = mul(tr(j), gen.left.param)
        beta = gen.right.param
        factors = [
            Commutator(ea(half(ja)), ea(mul(ja, phi_inv, tr(beta), f, tr(e), beta))),
            Commutator(ea(ja), ea(mul(tr(f), beta))),
            Commutator(ea(ja), eb(mul(tr(e), beta))),
            ea(mat_neg(ring, mul(ja, phi_inv, tr(beta), d))),
        ]
    elif cls == "a_ij_b_mk":
        alpha = gen.left.param
        eb_ = mul(tr(e), gen.right.param)
        factors = [
            Commutator(eb(mul(eb_, phi_inv, tr(alpha), j, tr(h), alpha)), eb(half(eb_))),
            Commutator(eb(mul(tr(h), alpha)), eb(eb_)),
            Commutator(ea(mul(tr(j), alpha)), eb(eb_)),
            eb(mul(eb_, phi_inv, tr(alpha), g)),
        ]
    elif cls == "a_mk_a_jl":
        alpha, delta = gen.left.param, gen.right.param
        ja = mul(tr(j), alpha)
        factors = [
            Commutator(ea(half(ja)), ea(mul(ja, phi_inv, tr(delta), h, tr(j), delta))),
            Commutator(ea(ja), eb(mul(tr(h), delta))),
            Commutator(ea(alpha), ea(mul(tr(j), delta))),
            ea(mat_neg(ring, mul(ja, phi_inv, tr(delta), g))),
        ]
    else:
        beta, gamma = gen.left.param, gen.right.param
        eb_ = mul(tr(e), beta)
        factors = [
            Commutator(eb(half(eb_)), eb(mul(eb_, phi_inv, tr(gamma), e, tr(f), gamma))),
            Commutator(eb(eb_), eb(mul(tr(e), gamma))),
            Commutator(eb(eb_), ea(mul(tr(f), gamma))),
            eb(mat_neg(ring, mul(eb_, phi_inv, tr(gamma), d))),
        ]
    return GenWord(tuple(factors))


def conjugation_target(case: ConjCase) -> Matrix:
    """T^-1 . gen . T by direct multiplication."""
    setup = case.setup
    big = stabilize_entries(setup, case.t)
    return mat_mul(setup.ring, mat_mul(setup.ring, inverse_entries(setup, big), token_entries(setup, case.gen)), big)


def random_generator(setup: QuadSetup, cls: str, rng: random.Random) -> Token:
    """A random generator of class ``cls`` with nonzero vectors."""
    m, ring = setup.m, setup.ring

    def vec():
        while True:
            v = tuple(ring.random_element(rng) for _ in range(setup.n))
            if any(v):
                return v

    def atom(kind: str, i: int) -> GenAtom:
        return rank_one_atom(setup, kind, i, vec(), j=rng.randint(1, setup.n))

    other = rng.randint(1, m - 1)
    builders: dict[str, Callable[[], Token]] = {
        "a_mj": lambda: atom("EA", m),
        "b_mj": lambda: atom("EB", m),
        "a_mj_b_kl": lambda: Commutator(atom("EA", m), atom("EB", other)),
        "a_ij_b_mk": lambda: Commutator(atom("EA", other), atom("EB", m)),
        "a_mk_a_jl": lambda: Commutator(atom("EA", m), atom("EA", other)),
        "b_mk_b_jl": lambda: Commutator(atom("EB", m), atom("EB", other)),
    }
    if cls not in builders:
        raise FactorizationError(f"unknown generator class {cls!r}")
    return builders[cls]()


def random_conj_case(setup: QuadSetup, cls: str, rng: random.Random, *, length: int = 4) -> ConjCase:
    """T a random word of ``length`` atoms at rank m-1, gen random in ``cls``."""
    if setup.m < 2:
        raise FactorizationError("conjugation classes need m >= 2")
    small = setup.with_m(setup.m - 1)
    t = word_entries(small, random_word(small, rng, length))
    return ConjCase(setup, t, random_generator(setup, cls, rng))


@dataclass
class ConjReport:
    cls: str
    trials: int = 0
    failures: int = 0
    first_failure: dict[str, Any] | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_json(self) -> dict[str, Any]:
        return {"trials": self.trials, "failures": self.failures, "first-failure-case": self.first_failure}


def run_conj_trials(setup: QuadSetup, cls: str, *, trials: int, seed: int) -> ConjReport:
    report = ConjReport(cls)
    for trial in range(trials):
        rng = random.Random(f"{seed}:{setup.ring.label}:{setup.n}:{setup.m}:{cls}:{trial}")
        case = random_conj_case(setup, cls, rng)
        report.trials += 1
        if word_entries(setup, conjugate_factorization(case)) != conjugation_target(case):
            report.failures += 1
            if report.first_failure is None:
                report.first_failure = case.to_json()
                logger.debug("class %s failed on %s", cls, report.first_failure)
    return report


@dataclass(frozen=True)
class ReductionTrace:
    """rho4 . rho3 . eta . rho1 . rho2 = residual, the residual fixing p_m and q_m."""

    rho1: GenWord
    rho2: GenWord
    rho3: GenWord
    rho4: GenWord
    residual: OrthMatrix

    @property
    def residual_small(self) -> Matrix:
        setup = self.residual.setup
        keep = [k for k in range(setup.dim) if k not in (setup.p_index(setup.m), setup.pstar_index(setup.m))]
        return tuple(tuple(self.residual.entries[r][c] for c in keep) for r in keep)

    def to_json(self) -> dict[str, Any]:
        ring = self.residual.setup.ring
        return {
            "rho1": word_to_json(ring, self.rho1),
            "rho2": word_to_json(ring, self.rho2),
            "rho3": word_to_json(ring, self.rho3),
            "rho4": word_to_json(ring, self.rho4),
            "residual": matrix_to_json(ring, self.residual.entries),
            "stabilized": is_stabilized(self.residual.setup, self.residual.entries),
        }


def _pair(setup: QuadSetup, left: str, i: int, right: str, j: int, c) -> Commutator:
    return Commutator(
        rank_one_atom(setup, left, i, tuple(setup.ring.mul(c, x) for x in setup.q_basis(1))),
        rank_one_atom(setup, right, j, setup.q_dual(1)),
    )


def reduce_to_smaller(setup: QuadSetup, eta: GenWord | Matrix) -> ReductionTrace:
    """Bring eta to the stabilized image by G-words on the right and C-words on the left.

    rho1 puts 1 at (p_m, p_m); rho2 clears the rest of that row; rho3 and
    rho4 clear the column of p_m from the left.

    Raises:
        ReductionError: If a clearing step leaves a nonzero entry.
    """
    ring, m = setup.ring, setup.m
    entries = word_entries(setup, eta) if isinstance(eta, GenWord) else eta
    t = setup.p_index(m)
    rho1 = reduce_corner(setup, entries).word
    tau = mat_mul(ring, entries, word_entries(setup, rho1))

    right: list[Token] = []

    def push_right(token: Token) -> None:
        nonlocal tau
        right.append(token)
        tau = mat_mul(ring, tau, token_entries(setup, token))

    row_q = tuple(tau[t][k] for k in setup.q_range)
    if any(row_q):
        push_right(rank_one_atom(setup, "EA", m, tuple(ring.neg(x) for x in mat_vec(ring, setup.phi_inv, row_q))))
    for i in range(1, m):
        c = tau[t][setup.p_index(i)]
        if c != 0:
            push_right(_pair(setup, "EA", m, "EB", i, c))
    for i in range(1, m):
        c = tau[t][setup.pstar_index(i)]
        if c != 0:
            push_right(_pair(setup, "EA", i, "EA", m, ring.neg(c)))
    if tau[t] != identity(ring, setup.dim)[t]:
        raise ReductionError(f"row of p_m not cleared: {tau[t]}")

    def left_pass(builders: list[Token]) -> GenWord:
        nonlocal tau
        for token in builders:
            tau = mat_mul(ring, token_entries(setup, token), tau)
        return GenWord(tuple(reversed(builders)))

    y = column(tau, t)
    yq = tuple(y[k] for k in setup.q_range)
    first = [rank_one_atom(setup, "EB", m, yq)] if any(yq) else []
    first += [_pair(setup, "EA", i, "EB", m, y[setup.p_index(i)]) for i in range(1, m) if y[setup.p_index(i)] != 0]
    rho3 = left_pass(first)
    y = column(tau, t)
    second = [_pair(setup, "EB", i, "EB", m, y[setup.pstar_index(i)]) for i in range(1, m) if y[setup.pstar_index(i)] != 0]
    rho4 = left_pass(second)
    if not is_stabilized(setup, tau):
        raise ReductionError(f"residual does not fix p_m and q_m (corner q_m entry {tau[t + m][t + m]})")
    return ReductionTrace(rho1, GenWord(tuple(right)), rho3, rho4, OrthMatrix(setup, tau, verify=False))


def _as_rank_one(setup: QuadSetup, atom: GenAtom) -> tuple[str, int, tuple] | None:
    support = atom.row_support()
    if not support:
        return None
    if len(support) != 1:
        raise FactorizationError("atom parameter is supported on several rows")
    i = next(iter(support))
    if atom.vector is not None:
        return atom.kind, i, atom.vector
    return atom.kind, i, mat_vec(setup.ring, setup.phi_inv, atom.param[i - 1])


def conjugate_by_residual(trace: ReductionTrace, w: GenWord) -> GenWord:
    """Word for R^-1 . w . R, R the residual, built from class factorizations."""
    setup = trace.residual.setup
    ring, m = setup.ring, setup.m
    small_t = trace.residual_small

    def conj(token: Token) -> GenWord:
        if isinstance(token, Inverse):
            return conj(token.token).inverse(ring)
        if isinstance(token, GenAtom):
            slot = _as_rank_one(setup, token)
            if slot is None:
                return GenWord()
            kind, i, vector = slot
            if i == m:
                return conjugate_factorization(ConjCase(setup, small_t, token))
            lam = vector
            neg = tuple(ring.neg(x) for x in lam)
            half = tuple(ring.mul(setup.half, x) for x in lam)

            def b_m(v) -> GenAtom:
                return rank_one_atom(setup, "EB", m, v)

            if kind == "EA":
                inner = _pair(setup, "EA", m, "EA", i, ring.one)
                rewrite = (
                    Commutator(b_m(neg), inner),
                    Inverse(Commutator(rank_one_atom(setup, "EA", i, half), b_m(lam))),
                )
            else:
                inner = _pair(setup, "EA", m, "EB", i, ring.one)
                rewrite = (
                    Commutator(b_m(neg), inner),
                    Commutator(b_m(lam), rank_one_atom(setup, "EB", i, half)),
                )
            return conj_word(GenWord(rewrite))
        try:
            classify_generator(setup, token)
        except FactorizationError:
            left, right = conj(token.left), conj(token.right)
            return left + right + left.inverse(ring) + right.inverse(ring)
        return conjugate_factorization(ConjCase(setup, small_t, token))

    def conj_word(x: GenWord) -> GenWord:
        result = GenWord()
        for token in x.tokens:
            result = result + conj(token)
        return result

    return conj_word(w)


def normality_witness(setup: QuadSetup, eta: GenWord | Matrix, g: Token, trace: ReductionTrace | None = None) -> GenWord:
    """Word for eta^-1 . g . eta:
    rho1 rho2 . C(rho4 rho3 g rho3^-1 rho4^-1) . rho2^-1 rho1^-1, C conjugation by the residual.
    """
    trace = trace or reduce_to_smaller(setup, eta)
    middle = trace.rho4 + trace.rho3 + GenWord((g,)) + trace.rho3.inverse(setup.ring) + trace.rho4.inverse(setup.ring)
    return trace.rho1 + trace.rho2 + conjugate_by_residual(trace, middle) + trace.rho2.inverse(setup.ring) + trace.rho1.inverse(setup.ring)


def witness_holds(setup: QuadSetup, eta: GenWord | Matrix, g: Token, witness: GenWord) -> bool:
    ring = setup.ring
    entries = word_entries(setup, eta) if isinstance(eta, GenWord) else eta
    expected = mat_mul(ring, mat_mul(ring, inverse_entries(setup, entries), token_entries(setup, g)), entries)
    return word_entries(setup, witness) == expected
