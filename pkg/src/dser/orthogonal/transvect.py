"""Elementary transvections E_alpha, E*_beta and formal words over them.

An atom is ``EA(M)`` or ``EB(N)`` for an m x n parameter matrix. For
``M = x_i (w^t phi)`` the atom is the indexed generator ``a_i(w)`` (resp.
``b_i(w)``), the transvection ``E(p_i, w)`` (resp. ``E(q_i, w)``). Words are
tuples of tokens: atoms, ``Inverse`` and ``Commutator``, with
``[g, h] = g h g^-1 h^-1``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable, Literal, Sequence, Union

from .errors import SetupError, UsageError
from .matrix import (
    Matrix,
    Vector,
    assemble,
    coerce_matrix,
    coerce_vector,
    identity,
    is_zero,
    mat_mul,
    mat_neg,
    mat_scale,
    matrix_to_json,
    transpose,
    vector_to_json,
    zeros,
)
from .quadspace import OrthMatrix, QuadSetup, inverse_entries
from .ring import RingSpec

Kind = Literal["EA", "EB"]
COMMUTATOR_CONVENTION = "ghg^-1h^-1"
# Spellings accepted for atom kinds in word files.
KIND_ALIASES = {"EAlpha": "EA", "EBstar": "EB"}


@dataclass(frozen=True)
class GenAtom:
    """E_alpha (kind EA, alpha: Q -> P) or E*_beta (kind EB, beta: Q -> P*).

    ``index`` and ``vector`` are set for indexed rank-one atoms
    ``param = x_i (w^t phi)``; ``qtag`` keeps the Q-subscript j of alpha_ij,
    which never affects evaluation.
    """

    kind: Kind
    param: Matrix
    index: int | None = None
    vector: Vector | None = None
    qtag: int | None = None

    @property
    def indexed(self) -> bool:
        return self.index is not None

    def row_support(self) -> set[int]:
        """1-based P-indices of the nonzero rows of the parameter."""
        return {r + 1 for r, row in enumerate(self.param) if any(x != 0 for x in row)}


@dataclass(frozen=True)
class Inverse:
    token: Token


@dataclass(frozen=True)
class Commutator:
    left: Token
    right: Token


Token = Union[GenAtom, Inverse, Commutator]


@dataclass(frozen=True)
class GenWord:
    """A formal product of tokens, evaluated left to right."""

    tokens: tuple[Token, ...] = ()

    def __add__(self, other: GenWord) -> GenWord:
        return GenWord(self.tokens + other.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def inverse(self, ring: RingSpec) -> GenWord:
        return GenWord(tuple(invert_token(t, ring) for t in reversed(self.tokens)))


def word(*tokens: Token) -> GenWord:
    return GenWord(tuple(tokens))


def invert_token(token: Token, ring: RingSpec) -> Token:
    if isinstance(token, GenAtom):
        return atom_inverse(token, ring)
    if isinstance(token, Inverse):
        return token.token
    return Inverse(token)


def commutator(left: Token, right: Token) -> Commutator:
    return Commutator(left, right)


def _check_param(setup: QuadSetup, param: Matrix) -> None:
    if len(param) != setup.m or any(len(row) != setup.n for row in param):
        raise SetupError(f"atom parameter must be {setup.m}x{setup.n}")


def general_atom(setup: QuadSetup, kind: Kind, param: Sequence[Sequence[object]]) -> GenAtom:
    matrix = coerce_matrix(setup.ring, param)
    _check_param(setup, matrix)
    return GenAtom(kind, matrix)


def rank_one_atom(setup: QuadSetup, kind: Kind, i: int, w: Sequence[object], j: int | None = None) -> GenAtom:
    """Indexed generator: a_i(w) for EA, b_i(w) for EB, with param x_i (w^t phi).

    Raises:
        SetupError: If i is outside 1..m or w has the wrong length.
    """
    if not 1 <= i <= setup.m:
        raise SetupError(f"P-index {i} out of range 1..{setup.m}")
    vector = coerce_vector(setup.ring, w)
    if len(vector) != setup.n:
        raise SetupError(f"vector must have length {setup.n}")
    row = tuple(mat_mul(setup.ring, (vector,), setup.phi)[0])
    zero_row = tuple(setup.ring.zero for _ in range(setup.n))
    param = tuple(row if r == i - 1 else zero_row for r in range(setup.m))
    return GenAtom(kind, param, index=i, vector=vector, qtag=j)


def atom_inverse(atom: GenAtom, ring: RingSpec) -> GenAtom:
    """Same atom with negated parameter (and vector), kept as canonical residues."""
    param = tuple(tuple(ring.neg(x) for x in row) for row in atom.param)
    vector = None if atom.vector is None else tuple(ring.neg(x) for x in atom.vector)
    return GenAtom(atom.kind, param, atom.index, vector, atom.qtag)


def _normalize_atom(setup: QuadSetup, atom: GenAtom) -> GenAtom:
    ring = setup.ring
    param = coerce_matrix(ring, atom.param)
    _check_param(setup, param)
    vector = None if atom.vector is None else coerce_vector(ring, atom.vector)
    return GenAtom(atom.kind, param, atom.index, vector, atom.qtag)


def atom_entries(setup: QuadSetup, atom: GenAtom) -> Matrix:
    """Raw matrix of an atom (see ``eval_atom``)."""
    return _atom_entries(setup, _normalize_atom(setup, atom))


@lru_cache(maxsize=65536)
def _atom_entries(setup: QuadSetup, atom: GenAtom) -> Matrix:
    ring, n, m = setup.ring, setup.n, setup.m
    x = atom.param
    adjoint = mat_mul(ring, setup.phi_inv, transpose(x))  # n x m
    corner = mat_scale(ring, ring.neg(setup.half), mat_mul(ring, x, adjoint))
    eye_n, eye_m = identity(ring, n), identity(ring, m)
    if atom.kind == "EA":
        return assemble(
            [
                [eye_n, zeros(ring, n, m), mat_neg(ring, adjoint)],
                [x, eye_m, corner],
                [zeros(ring, m, n), zeros(ring, m, m), eye_m],
            ]
        )
    return assemble(
        [
            [eye_n, mat_neg(ring, adjoint), zeros(ring, n, m)],
            [zeros(ring, m, n), eye_m, zeros(ring, m, m)],
            [x, corner, eye_m],
        ]
    )


def eval_atom(setup: QuadSetup, atom: GenAtom) -> OrthMatrix:
    """EA(M) = [[I, 0, -phi^-1 M^t], [M, I, -1/2 M phi^-1 M^t], [0, 0, I]];
    EB(N) = [[I, -phi^-1 N^t, 0], [0, I, 0], [N, -1/2 N phi^-1 N^t, I]].
    """
    return OrthMatrix(setup, atom_entries(setup, atom))


def token_entries(setup: QuadSetup, token: Token) -> Matrix:
    if isinstance(token, GenAtom):
        return atom_entries(setup, token)
    return _token_entries(setup, token)


@lru_cache(maxsize=65536)
def _token_entries(setup: QuadSetup, token: Token) -> Matrix:
    if isinstance(token, Inverse):
        return inverse_entries(setup, token_entries(setup, token.token))
    g = token_entries(setup, token.left)
    h = token_entries(setup, token.right)
    return commutator_entries(setup, g, h)


def commutator_entries(setup: QuadSetup, g: Matrix, h: Matrix, convention: str = COMMUTATOR_CONVENTION) -> Matrix:
    ring = setup.ring
    g_inv = inverse_entries(setup, g)
    h_inv = inverse_entries(setup, h)
    if convention == "ghg^-1h^-1":
        factors = (g, h, g_inv, h_inv)
    elif convention == "g^-1h^-1gh":
        factors = (g_inv, h_inv, g, h)
    else:
        raise UsageError(f"unknown commutator convention {convention!r}")
    result = factors[0]
    for factor in factors[1:]:
        result = mat_mul(ring, result, factor)
    return result


def word_entries(setup: QuadSetup, w: GenWord | Iterable[Token]) -> Matrix:
    tokens = w.tokens if isinstance(w, GenWord) else tuple(w)
    return _word_entries(setup, tokens)


@lru_cache(maxsize=16384)
def _word_entries(setup: QuadSetup, tokens: tuple[Token, ...]) -> Matrix:
    result = identity(setup.ring, setup.dim)
    for token in tokens:
        result = mat_mul(setup.ring, result, token_entries(setup, token))
    return result


def eval_word(setup: QuadSetup, w: GenWord | Iterable[Token]) -> OrthMatrix:
    """Left-to-right product of the token evaluations."""
    return OrthMatrix(setup, word_entries(setup, w), verify=False)


def stabilize_token(big: QuadSetup, token: Token) -> Token:
    """Lift a token of the (n, m-1) setup into the (n, m) setup."""
    if isinstance(token, GenAtom):
        zero_row = tuple(big.ring.zero for _ in range(big.n))
        return GenAtom(token.kind, tuple(token.param) + (zero_row,), token.index, token.vector, token.qtag)
    if isinstance(token, Inverse):
        return Inverse(stabilize_token(big, token.token))
    return Commutator(stabilize_token(big, token.left), stabilize_token(big, token.right))


def stabilize_word(small: QuadSetup, w: GenWord) -> GenWord:
    big = small.with_m(small.m + 1)
    return GenWord(tuple(stabilize_token(big, t) for t in w.tokens))


def random_atom(setup: QuadSetup, rng: random.Random, *, indexed: bool = True, kind: Kind | None = None) -> GenAtom:
    ring = setup.ring
    kind = kind or rng.choice(("EA", "EB"))
    if indexed:
        i = rng.randint(1, setup.m)
        w = [ring.random_element(rng) for _ in range(setup.n)]
        return rank_one_atom(setup, kind, i, w, j=rng.randint(1, setup.n))
    param = [[ring.random_element(rng) for _ in range(setup.n)] for _ in range(setup.m)]
    return general_atom(setup, kind, param)


def random_word(setup: QuadSetup, rng: random.Random, length: int) -> GenWord:
    """Random product of indexed atoms; always an element of EO."""
    return GenWord(tuple(random_atom(setup, rng) for _ in range(length)))


def is_trivial_atom(atom: GenAtom) -> bool:
    return is_zero(atom.param)


def token_to_json(ring: RingSpec, token: Token) -> dict[str, Any]:
    if isinstance(token, GenAtom):
        if token.vector is not None:
            data: dict[str, Any] = {"t": token.kind, "i": token.index, "w": vector_to_json(ring, token.vector)}
            if token.qtag is not None:
                data["j"] = token.qtag
            return data
        return {"t": token.kind, "M": matrix_to_json(ring, token.param)}
    if isinstance(token, Inverse):
        return {"t": "inv", "a": token_to_json(ring, token.token)}
    return {"t": "comm", "a": token_to_json(ring, token.left), "b": token_to_json(ring, token.right)}


def word_to_json(ring: RingSpec, w: GenWord) -> list[dict[str, Any]]:
    return [token_to_json(ring, t) for t in w.tokens]


def token_from_json(setup: QuadSetup, data: dict[str, Any]) -> Token:
    """Parse one token of the word file format.

    Atom kinds are ``EA`` and ``EB``; ``EAlpha`` and ``EBstar`` are read as
    the same kinds.

    Raises:
        UsageError: If the token is malformed.
    """
    if not isinstance(data, dict) or "t" not in data:
        raise UsageError(f"malformed word token: {data!r}")
    tag = KIND_ALIASES.get(data["t"], data["t"])
    if tag in ("EA", "EB"):
        if "M" in data:
            return general_atom(setup, tag, data["M"])
        if "i" in data and "w" in data:
            return rank_one_atom(setup, tag, int(data["i"]), data["w"], j=data.get("j"))
        raise UsageError(f"atom needs 'M' or 'i' and 'w': {data!r}")
    if tag == "inv":
        return Inverse(token_from_json(setup, data["a"]))
    if tag == "comm":
        return Commutator(token_from_json(setup, data["a"]), token_from_json(setup, data["b"]))
    raise UsageError(f"unknown token type {tag!r}")


def word_from_json(setup: QuadSetup, data: Sequence[dict[str, Any]]) -> GenWord:
    return GenWord(tuple(token_from_json(setup, item) for item in data))


def load_word_file(path: Path) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    """Read a word file: a bare token list, or an object with a ``word`` key.

    Returns:
        The setup overrides found in the file (``ring``, ``n``, ``m``, ``phi``)
        and the raw token list.
    """
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as error:
        raise UsageError(f"cannot read word file {path}: {error}") from None
    if isinstance(payload, list):
        return {}, payload
    if isinstance(payload, dict) and isinstance(payload.get("word"), list):
        overrides = {key: payload[key] for key in ("ring", "n", "m", "phi") if key in payload}
        return overrides, payload["word"]
    raise UsageError(f"word file {path} must hold a token list or an object with 'word'")
