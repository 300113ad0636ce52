"""Subgroups C, D, G and F of EO, corner reduction and the FDG decomposition.

With ``t`` the coordinate of p_m:

* C is generated by transvections E(q_m, w), w orthogonal to p_m and q_m;
* D by transvections E(p_m, w) with the same w;
* G by every E*-atom together with the commutators [a_i, b_j] and
  [b_i, b_j] for i != j, so its elements have the block shape
  ``[[I, gamma, 0], [0, eps, 0], [theta, psi, eps^-t]]``;
* F is the stabilized image of EO at rank m-1 times C.

Membership is carried by construction as a tag on the word.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Literal, Sequence

from .errors import DecompositionError, FactorizationError, ReductionError, RingError, SetupError
from .matrix import (
    Matrix,
    Vector,
    column,
    identity,
    mat_inverse,
    mat_mul,
    mat_vec,
    matrix_to_json,
    transpose,
    vec_mat,
    zeros,
)
from .quadspace import OrthMatrix, QuadSetup, _stabilized_index, inverse_entries, unstabilize
from .ring import (
    SEARCH_LIMIT,
    ElementaryOp,
    RingSpec,
    Scalar,
    apply_elementary_ops,
    elementary_row_reduce,
    is_unimodular,
    stable_range_witness,
    unimodular_coefficients,
    witnessed_stable_rank,
)
from .transvect import (
    Commutator,
    GenAtom,
    GenWord,
    Inverse,
    Token,
    atom_entries,
    general_atom,
    invert_token,
    rank_one_atom,
    stabilize_token,
    stabilize_word,
    token_entries,
    word_entries,
    word_to_json,
)

logger = logging.getLogger(__name__)

Tag = Literal["C", "D", "G", "F"]


@dataclass(frozen=True)
class TaggedWord:
    """A word together with the subgroup it is built to lie in.

    For F-words ``split`` marks where the stabilized prefix ends and the
    C-suffix begins.
    """

    word: GenWord
    tag: Tag
    split: int | None = None

    def to_json(self, ring: RingSpec) -> dict[str, Any]:
        data: dict[str, Any] = {"tag": self.tag, "word": word_to_json(ring, self.word)}
        if self.split is not None:
            data["split"] = self.split
        return data


@dataclass(frozen=True)
class FdgTriple:
    eta: TaggedWord
    xi: TaggedWord
    mu: TaggedWord
    reduced: bool

    def words(self) -> GenWord:
        return self.eta.word + self.xi.word + self.mu.word

    def to_json(self, setup: QuadSetup) -> dict[str, Any]:
        ring = setup.ring
        t = setup.p_index(setup.m)
        eta = word_entries(setup, self.eta.word)
        return {
            "eta": self.eta.to_json(ring) | {"matrix": matrix_to_json(ring, eta)},
            "xi": self.xi.to_json(ring) | {"matrix": matrix_to_json(ring, word_entries(setup, self.xi.word))},
            "mu": self.mu.to_json(ring) | {"matrix": matrix_to_json(ring, word_entries(setup, self.mu.word))},
            "reduced": self.reduced,
            "reduced_entry": {"row": t, "col": t + 1, "value": ring.format(eta[t - 1][t])},
        }


@dataclass(frozen=True)
class GBlockForm:
    """Blocks of ``[[I, gamma, 0], [0, eps, 0], [theta, psi, eps^-t]]``."""

    ring: RingSpec
    gamma: Matrix
    epsilon: Matrix
    theta: Matrix
    psi: Matrix
    epsilon_inv_t: Matrix

    def propagate(self, u: Vector, v: Vector, w: Vector) -> tuple[Vector, Vector, Vector]:
        """Image of the row (u, v, w): (u + w theta, u gamma + v eps + w psi, w eps^-t)."""
        ring = self.ring
        u2 = tuple(ring.add(a, b) for a, b in zip(u, vec_mat(ring, w, self.theta)))
        parts = (vec_mat(ring, u, self.gamma), vec_mat(ring, v, self.epsilon), vec_mat(ring, w, self.psi))
        v2 = tuple(ring.add(ring.add(a, b), c) for a, b, c in zip(*parts))
        return u2, v2, vec_mat(ring, w, self.epsilon_inv_t)

    def epsilon_prime(self) -> Matrix | None:
        """eps' when eps = [[eps', 0], [0, 1]], otherwise None."""
        eps = self.epsilon
        size = len(eps)
        last = tuple(self.ring.one if k == size - 1 else self.ring.zero for k in range(size))
        if eps[-1] != last or column(eps, size - 1) != last:
            return None
        return tuple(row[:-1] for row in eps[:-1])


def _scaled(setup: QuadSetup, c: Scalar, v: Vector) -> Vector:
    return tuple(setup.ring.mul(c, x) for x in v)


def _pair_token(setup: QuadSetup, left: str, i: int, right: str, j: int, c: Scalar) -> Commutator:
    """[left_i(c z_1), right_j(phi^-1 z_1)], whose bracket parameter is c."""
    return Commutator(
        rank_one_atom(setup, left, i, _scaled(setup, c, setup.q_basis(1))),
        rank_one_atom(setup, right, j, setup.q_dual(1)),
    )


def gl_token(setup: QuadSetup, op: ElementaryOp) -> Commutator:
    """Token with P block I + s E(i, j) and P* block its inverse transpose."""
    return _pair_token(setup, "EA", op.row, "EB", op.col, setup.ring.neg(op.scalar))


def lower_tokens(setup: QuadSetup, s: Matrix) -> list[Commutator]:
    """Tokens whose product is [[I, 0, 0], [0, I, 0], [0, S, I]] for antisymmetric S."""
    tokens = []
    for k in range(1, setup.m + 1):
        for l in range(k + 1, setup.m + 1):
            c = s[l - 1][k - 1]
            if c != 0:
                tokens.append(_pair_token(setup, "EB", k, "EB", l, c))
    return tokens


def _split_row(setup: QuadSetup, row: Vector) -> tuple[Vector, Vector, Vector]:
    return (
        tuple(row[k] for k in setup.q_range),
        tuple(row[k] for k in setup.p_range),
        tuple(row[k] for k in setup.pstar_range),
    )


def _apply(setup: QuadSetup, rows: tuple[Vector, ...], token: Token) -> tuple[Vector, ...]:
    entries = token_entries(setup, token)
    return tuple(vec_mat(setup.ring, row, entries) for row in rows)


def _indexed(token: Token) -> tuple[str, int | None] | None:
    """(kind, P-index) of an atom; the index is None unless one row is supported."""
    if not isinstance(token, GenAtom):
        return None
    if token.index is not None:
        return token.kind, token.index
    support = token.row_support()
    return token.kind, (next(iter(support)) if len(support) == 1 else None)


def _pair(token: Commutator) -> tuple[tuple[str, int | None], tuple[str, int | None]] | None:
    left, right = _indexed(token.left), _indexed(token.right)
    if left is None or right is None:
        return None
    return left, right


def token_in_tag(setup: QuadSetup, token: Token, tag: Tag) -> bool:
    """True when the token is one of the generators of the tagged subgroup (or an inverse)."""
    m = setup.m
    if isinstance(token, Inverse):
        return token_in_tag(setup, token.token, tag)
    if tag == "F":
        return _is_stabilized_token(setup, token) or token_in_tag(setup, token, "C")
    if isinstance(token, GenAtom):
        if token.row_support() == set():
            return True
        kind, index = _indexed(token)
        if tag == "C":
            return kind == "EB" and index == m
        if tag == "D":
            return kind == "EA" and index == m
        return kind == "EB"
    pair = _pair(token)
    if pair is None:
        return False
    kinds = {pair[0][0], pair[1][0]}
    (ka, ia), (kb, ib) = pair
    if ia is None or ib is None or ia == ib:
        return False
    by_kind = {ka: ia, kb: ib} if ka != kb else None
    if tag == "C":
        # [a_i, b_m] or [b_i, b_m] with i < m
        return m in (ia, ib) and (kinds == {"EA", "EB"} and by_kind["EB"] == m or kinds == {"EB"})
    if tag == "D":
        # [a_m, b_i] or [a_m, a_i]
        return m in (ia, ib) and (kinds == {"EA", "EB"} and by_kind["EA"] == m or kinds == {"EA"})
    return kinds == {"EA", "EB"} or kinds == {"EB"}


def _is_stabilized_token(setup: QuadSetup, token: Token) -> bool:
    if isinstance(token, GenAtom):
        return setup.m not in token.row_support()
    if isinstance(token, Inverse):
        return _is_stabilized_token(setup, token.token)
    return _is_stabilized_token(setup, token.left) and _is_stabilized_token(setup, token.right)


def verify_tag(setup: QuadSetup, tagged: TaggedWord) -> bool:
    tokens = tagged.word.tokens
    if tagged.tag != "F":
        return all(token_in_tag(setup, t, tagged.tag) for t in tokens)
    split = len(tokens) if tagged.split is None else tagged.split
    return all(_is_stabilized_token(setup, t) for t in tokens[:split]) and all(
        token_in_tag(setup, t, "C") for t in tokens[split:]
    )


def g_generators(setup: QuadSetup) -> list[Token]:
    """Finite generating set of G: indexed E*-atoms, GL and lower commutators."""
    ring, m = setup.ring, setup.m
    tokens: list[Token] = []
    for i in range(1, m + 1):
        for w in itertools.product(ring.elements(), repeat=setup.n):
            if any(w):
                tokens.append(rank_one_atom(setup, "EB", i, w))
    nonzero = [s for s in ring.elements() if s != 0]
    for i, j in itertools.permutations(range(1, m + 1), 2):
        tokens.extend(gl_token(setup, ElementaryOp(i, j, s)) for s in nonzero)
    for k, l in itertools.combinations(range(1, m + 1), 2):
        tokens.extend(_pair_token(setup, "EB", k, "EB", l, c) for c in nonzero)
    return tokens


def _row_search(
    setup: QuadSetup,
    start: tuple[Vector, ...],
    goal: Callable[[tuple[Vector, ...]], bool],
) -> list[Token]:
    """Breadth-first search over right multiplication of rows by G-generators."""
    if not setup.ring.is_finite:
        raise ReductionError("row search needs a finite ring")
    moves = [(token, token_entries(setup, token)) for token in g_generators(setup)]
    parents: dict[tuple[Vector, ...], tuple[tuple[Vector, ...], Token] | None] = {start: None}
    queue = deque([start])
    while queue and len(parents) < SEARCH_LIMIT:
        state = queue.popleft()
        if goal(state):
            path: list[Token] = []
            while parents[state] is not None:
                state, token = parents[state]
                path.append(token)
            logger.debug("row search found a word of length %d", len(path))
            return path[::-1]
        for token, entries in moves:
            nxt = tuple(vec_mat(setup.ring, row, entries) for row in state)
            if nxt not in parents:
                parents[nxt] = (state, token)
                queue.append(nxt)
    raise ReductionError(f"row search exhausted after {len(parents)} states")


def _antisymmetric_fix(setup: QuadSetup, v: Vector, w: Vector) -> Matrix:
    """Antisymmetric S with v + w S unimodular.

    For some j the vector (v_k for k != j, w_j) is unimodular; a stable-range
    witness b for it gives S[j][k] = b_k, S[k][j] = -b_k, and then the
    coordinates k != j of v + w S are v_k + b_k w_j. Finite rings fall back
    to a bounded search over all antisymmetric S.
    """
    ring, m = setup.ring, setup.m
    pairs = list(itertools.combinations(range(m), 2))

    def build(values: Sequence[Scalar]) -> Matrix:
        s = [[ring.zero] * m for _ in range(m)]
        for (k, l), c in zip(pairs, values):
            s[k][l], s[l][k] = ring.neg(c), c
        return tuple(tuple(row) for row in s)

    def shifted(s: Matrix) -> Vector:
        return tuple(ring.add(a, b) for a, b in zip(v, vec_mat(ring, w, s)))

    for j in range(m):
        others = [k for k in range(m) if k != j]
        candidate = tuple(v[k] for k in others) + (w[j],)
        if not is_unimodular(ring, candidate):
            continue
        witness = stable_range_witness(ring, candidate, m - 1)
        s = [[ring.zero] * m for _ in range(m)]
        for k, b in zip(others, witness.b):
            s[j][k], s[k][j] = b, ring.neg(b)
        fixed = tuple(tuple(row) for row in s)
        if is_unimodular(ring, shifted(fixed)):
            return fixed
    if not ring.is_finite:
        raise ReductionError("no witness")
    for tried, values in enumerate(itertools.product(ring.elements(), repeat=len(pairs))):
        if tried >= SEARCH_LIMIT:
            break
        s = build(values)
        if is_unimodular(ring, shifted(s)):
            return s
    raise ReductionError("no witness")


def _constructive_corner(setup: QuadSetup, row: Vector) -> list[Token]:
    ring, m, n = setup.ring, setup.m, setup.n
    tokens: list[Token] = []
    state = (row,)
    u, v, w = _split_row(setup, row)
    if any(u) and not is_unimodular(ring, v) and is_unimodular(ring, w):
        s = unimodular_coefficients(ring, w)
        param = [[ring.neg(ring.mul(s[r], u[c])) for c in range(n)] for r in range(m)]
        tokens.append(general_atom(setup, "EB", param))
        state = _apply(setup, state, tokens[-1])
        u, v, w = _split_row(setup, state[0])
    if not is_unimodular(ring, v) and not any(w):
        # u gamma alone moves the P_m entry to 1
        y = mat_vec(ring, setup.phi_inv, u)
        c = next((k for k, x in enumerate(y) if ring.is_unit(x)), None)
        if c is None:
            raise ReductionError("not unimodular")
        param = [[ring.zero] * n for _ in range(m)]
        param[m - 1][c] = ring.mul(ring.sub(v[m - 1], ring.one), ring.inv(y[c]))
        tokens.append(general_atom(setup, "EB", param))
        return tokens
    if not is_unimodular(ring, v):
        for token in lower_tokens(setup, _antisymmetric_fix(setup, v, w)):
            tokens.append(token)
            state = _apply(setup, state, token)
        u, v, w = _split_row(setup, state[0])
    tokens.extend(gl_token(setup, op) for op in elementary_row_reduce(ring, v))
    return tokens


def reduce_corner(setup: QuadSetup, sigma: OrthMatrix | Matrix) -> TaggedWord:
    """G-word rho with sigma . rho having 1 at the (p_m, p_m) position.

    The row (u, v, w) of p_m is first made to have unimodular P-part by an
    E*-atom and lower commutators, then the P-part is carried to e_m by
    elementary GL commutators. Finite rings fall back to a row search.

    Raises:
        ReductionError: If m is at most the witnessed stable rank l of the
            ring ("hyperbolic rank too small") or no word is found.
    """
    entries = sigma.entries if isinstance(sigma, OrthMatrix) else sigma
    try:
        stable_rank = witnessed_stable_rank(setup.ring)
    except RingError as error:
        raise ReductionError(str(error)) from error
    if setup.m <= stable_rank:
        raise ReductionError("hyperbolic rank too small")
    ring, t = setup.ring, setup.p_index(setup.m)
    row = entries[t]
    if row[t] == ring.one:
        return TaggedWord(GenWord(), "G")
    try:
        tokens = _constructive_corner(setup, row)
    except (RingError, ReductionError) as error:
        logger.debug("constructive corner reduction failed (%s); searching", error)
        tokens = None
    if tokens is None or vec_mat(ring, row, word_entries(setup, tokens))[t] != ring.one:
        tokens = _row_search(setup, (row,), lambda state: state[0][t] == ring.one)
    return TaggedWord(GenWord(tuple(tokens)), "G")


def _elementary_factors(ring: RingSpec, eps: Matrix) -> list[ElementaryOp]:
    """Elementary operations whose matrices multiply, in order, to eps."""
    size = len(eps)
    if size == 1:
        if eps[0][0] != ring.one:
            raise FactorizationError("P block is not a product of elementary matrices")
        return []
    ops = elementary_row_reduce(ring, eps[-1])
    reduced = [apply_elementary_ops(ring, row, ops) for row in eps]
    inner = tuple(row[:-1] for row in reduced[:-1])
    x = mat_vec(ring, mat_inverse(ring, inner), tuple(row[-1] for row in reduced[:-1]))
    upper = [ElementaryOp(r + 1, size, value) for r, value in enumerate(x) if value != 0]
    undo = [ElementaryOp(op.row, op.col, ring.neg(op.scalar)) for op in reversed(ops)]
    return _elementary_factors(ring, inner) + upper + undo


def g_block_analysis(setup: QuadSetup, mu: OrthMatrix | Matrix, *, embedded: bool = False) -> GBlockForm:
    """Read (gamma, eps, theta, psi) off a G-shaped matrix.

    Every unit row is pushed through ``GBlockForm.propagate`` and must give
    the matching row of mu. With ``embedded`` the eps block must also have
    the shape [[eps', 0], [0, 1]].

    Raises:
        FactorizationError: If a block differs from the G shape.
    """
    entries = mu.entries if isinstance(mu, OrthMatrix) else mu
    ring, n, m = setup.ring, setup.n, setup.m
    bl = setup.blocks(entries)
    fixed = {"a": identity(ring, n), "c": zeros(ring, n, m), "d": zeros(ring, m, n), "f": zeros(ring, m, m)}
    for name, expected in fixed.items():
        if bl[name] != expected:
            raise FactorizationError(f"block {name} is not of G shape")
    try:
        eps_inv_t = transpose(mat_inverse(ring, bl["e"]))
    except RingError:
        raise FactorizationError("block e is not invertible") from None
    if bl["j"] != eps_inv_t:
        raise FactorizationError("block j is not the inverse transpose of e")
    form = GBlockForm(ring, bl["b"], bl["e"], bl["g"], bl["h"], eps_inv_t)
    for k, unit in enumerate(identity(ring, setup.dim)):
        if form.propagate(*_split_row(setup, unit)) != _split_row(setup, entries[k]):
            raise FactorizationError(f"row {k} does not propagate through the G blocks")
    if embedded and form.epsilon_prime() is None:
        raise FactorizationError("block e is not of the shape [[e', 0], [0, 1]]")
    return form


def factor_g_shape(setup: QuadSetup, mu: OrthMatrix | Matrix) -> TaggedWord:
    """Word E*(theta) . lower(S) . GL(eps) for a G-shaped orthogonal matrix."""
    entries = mu.entries if isinstance(mu, OrthMatrix) else mu
    ring = setup.ring
    form = g_block_analysis(setup, entries)
    tokens: list[Token] = []
    if any(x != 0 for row in form.theta for x in row):
        tokens.append(general_atom(setup, "EB", form.theta))
    rest = mat_mul(ring, inverse_entries(setup, word_entries(setup, tokens)), entries)
    s = mat_mul(ring, setup.blocks(rest)["h"], mat_inverse(ring, form.epsilon))
    tokens.extend(lower_tokens(setup, s))
    tokens.extend(gl_token(setup, op) for op in _elementary_factors(ring, form.epsilon))
    result = GenWord(tuple(tokens))
    if word_entries(setup, result) != entries:
        raise FactorizationError("G-shape factoring did not reproduce the matrix")
    return TaggedWord(result, "G")


def d_word(setup: QuadSetup, z: Vector) -> GenWord:
    """D-word for E(p_m, z), z in the orthogonal complement of (p_m, q_m)."""
    ring, m = setup.ring, setup.m
    tokens: list[Token] = []
    zq = tuple(z[k] for k in setup.q_range)
    if any(zq):
        tokens.append(rank_one_atom(setup, "EA", m, zq))
    for i in range(1, m):
        c = z[setup.p_index(i)]
        if c != 0:
            tokens.append(_pair_token(setup, "EA", m, "EA", i, ring.neg(c)))
        c = z[setup.pstar_index(i)]
        if c != 0:
            tokens.append(_pair_token(setup, "EA", m, "EB", i, ring.neg(c)))
    return GenWord(tuple(tokens))


def c_word(setup: QuadSetup, z: Vector) -> GenWord:
    """C-word for E(q_m, z), z in the orthogonal complement of (p_m, q_m)."""
    m = setup.m
    tokens: list[Token] = []
    zq = tuple(z[k] for k in setup.q_range)
    if any(zq):
        tokens.append(rank_one_atom(setup, "EB", m, zq))
    for i in range(1, m):
        c = z[setup.p_index(i)]
        if c != 0:
            tokens.append(_pair_token(setup, "EA", i, "EB", m, c))
        c = z[setup.pstar_index(i)]
        if c != 0:
            tokens.append(_pair_token(setup, "EB", i, "EB", m, c))
    return GenWord(tuple(tokens))


# A factor of a word being decomposed: a token of the (n, m-1) setup
# ("stab"), C(v), D(v), or X(beta) = D(beta q_{m-1}).
Piece = tuple[str, Any]


def _invert_piece(ring: RingSpec, piece: Piece) -> Piece:
    kind, value = piece
    if kind == "stab":
        return kind, invert_token(value, ring)
    if kind == "X":
        return kind, ring.neg(value)
    return kind, tuple(ring.neg(x) for x in value)


def _invert_pieces(ring: RingSpec, pieces: list[Piece]) -> list[Piece]:
    return [_invert_piece(ring, piece) for piece in reversed(pieces)]


def _unit_vector(setup: QuadSetup, k: int, c: Scalar) -> Vector:
    ring = setup.ring
    return tuple(c if r == k else ring.zero for r in range(setup.dim))


def _q_part(setup: QuadSetup, w: Vector) -> Vector:
    """Q-vector placed in the Q coordinates of the full space."""
    return tuple(w) + tuple(setup.ring.zero for _ in range(2 * setup.m))


def _to_small(setup: QuadSetup, v: Vector) -> Vector:
    return tuple(v[_stabilized_index(setup, k)] for k in range(setup.dim - 2))


def _piece_entries(setup: QuadSetup, piece: Piece) -> Matrix:
    kind, value = piece
    if kind == "stab":
        return token_entries(setup, stabilize_token(setup, value))
    if kind == "C":
        return word_entries(setup, c_word(setup, value))
    if kind == "D":
        return word_entries(setup, d_word(setup, value))
    return word_entries(setup, d_word(setup, _unit_vector(setup, setup.pstar_index(setup.m - 1), value)))


def _pieces_entries(setup: QuadSetup, pieces: list[Piece]) -> Matrix:
    result = identity(setup.ring, setup.dim)
    for piece in pieces:
        result = mat_mul(setup.ring, result, _piece_entries(setup, piece))
    return result


def _atom_pieces(setup: QuadSetup, atom: GenAtom) -> list[Piece]:
    """EA(M) as prod_k E(p_k, w_k) times an antisymmetric P/P* correction; EB alike."""
    ring, m = setup.ring, setup.m
    small = setup.with_m(m - 1)
    pieces: list[Piece] = []
    for k, row in enumerate(atom.param, start=1):
        w = mat_vec(ring, setup.phi_inv, row)
        if not any(x != 0 for x in w):
            continue
        if k < m:
            pieces.append(("stab", rank_one_atom(small, atom.kind, k, w)))
        else:
            pieces.append(("D" if atom.kind == "EA" else "C", _q_part(setup, w)))
    rest = mat_mul(ring, inverse_entries(setup, _pieces_entries(setup, pieces)), atom_entries(setup, atom))
    correction = setup.blocks(rest)["f" if atom.kind == "EA" else "h"]
    for k, l in itertools.combinations(range(1, m + 1), 2):
        c = correction[k - 1][l - 1]
        if c == 0:
            continue
        if l < m:
            pieces.append(("stab", _pair_token(small, atom.kind, k, atom.kind, l, ring.neg(c))))
        elif atom.kind == "EA":
            pieces.append(("D", _unit_vector(setup, setup.p_index(k), ring.neg(c))))
        else:
            pieces.append(("C", _unit_vector(setup, setup.pstar_index(k), ring.neg(c))))
    if _pieces_entries(setup, pieces) != atom_entries(setup, atom):
        raise DecompositionError(f"{atom.kind} atom does not split into rank-one factors")
    return pieces


def _token_pieces(setup: QuadSetup, token: Token) -> list[Piece]:
    ring = setup.ring
    if isinstance(token, GenAtom):
        return _atom_pieces(setup, token) if token.row_support() else []
    if isinstance(token, Inverse):
        return _invert_pieces(ring, _token_pieces(setup, token.token))
    left, right = _token_pieces(setup, token.left), _token_pieces(setup, token.right)
    return left + right + _invert_pieces(ring, left) + _invert_pieces(ring, right)


def _d_pieces(setup: QuadSetup, a: Vector) -> list[Piece]:
    """D(a) written with X-pieces and stabilized tokens, coordinate by coordinate.

    D(beta q_i) = X(-beta) g X(beta) g^-1 with g = E(q_i, p_{m-1}) and
    D(alpha p_i) alike with g = E(p_i, p_{m-1}); D(alpha p_{m-1}) goes
    through q_1, and a Q-vector w through g = a_{m-1}(-w), which leaves a
    D(q(w) p_{m-1}) remainder.
    """
    ring, m = setup.ring, setup.m
    small = setup.with_m(m - 1)
    top = m - 1

    def conjugated(beta: Scalar, g: Token) -> list[Piece]:
        return [("X", ring.neg(beta)), ("stab", g), ("X", beta), ("stab", invert_token(g, ring))]

    def along_q(i: int, beta: Scalar) -> list[Piece]:
        if i == top:
            return [("X", beta)]
        return conjugated(beta, _pair_token(small, "EA", top, "EB", i, ring.one))

    def along_p(i: int, alpha: Scalar) -> list[Piece]:
        if i < top:
            return conjugated(alpha, _pair_token(small, "EA", i, "EA", top, ring.neg(ring.one)))
        g = _pair_token(small, "EA", top, "EA", 1, ring.neg(ring.one))
        return along_q(1, ring.neg(alpha)) + [("stab", g)] + along_q(1, alpha) + [("stab", invert_token(g, ring))]

    pieces: list[Piece] = []
    w = tuple(a[k] for k in setup.q_range)
    if any(x != 0 for x in w):
        g = rank_one_atom(small, "EA", top, tuple(ring.neg(x) for x in w))
        pieces += conjugated(ring.one, g)
        qw = setup.q_value(w)
        if qw != 0:
            pieces += along_p(top, qw)
    for i in range(1, m):
        if a[setup.p_index(i)] != 0:
            pieces += along_p(i, a[setup.p_index(i)])
        if a[setup.pstar_index(i)] != 0:
            pieces += along_q(i, a[setup.pstar_index(i)])
    if _pieces_entries(setup, pieces) != word_entries(setup, d_word(setup, a)):
        raise DecompositionError("D-factor does not split into X-pieces")
    return pieces


class _FdgState:
    """The value C(c) . stab(S) . D(d) . mu, built by left multiplication.

    ``c`` and ``d`` lie in the complement of (p_m, q_m), ``s_word`` is a word
    of the (n, m-1) setup with stabilized matrix ``s_big`` and ``mu`` is a
    G-word. The state is reduced when the p_{m-1} coordinate of c is zero,
    which is the (p_{m-1}, p_m) entry of C(c) . stab(S) up to sign.
    """

    def __init__(self, setup: QuadSetup) -> None:
        ring = setup.ring
        self.setup = setup
        self.small = setup.with_m(setup.m - 1)
        self.c: Vector = tuple(ring.zero for _ in range(setup.dim))
        self.d: Vector = self.c
        self.s_word = GenWord()
        self.s_big = identity(ring, setup.dim)
        self.mu = GenWord()

    def _add(self, u: Vector, v: Vector) -> Vector:
        return tuple(self.setup.ring.add(a, b) for a, b in zip(u, v))

    def _stab_entries(self, w: GenWord) -> Matrix:
        return word_entries(self.setup, stabilize_word(self.small, w))

    def push(self, piece: Piece) -> None:
        """Replace the value by piece . value and restore reducedness."""
        kind, value = piece
        if kind == "D":
            for sub in reversed(_d_pieces(self.setup, value)):
                self.push(sub)
            return
        if kind == "stab":
            g = self._stab_entries(GenWord((value,)))
            self.c = mat_vec(self.setup.ring, g, self.c)
            self.s_word = GenWord((value,)) + self.s_word
            self.s_big = mat_mul(self.setup.ring, g, self.s_big)
        elif kind == "C":
            self.c = self._add(self.c, value)
        else:
            self._push_x(value)
        self._reduce()

    def _push_x(self, beta: Scalar) -> None:
        setup, ring = self.setup, self.setup.ring
        top = setup.m - 1
        if self.c[setup.p_index(top)] != 0:
            raise DecompositionError("X-piece applied to an unreduced state")
        a = _unit_vector(setup, setup.pstar_index(top), beta)
        qc = ring.mul(setup.half, setup.bilinear(self.c, self.c))
        moved = c_word(self.small, _to_small(setup, tuple(ring.neg(ring.mul(beta, x)) for x in self.c)))
        self.d = self._add(self.d, mat_vec(ring, inverse_entries(setup, self.s_big), a))
        self.c = self._add(self.c, tuple(ring.neg(ring.mul(qc, x)) for x in a))
        self.s_word = moved + self.s_word
        self.s_big = mat_mul(ring, self._stab_entries(moved), self.s_big)

    def _reduce(self) -> None:
        setup, ring = self.setup, self.setup.ring
        top = setup.m - 1
        p, q = setup.p_index(top), setup.pstar_index(top)
        b = self.c[p]
        if b == 0:
            return
        if not ring.is_unit(self.s_big[p][p]):
            corner = reduce_corner(self.small, unstabilize(OrthMatrix(setup, self.s_big, verify=False)).entries)
            lifted = self._stab_entries(corner.word)
            self.s_word = self.s_word + corner.word
            self.s_big = mat_mul(ring, self.s_big, lifted)
            self.d = mat_vec(ring, inverse_entries(setup, lifted), self.d)
            self.mu = stabilize_word(self.small, corner.word.inverse(ring)) + self.mu
        s = self.s_big[p][p]
        if not ring.is_unit(s):
            raise DecompositionError("unsolvable clearing equation")
        kappa = ring.neg(ring.mul(b, ring.inv(s)))
        self.c = self._add(self.c, tuple(ring.mul(kappa, x) for x in column(self.s_big, p)))
        delta = ring.neg(self.d[q])
        d_prime = self._add(self.d, _unit_vector(setup, q, delta))
        g = d_word(self.small, _to_small(setup, tuple(ring.mul(kappa, x) for x in d_prime)))
        qd = ring.mul(setup.half, setup.bilinear(d_prime, d_prime))
        e = self._add(d_prime, _unit_vector(setup, p, ring.mul(kappa, qd)))
        lifted = self._stab_entries(g)
        self.s_word = self.s_word + g
        self.s_big = mat_mul(ring, self.s_big, lifted)
        self.d = mat_vec(ring, inverse_entries(setup, lifted), e)
        self.mu = (
            c_word(setup, _unit_vector(setup, p, ring.neg(kappa)))
            + d_word(setup, _unit_vector(setup, q, ring.neg(delta)))
            + self.mu
        )
        if self.c[p] != 0:
            raise DecompositionError("corner entry not cleared")

    def triple(self) -> FdgTriple:
        setup = self.setup
        base = stabilize_word(self.small, self.s_word)
        suffix = c_word(setup, mat_vec(setup.ring, inverse_entries(setup, self.s_big), self.c))
        return FdgTriple(
            TaggedWord(base + suffix, "F", len(base)),
            TaggedWord(d_word(setup, self.d), "D"),
            TaggedWord(self.mu, "G"),
            self.c[setup.p_index(setup.m - 1)] == 0,
        )


def fdg_decompose(setup: QuadSetup, theta: GenWord) -> FdgTriple:
    """Reduced decomposition theta = eta . xi . mu with eta in F, xi in D, mu in G.

    Every token is split into stabilized tokens and C- and D-pieces, which
    are multiplied in from the left while the value is kept in the form
    C(c) . stab(S) . D(d) . mu with the corner entry of C(c) . stab(S)
    cleared after each step.

    Raises:
        DecompositionError: If m < l + 2 for the witnessed stable rank l of
            the ring, or a construction step fails its check.
    """
    ring, m = setup.ring, setup.m
    try:
        stable_rank = witnessed_stable_rank(ring)
    except RingError as error:
        raise DecompositionError(str(error)) from error
    if m < stable_rank + 2:
        raise DecompositionError("hyperbolic rank too small")
    try:
        target = word_entries(setup, theta)
    except (RingError, SetupError) as error:
        raise DecompositionError(str(error)) from error
    if target == identity(ring, setup.dim):
        empty = GenWord()
        return FdgTriple(TaggedWord(empty, "F", 0), TaggedWord(empty, "D"), TaggedWord(empty, "G"), True)

    state = _FdgState(setup)
    try:
        pieces = [piece for token in theta for piece in _token_pieces(setup, token)]
        for piece in reversed(pieces):
            state.push(piece)
        triple = state.triple()
    except (RingError, ReductionError, SetupError) as error:
        raise DecompositionError(str(error)) from error
    t = setup.p_index(m)
    if word_entries(setup, triple.words()) != target:
        raise DecompositionError("eta . xi . mu does not reproduce theta")
    if word_entries(setup, triple.eta.word)[t - 1][t] != 0:
        raise DecompositionError("eta is not reduced")
    logger.debug(
        "decomposed word of %d tokens (%d pieces): |eta|=%d |xi|=%d |mu|=%d",
        len(theta),
        len(pieces),
        len(triple.eta.word),
        len(triple.xi.word),
        len(triple.mu.word),
    )
    return triple


def check_triple(setup: QuadSetup, theta: GenWord, triple: FdgTriple) -> dict[str, bool]:
    """Certificates for a triple: product, tags and the reduced entry."""
    t = setup.p_index(setup.m)
    return {
        "product": word_entries(setup, triple.words()) == word_entries(setup, theta),
        "eta_tag": verify_tag(setup, triple.eta),
        "xi_tag": verify_tag(setup, triple.xi),
        "mu_tag": verify_tag(setup, triple.mu),
        "reduced": triple.reduced and word_entries(setup, triple.eta.word)[t - 1][t] == 0,
    }
