"""Exact commutative-ring arithmetic: rationals and residues modulo n.

Values are plain Python scalars (``int`` residues in ``[0, n)`` or
``Fraction``); ``RingSpec`` owns every operation on them so matrices can stay
tuples of scalars. ``RingElem`` wraps a scalar with its ring for callers that
prefer operator syntax.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Literal, Sequence

from .errors import RingError

logger = logging.getLogger(__name__)

Scalar = int | Fraction

# Upper bound on candidate vectors tried by the brute-force searches below.
SEARCH_LIMIT = 200_000


@dataclass(frozen=True)
class RingSpec:
    """A commutative ring with exact arithmetic."""

    kind: Literal["rationals", "modular"]
    modulus: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "rationals":
            if self.modulus is not None:
                raise RingError("the rationals take no modulus")
        elif self.kind == "modular":
            if self.modulus is None or self.modulus < 2:
                raise RingError(f"modulus must be an integer >= 2, got {self.modulus}")
        else:
            raise RingError(f"unknown ring kind: {self.kind}")

    @classmethod
    def rationals(cls) -> RingSpec:
        return cls("rationals")

    @classmethod
    def modular(cls, modulus: int) -> RingSpec:
        return cls("modular", int(modulus))

    @classmethod
    def parse(cls, text: str) -> RingSpec:
        """Parse ``rationals`` or ``zmod:<n>``.

        Raises:
            RingError: If the text names no supported ring.
        """
        spec = text.strip().lower()
        if spec in {"rationals", "q"}:
            return cls.rationals()
        if spec.startswith("zmod:"):
            try:
                modulus = int(spec.split(":", 1)[1])
            except ValueError:
                raise RingError(f"invalid modulus in ring spec: {text!r}") from None
            return cls.modular(modulus)
        raise RingError(f"unknown ring spec {text!r}; expected 'rationals' or 'zmod:<n>'")

    @property
    def label(self) -> str:
        return "rationals" if self.modulus is None else f"zmod:{self.modulus}"

    @property
    def is_finite(self) -> bool:
        return self.modulus is not None

    @property
    def size(self) -> int:
        if self.modulus is None:
            raise RingError("the rationals are infinite")
        return self.modulus

    @property
    def zero(self) -> Scalar:
        return 0 if self.modulus is not None else Fraction(0)

    @property
    def one(self) -> Scalar:
        return 1 if self.modulus is not None else Fraction(1)

    @property
    def has_half(self) -> bool:
        return self.is_unit(self.coerce(2))

    @property
    def half(self) -> Scalar:
        return self.inv(self.coerce(2))

    def coerce(self, value: object) -> Scalar:
        """Bring an int, Fraction, string or RingElem into the ring."""
        if isinstance(value, RingElem):
            if value.ring != self:
                raise RingError(f"element of {value.ring.label} used in {self.label}")
            return value.value
        if isinstance(value, str):
            return self.parse_value(value)
        if isinstance(value, bool):
            value = int(value)
        if self.modulus is None:
            if isinstance(value, (int, Fraction)):
                return Fraction(value)
            raise RingError(f"cannot coerce {value!r} into the rationals")
        if isinstance(value, Fraction):
            return self.mul(value.numerator % self.modulus, self.inv(value.denominator % self.modulus))
        if isinstance(value, int):
            return value % self.modulus
        if hasattr(value, "__index__"):
            return int(value) % self.modulus
        raise RingError(f"cannot coerce {value!r} into {self.label}")

    def parse_value(self, text: str) -> Scalar:
        try:
            parsed = Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            raise RingError(f"invalid ring element: {text!r}") from None
        return self.coerce(parsed)

    def format(self, value: Scalar) -> str:
        return str(value)

    def add(self, a: Scalar, b: Scalar) -> Scalar:
        if self.modulus is None:
            return a + b
        return (a + b) % self.modulus

    def sub(self, a: Scalar, b: Scalar) -> Scalar:
        if self.modulus is None:
            return a - b
        return (a - b) % self.modulus

    def mul(self, a: Scalar, b: Scalar) -> Scalar:
        if self.modulus is None:
            return a * b
        return (a * b) % self.modulus

    def neg(self, a: Scalar) -> Scalar:
        if self.modulus is None:
            return -a
        return (-a) % self.modulus

    def is_unit(self, a: Scalar) -> bool:
        if self.modulus is None:
            return a != 0
        return math.gcd(int(a), self.modulus) == 1

    def inv(self, a: Scalar) -> Scalar:
        if not self.is_unit(a):
            raise RingError(f"{self.format(a)} is not a unit in {self.label}")
        if self.modulus is None:
            return 1 / Fraction(a)
        return pow(int(a), -1, self.modulus)

    def elements(self) -> Iterator[Scalar]:
        """Iterate over a finite ring in increasing residue order."""
        return iter(range(self.size))

    def units(self) -> list[Scalar]:
        return [x for x in self.elements() if self.is_unit(x)]

    def random_element(self, rng: random.Random) -> Scalar:
        if self.modulus is None:
            return Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        return rng.randrange(self.modulus)

    def elem(self, value: object) -> RingElem:
        return RingElem(self, self.coerce(value))


@dataclass(frozen=True)
class RingElem:
    """A ring element with operator syntax; the value is always stored reduced."""

    ring: RingSpec
    value: Scalar

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", self.ring.coerce(self.value))

    def _other(self, other: object) -> Scalar:
        return self.ring.coerce(other)

    def __add__(self, other: object) -> RingElem:
        return RingElem(self.ring, self.ring.add(self.value, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other: object) -> RingElem:
        return RingElem(self.ring, self.ring.sub(self.value, self._other(other)))

    def __rsub__(self, other: object) -> RingElem:
        return RingElem(self.ring, self.ring.sub(self._other(other), self.value))

    def __mul__(self, other: object) -> RingElem:
        return RingElem(self.ring, self.ring.mul(self.value, self._other(other)))

    __rmul__ = __mul__

    def __neg__(self) -> RingElem:
        return RingElem(self.ring, self.ring.neg(self.value))

    def inverse(self) -> RingElem:
        return RingElem(self.ring, self.ring.inv(self.value))

    def is_unit(self) -> bool:
        return self.ring.is_unit(self.value)

    def __str__(self) -> str:
        return self.ring.format(self.value)


@dataclass(frozen=True)
class StableRangeWitness:
    """Multipliers b with (a_1 + a_{l+1} b_1, ..., a_l + a_{l+1} b_l) unimodular."""

    b: tuple[Scalar, ...]

    def apply(self, ring: RingSpec, v: Sequence[Scalar]) -> tuple[Scalar, ...]:
        last = v[-1]
        return tuple(ring.add(a, ring.mul(last, b)) for a, b in zip(v[:-1], self.b))


@dataclass(frozen=True)
class ElementaryOp:
    """The m x m matrix I + scalar * E(row, col); indices are 1-based."""

    row: int
    col: int
    scalar: Scalar


def extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b)."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        return -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _gcd_combination(values: Sequence[int], modulus: int) -> tuple[int, list[int]]:
    """Coefficients c with sum(c_i * v_i) = gcd(values, modulus) modulo the modulus."""
    g = modulus
    coeffs = [0] * len(values)
    for k, value in enumerate(values):
        g, s, t = extended_gcd(g, int(value))
        coeffs = [(s * c) % modulus for c in coeffs]
        coeffs[k] = (coeffs[k] + t) % modulus
    return g % modulus, coeffs


def _coerce_vector(ring: RingSpec, v: Sequence[object]) -> tuple[Scalar, ...]:
    values = tuple(ring.coerce(x) for x in v)
    if not values:
        raise RingError("empty vector")
    return values


def is_unimodular(ring: RingSpec, v: Sequence[object]) -> bool:
    """True iff some u satisfies v . u = 1.

    Raises:
        RingError: If ``v`` is empty.
    """
    values = _coerce_vector(ring, v)
    if ring.modulus is None:
        return any(x != 0 for x in values)
    g = ring.modulus
    for x in values:
        g = math.gcd(g, int(x))
    return g == 1


def unimodular_coefficients(ring: RingSpec, v: Sequence[object]) -> tuple[Scalar, ...]:
    """Return u with v . u = 1.

    Raises:
        RingError: If ``v`` is empty or not unimodular.
    """
    values = _coerce_vector(ring, v)
    if not is_unimodular(ring, values):
        raise RingError("not unimodular")
    if ring.modulus is None:
        k = next(i for i, x in enumerate(values) if x != 0)
        u = [ring.zero] * len(values)
        u[k] = ring.inv(values[k])
        return tuple(u)
    _, coeffs = _gcd_combination([int(x) for x in values], ring.modulus)
    return tuple(c % ring.modulus for c in coeffs)


def stable_range_witness(ring: RingSpec, v: Sequence[object], l: int) -> StableRangeWitness:
    """Find b shortening the unimodular (l+1)-vector v to a unimodular l-vector.

    Finite rings are searched exhaustively in lexicographic order; over the
    rationals ``b = 0`` works unless the prefix vanishes, in which case
    ``b_1 = 1``.

    Raises:
        RingError: If ``v`` has the wrong length, is not unimodular, or no
            witness exists.
    """
    values = _coerce_vector(ring, v)
    if l < 1 or len(values) != l + 1:
        raise RingError(f"expected a vector of length {l + 1}, got {len(values)}")
    if not is_unimodular(ring, values):
        raise RingError("not unimodular")
    if ring.modulus is None:
        b = [ring.zero] * l
        if not any(x != 0 for x in values[:-1]):
            b[0] = ring.one
        return StableRangeWitness(tuple(b))
    for tried, b in enumerate(itertools.product(ring.elements(), repeat=l)):
        if tried >= SEARCH_LIMIT:
            break
        witness = StableRangeWitness(tuple(b))
        if is_unimodular(ring, witness.apply(ring, values)):
            return witness
    raise RingError("no witness")


@functools.lru_cache(maxsize=None)
def witnessed_stable_rank(ring: RingSpec, limit: int = 3) -> int:
    """Smallest l such that every unimodular (l+1)-vector has a stable-range witness.

    Finite rings are checked with ``stable_range_witness`` over all vectors
    of length l+1, or over a seeded sample of ``SEARCH_LIMIT // size`` of
    them when the ring is too large to enumerate; over the rationals its
    closed form always succeeds at l = 1.

    Raises:
        RingError: If no l up to ``limit`` is witnessed.
    """
    if not ring.is_finite:
        return 1
    budget = max(1, SEARCH_LIMIT // ring.size)
    for l in range(1, limit + 1):
        if ring.size ** (l + 1) <= budget:
            vectors: Iterator[tuple[Scalar, ...]] = itertools.product(ring.elements(), repeat=l + 1)
        else:
            rng = random.Random(ring.size * 31 + l)
            vectors = (tuple(ring.random_element(rng) for _ in range(l + 1)) for _ in range(budget))
        try:
            for v in vectors:
                if is_unimodular(ring, v):
                    stable_range_witness(ring, v, l)
        except RingError:
            logger.debug("%s has no witness at l=%d", ring.label, l)
            continue
        return l
    raise RingError(f"no stable rank up to {limit} witnessed for {ring.label}")


def elementary_matrix(ring: RingSpec, size: int, op: ElementaryOp) -> tuple[tuple[Scalar, ...], ...]:
    return tuple(
        tuple(
            ring.one if r == c else (ring.coerce(op.scalar) if (r + 1, c + 1) == (op.row, op.col) else ring.zero)
            for c in range(size)
        )
        for r in range(size)
    )


def apply_elementary_ops(ring: RingSpec, v: Sequence[Scalar], ops: Sequence[ElementaryOp]) -> tuple[Scalar, ...]:
    """Right-multiply the row vector v by each elementary matrix in turn."""
    row = list(v)
    for op in ops:
        row[op.col - 1] = ring.add(row[op.col - 1], ring.mul(op.scalar, row[op.row - 1]))
    return tuple(row)


def elementary_row_reduce(ring: RingSpec, v: Sequence[object]) -> list[ElementaryOp]:
    """Elementary operations whose product eps satisfies v . eps = (0, ..., 0, 1).

    Each record ``(i, j, s)`` adds ``s`` times column ``i`` to column ``j``.
    The pivot strategy is deterministic: a unit is moved into the last slot
    (through a gcd combination when no entry is a unit), scaled to 1 with two
    moves through the first slot, and then used to clear every other entry.

    Raises:
        RingError: If ``v`` is not unimodular or shorter than 2.
    """
    values = list(_coerce_vector(ring, v))
    size = len(values)
    if size < 2:
        raise RingError("elementary reduction needs a vector of length >= 2")
    if not is_unimodular(ring, values):
        raise RingError("not unimodular")
    ops: list[ElementaryOp] = []

    def move(i: int, j: int, s: Scalar) -> None:
        s = ring.coerce(s)
        if s == 0:
            return
        op = ElementaryOp(i, j, s)
        ops.append(op)
        values[:] = apply_elementary_ops(ring, values, [op])

    last = size
    if not ring.is_unit(values[last - 1]):
        pivot = next((k for k in range(1, last) if ring.is_unit(values[k - 1])), None)
        if pivot is not None:
            move(pivot, last, ring.mul(ring.sub(ring.one, values[last - 1]), ring.inv(values[pivot - 1])))
        else:
            # No unit among the entries: use a gcd combination of the prefix.
            g, coeffs = _gcd_combination([int(x) for x in values[:-1]], ring.size)
            shift = next((t for t in ring.elements() if ring.is_unit(ring.add(values[last - 1], ring.mul(t, g)))), None)
            if shift is None:
                logger.debug("gcd pivot failed for %s; falling back to search", values)
                return ops + _search_row_reduce(ring, tuple(values))
            for k, c in enumerate(coeffs, start=1):
                move(k, last, ring.mul(shift, c))
    a = values[last - 1]
    if a != ring.one:
        move(last, 1, ring.mul(ring.sub(ring.one, values[0]), ring.inv(a)))
        move(1, last, ring.sub(ring.one, a))
    for k in range(1, last):
        move(last, k, ring.neg(values[k - 1]))
    return ops


def _search_row_reduce(ring: RingSpec, v: tuple[Scalar, ...]) -> list[ElementaryOp]:
    """Breadth-first search over single elementary moves (finite rings only)."""
    size = len(v)
    target = tuple([ring.zero] * (size - 1) + [ring.one])
    moves = [
        ElementaryOp(i, j, s)
        for i in range(1, size + 1)
        for j in range(1, size + 1)
        if i != j
        for s in ring.elements()
        if s != 0
    ]
    parents: dict[tuple[Scalar, ...], tuple[tuple[Scalar, ...], ElementaryOp] | None] = {v: None}
    queue = deque([v])
    while queue and len(parents) < SEARCH_LIMIT:
        state = queue.popleft()
        if state == target:
            path: list[ElementaryOp] = []
            while parents[state] is not None:
                state, op = parents[state]
                path.append(op)
            return path[::-1]
        for op in moves:
            nxt = apply_elementary_ops(ring, state, [op])
            if nxt not in parents:
                parents[nxt] = (state, op)
                queue.append(nxt)
    raise RingError(f"no elementary reduction found for {v}")
