"""Dense exact matrices over a ``RingSpec``.

A matrix is a tuple of row tuples of ring scalars, so it is immutable and
hashable and can key caches directly.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import RingError
from .ring import RingSpec, Scalar

Matrix = tuple[tuple[Scalar, ...], ...]
Vector = tuple[Scalar, ...]


def coerce_matrix(ring: RingSpec, rows: Sequence[Sequence[object]]) -> Matrix:
    matrix = tuple(tuple(ring.coerce(x) for x in row) for row in rows)
    if matrix and len({len(row) for row in matrix}) != 1:
        raise RingError("ragged matrix rows")
    return matrix


def coerce_vector(ring: RingSpec, values: Sequence[object]) -> Vector:
    return tuple(ring.coerce(x) for x in values)


def shape(a: Matrix) -> tuple[int, int]:
    return len(a), (len(a[0]) if a else 0)


def identity(ring: RingSpec, size: int) -> Matrix:
    return tuple(tuple(ring.one if r == c else ring.zero for c in range(size)) for r in range(size))


def zeros(ring: RingSpec, rows: int, cols: int) -> Matrix:
    return tuple(tuple(ring.zero for _ in range(cols)) for _ in range(rows))


def is_zero(a: Matrix) -> bool:
    return all(x == 0 for row in a for x in row)


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def mat_mul(ring: RingSpec, a: Matrix, b: Matrix) -> Matrix:
    if a and b and len(a[0]) != len(b):
        raise RingError(f"cannot multiply {shape(a)} by {shape(b)}")
    if not a or not b or not b[0]:
        return tuple(() for _ in a)
    cols = tuple(zip(*b))
    if ring.modulus is not None:
        n = ring.modulus
        return tuple(tuple(sum(x * y for x, y in zip(row, col) if x and y) % n for col in cols) for row in a)
    zero = Fraction(0)
    return tuple(tuple(sum((x * y for x, y in zip(row, col) if x and y), zero) for col in cols) for row in a)


def mat_prod(ring: RingSpec, size: int, factors: Sequence[Matrix]) -> Matrix:
    result = identity(ring, size)
    for factor in factors:
        result = mat_mul(ring, result, factor)
    return result


def mat_add(ring: RingSpec, a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(ring.add(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_sub(ring: RingSpec, a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(ring.sub(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_neg(ring: RingSpec, a: Matrix) -> Matrix:
    return tuple(tuple(ring.neg(x) for x in row) for row in a)


def mat_scale(ring: RingSpec, s: Scalar, a: Matrix) -> Matrix:
    return tuple(tuple(ring.mul(s, x) for x in row) for row in a)


def vec_mat(ring: RingSpec, v: Vector, a: Matrix) -> Vector:
    """Row vector times matrix."""
    return mat_mul(ring, (tuple(v),), a)[0]


def mat_vec(ring: RingSpec, a: Matrix, v: Vector) -> Vector:
    """Matrix times column vector."""
    return tuple(row[0] for row in mat_mul(ring, a, tuple((x,) for x in v)))


def dot(ring: RingSpec, u: Vector, v: Vector) -> Scalar:
    total = ring.zero
    for x, y in zip(u, v):
        total = ring.add(total, ring.mul(x, y))
    return total


def column(a: Matrix, index: int) -> Vector:
    return tuple(row[index] for row in a)


def submatrix(a: Matrix, rows: range, cols: range) -> Matrix:
    return tuple(tuple(a[r][c] for c in cols) for r in rows)


def assemble(blocks: Sequence[Sequence[Matrix]]) -> Matrix:
    """Glue a grid of blocks; every block in a grid row shares its row count."""
    rows: list[tuple[Scalar, ...]] = []
    for block_row in blocks:
        height = len(block_row[0])
        for r in range(height):
            rows.append(tuple(x for block in block_row for x in block[r]))
    return tuple(rows)


def outer(ring: RingSpec, u: Vector, v: Vector) -> Matrix:
    return tuple(tuple(ring.mul(x, y) for y in v) for x in u)


def unit_vector(ring: RingSpec, size: int, index: int) -> Vector:
    return tuple(ring.one if k == index else ring.zero for k in range(size))


def is_symmetric(a: Matrix) -> bool:
    return a == transpose(a)


def _rational_inverse(a: Sequence[Sequence[Fraction]]) -> tuple[Fraction, list[list[Fraction]]] | None:
    """Gauss-Jordan over Q: return (determinant, inverse), or None when singular."""
    size = len(a)
    work = [list(row) + [Fraction(int(r == c)) for c in range(size)] for r, row in enumerate(a)]
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if work[r][col] != 0), None)
        if pivot is None:
            return None
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            det = -det
        p = work[col][col]
        det *= p
        work[col] = [x / p for x in work[col]]
        for r in range(size):
            if r != col and work[r][col] != 0:
                f = work[r][col]
                work[r] = [x - f * y for x, y in zip(work[r], work[col])]
    return det, [row[size:] for row in work]


def determinant(ring: RingSpec, a: Matrix) -> Scalar:
    lifted = [[Fraction(int(x) if ring.modulus is not None else x) for x in row] for row in a]
    result = _rational_inverse(lifted)
    if result is None:
        return ring.zero
    return ring.coerce(result[0])


def mat_inverse(ring: RingSpec, a: Matrix) -> Matrix:
    """Exact inverse; residues are lifted to Q and the adjugate reduced back.

    Raises:
        RingError: If the matrix is not invertible over the ring.
    """
    lifted = [[Fraction(int(x) if ring.modulus is not None else x) for x in row] for row in a]
    result = _rational_inverse(lifted)
    if result is None:
        raise RingError("matrix is not invertible")
    det, inverse = result
    if ring.modulus is None:
        return tuple(tuple(row) for row in inverse)
    det_mod = ring.coerce(det)
    if not ring.is_unit(det_mod):
        raise RingError("matrix is not invertible")
    det_inv = ring.inv(det_mod)
    # adj = det * inverse has integer entries
    return tuple(tuple(ring.mul(ring.coerce(int(x * det)), det_inv) for x in row) for row in inverse)


def format_matrix(ring: RingSpec, a: Matrix) -> str:
    """One row per line, entries separated by spaces."""
    return "\n".join(" ".join(ring.format(x) for x in row) for row in a)


def parse_matrix(ring: RingSpec, text: str) -> Matrix:
    rows = [line.replace(";", " ").split() for line in text.replace(";", "\n").splitlines() if line.strip()]
    return coerce_matrix(ring, rows)


def matrix_to_json(ring: RingSpec, a: Matrix) -> list[list[str]]:
    return [[ring.format(x) for x in row] for row in a]


def vector_to_json(ring: RingSpec, v: Vector) -> list[str]:
    return [ring.format(x) for x in v]
