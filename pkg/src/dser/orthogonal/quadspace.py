"""The quadratic space Q + H(A)^m, its orthogonal matrices and stabilization.

Coordinates are column vectors ordered (z, x, f): the Q block first, then the
hyperbolic P block, then its dual P*. The form matrix is
``Psi = phi (+) [[0, I_m], [I_m, 0]]`` and ``q(w) = 1/2 w^t phi w``.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from functools import cached_property
from typing import Sequence

from .errors import NotOrthogonalError, SetupError
from .matrix import (
    Matrix,
    Vector,
    assemble,
    coerce_matrix,
    dot,
    identity,
    is_symmetric,
    mat_add,
    mat_inverse,
    mat_mul,
    mat_vec,
    submatrix,
    transpose,
    zeros,
)
from .ring import RingSpec, Scalar

BLOCK_NAMES = ("a", "b", "c", "d", "e", "f", "g", "h", "j")


@dataclass(frozen=True)
class QuadSetup:
    """Ranks n and m, the ring, and the symmetric invertible form phi on Q."""

    ring: RingSpec
    n: int
    m: int
    phi: Matrix

    def __post_init__(self) -> None:
        if self.n < 1:
            raise SetupError(f"rank of Q must be >= 1, got {self.n}")
        if self.m < 0:
            raise SetupError(f"hyperbolic rank must be >= 0, got {self.m}")
        if not self.ring.has_half:
            raise SetupError("2 not invertible")
        if len(self.phi) != self.n or any(len(row) != self.n for row in self.phi):
            raise SetupError(f"phi must be {self.n}x{self.n}")
        if not is_symmetric(self.phi):
            raise SetupError("phi must be symmetric")
        try:
            self.phi_inv
        except ValueError:
            raise SetupError("phi is not invertible") from None

    @classmethod
    def standard(
        cls,
        ring: RingSpec,
        n: int,
        m: int,
        phi: Sequence[Sequence[object]] | None = None,
    ) -> QuadSetup:
        """Build a setup; phi defaults to the identity."""
        form = identity(ring, n) if phi is None else coerce_matrix(ring, phi)
        return cls(ring, n, m, form)

    def with_m(self, m: int) -> QuadSetup:
        return QuadSetup(self.ring, self.n, m, self.phi)

    @property
    def dim(self) -> int:
        return self.n + 2 * self.m

    @cached_property
    def phi_inv(self) -> Matrix:
        return mat_inverse(self.ring, self.phi)

    @cached_property
    def psi(self) -> Matrix:
        ring, n, m = self.ring, self.n, self.m
        return assemble(
            [
                [self.phi, zeros(ring, n, m), zeros(ring, n, m)],
                [zeros(ring, m, n), zeros(ring, m, m), identity(ring, m)],
                [zeros(ring, m, n), identity(ring, m), zeros(ring, m, m)],
            ]
        )

    @property
    def half(self) -> Scalar:
        return self.ring.half

    @property
    def q_range(self) -> range:
        return range(0, self.n)

    @property
    def p_range(self) -> range:
        return range(self.n, self.n + self.m)

    @property
    def pstar_range(self) -> range:
        return range(self.n + self.m, self.dim)

    def p_index(self, i: int) -> int:
        """0-based coordinate of p_i (1-based i)."""
        return self.n + i - 1

    def pstar_index(self, i: int) -> int:
        """0-based coordinate of q_i, the dual of p_i."""
        return self.n + self.m + i - 1

    def pair(self, u: Vector, v: Vector) -> Scalar:
        """<u, v> = u^t phi v on Q."""
        return dot(self.ring, u, mat_vec(self.ring, self.phi, v))

    def q_value(self, u: Vector) -> Scalar:
        return self.ring.mul(self.half, self.pair(u, u))

    def bilinear(self, v: Vector, w: Vector) -> Scalar:
        return dot(self.ring, v, mat_vec(self.ring, self.psi, w))

    def q_basis(self, k: int = 1) -> Vector:
        """Standard basis vector z_k of A^n."""
        return tuple(self.ring.one if r == k - 1 else self.ring.zero for r in range(self.n))

    def q_dual(self, k: int = 1) -> Vector:
        """phi^{-1} z_k, so that <z_k, phi^{-1} z_k> = 1."""
        return tuple(row[k - 1] for row in self.phi_inv)

    def blocks(self, t: Matrix) -> dict[str, Matrix]:
        """Read the nine blocks a..j of a (n+2m)-square matrix."""
        ranges = (self.q_range, self.p_range, self.pstar_range)
        names = iter(BLOCK_NAMES)
        return {next(names): submatrix(t, rows, cols) for rows in ranges for cols in ranges}

    def label(self) -> str:
        return f"{self.ring.label} n={self.n} m={self.m}"


@dataclass(frozen=True)
class OrthMatrix:
    """A matrix certified to satisfy T^t Psi T = Psi."""

    setup: QuadSetup
    entries: Matrix
    verify: InitVar[bool] = True

    def __post_init__(self, verify: bool) -> None:
        if verify and not is_orthogonal(self.setup, self.entries):
            raise NotOrthogonalError(f"matrix is not orthogonal for {self.setup.label()}")

    def __matmul__(self, other: OrthMatrix) -> OrthMatrix:
        if other.setup != self.setup:
            raise SetupError("cannot multiply matrices from different setups")
        return OrthMatrix(self.setup, mat_mul(self.setup.ring, self.entries, other.entries), verify=False)

    def blocks(self) -> dict[str, Matrix]:
        return self.setup.blocks(self.entries)

    def inverse(self) -> OrthMatrix:
        return block_inverse(self)

    def is_identity(self) -> bool:
        return self.entries == identity(self.setup.ring, self.setup.dim)


def is_orthogonal(setup: QuadSetup, m: Matrix) -> bool:
    """True iff M^t Psi M = Psi exactly.

    Raises:
        SetupError: If M is not (n+2m)-square.
    """
    size = setup.dim
    if len(m) != size or any(len(row) != size for row in m):
        raise SetupError(f"expected a {size}x{size} matrix")
    ring = setup.ring
    return mat_mul(ring, transpose(m), mat_mul(ring, setup.psi, m)) == setup.psi


def block_equations(t: OrthMatrix) -> dict[str, bool]:
    """Evaluate the nine block identities of T^t Psi T = Psi one at a time.

    The (X, Y) identity reads X_Q^t phi Y_Q + X_P^t Y_P* + X_P*^t Y_P = Psi_XY
    for the block columns X, Y of T; e.g. (Q, Q) is a^t phi a + d^t g + g^t d = phi.
    """
    setup = t.setup
    ring = setup.ring
    bl = t.blocks()
    columns = {
        "Q": (bl["a"], bl["d"], bl["g"]),
        "P": (bl["b"], bl["e"], bl["h"]),
        "P*": (bl["c"], bl["f"], bl["j"]),
    }
    expected = setup.blocks(setup.psi)
    target = {
        ("Q", "Q"): expected["a"], ("Q", "P"): expected["b"], ("Q", "P*"): expected["c"],
        ("P", "Q"): expected["d"], ("P", "P"): expected["e"], ("P", "P*"): expected["f"],
        ("P*", "Q"): expected["g"], ("P*", "P"): expected["h"], ("P*", "P*"): expected["j"],
    }
    results = {}
    for (x, y), value in target.items():
        xq, xp, xs = columns[x]
        yq, yp, ys = columns[y]
        lhs = mat_mul(ring, transpose(xq), mat_mul(ring, setup.phi, yq))
        lhs = mat_add(ring, lhs, mat_mul(ring, transpose(xp), ys))
        lhs = mat_add(ring, lhs, mat_mul(ring, transpose(xs), yp))
        results[f"{x},{y}"] = lhs == value
    return results


def inverse_entries(setup: QuadSetup, t: Matrix) -> Matrix:
    """Block formula for the inverse of an orthogonal matrix, without checks."""
    ring = setup.ring
    bl = setup.blocks(t)
    phi, phi_inv = setup.phi, setup.phi_inv
    return assemble(
        [
            [
                mat_mul(ring, phi_inv, mat_mul(ring, transpose(bl["a"]), phi)),
                mat_mul(ring, phi_inv, transpose(bl["g"])),
                mat_mul(ring, phi_inv, transpose(bl["d"])),
            ],
            [mat_mul(ring, transpose(bl["c"]), phi), transpose(bl["j"]), transpose(bl["f"])],
            [mat_mul(ring, transpose(bl["b"]), phi), transpose(bl["h"]), transpose(bl["e"])],
        ]
    )


def block_inverse(t: OrthMatrix) -> OrthMatrix:
    """Return [[phi^-1 a^t phi, phi^-1 g^t, phi^-1 d^t], [c^t phi, j^t, f^t], [b^t phi, h^t, e^t]].

    Raises:
        NotOrthogonalError: If the input is not orthogonal.
    """
    if not is_orthogonal(t.setup, t.entries):
        raise NotOrthogonalError("block inverse requires an orthogonal matrix")
    return OrthMatrix(t.setup, inverse_entries(t.setup, t.entries), verify=False)


def _stabilized_index(setup: QuadSetup, k: int) -> int:
    """Position in the (n, m) setup of coordinate k of the (n, m-1) setup."""
    return k if k < setup.n + setup.m - 1 else k + 1


def stabilize_entries(big: QuadSetup, t: Matrix) -> Matrix:
    ring = big.ring
    rows = [list(row) for row in identity(ring, big.dim)]
    for r, row in enumerate(t):
        rr = _stabilized_index(big, r)
        for c, value in enumerate(row):
            rows[rr][_stabilized_index(big, c)] = value
    return tuple(tuple(row) for row in rows)


def stabilize(t: OrthMatrix) -> OrthMatrix:
    """Embed O(Q + H^{m-1}) into O(Q + H^m), fixing the new pair (p_m, q_m)."""
    big = t.setup.with_m(t.setup.m + 1)
    return OrthMatrix(big, stabilize_entries(big, t.entries), verify=False)


def is_stabilized(setup: QuadSetup, t: Matrix) -> bool:
    """True iff rows and columns n+m and n+2m (1-based) are those of the identity."""
    if setup.m < 1:
        return False
    special = (setup.p_index(setup.m), setup.pstar_index(setup.m))
    for k in special:
        for other in range(setup.dim):
            expected = setup.ring.one if other == k else setup.ring.zero
            if t[k][other] != expected or t[other][k] != expected:
                return False
    return True


def unstabilize(t: OrthMatrix) -> OrthMatrix:
    """Inverse of ``stabilize`` on its image.

    Raises:
        SetupError: If the matrix does not have the stabilized pattern.
    """
    setup = t.setup
    if not is_stabilized(setup, t.entries):
        raise SetupError("matrix does not fix the last hyperbolic pair")
    small = setup.with_m(setup.m - 1)
    keep = [k for k in range(setup.dim) if k not in (setup.p_index(setup.m), setup.pstar_index(setup.m))]
    entries = tuple(tuple(t.entries[r][c] for c in keep) for r in keep)
    return OrthMatrix(small, entries, verify=False)
