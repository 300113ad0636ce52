"""Exhaustive enumeration of O and EO over small residue rings.

Matrices live in numpy ``int64`` arrays reduced mod n and are hashed by the
bytes of their row-major entries. Closures are breadth-first with a
deterministic frontier order and remember, for every element, its parent and
the generator that reached it, so any enumerated element can be written as a
word in the census generators.
"""

from __future__ import annotations

import itertools
import logging
import os
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import CensusBudgetError, SetupError
from .matrix import Matrix, Vector, mat_inverse
from .quadspace import QuadSetup
from .transvect import GenWord, Token, rank_one_atom, token_entries

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 2_000_000
# Largest number of candidate matrices a direct scan may test.
SCAN_LIMIT = 5_000_000
# Largest number of vectors for which hyperbolic pairs are counted.
PAIR_COUNT_LIMIT = 5_000
_CHUNK = 1 << 18


def default_budget() -> int:
    """Element budget for closures; ``DSER_BUDGET`` overrides the default."""
    value = os.environ.get("DSER_BUDGET")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning("ignoring non-integer DSER_BUDGET=%r", value)
    return DEFAULT_BUDGET


def _require_finite(setup: QuadSetup) -> int:
    if setup.ring.modulus is None:
        raise SetupError("enumeration needs a finite ring (zmod:<n>)")
    return setup.ring.modulus


def _key(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype=np.uint16).tobytes()


def _keys(batch: np.ndarray) -> list[bytes]:
    flat = np.ascontiguousarray(batch.reshape(len(batch), -1), dtype=np.uint16)
    return [row.tobytes() for row in flat]


def to_array(matrix: Matrix) -> np.ndarray:
    return np.array([[int(x) for x in row] for row in matrix], dtype=np.int64)


def to_matrix(arr: np.ndarray) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in arr)


def ring_vectors(setup: QuadSetup, *, nonzero: bool = False) -> list[Vector]:
    """Every vector of A^n in lexicographic order."""
    vectors = list(itertools.product(setup.ring.elements(), repeat=setup.n))
    if nonzero:
        vectors = [v for v in vectors if any(v)]
    return vectors


@dataclass
class GroupCensus:
    """An enumerated finite matrix group."""

    setup: QuadSetup
    elements: np.ndarray
    index: dict[bytes, int]
    description: str
    generators: list[np.ndarray] = field(default_factory=list)
    generator_tokens: list[Token | None] = field(default_factory=list)
    parent: np.ndarray | None = None
    via: np.ndarray | None = None
    audit: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.elements)

    def keys(self):
        return self.index.keys()

    def index_of(self, matrix: Matrix | np.ndarray) -> int | None:
        arr = matrix if isinstance(matrix, np.ndarray) else to_array(matrix)
        return self.index.get(_key(arr % self.setup.ring.modulus))

    def __contains__(self, matrix: Matrix | np.ndarray) -> bool:
        return self.index_of(matrix) is not None

    def matrix(self, position: int) -> Matrix:
        return to_matrix(self.elements[position])

    @property
    def complete(self) -> bool:
        return bool(self.audit.get("complete", False))

    def word_for(self, matrix: Matrix | np.ndarray) -> GenWord:
        """Word in the generator tokens evaluating to ``matrix``.

        Raises:
            SetupError: If the census keeps no generator words or the matrix
                is not enumerated.
        """
        if self.parent is None or not self.generator_tokens or any(t is None for t in self.generator_tokens):
            raise SetupError(f"census '{self.description}' has no generator words")
        position = self.index_of(matrix)
        if position is None:
            raise SetupError(f"matrix is not in census '{self.description}'")
        path = []
        while self.parent[position] >= 0:
            path.append(self.generator_tokens[int(self.via[position])])
            position = int(self.parent[position])
        return GenWord(tuple(reversed(path)))

    def inverses(self) -> np.ndarray:
        return _inverse_batch(self.setup, self.elements)


def _psi_arrays(setup: QuadSetup) -> tuple[np.ndarray, np.ndarray]:
    psi = to_array(setup.psi)
    psi_inv = to_array(mat_inverse(setup.ring, setup.psi))
    return psi, psi_inv


def _inverse_batch(setup: QuadSetup, batch: np.ndarray) -> np.ndarray:
    """T^-1 = Psi^-1 T^t Psi for orthogonal T."""
    n = setup.ring.modulus
    psi, psi_inv = _psi_arrays(setup)
    return (psi_inv @ np.transpose(batch, (0, 2, 1)) % n) @ psi % n


def _closure(
    setup: QuadSetup,
    generators: Sequence[np.ndarray],
    tokens: Sequence[Token | None],
    *,
    description: str,
    budget: int | None,
) -> GroupCensus:
    n = _require_finite(setup)
    budget = budget or default_budget()
    d = setup.dim
    eye = np.eye(d, dtype=np.int64)
    elements: list[np.ndarray] = [eye]
    index = {_key(eye): 0}
    parent, via = [-1], [-1]
    frontier_ids = [0]
    level = 0
    while frontier_ids:
        frontier = np.stack([elements[k] for k in frontier_ids])
        new_ids: list[int] = []
        for g_index, g in enumerate(generators):
            products = (frontier @ g) % n
            for k, key in enumerate(_keys(products)):
                if key in index:
                    continue
                index[key] = len(elements)
                new_ids.append(len(elements))
                elements.append(products[k])
                parent.append(frontier_ids[k])
                via.append(g_index)
                if len(elements) > budget:
                    raise CensusBudgetError(f"closure '{description}' exceeded budget {budget}", partial=len(elements))
        level += 1
        logger.debug("%s: level %d added %d (total %d)", description, level, len(new_ids), len(elements))
        frontier_ids = new_ids
    return GroupCensus(
        setup,
        np.stack(elements),
        index,
        description,
        generators=list(generators),
        generator_tokens=list(tokens),
        parent=np.array(parent, dtype=np.int64),
        via=np.array(via, dtype=np.int64),
    )


def closure_from_tokens(
    setup: QuadSetup,
    tokens: Iterable[Token],
    *,
    description: str,
    budget: int | None = None,
) -> GroupCensus:
    """Closure of the evaluated tokens; duplicate and identity generators are dropped."""
    _require_finite(setup)
    gens: list[np.ndarray] = []
    kept: list[Token] = []
    seen = {_key(np.eye(setup.dim, dtype=np.int64))}
    for token in tokens:
        arr = to_array(token_entries(setup, token))
        key = _key(arr)
        if key in seen:
            continue
        seen.add(key)
        gens.append(arr)
        kept.append(token)
    return _closure(setup, gens, kept, description=description, budget=budget)


def _scan_form(modulus: int, form: np.ndarray) -> np.ndarray | None:
    """All M with M^t F M = F, or None when the scan would exceed SCAN_LIMIT."""
    d = len(form)
    total = modulus ** (d * d)
    if total > SCAN_LIMIT:
        return None
    powers = modulus ** np.arange(d * d - 1, -1, -1, dtype=np.int64)
    found = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        mats = ((idx[:, None] // powers) % modulus).reshape(-1, d, d)
        test = np.einsum("bki,kl,blj->bij", mats, form, mats) % modulus
        found.append(mats[np.all(test == form, axis=(1, 2))])
    return np.concatenate(found)


def _census_from_elements(setup: QuadSetup, elements: np.ndarray, description: str) -> GroupCensus:
    index = {key: k for k, key in enumerate(_keys(elements))}
    census = GroupCensus(setup, elements, index, description)
    census.generators = list(elements)
    census.audit = {"method": description, "complete": True}
    return census


def q_isometries(setup: QuadSetup) -> np.ndarray:
    """O(Q, phi) by direct scan of n x n matrices."""
    scanned = _scan_form(setup.ring.modulus, to_array(setup.phi))
    if scanned is None:
        raise CensusBudgetError("isometries of phi are too many to scan", partial=0)
    return scanned


def orthogonal_seeds(setup: QuadSetup) -> tuple[list[np.ndarray], list[str]]:
    """Indexed atoms, hyperbolic swaps, hyperbolic scalings and Q-isometries."""
    ring, d = setup.ring, setup.dim
    eye = np.eye(d, dtype=np.int64)
    seeds: list[np.ndarray] = []
    labels: list[str] = []
    for kind in ("EA", "EB"):
        for i in range(1, setup.m + 1):
            for w in ring_vectors(setup, nonzero=True):
                seeds.append(to_array(token_entries(setup, rank_one_atom(setup, kind, i, w))))
                labels.append(f"{kind}[{i}]{w}")
    for i in range(1, setup.m + 1):
        p, q = setup.p_index(i), setup.pstar_index(i)
        swap = eye.copy()
        swap[[p, q]] = swap[[q, p]]
        seeds.append(swap)
        labels.append(f"swap[{i}]")
        for u in ring.units():
            if u == 1:
                continue
            scale = eye.copy()
            scale[p, p], scale[q, q] = u, ring.inv(u)
            seeds.append(scale)
            labels.append(f"scale[{i}]({u})")
    for g in q_isometries(setup):
        if np.array_equal(g, np.eye(setup.n, dtype=np.int64)):
            continue
        embedded = eye.copy()
        embedded[: setup.n, : setup.n] = g
        seeds.append(embedded)
        labels.append("isometry")
    return seeds, labels


def count_hyperbolic_pairs(setup: QuadSetup) -> int | None:
    """Number of ordered pairs (e, f) with q(e) = q(f) = 0 and <e, f> = 1."""
    n = _require_finite(setup)
    d = setup.dim
    if n**d > PAIR_COUNT_LIMIT:
        return None
    vectors = np.array(list(itertools.product(range(n), repeat=d)), dtype=np.int64)
    psi = to_array(setup.psi)
    gram = (vectors @ psi % n) @ vectors.T % n
    isotropic = np.diagonal(gram) == 0
    return int(np.sum((gram == 1) & isotropic[:, None] & isotropic[None, :]))


def enumerate_orthogonal(setup: QuadSetup, *, budget: int | None = None) -> GroupCensus:
    """The orthogonal group {M : M^t Psi M = Psi}.

    Small dimensions are scanned directly; otherwise the group is the closure
    of ``orthogonal_seeds`` and its completeness is audited with the
    orbit-stabilizer count #pairs * |O at rank m-1|.

    Raises:
        CensusBudgetError: If the closure exceeds the budget.
    """
    n = _require_finite(setup)
    if setup.dim <= 3:
        scanned = _scan_form(n, to_array(setup.psi))
        if scanned is not None:
            logger.info("direct scan of %s: %d elements", setup.label(), len(scanned))
            return _census_from_elements(setup, scanned, "direct scan")
    if setup.m == 0:
        return _census_from_elements(setup, q_isometries(setup), "direct scan")
    seeds, labels = orthogonal_seeds(setup)
    census = _closure(setup, seeds, [None] * len(seeds), description="closure of seeds", budget=budget)
    audit: dict[str, Any] = {"method": "closure of seeds", "seeds": len(seeds), "complete": False}
    pairs = count_hyperbolic_pairs(setup)
    if pairs is not None:
        smaller = enumerate_orthogonal(setup.with_m(setup.m - 1), budget=budget)
        expected = pairs * len(smaller)
        audit.update(
            hyperbolic_pairs=pairs,
            smaller_order=len(smaller),
            expected_order=expected,
            complete=expected == len(census) and smaller.complete,
        )
    else:
        audit["note"] = "orbit-stabilizer audit unavailable at this size"
    census.audit = audit
    logger.info("closure of seeds for %s: %d elements (audit %s)", setup.label(), len(census), audit)
    return census


def enumerate_elementary(setup: QuadSetup, *, budget: int | None = None) -> GroupCensus:
    """Closure of all indexed atoms a_i(w), b_i(w), w != 0."""
    _require_finite(setup)
    tokens = [
        rank_one_atom(setup, kind, i, w)
        for kind in ("EA", "EB")
        for i in range(1, setup.m + 1)
        for w in ring_vectors(setup, nonzero=True)
    ]
    census = closure_from_tokens(setup, tokens, description="indexed generators", budget=budget)
    census.audit = {"method": "closure of indexed generators", "complete": True}
    return census


def is_subgroup(small: GroupCensus, big: GroupCensus) -> bool:
    return all(key in big.index for key in small.index)


def normality_verdict(ambient: GroupCensus, subgroup: GroupCensus) -> bool:
    """True iff g h g^-1 lies in the subgroup for every g in ambient and h generating it.

    Raises:
        SetupError: If the subgroup is not contained in the ambient group.
    """
    if ambient.setup != subgroup.setup:
        raise SetupError("censuses belong to different setups")
    if not is_subgroup(subgroup, ambient):
        raise SetupError("subgroup is not contained in the ambient group")
    n = ambient.setup.ring.modulus
    inverses = ambient.inverses()
    for h in subgroup.generators:
        for start in range(0, len(ambient), _CHUNK):
            block = ambient.elements[start : start + _CHUNK]
            conj = ((block @ h) % n) @ inverses[start : start + _CHUNK] % n
            if any(key not in subgroup.index for key in _keys(conj)):
                return False
    return True


def closure_spot_check(census: GroupCensus, rng: random.Random, pairs: int = 10_000) -> bool:
    """Random products and inverses stay inside the census."""
    n = census.setup.ring.modulus
    size = len(census)
    left = np.array([rng.randrange(size) for _ in range(pairs)])
    right = np.array([rng.randrange(size) for _ in range(pairs)])
    products = (census.elements[left] @ census.elements[right]) % n
    inverses = _inverse_batch(census.setup, census.elements[left])
    return all(key in census.index for key in _keys(products) + _keys(inverses))


@dataclass
class CosetSpace:
    """Left cosets g EO of EO in O."""

    ambient: GroupCensus
    subgroup: GroupCensus
    labels: np.ndarray
    representatives: list[int]
    is_group: bool

    @property
    def size(self) -> int:
        return len(self.representatives)

    def label_of(self, matrix: Matrix | np.ndarray) -> int:
        position = self.ambient.index_of(matrix)
        if position is None:
            raise SetupError("matrix is not in the ambient census")
        return int(self.labels[position])

    def representative_matrices(self) -> list[Matrix]:
        return [self.ambient.matrix(k) for k in self.representatives]


def coset_space(ambient: GroupCensus, subgroup: GroupCensus, *, normal: bool | None = None) -> CosetSpace:
    """Partition the ambient census into left cosets of the subgroup."""
    n = ambient.setup.ring.modulus
    labels = np.full(len(ambient), -1, dtype=np.int64)
    representatives: list[int] = []
    for position in range(len(ambient)):
        if labels[position] >= 0:
            continue
        coset = (ambient.elements[position] @ subgroup.elements) % n
        members = [ambient.index[key] for key in _keys(coset)]
        labels[members] = len(representatives)
        representatives.append(position)
    is_group = normality_verdict(ambient, subgroup) if normal is None else normal
    logger.info("%d cosets of %d in %d", len(representatives), len(subgroup), len(ambient))
    return CosetSpace(ambient, subgroup, labels, representatives, is_group)


def coset_product_check(space: CosetSpace, rng: random.Random, trials: int = 50) -> bool:
    """Product cosets do not depend on the chosen representatives."""
    n = space.ambient.setup.ring.modulus
    members = [np.flatnonzero(space.labels == k) for k in range(space.size)]
    elements = space.ambient.elements
    for _ in range(trials):
        first, second = rng.randrange(space.size), rng.randrange(space.size)
        a1, a2 = (int(rng.choice(members[first])) for _ in range(2))
        b1, b2 = (int(rng.choice(members[second])) for _ in range(2))
        p1 = (elements[a1] @ elements[b1]) % n
        p2 = (elements[a2] @ elements[b2]) % n
        if space.label_of(p1) != space.label_of(p2):
            return False
    return True


@dataclass
class K1Report:
    """Findings of the stability check between hyperbolic ranks r and r+1."""

    levels: tuple[int, int]
    orders: dict[str, int]
    coset_counts: dict[str, int]
    normal: dict[str, bool]
    surjective: bool
    injective: bool
    stabilized_outside: int
    coset_products_consistent: bool
    caveats: list[str]

    def to_json(self) -> dict[str, Any]:
        r, s = self.levels
        return {
            "levels": [r, s],
            "orders": self.orders,
            "coset_counts": self.coset_counts,
            "normality": self.normal,
            "surjective": self.surjective,
            "injective": self.injective,
            "stabilized_outside_census": self.stabilized_outside,
            "coset_products_consistent": self.coset_products_consistent,
            "caveats": self.caveats,
        }


def stabilize_batch(small: QuadSetup, batch: np.ndarray) -> np.ndarray:
    big = small.with_m(small.m + 1)
    keep = [k for k in range(big.dim) if k not in (big.p_index(big.m), big.pstar_index(big.m))]
    out = np.tile(np.eye(big.dim, dtype=np.int64), (len(batch), 1, 1))
    rows, cols = np.ix_(keep, keep)
    out[:, rows, cols] = batch
    return out


def k1_stability_check(lower: CosetSpace, upper: CosetSpace, *, seed: int = 0) -> K1Report:
    """Compare O/EO at ranks r and r+1 through the stabilization map.

    Raises:
        SetupError: If the two levels differ in ring, n or phi, or are not
            consecutive.
    """
    low, high = lower.ambient.setup, upper.ambient.setup
    if low.ring != high.ring:
        raise SetupError("mismatched ring between levels")
    if low.n != high.n or low.phi != high.phi:
        raise SetupError("mismatched quadratic form between levels")
    if high.m != low.m + 1:
        raise SetupError(f"levels must be consecutive, got {low.m} and {high.m}")
    images = stabilize_batch(low, lower.ambient.elements)
    positions = [upper.ambient.index.get(key) for key in _keys(images)]
    outside = sum(p is None for p in positions)
    hit = {int(upper.labels[p]) for p in positions if p is not None}
    surjective = len(hit) == upper.size
    trivial_low = lower.label_of(np.eye(low.dim, dtype=np.int64))
    trivial_high = upper.label_of(np.eye(high.dim, dtype=np.int64))
    kernel = sum(
        1
        for k, p in enumerate(positions)
        if p is not None and upper.labels[p] == trivial_high and lower.labels[k] != trivial_low
    )
    rng = random.Random(f"{seed}:k1:{low.m}")
    consistent = coset_product_check(upper, rng) if upper.is_group else False
    caveats = []
    for space in (lower, upper):
        if space.ambient.audit.get("method") == "closure of seeds":
            status = "audited complete" if space.ambient.complete else "audit inconclusive"
            caveats.append(f"O at m={space.ambient.setup.m} is a closure of seeds ({status})")
    return K1Report(
        levels=(low.m, high.m),
        orders={
            f"O_{low.m}": len(lower.ambient),
            f"EO_{low.m}": len(lower.subgroup),
            f"O_{high.m}": len(upper.ambient),
            f"EO_{high.m}": len(upper.subgroup),
        },
        coset_counts={f"KO1_{low.m}": lower.size, f"KO1_{high.m}": upper.size},
        normal={f"m={low.m}": lower.is_group, f"m={high.m}": upper.is_group},
        surjective=surjective,
        injective=kernel == 0,
        stabilized_outside=outside,
        coset_products_consistent=consistent,
        caveats=caveats,
    )
