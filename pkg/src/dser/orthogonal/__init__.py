"""The elementary orthogonal group EO(Q + H(A)^m) over exact commutative rings."""

from __future__ import annotations

from .fdg import fdg_decompose, reduce_corner
from .normalizer import conjugate_factorization, reduce_to_smaller
from .quadspace import OrthMatrix, QuadSetup
from .ring import RingSpec
from .transvect import GenAtom, GenWord, eval_word

__all__ = [
    "GenAtom",
    "GenWord",
    "OrthMatrix",
    "QuadSetup",
    "RingSpec",
    "conjugate_factorization",
    "eval_word",
    "fdg_decompose",
    "reduce_corner",
    "reduce_to_smaller",
]
