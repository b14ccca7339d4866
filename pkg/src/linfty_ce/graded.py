"""Graded vector spaces over Q with named bases and Koszul sign bookkeeping.

Conventions (fixed once, used everywhere):

* internal canonical grading is cohomological; homological data is converted
  at the boundary via V_i = V^{-i};
* suspension moves degrees by the rule (sV)_i = V_{i-1}, equivalently
  (sV)^i = V^{i+1}: one suspension raises homological degree by 1 and lowers
  cohomological degree by 1;
* dualization flips the grading mode and keeps the index: (V*)^i = (V_i)*;
* transposing two adjacent symbols of degrees p and q costs (-1)^{pq}.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import LengthMismatch

HOMOLOGICAL = "homological"
COHOMOLOGICAL = "cohomological"

SUSP_MARK = "s·"
DESUSP_MARK = "s⁻¹·"
DUAL_MARK = "*"


@dataclass(frozen=True)
class GradedSpace:
    """Finite-dimensional graded space with an ordered named basis."""

    basis: tuple
    grading: str = COHOMOLOGICAL

    def __post_init__(self):
        if self.grading not in (HOMOLOGICAL, COHOMOLOGICAL):
            raise ValueError(f"unknown grading mode {self.grading!r}")
        object.__setattr__(self, "basis", tuple((str(n), int(d)) for n, d in self.basis))
        names = [n for n, _ in self.basis]
        if len(set(names)) != len(names):
            raise ValueError("basis names must be unique")

    @property
    def names(self):
        return tuple(n for n, _ in self.basis)

    @property
    def dim(self):
        return len(self.basis)

    def degree(self, name: str, grading: str | None = None) -> int:
        for n, d in self.basis:
            if n == name:
                return d if (grading or self.grading) == self.grading else -d
        raise KeyError(name)

    def degrees(self, grading: str | None = None):
        if grading is None or grading == self.grading:
            return tuple(d for _, d in self.basis)
        return tuple(-d for _, d in self.basis)

    def converted(self, grading: str) -> "GradedSpace":
        """The same space regraded via V_i = V^{-i}; names untouched."""
        if grading == self.grading:
            return self
        return GradedSpace(tuple((n, -d) for n, d in self.basis), grading)

    def dims_by_degree(self):
        out = {}
        for _, d in self.basis:
            out[d] = out.get(d, 0) + 1
        return out


def _mark_name(name: str, mark: str, inverse_mark: str) -> str:
    if name.startswith(inverse_mark):
        return name[len(inverse_mark):]
    return mark + name


def suspend(space: GradedSpace, k: int = 1) -> GradedSpace:
    """k-fold suspension; names are decorated deterministically.

    Homological degrees go up by k, cohomological degrees down by k, so that
    suspend(suspend(V, 1), -1) == V on the nose.
    """
    if k == 0:
        return space
    step = 1 if k > 0 else -1
    shift = step if space.grading == HOMOLOGICAL else -step
    mark, unmark = (SUSP_MARK, DESUSP_MARK) if step > 0 else (DESUSP_MARK, SUSP_MARK)
    out = space
    for _ in range(abs(k)):
        out = GradedSpace(
            tuple((_mark_name(n, mark, unmark), d + shift) for n, d in out.basis),
            out.grading,
        )
    return out


def dual(space: GradedSpace) -> GradedSpace:
    """Linear dual: grading mode flips, index kept per (V*)^i = (V_i)*."""
    flipped = HOMOLOGICAL if space.grading == COHOMOLOGICAL else COHOMOLOGICAL
    names = []
    for n, d in space.basis:
        if n.endswith(DUAL_MARK):
            names.append((n[: -len(DUAL_MARK)], d))
        else:
            names.append((n + DUAL_MARK, d))
    return GradedSpace(tuple(names), flipped)


def koszul_sign(perm, degrees) -> int:
    """Sign of rearranging graded symbols: new[i] = old[perm[i]].

    Computed by counting weighted inversions: every pair whose order flips
    contributes (-1)^{p q} for their degrees p, q.  Multiplicative under
    composition (with the degree list permuted accordingly).
    """
    perm = list(perm)
    if len(perm) != len(degrees):
        raise LengthMismatch(
            f"permutation length {len(perm)} != degree list length {len(degrees)}"
        )
    if sorted(perm) != list(range(len(perm))):
        raise ValueError("not a permutation of 0..n-1")
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                if (degrees[perm[i]] % 2) and (degrees[perm[j]] % 2):
                    sign = -sign
    return sign


def sort_with_sign(items, degrees):
    """Stable-sort ``items`` returning (sorted_items, koszul_sign).

    ``items`` are compared directly; equal items of odd degree moving past
    each other still cost a sign, which is why stability matters.
    """
    idx = sorted(range(len(items)), key=lambda i: (items[i], i))
    return [items[i] for i in idx], koszul_sign(idx, list(degrees))
