"""Exact linear algebra over the rationals.

Everything here works with ``fractions.Fraction`` entries; no floating point
enters the system at any stage.  Matrices are dense lists of rows, which is
adequate at desk scale (at most a few thousand columns).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DegreeOutsideWindow

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    """Coerce ints, strings like ``"3/4"`` and Fractions; floats are rejected."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"exact coefficient expected, got {type(x).__name__}: {x!r}")


class RationalMatrix:
    """A rows x cols matrix of exact rationals."""

    def __init__(self, rows: int, cols: int, entries=None):
        self.rows = rows
        self.cols = cols
        if entries is None:
            self.entries = [[ZERO] * cols for _ in range(rows)]
        else:
            if len(entries) != rows or any(len(r) != cols for r in entries):
                raise ValueError("entry grid does not match declared shape")
            self.entries = [[frac(x) for x in r] for r in entries]

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        m = cls(n, n)
        for i in range(n):
            m.entries[i][i] = ONE
        return m

    @classmethod
    def from_columns(cls, cols: list[list[Fraction]], rows: int) -> "RationalMatrix":
        m = cls(rows, len(cols))
        for j, c in enumerate(cols):
            for i, x in enumerate(c):
                m.entries[i][j] = frac(x)
        return m

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def __setitem__(self, ij, v):
        self.entries[ij[0]][ij[1]] = frac(v)

    def __eq__(self, other):
        return (
            isinstance(other, RationalMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __repr__(self):
        return f"RationalMatrix({self.rows}x{self.cols})"

    def column(self, j: int) -> list[Fraction]:
        return [self.entries[i][j] for i in range(self.rows)]

    def apply(self, vec: list[Fraction]) -> list[Fraction]:
        if len(vec) != self.cols:
            raise ValueError("vector length does not match column count")
        return [
            sum((row[j] * vec[j] for j in range(self.cols)), ZERO)
            for row in self.entries
        ]

    def matmul(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError("inner dimensions differ")
        out = RationalMatrix(self.rows, other.cols)
        for i in range(self.rows):
            row = self.entries[i]
            for k in range(self.cols):
                a = row[k]
                if a == 0:
                    continue
                orow = other.entries[k]
                trow = out.entries[i]
                for j in range(other.cols):
                    if orow[j] != 0:
                        trow[j] += a * orow[j]
        return out

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.entries for x in row)


def row_echelon(rows: list[list[Fraction]]):
    """In-place fraction Gaussian elimination.

    Returns (pivot_columns, rank).  Pivot choice is the first nonzero entry in
    column order, so the result is deterministic.
    """
    if not rows:
        return [], 0
    ncols = len(rows[0])
    pivots = []
    r = 0
    for j in range(ncols):
        p = None
        for i in range(r, len(rows)):
            if rows[i][j] != 0:
                p = i
                break
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = ONE / rows[r][j]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][j] != 0:
                c = rows[i][j]
                rows[i] = [a - c * b for a, b in zip(rows[i], rows[r])]
        pivots.append(j)
        r += 1
        if r == len(rows):
            break
    return pivots, r


def rank_kernel(m: RationalMatrix):
    """Rank and a kernel basis of ``m``.

    The kernel vectors are exact rational columns; rank + len(kernel) == cols.
    """
    rows = [list(r) for r in m.entries]
    pivots, rank = row_echelon(rows)
    pivot_set = set(pivots)
    kernel = []
    for j in range(m.cols):
        if j in pivot_set:
            continue
        v = [ZERO] * m.cols
        v[j] = ONE
        for i, pj in enumerate(pivots):
            v[pj] = -rows[i][j]
        kernel.append(v)
    return rank, kernel


def rank(m: RationalMatrix) -> int:
    return rank_kernel(m)[0]


def solve(m: RationalMatrix, rhs: list[Fraction]):
    """One exact solution of ``m x = rhs``, or None when inconsistent."""
    if len(rhs) != m.rows:
        raise ValueError("rhs length does not match row count")
    rows = [list(r) + [frac(b)] for r, b in zip(m.entries, rhs)]
    if not rows:
        return [ZERO] * m.cols
    pivots, _ = row_echelon(rows)
    if m.cols in pivots:
        return None
    x = [ZERO] * m.cols
    for i, j in enumerate(pivots):
        x[j] = rows[i][m.cols]
    return x


def reduce_mod_span(vectors: list[list[Fraction]], modulus: list[list[Fraction]]):
    """Independent representatives of span(vectors) modulo span(modulus).

    Representatives are read off echelon positions, hence deterministic.
    """
    mod_rows = [list(v) for v in modulus]
    pivots, _ = row_echelon(mod_rows)
    reps = []
    basis_rows = []
    for v in vectors:
        w = list(v)
        for i, pj in enumerate(pivots):
            if w[pj] != 0:
                c = w[pj]
                w = [a - c * b for a, b in zip(w, mod_rows[i])]
        # reduce against representatives found so far
        for rrow, rp in basis_rows:
            if w[rp] != 0:
                c = w[rp] / rrow[rp]
                w = [a - c * b for a, b in zip(w, rrow)]
        lead = next((j for j, x in enumerate(w) if x != 0), None)
        if lead is not None:
            basis_rows.append((w, lead))
            reps.append(w)
    return reps


@dataclass
class CohomologyAnswer:
    degree: int
    dim: int
    representatives: list
    flags: tuple[str, ...] = ()

    @property
    def exact(self) -> bool:
        return not self.flags


@dataclass
class CochainWindow:
    """A finite slice of a cochain complex.

    ``basis[k]`` is the ordered list of labels in degree k for lo <= k <= hi,
    and ``differential[k]`` the matrix of d: degree k -> k+1 for lo <= k < hi.
    ``suspect[k]`` marks degrees whose basis may be truncated by a weight cap.
    """

    lo: int
    hi: int
    basis: dict
    differential: dict
    suspect: dict = field(default_factory=dict)

    def __post_init__(self):
        for k in range(self.lo, self.hi + 1):
            self.basis.setdefault(k, [])
            self.suspect.setdefault(k, False)
        for k in range(self.lo, self.hi):
            d = self.differential.get(k)
            if d is None:
                self.differential[k] = RationalMatrix(
                    len(self.basis[k + 1]), len(self.basis[k])
                )
            else:
                if d.cols != len(self.basis[k]) or d.rows != len(self.basis[k + 1]):
                    raise ValueError(f"differential at degree {k} has wrong shape")

    def check_dd_zero(self):
        """d after d must be exactly zero at interior degrees."""
        bad = []
        for k in range(self.lo, self.hi - 1):
            if not self.differential[k + 1].matmul(self.differential[k]).is_zero():
                bad.append(k)
        return bad

    def dim(self, k: int) -> int:
        return len(self.basis.get(k, []))

    def cohomology(self, k: int, allow_boundary: bool = False) -> CohomologyAnswer:
        """H^k of the window; boundary degrees are flagged, never silently wrong.

        dim = dim ker(d_k) - rank(d_{k-1}) at interior degrees.  At k == lo the
        incoming image is unknown and at k == hi the outgoing kernel is, so the
        partial answers carry explicit flags (and require ``allow_boundary``).
        """
        if k < self.lo or k > self.hi:
            raise DegreeOutsideWindow(f"degree {k} outside window [{self.lo}, {self.hi}]")
        flags = []
        if self.suspect.get(k):
            flags.append("truncation-suspect")
        n = self.dim(k)
        has_out = k < self.hi
        has_in = k > self.lo
        if not (has_out and has_in) and not allow_boundary:
            raise DegreeOutsideWindow(
                f"degree {k} is a boundary degree of [{self.lo}, {self.hi}]; "
                "pass allow_boundary=True for a flagged partial answer"
            )
        if has_out:
            _, kernel = rank_kernel(self.differential[k])
        else:
            kernel = [
                [ONE if i == j else ZERO for i in range(n)] for j in range(n)
            ]
            flags.append("kernel-unknown")
        if has_in:
            d_in = self.differential[k - 1]
            image = [d_in.column(j) for j in range(d_in.cols)]
        else:
            image = []
            flags.append("image-unknown")
        if self.suspect.get(k + 1) and has_out:
            flags.append("target-truncation-suspect")
        reps = reduce_mod_span(kernel, image)
        return CohomologyAnswer(k, len(reps), reps, tuple(flags))

    def cohomology_table(self, allow_boundary: bool = True):
        return {
            k: self.cohomology(k, allow_boundary=allow_boundary)
            for k in range(self.lo, self.hi + 1)
        }

    def conjugated(self, changes: dict) -> "CochainWindow":
        """The same window after an invertible change of basis per degree.

        ``changes[k]`` expresses new basis vectors in old coordinates
        (columns).  Used by tests: cohomology dims must not move.
        """
        diff = {}
        inv = {}
        for k, mat in changes.items():
            n = len(self.basis[k])
            cols = []
            for j in range(n):
                col = solve(mat, [ONE if i == j else ZERO for i in range(n)])
                if col is None:
                    raise ValueError("change of basis not invertible")
                cols.append(col)
            inv[k] = RationalMatrix.from_columns(cols, n)
        for k in range(self.lo, self.hi):
            d = self.differential[k]
            b = changes.get(k, RationalMatrix.identity(d.cols))
            diff[k] = inv.get(k + 1, RationalMatrix.identity(d.rows)).matmul(d).matmul(b)
        return CochainWindow(
            self.lo,
            self.hi,
            {k: list(v) for k, v in self.basis.items()},
            diff,
            dict(self.suspect),
        )
