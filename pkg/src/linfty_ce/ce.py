"""Chevalley-Eilenberg complexes as derivation complexes, with windows.

The CE complex of a structure (V, m) is the desuspended derivation space of
the representing algebra, so a cochain of CE degree k is a derivation of
degree k-1; both labels are carried through every report, since the one-shift
between them is the classic trap.  The differential is the Gerstenhaber
commutator with m, and the bracket of cochains is the plain commutator.

Windows are finite (derivation-degree, weight <= cap) slices.  A degree is
*safe* when no monomial of weight above the cap can land in it, which is
decidable whenever the generator degrees keep one sign; unsafe degrees are
reported with a truncation-suspect flag, never silently wrong.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ComplexMismatch, EnumerationGuard, UnsafeWindow
from .linalg import (
    CochainWindow,
    RationalMatrix,
    ZERO,
    ONE,
    rank_kernel,
    reduce_mod_span,
    row_echelon,
)
from .linfty import LInftyStructure, with_weight_cap
from .symalg import Derivation, max_dim_guard


def weight_bound(gen_degrees, mono_degree: int):
    """Largest possible weight of a monomial of the given degree, or None.

    Finite exactly when the generator degrees are all >= 1 or all <= -1
    (plus the trivial no-generator case); degree-0 or mixed-sign generators
    admit monomials of every weight in some degrees.
    """
    if not gen_degrees:
        return 0
    if min(gen_degrees) >= 1:
        if mono_degree < 0:
            return -1
        return mono_degree // min(gen_degrees)
    if max(gen_degrees) <= -1:
        if mono_degree > 0:
            return -1
        return (-mono_degree) // min(-d for d in gen_degrees)
    return None


def derivation_weight_bound(gen_degrees, der_degree: int):
    """Weight bound over all basis derivations M⊗∂_g of the given degree."""
    bounds = []
    for gd in gen_degrees:
        b = weight_bound(gen_degrees, der_degree + gd)
        if b is None:
            return None
        bounds.append(b)
    finite = [b for b in bounds if b >= 0]
    return max(finite) if finite else -1


@dataclass
class CEComplex:
    """A windowed derivation complex of an L-infinity structure."""

    structure: LInftyStructure
    lo: int                      # derivation degrees
    hi: int
    truncated: bool              # True: constant-term derivations dropped
    weight_cap: int
    basis: dict = field(default_factory=dict)       # degree -> [(mono, gen)]
    suspect: dict = field(default_factory=dict)     # degree -> bool
    window: CochainWindow | None = None

    @property
    def algebra(self):
        return self.structure.algebra

    def label(self, mono, gen) -> str:
        alg = self.algebra
        m = alg.mono_str(mono)
        d = f"∂{alg.gen_names[gen]}"
        return d if m == "1" else m + d

    def ce_degree(self, der_degree: int) -> int:
        return der_degree + 1

    def basis_derivation(self, mono, gen) -> Derivation:
        alg = self.algebra
        deg = alg.mono_degree(mono) - alg.gen_degrees[gen]
        return Derivation(alg, deg, {gen: {mono: ONE}}, check=False)

    def vector_to_derivation(self, degree: int, vec) -> Derivation:
        alg = self.algebra
        values = {}
        for (mono, gen), c in zip(self.basis[degree], vec):
            if c:
                cur = values.setdefault(gen, {})
                cur[mono] = cur.get(mono, ZERO) + c
        return Derivation(alg, degree, values, check=False)

    def derivation_to_vector(self, degree: int, d: Derivation):
        index = {b: i for i, b in enumerate(self.basis[degree])}
        vec = [ZERO] * len(self.basis[degree])
        for gen, p in d.values.items():
            for mono, c in p.items():
                key = (mono, gen)
                if key not in index:
                    if self.suspect.get(degree):
                        continue
                    raise ComplexMismatch(
                        f"cochain has component {self.label(mono, gen)} outside the window basis"
                    )
                vec[index[key]] = c
        return vec

    def bracket(self, a: Derivation, b: Derivation) -> Derivation:
        """Gerstenhaber bracket (commutator) of two cochains."""
        if not self.algebra.same_as(a.algebra) or not self.algebra.same_as(b.algebra):
            raise ComplexMismatch("cochains do not belong to this complex")
        return a.commutator(b)

    def differential_of(self, a: Derivation) -> Derivation:
        return self.structure.m.commutator(a)

    def dims(self):
        return {d: len(self.basis[d]) for d in range(self.lo, self.hi + 1)}


def ce_complex(structure: LInftyStructure, window, weight_cap: int | None = None,
               truncated: bool = False) -> CEComplex:
    """Assemble the derivation complex on a derivation-degree window.

    When the generator degrees allow it, the weight cap is raised
    automatically to make every degree of the window exact; otherwise the
    caller's cap is used and affected degrees are flagged.
    """
    lo, hi = window
    if lo > hi:
        raise ValueError("empty window")
    gd = structure.algebra.gen_degrees
    needed = []
    unsafe = False
    for d in range(lo, hi + 1):
        b = derivation_weight_bound(gd, d)
        if b is None:
            unsafe = True
            break
        needed.append(b)
    if weight_cap is None:
        if unsafe:
            raise UnsafeWindow(
                "generator degrees admit arbitrarily heavy monomials per degree; "
                "an explicit weight_cap is required",
                unsafe_degrees=list(range(lo, hi + 1)),
            )
        weight_cap = max([structure.weight_cap] + needed)
    st = with_weight_cap(structure, max(weight_cap, structure.weight_cap))
    alg = st.algebra
    cx = CEComplex(st, lo, hi, truncated, alg.weight_cap)
    guard = max_dim_guard()
    total = 0
    min_w = 1 if truncated else 0
    for d in range(lo, hi + 1):
        b = derivation_weight_bound(gd, d)
        suspect = b is None or b > alg.weight_cap
        items = []
        for g in range(len(alg.gen_names)):
            target = d + alg.gen_degrees[g]
            for mono in alg.monomials_by_degree(target, min_weight=min_w):
                items.append((mono, g))
        items.sort(key=lambda mg: (len(mg[0]), mg[1], mg[0]))
        total += len(items)
        if total > guard:
            raise EnumerationGuard(
                f"window basis exceeds LINFTY_MAX_DIM={guard} at degree {d}"
            )
        cx.basis[d] = items
        cx.suspect[d] = bool(suspect)
    # differential matrices d: degree k -> k+1
    diff = {}
    for k in range(lo, hi):
        rows = len(cx.basis[k + 1])
        cols = len(cx.basis[k])
        mat = RationalMatrix(rows, cols)
        for j, (mono, gen) in enumerate(cx.basis[k]):
            alg.truncation_hit = False
            img = st.m.commutator(cx.basis_derivation(mono, gen))
            if alg.truncation_hit:
                cx.suspect[k + 1] = True
            col = cx.derivation_to_vector(k + 1, img)
            for i, c in enumerate(col):
                if c:
                    mat[i, j] = c
        diff[k] = mat
    cx.window = CochainWindow(
        lo, hi,
        {d: [cx.label(*b) for b in cx.basis[d]] for d in cx.basis},
        diff,
        dict(cx.suspect),
    )
    return cx


@dataclass
class WhiteheadRow:
    der_degree: int
    ce_degree: int
    dim: int
    representatives: list          # Derivations
    flags: tuple = ()
    weight_dims: dict | None = None


@dataclass
class WhiteheadTable:
    """Cohomology dims with representative cocycles and their brackets."""

    rows: dict
    bracket: dict = field(default_factory=dict)
    truncated: bool = False

    def dim(self, der_degree: int) -> int:
        row = self.rows.get(der_degree)
        return row.dim if row else 0

    def dims(self):
        return {d: r.dim for d, r in sorted(self.rows.items())}

    def exact(self) -> bool:
        return all(not r.flags for r in self.rows.values())


def _single_arity(structure: LInftyStructure):
    ws = structure.m.weights()
    return ws[0] if len(ws) == 1 else None


def _split_weight_dims(cx: CEComplex, degree: int, arity: int):
    """Per-weight cohomology dims when d shifts weight uniformly by arity-1.

    The complex splits along lines of constant (arity-1)*degree - weight, so
    each weight piece of H is the cohomology of its own line.
    """
    step = arity - 1
    out = {}
    weights = sorted({len(m) for (m, _) in cx.basis[degree]})
    for w in weights:
        def line_basis(k):
            ww = w + step * (k - degree)
            return [i for i, (m, g) in enumerate(cx.basis.get(k, [])) if len(m) == ww]
        cols = line_basis(degree)
        if not cols:
            continue
        def restrict(mat, rows_idx, cols_idx):
            sub = RationalMatrix(len(rows_idx), len(cols_idx))
            for ii, i in enumerate(rows_idx):
                for jj, j in enumerate(cols_idx):
                    if mat[i, j]:
                        sub[ii, jj] = mat[i, j]
            return sub
        d_out = restrict(cx.window.differential[degree], line_basis(degree + 1), cols) \
            if degree < cx.hi else None
        d_in = restrict(cx.window.differential[degree - 1], cols, line_basis(degree - 1)) \
            if degree > cx.lo else None
        dim = len(cols)
        if d_out is not None:
            r, _ = rank_kernel(d_out)
            dim -= r
        if d_in is not None:
            r, _ = rank_kernel(d_in)
            dim -= r
        if dim:
            out[w] = dim
    return out


def ce_cohomology(structure: LInftyStructure, window, weight_cap: int | None = None,
                  truncated: bool = False, strict: bool = False,
                  with_brackets: bool = True) -> WhiteheadTable:
    """Windowed cohomology table of the derivation complex.

    ``window`` is in derivation degrees.  The complex is built one degree
    wider on each side so every requested degree gets a full answer where
    safe; boundary and truncation-suspect degrees carry flags.  With
    ``strict`` an UnsafeWindow is raised listing flagged degrees instead.
    """
    lo, hi = window
    cx = ce_complex(structure, (lo - 1, hi + 1), weight_cap, truncated)
    arity = _single_arity(structure)
    rows = {}
    for d in range(lo, hi + 1):
        ans = cx.window.cohomology(d, allow_boundary=True)
        reps = [cx.vector_to_derivation(d, v) for v in ans.representatives]
        wdims = _split_weight_dims(cx, d, arity) if (arity and arity >= 2) else None
        rows[d] = WhiteheadRow(d, d + 1, ans.dim, reps, ans.flags, wdims)
    table = WhiteheadTable(rows, truncated=truncated)
    if strict:
        bad = [d for d, r in rows.items() if r.flags]
        if bad:
            raise UnsafeWindow("flagged degrees in window", unsafe_degrees=bad)
    if with_brackets:
        _fill_bracket_table(cx, table)
    return table


def _fill_bracket_table(cx: CEComplex, table: WhiteheadTable):
    """Brackets of representatives, reduced modulo coboundaries."""
    for d1, row1 in table.rows.items():
        for d2, row2 in table.rows.items():
            if d1 > d2:
                continue
            target = d1 + d2
            if target not in table.rows:
                continue
            trow = table.rows[target]
            for i, a in enumerate(row1.representatives):
                for j, b in enumerate(row2.representatives):
                    if d1 == d2 and j < i:
                        continue
                    cx.algebra.truncation_hit = False
                    br = cx.bracket(a, b)
                    if cx.algebra.truncation_hit:
                        table.bracket[(d1, i, d2, j)] = ("truncation-suspect", None)
                        continue
                    if br.is_zero():
                        continue
                    coords = _express_in_cohomology(cx, target, br, trow)
                    table.bracket[(d1, i, d2, j)] = ("ok", coords)


def _express_in_cohomology(cx: CEComplex, degree: int, cochain: Derivation, row):
    """Coordinates of a cocycle's class on the row's representatives."""
    vec = cx.derivation_to_vector(degree, cochain)
    n = len(vec)
    d_in = cx.window.differential.get(degree - 1)
    image_cols = [d_in.column(j) for j in range(d_in.cols)] if d_in is not None else []
    rep_vecs = [cx.derivation_to_vector(degree, r) for r in row.representatives]
    cols = [list(r) for r in rep_vecs] + image_cols
    mat = RationalMatrix(n, len(cols))
    for j, c in enumerate(cols):
        for i, x in enumerate(c):
            if x:
                mat[i, j] = x
    from .linalg import solve
    sol = solve(mat, vec)
    if sol is None:
        raise ComplexMismatch("bracket of cocycles is not a cocycle class in the window")
    return sol[: len(rep_vecs)]


@dataclass
class BautModel:
    """Cohomology table of the n-connected cover plus the degree-0 action.

    For the derivation complex the cover's cohomology in derivation degrees
    <= -n equals the full answer there (the cover replaces degree -n by the
    kernel, which leaves kernels and images in lower degrees untouched), so
    the table is the window restricted to those degrees.  The derivation-
    degree-0 row is the Lie algebra of the fundamental-group analogue and
    acts on the table by bracket.
    """

    cover_table: WhiteheadTable
    h1_dim: int
    h1_representatives: list
    action: dict          # (h1 index, degree, rep index) -> coords on that row
    n: int
    flags: tuple = ()


def baut_model(structure: LInftyStructure, n: int = 1, window=None,
               weight_cap: int | None = None, truncated: bool = False) -> BautModel:
    if window is None:
        window = (-6, 1)
    lo, hi = window
    hi = max(hi, 1)
    cx = ce_complex(structure, (lo - 1, hi + 1), weight_cap, truncated)
    full = ce_cohomology(structure, (lo, hi), cx.weight_cap, truncated,
                         with_brackets=False)
    rows = {d: r for d, r in full.rows.items() if d <= -n}
    cover = WhiteheadTable(rows, truncated=truncated)
    h1_row = full.rows.get(0)
    h1_reps = h1_row.representatives if h1_row else []
    action = {}
    for e_idx, e in enumerate(h1_reps):
        for d, row in rows.items():
            for r_idx, r in enumerate(row.representatives):
                cx.algebra.truncation_hit = False
                br = cx.bracket(e, r)
                coords = _express_in_cohomology(cx, d, br, row)
                if any(coords):
                    action[(e_idx, d, r_idx)] = coords
    flags = tuple(sorted({f for r in full.rows.values() for f in r.flags}))
    return BautModel(cover, h1_row.dim if h1_row else 0, h1_reps, action, n, flags)
