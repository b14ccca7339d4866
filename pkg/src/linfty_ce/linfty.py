"""L-infinity algebras as square-zero derivations of their representing algebras.

A structure on a graded space V is a degree +1 derivation m of the free
graded-commutative algebra on generators x_a dual to a basis of ΣV, with no
constant term and [m, m] = 0 within the weight truncation.  A basis element
of homological degree d contributes a generator of cohomological degree d+1.

Bracket tables are ingested on the suspended side: the arity-n products are
graded-symmetric maps of homological degree -1 on ΣV.  With structure
constants mu^c on a sorted tuple (a_1 <= ... <= a_n), the dual derivation is

    m(x_c)  +=  (-1)^{sum_{i<j} e_i e_j} * mu^c / prod(mult!) * x_{a_1}...x_{a_n}

where e_i is the parity of |x_{a_i}| and mult! are the multiplicities of
repeated generators.  This normalization is exactly the one that makes
"evaluate m at a point" agree with the Maurer-Cartan sum over ordered tuples
with 1/n! coefficients, so the MC equation here is the convention-free
statement: the translate of m to the point has zero constant term.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DegreeMismatch, LinftyError, NotMaurerCartan
from .graded import GradedSpace, HOMOLOGICAL, COHOMOLOGICAL
from .linalg import RationalMatrix, ZERO, ONE, frac, rank_kernel
from .symalg import (
    AlgebraMap,
    Derivation,
    FreeCommAlgebra,
    translation_map,
)


def representing_algebra(space: GradedSpace, weight_cap: int) -> FreeCommAlgebra:
    """Generators named after the basis, cohomological degree hom+1."""
    hom = space.converted(HOMOLOGICAL)
    gens = GradedSpace(
        tuple((n, -(d + 1)) for n, d in hom.basis), HOMOLOGICAL
    ).converted(COHOMOLOGICAL)
    return FreeCommAlgebra(gens, weight_cap)


@dataclass
class CheckReport:
    ok: bool
    first_failing_weight: int | None = None
    residual: Derivation | None = None
    truncation_hit: bool = False

    def __bool__(self):
        return self.ok


class LInftyStructure:
    """A graded space plus its structure derivation."""

    def __init__(self, space: GradedSpace, m: Derivation, check: bool = True):
        self.space = space.converted(HOMOLOGICAL)
        self.algebra = m.algebra
        self.m = m
        if m.degree != 1:
            raise DegreeMismatch("structure derivation must have degree +1")
        if m.has_constant_term():
            raise LinftyError("structure derivation must have vanishing constant term")
        if check:
            report = self.check()
            if not report.ok:
                raise LinftyError(
                    f"[m,m] != 0 at weight {report.first_failing_weight}: {report.residual!r}"
                )

    # -- basic data ---------------------------------------------------------
    @property
    def names(self):
        return self.space.names

    @property
    def dim(self):
        return self.space.dim

    def hom_degree(self, name: str) -> int:
        return self.space.degree(name)

    def hom_degrees(self):
        return self.space.degrees()

    @property
    def weight_cap(self) -> int:
        return self.algebra.weight_cap

    def __repr__(self):
        return f"LInftyStructure(dim {self.dim}, cap {self.weight_cap})"

    def __eq__(self, other):
        return (
            isinstance(other, LInftyStructure)
            and self.space == other.space
            and self.m == other.m
        )

    def check(self) -> CheckReport:
        """ok iff [m, m] = 0 on all generators within the weight cap."""
        before = self.algebra.truncation_hit
        self.algebra.truncation_hit = False
        square = self.m.commutator(self.m)
        hit = self.algebra.truncation_hit
        self.algebra.truncation_hit = before or hit
        if square.is_zero():
            return CheckReport(True, truncation_hit=hit)
        ws = square.weights()
        return CheckReport(False, ws[0], square, hit)

    # -- the linear part ----------------------------------------------------
    def m1_entries(self):
        """Structure constants of m1 on V: m1(v_a) = sum_b c[(b, a)] v_b."""
        out = {}
        for b, p in self.m.values.items():
            for mono, c in p.items():
                if len(mono) == 1:
                    out[(b, mono[0])] = out.get((b, mono[0]), ZERO) + c
        return {k: v for k, v in out.items() if v}

    def m1_matrix(self, source_degree: int) -> RationalMatrix:
        """Matrix of m1 from homological degree d to d-1, basis order."""
        src = [i for i, d in enumerate(self.hom_degrees()) if d == source_degree]
        tgt = [i for i, d in enumerate(self.hom_degrees()) if d == source_degree - 1]
        entries = self.m1_entries()
        mat = RationalMatrix(len(tgt), len(src))
        for j, a in enumerate(src):
            for i, b in enumerate(tgt):
                c = entries.get((b, a))
                if c:
                    mat[i, j] = c
        return mat

    def tangent_cohomology(self):
        """Homology of (V, m1) per homological degree."""
        degs = self.hom_degrees()
        if not degs:
            return {}
        out = {}
        for d in range(min(degs), max(degs) + 1):
            n = sum(1 for x in degs if x == d)
            rank_out, _ = rank_kernel(self.m1_matrix(d))
            rank_in, _ = rank_kernel(self.m1_matrix(d + 1))
            out[d] = n - rank_out - rank_in
        return out

    def is_minimal(self) -> bool:
        return not self.m1_entries()

    # -- MC elements and twisting -------------------------------------------
    def _point(self, xi: dict) -> dict:
        pt = {}
        for g, c in xi.items():
            if isinstance(g, str):
                g = self.algebra.index(g)
            c = frac(c)
            if not c:
                continue
            if self.algebra.gen_degrees[g] != 0:
                raise DegreeMismatch(
                    f"MC element has a coordinate on {self.algebra.gen_names[g]} of "
                    f"degree {self.algebra.gen_degrees[g]}; only degree-0 slots carry scalars"
                )
            pt[g] = c
        return pt

    def twisted_derivation(self, xi: dict) -> Derivation:
        """m translated to the point xi (no MC requirement; see mc_residual)."""
        pt = self._point(xi)
        if not pt:
            return self.m
        t = translation_map(self.algebra, pt, sign=1)
        vals = {}
        for g, p in self.m.values.items():
            vals[g] = t.apply(p)
        return Derivation(self.algebra, 1, vals, check=False)

    def mc_residual(self, xi: dict) -> dict:
        """Constant terms of the twisted structure; empty iff xi is MC."""
        return self.twisted_derivation(xi).constant_terms()

    def is_mc(self, xi: dict) -> bool:
        return not self.mc_residual(xi)

    def twist(self, xi: dict) -> "LInftyStructure":
        """The structure at the new base point; requires xi Maurer-Cartan."""
        res = self.mc_residual(xi)
        if res:
            raise NotMaurerCartan("twisting point is not Maurer-Cartan", residual=res)
        return LInftyStructure(self.space, self.twisted_derivation(xi), check=False)

    # -- restriction and base change ----------------------------------------
    def change_of_basis(self, new_basis, new_names=None) -> "LInftyStructure":
        """Transport the structure to a new homogeneous basis of V.

        ``new_basis[j]`` lists the old-basis coordinates of the j-th new
        vector.  Dual generators transform by x_a = sum_j P[a][j] X_j.
        """
        n = self.dim
        if len(new_basis) != n:
            raise ValueError("change of basis must be square")
        degs = self.hom_degrees()
        new_degs = []
        for j, col in enumerate(new_basis):
            ds = {degs[a] for a in range(n) if col[a] != 0}
            if len(ds) != 1:
                raise DegreeMismatch(f"new basis vector {j} is not homogeneous")
            new_degs.append(ds.pop())
        if new_names is None:
            new_names = [f"b{j}" for j in range(n)]
        new_space = GradedSpace(
            tuple(zip(new_names, new_degs)), HOMOLOGICAL
        )
        alg2 = representing_algebra(new_space, self.weight_cap)
        # P[a][j] = coordinate of new vector j on old vector a
        fwd = AlgebraMap(
            self.algebra, alg2,
            {a: {(j,): frac(new_basis[j][a]) for j in range(n) if new_basis[j][a]}
             for a in range(n)},
            check=False,
        )
        # inverse transform: X_j = sum_a Pinv[j][a] x_a
        from .linalg import solve
        pmat = RationalMatrix(n, n, [[frac(new_basis[j][a]) for j in range(n)]
                                     for a in range(n)])
        cols = []
        for j in range(n):
            e = [ONE if i == j else ZERO for i in range(n)]
            sol = solve(pmat, e)
            if sol is None:
                raise ValueError("change of basis is not invertible")
            cols.append(sol)
        bwd = AlgebraMap(
            alg2, self.algebra,
            {j: {(a,): cols[j][a] for a in range(n) if cols[j][a]}
             for j in range(n)},
            check=False,
        )
        vals = {}
        for j in range(n):
            vals[j] = fwd.apply(self.m.apply(bwd.apply(alg2.gen(j))))
        m2 = Derivation(alg2, 1, vals, check=False)
        return LInftyStructure(new_space, m2, check=False)

    def restrict_to_prefix(self, k: int) -> "LInftyStructure":
        """Substructure on the first k basis vectors (rest set to zero)."""
        sub_space = GradedSpace(self.space.basis[:k], HOMOLOGICAL)
        alg2 = representing_algebra(sub_space, self.weight_cap)
        proj = AlgebraMap(
            self.algebra, alg2,
            {a: (alg2.gen(a) if a < k else alg2.zero()) for a in range(self.dim)},
            check=False,
        )
        vals = {}
        for a in range(k):
            vals[a] = proj.apply(self.m.values.get(a, {}))
        return LInftyStructure(sub_space, Derivation(alg2, 1, vals, check=False),
                               check=False)

    def connected_cover(self, n: int) -> "LInftyStructure":
        """Kill homological degrees < n, replace degree n by ker m1."""
        degs = self.hom_degrees()
        keep = [j for j, d in enumerate(degs) if d > n]
        at_n = [j for j, d in enumerate(degs) if d == n]
        below = [j for j, d in enumerate(degs) if d < n]
        kmat = self.m1_matrix(n)
        _, kernel = rank_kernel(kmat)
        new_basis = []
        new_names = []
        for j in keep:
            v = [ZERO] * self.dim
            v[j] = ONE
            new_basis.append(v)
            new_names.append(self.names[j])
        for i, vec in enumerate(kernel):
            v = [ZERO] * self.dim
            hits = [(a, c) for a, c in zip(at_n, vec) if c]
            for a, c in hits:
                v[a] = c
            if len(hits) == 1 and hits[0][1] == ONE:
                new_names.append(self.names[hits[0][0]])
            else:
                new_names.append(f"ker{n}_{i}")
            new_basis.append(v)
        cover_dim = len(new_basis)
        # complete to a full basis: complement of the kernel in degree n,
        # then everything below n
        pivots = set()
        for vec in kernel:
            for idx, c in enumerate(vec):
                if c:
                    pivots.add(at_n[idx])
                    break
        for j in at_n:
            if j not in pivots:
                v = [ZERO] * self.dim
                v[j] = ONE
                new_basis.append(v)
                new_names.append(self.names[j])
        for j in below:
            v = [ZERO] * self.dim
            v[j] = ONE
            new_basis.append(v)
            new_names.append(self.names[j])
        adapted = self.change_of_basis(new_basis, new_names)
        out = adapted.restrict_to_prefix(cover_dim)
        report = out.check()
        if not report.ok:
            raise LinftyError(
                f"connected cover is not closed at weight {report.first_failing_weight}"
            )
        return out


# -- table readers ----------------------------------------------------------

def _normalize_tuple(algebra: FreeCommAlgebra, names):
    """Sort a tuple of generator indices with the Koszul sign; None if zero."""
    idx = [algebra.index(n) if isinstance(n, str) else n for n in names]
    sign = 1
    out = []
    for g in idx:
        # insertion sort, counting odd-odd transpositions
        pos = len(out)
        while pos > 0 and out[pos - 1] > g:
            if algebra.parity[g] and algebra.parity[out[pos - 1]]:
                sign = -sign
            pos -= 1
        if pos > 0 and out[pos - 1] == g and algebra.parity[g]:
            return None, 0
        out.insert(pos, g)
    return tuple(out), sign


def _multiplicity_factorial(mono) -> int:
    import math
    out = 1
    run = 1
    for a, b in zip(mono, mono[1:]):
        run = run + 1 if a == b else 1
        if run > 1:
            out *= run
    return out if out else 1


def structure_from_suspended_tables(space: GradedSpace, tables, weight_cap: int,
                                    check: bool = True) -> LInftyStructure:
    """Build a structure from graded-symmetric products on the suspension.

    ``tables`` is an iterable of (inputs, outputs) where inputs is a tuple of
    basis names (arity = its length) and outputs a dict name -> coefficient.
    Entries with the same normalized inputs accumulate.
    """
    alg = representing_algebra(space, weight_cap)
    mu = {}
    for inputs, outputs in tables:
        key, sign = _normalize_tuple(alg, tuple(inputs))
        if key is None:
            continue
        if len(key) > weight_cap:
            raise LinftyError(
                f"arity {len(key)} table entry exceeds weight cap {weight_cap}"
            )
        for cname, coeff in outputs.items():
            c = alg.index(cname) if isinstance(cname, str) else cname
            cur = mu.setdefault(c, {})
            cur[key] = cur.get(key, ZERO) + sign * frac(coeff)
    vals = {}
    for c, table in mu.items():
        p = {}
        for mono, coeff in table.items():
            if not coeff:
                continue
            pars = [alg.parity[g] for g in mono]
            s = sum(pars[i] * pars[j] for i in range(len(pars))
                    for j in range(i + 1, len(pars)))
            sign = -1 if s % 2 else 1
            p[mono] = coeff * sign / _multiplicity_factorial(mono)
        if p:
            vals[c] = p
    m = Derivation(alg, 1, vals, constant_term_allowed=False)
    return LInftyStructure(space, m, check=check)


def suspended_tables_from_structure(structure: LInftyStructure):
    """Inverse of the reader: structure constants on the suspension.

    Returns a dict (sorted input name tuple) -> {output name: coefficient}.
    """
    alg = structure.algebra
    out = {}
    for c, p in sorted(structure.m.values.items()):
        for mono in sorted(p):
            pars = [alg.parity[g] for g in mono]
            s = sum(pars[i] * pars[j] for i in range(len(pars))
                    for j in range(i + 1, len(pars)))
            sign = -1 if s % 2 else 1
            coeff = p[mono] * sign * _multiplicity_factorial(mono)
            key = tuple(alg.gen_names[g] for g in mono)
            out.setdefault(key, {})[alg.gen_names[c]] = coeff
    return out


def structure_from_lie_brackets(space: GradedSpace, brackets, weight_cap: int = 2,
                                check: bool = True) -> LInftyStructure:
    """An ungraded Lie algebra (all basis elements in homological degree 0).

    ``brackets`` maps (a_name, b_name) -> dict of structure constants for
    [a, b]; missing pairs are zero, and (b, a) entries may be omitted.
    The suspended table is mu(w_a, w_b) = c^._{ab}, which lands on the
    classical Chevalley-Eilenberg differential d(x_c) = -sum c^c_{ab} x_a x_b.
    """
    hom = space.converted(HOMOLOGICAL)
    if any(d != 0 for d in hom.degrees()):
        raise DegreeMismatch("lie bracket reader expects everything in degree 0")
    seen = {}
    for (a, b), out in brackets.items():
        seen[(a, b)] = {k: frac(v) for k, v in out.items()}
    tables = []
    done = set()
    for (a, b), out in seen.items():
        if (a, b) in done or (b, a) in done:
            continue
        done.add((a, b))
        rev = seen.get((b, a))
        if rev is not None and (b, a) != (a, b):
            # consistency: [b,a] = -[a,b] in degree 0
            for k, v in rev.items():
                if out.get(k, ZERO) != -v:
                    raise LinftyError(f"bracket table not antisymmetric at ({a},{b})")
        tables.append(((a, b), out))
    return structure_from_suspended_tables(space, tables, weight_cap, check=check)


def structure_from_graded_lie(basis, differential, brackets, weight_cap: int = 2,
                              check: bool = True) -> LInftyStructure:
    """A homologically graded dgla, fed through standard decalage.

    ``basis``: iterable of (name, homological degree).
    ``differential``: name -> dict (coefficients of d(name), degree -1).
    ``brackets``: (a, b) -> dict for [a, b], graded antisymmetric; each
    unordered pair should appear once ((a, a) pairs allowed for odd a).

    Decalage, pinned by requiring [m, m] = 0 on commutator dglas of
    derivations (see the sign-convention tests): the differential enters
    with sign (-1)^{deg a} of its source, the bracket with sign
    (-1)^{deg b} of its second argument (homological degrees).  Flipping
    either sign globally yields an isomorphic structure.
    """
    space = GradedSpace(tuple(basis), HOMOLOGICAL)
    degs = {n: d for n, d in space.basis}
    tables = []
    for a, out in differential.items():
        s1 = -1 if degs[a] % 2 else 1
        tables.append(((a,), {k: s1 * frac(v) for k, v in out.items()}))
    for (a, b), out in brackets.items():
        s2 = -1 if degs[b] % 2 else 1
        tables.append(((a, b), {k: s2 * frac(v) for k, v in out.items()}))
    return structure_from_suspended_tables(space, tables, weight_cap, check=check)


def abelian_structure(space: GradedSpace, weight_cap: int = 2) -> LInftyStructure:
    return structure_from_suspended_tables(space, [], weight_cap)


def with_weight_cap(structure: LInftyStructure, cap: int) -> LInftyStructure:
    """The same structure carried on an algebra truncated at a new cap."""
    if cap == structure.weight_cap:
        return structure
    deepest = max((w for p in structure.m.values.values() for w in [max((len(m) for m in p), default=0)]),
                  default=0)
    if cap < deepest:
        raise LinftyError(
            f"cap {cap} would truncate existing structure components of weight {deepest}"
        )
    alg2 = FreeCommAlgebra(structure.algebra.generators, cap)
    m2 = Derivation(alg2, 1, structure.m.values, check=False)
    return LInftyStructure(structure.space, m2, check=False)
