"""Free and presented graded Lie algebras, the Quillen functor, and Harrison complexes.

Lie elements are represented inside the tensor algebra on the generators:
an element is a dict mapping a word (tuple of generator indices) to a
Fraction.  Brackets are graded commutators of words, so antisymmetry and
Jacobi hold by construction and linear questions (spans, quotients,
expressing elements in a basis) reduce to exact linear algebra on word
coordinates.

Free Lie algebras use the super-Lyndon basis: standard bracketings of
Lyndon words, plus [b(w), b(w)] for Lyndon w of odd total degree.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    InfinitePerDegree,
    LinftyError,
    RelationOutsideCap,
    UnsafeWindow,
)
from .graded import GradedSpace, HOMOLOGICAL
from .linalg import (
    CochainWindow,
    RationalMatrix,
    ZERO,
    ONE,
    frac,
    row_echelon,
    solve,
)

TAU = "τ"


# -- tensor-algebra words -----------------------------------------------------

def t_add(p, q, c=ONE):
    out = dict(p)
    for w, v in q.items():
        x = out.get(w, ZERO) + c * v
        if x:
            out[w] = x
        else:
            out.pop(w, None)
    return out


def t_scale(p, c):
    c = frac(c)
    return {w: c * v for w, v in p.items()} if c else {}


def t_concat(p, q):
    out = {}
    for w1, c1 in p.items():
        for w2, c2 in q.items():
            w = w1 + w2
            x = out.get(w, ZERO) + c1 * c2
            if x:
                out[w] = x
            else:
                out.pop(w, None)
    return out


class FreeGradedLie:
    """Free graded Lie algebra on named generators of nonzero degrees.

    ``degree_cap`` bounds the absolute homological degree retained; for
    degree-0 generators a ``length_cap`` must be supplied instead.
    """

    def __init__(self, generators, degree_cap: int | None = None,
                 length_cap: int | None = None):
        self.gen_names = [str(n) for n, _ in generators]
        self.gen_degrees = [int(d) for _, d in generators]
        if len(set(self.gen_names)) != len(self.gen_names):
            raise ValueError("generator names must be unique")
        same_sign = (all(d >= 1 for d in self.gen_degrees)
                     or all(d <= -1 for d in self.gen_degrees))
        if not same_sign and length_cap is None:
            raise InfinitePerDegree(
                "degree-0 or mixed-sign generators need an explicit length cap"
            )
        if degree_cap is None and length_cap is None:
            raise ValueError("need degree_cap or length_cap")
        self.degree_cap = degree_cap
        self.length_cap = length_cap
        self._lyndon_cache = None

    def index(self, name):
        return self.gen_names.index(name) if isinstance(name, str) else name

    def word_degree(self, w):
        return sum(self.gen_degrees[g] for g in w)

    def word_parity(self, w):
        return self.word_degree(w) % 2

    def degree(self, p):
        degs = {self.word_degree(w) for w in p}
        if not degs:
            return None
        if len(degs) > 1:
            raise LinftyError("inhomogeneous Lie element")
        return degs.pop()

    def gen(self, g):
        return {(self.index(g),): ONE}

    def bracket(self, p, q):
        """[p, q] = pq - (-1)^{|p||q|} qp on homogeneous p, q."""
        dp, dq = self.degree(p), self.degree(q)
        if dp is None or dq is None:
            return {}
        sign = -1 if (dp % 2) and (dq % 2) else 1
        return t_add(t_concat(p, q), t_concat(q, p), -sign)

    def _within_caps(self, length, degree):
        if self.length_cap is not None and length > self.length_cap:
            return False
        if self.degree_cap is not None and abs(degree) > self.degree_cap:
            return False
        return True

    def _max_length(self):
        if self.length_cap is not None:
            return self.length_cap
        step = min(abs(d) for d in self.gen_degrees)
        return max(1, self.degree_cap // step)

    # -- Lyndon machinery -----------------------------------------------------
    def _lyndon_words(self):
        """All Lyndon words within the caps, shortlex order."""
        n = len(self.gen_names)
        maxlen = self._max_length()
        out = []
        # Duval's algorithm, filtered by caps
        w = [-1]
        while w:
            w[-1] += 1
            if w[-1] >= n:
                w.pop()
                continue
            m = len(w)
            if self._within_caps(m, self.word_degree(tuple(w))):
                out.append(tuple(w))
            while len(w) < maxlen:
                w.append(w[len(w) - m])
            while w and w[-1] == n - 1:
                w.pop()
        out.sort(key=lambda t: (len(t), t))
        return out

    def standard_bracketing(self, w):
        """Standard factorization bracketing, returned as a T-element.

        The split takes the longest proper Lyndon suffix, i.e. the earliest
        split position whose suffix is Lyndon.
        """
        if len(w) == 1:
            return self.gen(w[0])
        for split in range(1, len(w)):
            if self._is_lyndon(w[split:]):
                break
        return self.bracket(self.standard_bracketing(w[:split]),
                            self.standard_bracketing(w[split:]))

    @staticmethod
    def _is_lyndon(w):
        return all(w < w[i:] + w[:i] for i in range(1, len(w)))

    def lyndon_basis(self):
        """Super-Lyndon basis: list of (label, degree, T-element)."""
        if self._lyndon_cache is not None:
            return self._lyndon_cache
        out = []
        for w in self._lyndon_words():
            e = self.standard_bracketing(w)
            label = self._bracket_label(w)
            out.append((label, self.word_degree(w), e))
            d2 = 2 * self.word_degree(w)
            if self.word_degree(w) % 2 and self._within_caps(2 * len(w), d2):
                ee = self.bracket(e, e)
                if ee:
                    out.append((f"[{label},{label}]", d2, ee))
        out.sort(key=lambda t: (abs(t[1]), t[0]))
        self._lyndon_cache = out
        return out

    def _bracket_label(self, w):
        if len(w) == 1:
            return self.gen_names[w[0]]
        for split in range(1, len(w)):
            if self._is_lyndon(w[split:]):
                break
        return f"[{self._bracket_label(w[:split])},{self._bracket_label(w[split:])}]"

    def basis_of_degree(self, d):
        return [(lbl, e) for (lbl, deg, e) in self.lyndon_basis() if deg == d]

    def dims_by_degree(self):
        out = {}
        for _, d, _ in self.lyndon_basis():
            out[d] = out.get(d, 0) + 1
        return out

    def words_of_degree(self, d):
        """All tensor words of the given degree within caps, sorted."""
        out = []
        maxlen = self._max_length()
        pos = all(x >= 1 for x in self.gen_degrees)
        neg = all(x <= -1 for x in self.gen_degrees)

        def rec(prefix, deg):
            if deg == d and prefix:
                out.append(tuple(prefix))
            if len(prefix) >= maxlen:
                return
            for g in range(len(self.gen_names)):
                nd = deg + self.gen_degrees[g]
                if (pos and nd > d) or (neg and nd < d):
                    continue
                prefix.append(g)
                rec(prefix, nd)
                prefix.pop()

        rec([], 0)
        return sorted(out)


@dataclass
class LieBasis:
    """A per-degree basis of a (quotient of a) free graded Lie algebra."""

    free: FreeGradedLie
    labels: dict = field(default_factory=dict)    # degree -> [label]
    vectors: dict = field(default_factory=dict)   # degree -> [T-element]
    ideal_rows: dict = field(default_factory=dict)  # degree -> echelon rows over words
    word_index: dict = field(default_factory=dict)

    def words(self, d):
        if d not in self.word_index:
            ws = self.free.words_of_degree(d)
            self.word_index[d] = {w: i for i, w in enumerate(ws)}
        return self.word_index[d]

    def to_coords(self, p, d):
        idx = self.words(d)
        vec = [ZERO] * len(idx)
        for w, c in p.items():
            vec[idx[w]] = c
        return vec

    def dim(self, d):
        return len(self.labels.get(d, []))

    def degrees(self):
        return sorted(self.labels)

    def reduce_mod_ideal(self, p, d):
        if not p:
            return []
        vec = self.to_coords(p, d)
        rows = self.ideal_rows.get(d, [])
        for row, pivot in rows:
            if vec[pivot]:
                c = vec[pivot] / row[pivot]
                vec = [a - c * b for a, b in zip(vec, row)]
        return vec

    def express(self, p, d):
        """Coordinates of p in the degree-d basis (mod the ideal)."""
        if not p:
            return [ZERO] * self.dim(d)
        vec = self.reduce_mod_ideal(p, d)
        if not any(vec):
            return [ZERO] * self.dim(d)
        cols = [self.reduce_mod_ideal(v, d) for v in self.vectors[d]]
        mat = RationalMatrix(len(vec), len(cols))
        for j, c in enumerate(cols):
            for i, x in enumerate(c):
                if x:
                    mat[i, j] = x
        sol = solve(mat, vec)
        if sol is None:
            raise LinftyError(f"element of degree {d} lies outside the basis span")
        return sol


class GradedLie:
    """A graded Lie algebra presented as (free on generators)/(relations).

    With no relations this is the free algebra on its super-Lyndon basis.
    Brackets are computed in the tensor algebra and reduced.
    """

    def __init__(self, free: FreeGradedLie, relations=()):
        self.free = free
        self.basis = LieBasis(free)
        self.relations = [dict(r) for r in relations]
        self._saturate()
        self._select_basis()
        self.differential = None     # optional: name/index -> T-element

    def _saturate(self):
        free = self.free
        by_degree = {}
        for r in self.relations:
            d = free.degree(r)
            if d is None:
                continue
            if free.degree_cap is not None and abs(d) > free.degree_cap:
                raise RelationOutsideCap(f"relation of degree {d} exceeds the cap")
            by_degree.setdefault(d, []).append(r)
        if not self.relations:
            return
        if not all(d >= 1 for d in free.gen_degrees):
            raise InfinitePerDegree(
                "presented algebras need strictly positive generator degrees"
            )
        cap = free.degree_cap or 0
        pending = {d: list(rs) for d, rs in by_degree.items()}
        for d in range(1, cap + 1):
            rows = []
            for r in pending.get(d, []):
                vec = self.basis.to_coords(r, d)
                rows.append(vec)
            # bracket lower ideal pieces with generators
            for gi, gd in enumerate(free.gen_degrees):
                src = d - gd
                if src < 1:
                    continue
                for row, _ in self.basis.ideal_rows.get(src, []):
                    p = self._coords_to_elt(row, src)
                    br = free.bracket(free.gen(gi), p)
                    if br:
                        rows.append(self.basis.to_coords(br, d))
            if rows:
                pivots, rank = row_echelon(rows)
                ech = [(rows[i], pivots[i]) for i in range(rank)]
                self.basis.ideal_rows[d] = ech

    def _coords_to_elt(self, vec, d):
        idx = self.basis.words(d)
        rev = {i: w for w, i in idx.items()}
        return {rev[i]: c for i, c in enumerate(vec) if c}

    def _select_basis(self):
        free = self.free
        degrees = sorted({deg for _, deg, _ in free.lyndon_basis()})
        for d in degrees:
            labels, vectors = [], []
            taken = []
            for lbl, e in free.basis_of_degree(d):
                red = self.basis.reduce_mod_ideal(e, d)
                if not any(red):
                    continue
                cand = list(red)
                for row, pivot in taken:
                    if cand[pivot]:
                        c = cand[pivot] / row[pivot]
                        cand = [a - c * b for a, b in zip(cand, row)]
                lead = next((i for i, x in enumerate(cand) if x), None)
                if lead is None:
                    continue
                taken.append((cand, lead))
                labels.append(lbl)
                vectors.append(e)
            if labels:
                self.basis.labels[d] = labels
                self.basis.vectors[d] = vectors

    # -- public surface -------------------------------------------------------
    def dims_by_degree(self):
        return {d: len(ls) for d, ls in sorted(self.basis.labels.items())}

    def element(self, d, coords):
        out = {}
        for c, v in zip(coords, self.basis.vectors.get(d, [])):
            if c:
                out = t_add(out, v, frac(c))
        return out

    def bracket_coords(self, d1, c1, d2, c2):
        p = self.element(d1, c1)
        q = self.element(d2, c2)
        br = self.free.bracket(p, q)
        d = d1 + d2
        if self.free.degree_cap is not None and abs(d) > self.free.degree_cap:
            raise RelationOutsideCap(f"bracket lands outside the degree cap at {d}")
        return self.basis.express(br, d)

    def set_differential(self, values):
        """values: generator name -> T-element of degree one lower."""
        vals = {}
        for k, p in values.items():
            vals[self.free.index(k)] = dict(p)
        self.differential = vals
        sq = self._check_d_squared()
        if sq:
            raise LinftyError(f"d^2 != 0 on generator {sq}")

    def apply_differential(self, p):
        """Associative-Leibniz extension of the differential (degree -1)."""
        if self.differential is None:
            return {}
        out = {}
        for w, coeff in p.items():
            par = 0
            for i, g in enumerate(w):
                val = self.differential.get(g)
                if val:
                    sign = -1 if par % 2 else 1
                    for vw, vc in val.items():
                        nw = w[:i] + vw + w[i + 1:]
                        c = coeff * vc * sign
                        x = out.get(nw, ZERO) + c
                        if x:
                            out[nw] = x
                        else:
                            out.pop(nw, None)
                par += self.free.gen_degrees[g] % 2
        return out

    def _check_d_squared(self):
        for g in range(len(self.free.gen_names)):
            p = self.apply_differential(self.apply_differential(self.free.gen(g)))
            if p:
                d = self.free.degree(p)
                if (self.free.degree_cap is None or
                        (d is not None and abs(d) <= self.free.degree_cap)):
                    red = self.basis.reduce_mod_ideal(p, d)
                    if any(red):
                        return self.free.gen_names[g]
        return None


def free_lie(generators, degree_cap=None, length_cap=None) -> GradedLie:
    return GradedLie(FreeGradedLie(generators, degree_cap, length_cap))


# -- the Quillen functor -----------------------------------------------------

def quillen_model(base, degree_cap: int) -> GradedLie:
    """The free-Lie model of a finite non-unital cdga.

    ``base`` provides names, cohomological degrees, products and an optional
    differential (see cup_def.NilpotentBase).  A basis element of degree n
    contributes a generator of homological degree n - 1; degrees must be
    >= 2 for per-degree finiteness.

    The differential has linear part dual to d_A (sign (-1)^{deg source},
    matching the structure reader) and quadratic part dual to the product:

        delta(z_k) = sum_{i,j} (-1)^{n_i} m^k_{ij}/2 [z_i, z_j]

    over ordered pairs, where a_i a_j = sum_k m^k_{ij} a_k.  The sign pattern
    is pinned by d^2 = 0 across the test matrix; global flips give isomorphic
    models.
    """
    names = list(base.names)
    degs = [base.degree(n) for n in names]
    if any(d < 2 for d in degs):
        raise InfinitePerDegree(
            "quillen model needs base degrees >= 2 (else supply a presented model)"
        )
    gens = [(n, d - 1) for n, d in zip(names, degs)]
    L = GradedLie(FreeGradedLie(gens, degree_cap))
    diff = {}
    # linear part: delta(z_i) = sum_j s1(j) D[j][i] z_j where d(a_j) = sum D[j][i] a_i
    for j, nj in enumerate(names):
        dj = base.differential_of(nj)
        for i, ni in enumerate(names):
            c = dj.get(ni)
            if c:
                s1 = -1 if degs[j] % 2 else 1
                tgt = diff.setdefault(ni, {})
                w = (L.free.index(nj),)
                tgt[w] = tgt.get(w, ZERO) + s1 * frac(c)
    # quadratic part
    for (ni, nj), out in base.product_table().items():
        i, j = names.index(ni), names.index(nj)
        for nk, c in out.items():
            s2 = -1 if degs[i] % 2 else 1
            zi, zj = L.free.gen(ni), L.free.gen(nj)
            br = L.free.bracket(zi, zj)
            half = frac(c) * s2 / 2
            cur = diff.setdefault(nk, {})
            for w, v in br.items():
                x = cur.get(w, ZERO) + half * v
                if x:
                    cur[w] = x
                else:
                    cur.pop(w, None)
    diff = {k: v for k, v in diff.items() if v}
    L.set_differential(diff)
    return L


# -- tau adjunction and Harrison complexes ------------------------------------

@dataclass
class TauExtension:
    """g with a freely adjoined tau of homological degree -1.

    Realized as the free Lie algebra on the generators plus tau, with
    d_tau(g) = d(g) + [g, tau] and d_tau(tau) = [tau, tau]/2.
    """

    base: GradedLie
    lie: FreeGradedLie
    tau_index: int

    def d_tau(self, p):
        lie = self.lie
        out = {}
        for w, coeff in p.items():
            par = 0
            for i, g in enumerate(w):
                if g == self.tau_index:
                    val = self._d_tau_tau()
                else:
                    val = dict(self._lift(self.base.differential or {}, g))
                    val = t_add(val, self._bracket_tau(g))
                if val:
                    sign = -1 if par % 2 else 1
                    for vw, vc in val.items():
                        nw = w[:i] + vw + w[i + 1:]
                        c = coeff * vc * sign
                        x = out.get(nw, ZERO) + c
                        if x:
                            out[nw] = x
                        else:
                            out.pop(nw, None)
                par += lie.gen_degrees[g] % 2
        return out

    def _lift(self, diff, g):
        val = diff.get(g, {})
        return {w: c for w, c in val.items()}

    def _bracket_tau(self, g):
        return self.lie.bracket({(g,): ONE}, {(self.tau_index,): ONE})

    def _d_tau_tau(self):
        t = {(self.tau_index,): ONE}
        return t_scale(self.lie.bracket(t, t), Fraction(1, 2))

    def check_square_zero(self, words):
        for w in words:
            if self.d_tau(self.d_tau({w: ONE})):
                return False
        return True


def adjoin_tau(g: GradedLie) -> TauExtension:
    if g.relations:
        raise LinftyError("tau adjunction is implemented for free bases only")
    free = g.free
    gens = list(zip(free.gen_names, free.gen_degrees)) + [(TAU, -1)]
    lie = FreeGradedLie(gens, degree_cap=None, length_cap=(free._max_length() + 2))
    ext = TauExtension(g, lie, len(gens) - 1)
    words = [(i,) for i in range(len(gens))]
    if not ext.check_square_zero(words):
        raise LinftyError("(d^tau)^2 != 0 — sign conventions violated")
    return ext


@dataclass
class DerWindowRow:
    der_degree_hom: int
    harrison_degree: int       # cohomological, = -hom + 1
    dim: int
    flags: tuple = ()


def der_complex_of_lie(g: GradedLie, window_hom, tau: bool = False):
    """Windowed complex of derivations of g (or Der_tau of g<tau>).

    Degrees are homological derivation degrees t; a derivation is stored by
    its values on generators (plus its value on tau), each an element of g.
    The differential is [d, -] (or [d^tau, -]); for the tau variant the
    cancellation of tau words is asserted, which is the Der(g) ⋉ g closure.
    """
    lo, hi = window_hom
    free = g.free
    gen_degs = list(free.gen_degrees)
    slots = list(range(len(gen_degs)))
    ext = adjoin_tau(g) if tau else None
    if tau:
        slots.append("tau")
    basis = {}
    for t in range(lo, hi + 1):
        items = []
        for s in slots:
            gd = -1 if s == "tau" else gen_degs[s]
            vdeg = gd + t
            if free.degree_cap is not None and abs(vdeg) > free.degree_cap:
                continue
            for k, lbl in enumerate(g.basis.labels.get(vdeg, [])):
                items.append((s, vdeg, k, lbl))
        basis[t] = items
    diff = {}
    suspect = {t: False for t in basis}
    for t in range(lo, hi):
        rows_b = basis[t + 1]
        cols_b = basis[t]
        mat = RationalMatrix(len(rows_b), len(cols_b))
        index = {(s, k): i for i, (s, vdeg, k, lbl) in enumerate(rows_b)}
        for j, (s, vdeg, k, lbl) in enumerate(cols_b):
            img = _der_differential(g, ext, t, s, vdeg, k, tau)
            for (s2, k2), c in img.items():
                if (s2, k2) not in index:
                    suspect[t + 1] = True
                    continue
                mat[index[(s2, k2)], j] = c
        diff[t] = mat
    labels = {t: [f"{lbl}⊗∂{_slot_name(g, s)}" for (s, _, _, lbl) in basis[t]]
              for t in basis}
    window = CochainWindow(lo, hi, labels, diff, suspect)
    return window, basis


def _slot_name(g, s):
    return TAU if s == "tau" else g.free.gen_names[s]


def _der_differential(g: GradedLie, ext, t, slot, vdeg, k, tau):
    """Coordinates of [d, Theta] for the basis derivation Theta.

    Theta sends one generator (or tau) to the k-th basis vector of g in
    degree vdeg; [d, Theta](x) = d(Theta x) - (-1)^{t} Theta(d x), assembled
    slot by slot.
    """
    free = g.free
    value = g.basis.vectors[vdeg][k]
    sign = -1 if t % 2 else 1
    out = {}

    def theta_apply(p):
        # associative Leibniz extension of Theta over tensor words
        res = {}
        for w, coeff in p.items():
            par = 0
            for i, gi in enumerate(w):
                if (slot == "tau" and gi == (ext.tau_index if ext else None)) or \
                   (slot != "tau" and gi == slot):
                    s = -1 if (t % 2) and (par % 2) else 1
                    for vw, vc in value.items():
                        nw = w[:i] + vw + w[i + 1:]
                        c = coeff * vc * s
                        x = res.get(nw, ZERO) + c
                        if x:
                            res[nw] = x
                        else:
                            res.pop(nw, None)
                par += (free.gen_degrees[gi] if gi < len(free.gen_degrees) or not ext
                        else -1) % 2
        return res

    slots = list(range(len(free.gen_names))) + (["tau"] if tau else [])
    for s2 in slots:
        if s2 == "tau":
            x = {(ext.tau_index,): ONE}
            dx = ext._d_tau_tau()
        else:
            x = {(s2,): ONE}
            if tau:
                dx = t_add(ext._lift(g.differential or {}, s2), ext._bracket_tau(s2))
            else:
                dx = (g.differential or {}).get(s2, {})
                dx = dict(dx)
        term1_src = theta_apply(x)
        if tau:
            term1 = ext.d_tau(term1_src)
        else:
            term1 = g.apply_differential(term1_src)
        term2 = theta_apply(dx)
        total = t_add(term1, term2, -sign)
        if not total:
            continue
        # the result must be tau-free and land back in g
        if ext is not None:
            for w in total:
                if ext.tau_index in w:
                    raise LinftyError("Der_tau closure failed: tau survived")
        deg = next(sum(free.gen_degrees[gi] for gi in w) for w in total)
        coords = g.basis.express(total, deg)
        for k2, c in enumerate(coords):
            if c:
                out[(s2, k2)] = out.get((s2, k2), ZERO) + c
    return out


def harrison_window(base, window_hom, degree_cap: int, truncated: bool = True):
    """Windowed Harrison complex of a finite cdga base.

    truncated=True gives Der(L(A)) (the truncated complex); otherwise
    Der_tau(L(A)<tau>), whose underlying window is Der(g) ⋉ g.
    """
    L = quillen_model(base, degree_cap)
    window, basis = der_complex_of_lie(L, window_hom, tau=not truncated)
    return L, window, basis
