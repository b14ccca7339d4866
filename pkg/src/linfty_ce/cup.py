"""The second structure on CE complexes, cup brackets, and deformation functors.

The coefficient complex of a pair (V, U) is the structure on the tensor of
the representing algebra of V with U; morphisms V -> U are its Maurer-Cartan
points and twisting by them is base-point translation, all inherited from the
generic machinery in ``linfty``.  With V = U and the identity point, the
twisted linear part is the CE differential while the twisted binary part is
the cup bracket - the second structure, distinct from the Gerstenhaber one.

Deformations over a finite nilpotent base A are derivations of A ⊗ SΣ¯¹I*
that vanish on A, reduce to the structure mod A₊, and square to zero; gauge
is by exponentials of degree-0 elements, decided order by order along the
weight filtration of A.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
import math

from .errors import (
    AritySupport,
    LinftyError,
    NotMaurerCartan,
    ValidationError,
)
from .graded import GradedSpace, HOMOLOGICAL
from .linalg import RationalMatrix, ZERO, ONE, frac, rank_kernel, reduce_mod_span, solve
from .linfty import (
    LInftyStructure,
    representing_algebra,
    structure_from_suspended_tables,
    suspended_tables_from_structure,
)
from .symalg import Derivation, FreeCommAlgebra


# -- finite nilpotent bases ---------------------------------------------------

class NilpotentBase:
    """A finite-dimensional graded-commutative non-unital cdga.

    Products are given on ordered pairs of basis names (missing pairs are
    filled in by graded commutativity); associativity, degree additivity,
    nilpotency and the Leibniz rule for the optional differential are all
    verified at construction.
    """

    def __init__(self, basis, products=None, differential=None, name=""):
        self.space = GradedSpace(tuple(basis), "cohomological")
        self.names = list(self.space.names)
        self._deg = {n: self.space.degree(n) for n in self.names}
        self.name = name
        self._mul = {}
        for (a, b), out in (products or {}).items():
            self._mul[(a, b)] = {k: frac(v) for k, v in out.items() if frac(v)}
        self._fill_commutativity()
        self._diff = {}
        for a, out in (differential or {}).items():
            self._diff[a] = {k: frac(v) for k, v in out.items() if frac(v)}
        self._validate()
        self.levels = self._filtration_levels()
        self.order = 1 + max(self.levels.values(), default=0)

    # construction helpers
    def _fill_commutativity(self):
        for (a, b) in list(self._mul):
            s = -1 if self._deg[a] % 2 and self._deg[b] % 2 else 1
            other = self._mul.get((b, a))
            expected = {k: s * v for k, v in self._mul[(a, b)].items()}
            if other is None:
                if (b, a) != (a, b):
                    self._mul[(b, a)] = expected
            elif other != expected:
                raise ValidationError(f"products at ({a},{b}) are not graded-commutative")

    def _validate(self):
        for (a, b), out in self._mul.items():
            for k, v in out.items():
                if self._deg[k] != self._deg[a] + self._deg[b]:
                    raise ValidationError(f"product {a}·{b} has a wrong-degree term {k}")
        for a in self.names:
            for b in self.names:
                for c in self.names:
                    left = self.mul(self.mul_gen(a, b), {c: ONE})
                    right = self.mul({a: ONE}, self.mul_gen(b, c))
                    if left != right:
                        raise ValidationError(f"associativity fails on ({a},{b},{c})")
        for a, out in self._diff.items():
            for k, v in out.items():
                if self._deg[k] != self._deg[a] + 1:
                    raise ValidationError(f"differential of {a} has wrong-degree term {k}")
        for a in self.names:
            dd = self.d(self.d({a: ONE}))
            if dd:
                raise ValidationError(f"d² != 0 on {a}")
        for a in self.names:
            for b in self.names:
                lhs = self.d(self.mul_gen(a, b))
                rhs = self.mul(self.d({a: ONE}), {b: ONE})
                s = -1 if self._deg[a] % 2 else 1
                rhs = _dict_add(rhs, self.mul({a: ONE}, self.d({b: ONE})), frac(s))
                if lhs != rhs:
                    raise ValidationError(f"Leibniz fails on ({a},{b})")

    def _filtration_levels(self):
        # level k: elements expressible as k-fold products; must terminate
        span = {n: 1 for n in self.names}
        level = 1
        current = {n: {n: ONE} for n in self.names}
        while True:
            nxt = {}
            found = False
            for a in self.names:
                for b, p in current.items():
                    prod = self.mul({a: ONE}, p)
                    for k in prod:
                        if span.get(k, 0) <= level:
                            pass
                    if prod:
                        found = True
                        nxt[(a, b)] = prod
            level += 1
            if not found:
                break
            hit = set()
            for prod in nxt.values():
                hit.update(prod)
            for k in hit:
                span[k] = max(span[k], level)
            current = {k: p for (a, k), p in nxt.items()}
            if level > len(self.names) + 2:
                raise ValidationError("base is not nilpotent")
        return span

    # arithmetic on coefficient dicts {name: Fraction}
    def degree(self, n):
        return self._deg[n]

    def mul_gen(self, a, b):
        return dict(self._mul.get((a, b), {}))

    def mul(self, p, q):
        out = {}
        for a, ca in p.items():
            for b, cb in q.items():
                for k, v in self._mul.get((a, b), {}).items():
                    x = out.get(k, ZERO) + ca * cb * v
                    if x:
                        out[k] = x
                    else:
                        out.pop(k, None)
        return out

    def d(self, p):
        out = {}
        for a, ca in p.items():
            for k, v in self._diff.get(a, {}).items():
                x = out.get(k, ZERO) + ca * v
                if x:
                    out[k] = x
                else:
                    out.pop(k, None)
        return out

    def differential_of(self, n):
        return dict(self._diff.get(n, {}))

    def product_table(self):
        return {k: dict(v) for k, v in self._mul.items()}

    def is_infinitesimal(self):
        return not self._mul

    def level(self, n):
        return self.levels[n]


def _dict_add(p, q, c=ONE):
    out = dict(p)
    for k, v in q.items():
        x = out.get(k, ZERO) + c * v
        if x:
            out[k] = x
        else:
            out.pop(k, None)
    return out


def power_series_base(order: int, var: str = "t", degree: int = 0) -> NilpotentBase:
    """Q[t]/t^order with |t| = degree (even), as a non-unital base."""
    names = [(f"{var}" + ("" if k == 1 else f"^{k}"), k * degree)
             for k in range(1, order)]
    prods = {}
    for i in range(1, order):
        for j in range(1, order):
            if i + j < order:
                prods[(names[i - 1][0], names[j - 1][0])] = {names[i + j - 1][0]: 1}
    return NilpotentBase(names, prods, name=f"Q[{var}]/{var}^{order}")


# -- the base-extended algebra A ⊗ SΣ¯¹I* -------------------------------------

class BaseTensor:
    """The unital extension of a representing algebra by a nilpotent base.

    Elements are dicts (a, mono) -> Fraction, where a = None is the unit of
    the base and mono a canonical monomial of the generator algebra.
    """

    def __init__(self, base: NilpotentBase, algebra: FreeCommAlgebra):
        self.base = base
        self.algebra = algebra

    def ring_degree(self, a):
        return 0 if a is None else self.base.degree(a)

    def ring_level(self, a):
        return 0 if a is None else self.base.level(a)

    def ring_mul(self, a, b):
        if a is None:
            return {b: ONE}
        if b is None:
            return {a: ONE}
        return self.base.mul_gen(a, b)

    def degree(self, e):
        degs = {self.ring_degree(a) + self.algebra.mono_degree(m) for (a, m) in e}
        if not degs:
            return None
        if len(degs) > 1:
            raise LinftyError("inhomogeneous base-tensor element")
        return degs.pop()

    def add(self, e1, e2, c=ONE):
        out = dict(e1)
        for k, v in e2.items():
            x = out.get(k, ZERO) + c * v
            if x:
                out[k] = x
            else:
                out.pop(k, None)
        return out

    def mul(self, e1, e2):
        out = {}
        for (a1, m1), c1 in e1.items():
            p1 = self.algebra.mono_degree(m1)
            for (a2, m2), c2 in e2.items():
                cross = -1 if (p1 % 2) and (self.ring_degree(a2) % 2) else 1
                r = self.algebra.mono_mul(m1, m2)
                if r is None:
                    continue
                mono, s = r
                for a, av in self.ring_mul(a1, a2).items():
                    key = (a, mono)
                    x = out.get(key, ZERO) + cross * s * c1 * c2 * av
                    if x:
                        out[key] = x
                    else:
                        out.pop(key, None)
        return out

    def ring_diff(self, e):
        out = {}
        for (a, m), c in e.items():
            if a is None:
                continue
            for b, v in self.base.differential_of(a).items():
                key = (b, m)
                x = out.get(key, ZERO) + c * v
                if x:
                    out[key] = x
                else:
                    out.pop(key, None)
        return out

    def from_poly(self, p, a=None):
        return {(a, m): c for m, c in p.items()}

    def min_level(self, e):
        return min((self.ring_level(a) for (a, _) in e), default=None)

    def level_part(self, e, k):
        return {key: c for key, c in e.items() if self.ring_level(key[0]) == k}


class TensorDerivation:
    """A base-linear derivation of A ⊗ SΣ¯¹I*, stored on generators."""

    def __init__(self, carrier: BaseTensor, degree: int, values: dict):
        self.carrier = carrier
        self.degree = degree
        self.values = {}
        for g, e in values.items():
            if isinstance(g, str):
                g = carrier.algebra.index(g)
            if e:
                self.values[g] = dict(e)

    def is_zero(self):
        return all(not e for e in self.values.values())

    def __eq__(self, other):
        if not isinstance(other, TensorDerivation):
            return NotImplemented
        gens = set(self.values) | set(other.values)
        return all(self.values.get(g, {}) == other.values.get(g, {}) for g in gens)

    def add(self, other, c=ONE):
        vals = dict(self.values)
        out = TensorDerivation(self.carrier, self.degree, vals)
        for g, e in other.values.items():
            out.values[g] = self.carrier.add(out.values.get(g, {}), e, c)
            if not out.values[g]:
                del out.values[g]
        return out

    def scale(self, c):
        return TensorDerivation(
            self.carrier, self.degree,
            {g: {k: frac(c) * v for k, v in e.items()} for g, e in self.values.items()},
        )

    def apply(self, e):
        car = self.carrier
        alg = car.algebra
        out = {}
        dpar = self.degree % 2
        for (a, mono), coeff in e.items():
            across = -1 if dpar and (car.ring_degree(a) % 2) else 1
            prefix_par = 0
            for i, g in enumerate(mono):
                val = self.values.get(g)
                if val:
                    sign = across * (-1 if dpar and prefix_par % 2 else 1)
                    pre, suf = mono[:i], mono[i + 1:]
                    for (av, vm), vc in val.items():
                        r = alg.mono_mul(pre, vm)
                        if r is None:
                            continue
                        m1, s1 = r
                        r = alg.mono_mul(m1, suf)
                        if r is None:
                            continue
                        m2, s2 = r
                        # the value's base part moves left past the prefix
                        pcross = -1 if (car.ring_degree(av) % 2) and \
                            (alg.mono_degree(pre) % 2) else 1
                        for ar, arv in car.ring_mul(a, av).items():
                            key = (ar, m2)
                            c = coeff * vc * sign * s1 * s2 * pcross * arv
                            x = out.get(key, ZERO) + c
                            if x:
                                out[key] = x
                            else:
                                out.pop(key, None)
                prefix_par += alg.parity[g]
        return out

    def commutator(self, other):
        sign = -1 if (self.degree % 2) and (other.degree % 2) else 1
        vals = {}
        for g in range(len(self.carrier.algebra.gen_names)):
            a = self.apply(other.values.get(g, {}))
            b = other.apply(self.values.get(g, {}))
            v = self.carrier.add(a, b, -sign)
            if v:
                vals[g] = v
        return TensorDerivation(self.carrier, self.degree + other.degree, vals)

    def min_level(self):
        lv = [self.carrier.min_level(e) for e in self.values.values() if e]
        return min(lv) if lv else None

    def exp_automorphism_images(self):
        """Generator images of e^self (degree 0, base-level >= 1 values)."""
        if self.degree != 0:
            raise LinftyError("gauge exponentials need degree-0 derivations")
        car = self.carrier
        images = {}
        for g in range(len(car.algebra.gen_names)):
            x = {(None, (g,)): ONE}
            acc = dict(x)
            term = x
            k = 0
            while True:
                term = self.apply(term)
                k += 1
                if not term:
                    break
                if k > 40:
                    raise LinftyError("gauge exponential did not terminate")
                acc = car.add(acc, term, Fraction(1, math.factorial(k)))
            images[g] = acc
        return images


def lift_structure(carrier: BaseTensor, m: Derivation) -> TensorDerivation:
    """The structure derivation of I extended base-linearly."""
    return TensorDerivation(
        carrier, 1, {g: carrier.from_poly(p) for g, p in m.values.items()}
    )


def square_residual(carrier: BaseTensor, total: TensorDerivation):
    """Per-generator residual of (d_A + total)² = d_A∘total + total∘d_A + total².

    The base differential contributes its application to the values; the
    base itself is closed under d_A and squares to zero there.
    """
    out = {}
    for g in range(len(carrier.algebra.gen_names)):
        x = {(None, (g,)): ONE}
        r = total.apply(total.apply(x))
        r = carrier.add(r, carrier.ring_diff(total.apply(x)))
        if r:
            out[g] = r
    return out


# -- coefficient complexes ----------------------------------------------------

@dataclass
class CoefficientComplex:
    """The structure on (base ⊗ SΣ¯¹V*) ⊗ U, with its pair bookkeeping."""

    structure: LInftyStructure
    pairs: list                 # (base label or None=unit, U basis index)
    base_labels: list
    source: LInftyStructure     # V
    target: LInftyStructure     # U

    def pair_name(self, i):
        return self.structure.space.names[i]

    def index_of(self, base_label, u_index):
        return self.pairs.index((base_label, u_index))


def _poly_base_ring(source: LInftyStructure, include_unit: bool = True):
    """The truncated representing algebra of V, packaged as a nilpotent base."""
    alg = source.algebra
    labels = []
    degs = []
    monos = []
    for w in range(1, alg.weight_cap + 1):
        for m in alg.monomials_of_weight(w):
            labels.append(alg.mono_str(m))
            degs.append(alg.mono_degree(m))
            monos.append(m)
    index = {m: i for i, m in enumerate(monos)}
    products = {}
    for i, mi in enumerate(monos):
        for j, mj in enumerate(monos):
            r = alg.mono_mul(mi, mj)
            if r is None:
                continue
            mono, s = r
            products[(labels[i], labels[j])] = {labels[index[mono]]: s}
    diff = {}
    for i, mi in enumerate(monos):
        img = source.m.apply({mi: ONE})
        if img:
            diff[labels[i]] = {labels[index[m]]: c for m, c in img.items()}
    base = NilpotentBase(list(zip(labels, degs)), products, diff,
                         name="S(V)" + ("" if include_unit else "+"))
    return base, monos, labels


def coefficient_complex(source: LInftyStructure, target: LInftyStructure,
                        include_unit: bool = True, weight_cap: int | None = None,
                        check: bool = True) -> CoefficientComplex:
    """The untwisted structure on SΣ¯¹V* ⊗ U (weight-truncated in V).

    The structure derivation is obtained by substituting, in the structure
    of U, each generator x_u by the sum of pair generators weighted by the
    base monomials, and adding the base differential term; this realizes the
    A-points functor of the tensor, so Maurer-Cartan points of the result
    are exactly morphism data V -> U.
    """
    base, monos, labels = _poly_base_ring(source, include_unit)
    return _tensor_structure(base, target, source_struct=source,
                             include_unit=include_unit,
                             weight_cap=weight_cap, check=check)


def base_tensor_structure(base: NilpotentBase, target: LInftyStructure,
                          weight_cap: int | None = None,
                          check: bool = True) -> CoefficientComplex:
    """The structure on (A ⊗ ΣU)-type tensors for a finite nilpotent base."""
    return _tensor_structure(base, target, source_struct=None,
                             include_unit=True, weight_cap=weight_cap, check=check)


def _tensor_structure(base, target, source_struct, include_unit, weight_cap, check):
    ualg = target.algebra
    base_items = [None] if include_unit else []
    base_items += list(base.names)
    pairs = []
    names = []
    degs_hom = []
    for bl in base_items:
        bdeg = 0 if bl is None else base.degree(bl)
        for ui, un in enumerate(target.names):
            pairs.append((bl, ui))
            names.append(f"{bl or '1'}⊗{un}" if bl is not None or True else un)
            # hom degree of (P ⊗ u) in the tensor structure
            degs_hom.append(target.hom_degrees()[ui] - bdeg)
    space = GradedSpace(tuple(zip(names, degs_hom)), HOMOLOGICAL)
    cap = weight_cap or max(2, target.weight_cap)
    alg_y = representing_algebra(space, cap)
    pair_index = {p: i for i, p in enumerate(pairs)}

    carrier = BaseTensor(base, alg_y)
    # E(x_u) = sum over base items of t_(P,u) ⊗ P
    subst = {}
    for ui in range(len(target.names)):
        e = {}
        for bl in base_items:
            i = pair_index[(bl, ui)]
            e[(bl, (i,))] = ONE
        subst[ui] = e

    def eval_u_poly(p):
        out = {}
        for mono, coeff in p.items():
            term = {(None, ()): ONE}
            for g in mono:
                term = carrier.mul(term, subst[g])
            for k, v in term.items():
                x = out.get(k, ZERO) + coeff * v
                if x:
                    out[k] = x
                else:
                    out.pop(k, None)
        return out

    values = {}
    for ui, p in target.m.values.items():
        img = eval_u_poly(p)
        for (bl, mono), c in img.items():
            tgt = pair_index[(bl, ui)]
            cur = values.setdefault(tgt, {})
            cur[mono] = cur.get(mono, ZERO) + c
    # base-differential part: t_(P,u) appears in m(t_(Q,u)) for Q in d_B(P)
    for bl in base_items:
        if bl is None:
            continue
        for tgt_label, c in base.differential_of(bl).items():
            for ui in range(len(target.names)):
                src = pair_index[(bl, ui)]
                tgt = pair_index[(tgt_label, ui)]
                cur = values.setdefault(tgt, {})
                key = (src,)
                cur[key] = cur.get(key, ZERO) + c
    values = {g: {m: c for m, c in p.items() if c} for g, p in values.items()}
    values = {g: p for g, p in values.items() if p}
    m_y = Derivation(alg_y, 1, values, constant_term_allowed=False)
    st = LInftyStructure(space, m_y, check=check)
    return CoefficientComplex(st, pairs, base_items, source_struct, target)


def identity_point(cc: CoefficientComplex) -> dict:
    """The identity-morphism MC point of the coefficient complex of (V, V).

    Coordinates sit on pair generators (x_u-monomial, u); the coefficient 1
    on each makes the twisted linear part the CE differential [m, -] (the
    L^id ≅ C_CE identification), which the tests pin matrix by matrix.
    """
    if cc.source is None or cc.source is not cc.target:
        raise LinftyError("identity point needs the coefficient complex of (V, V)")
    alg = cc.source.algebra
    point = {}
    for i, (bl, ui) in enumerate(cc.pairs):
        if bl == alg.mono_str((ui,)):
            point[i] = ONE
    return point


# -- cohomology of a structure's linear part ----------------------------------

@dataclass
class TangentCohomology:
    dims: dict
    representatives: dict    # hom degree -> list of vectors over the basis


def tangent_table(structure: LInftyStructure) -> TangentCohomology:
    degs = structure.hom_degrees()
    if not degs:
        return TangentCohomology({}, {})
    entries = structure.m1_entries()
    n = structure.dim
    full = RationalMatrix(n, n)
    for (b, a), c in entries.items():
        full[b, a] = c
    dims, reps = {}, {}
    for d in range(min(degs), max(degs) + 1):
        idx = [i for i, x in enumerate(degs) if x == d]
        tgt = [i for i, x in enumerate(degs) if x == d - 1]
        src_up = [i for i, x in enumerate(degs) if x == d + 1]
        mat_out = RationalMatrix(len(tgt), len(idx),
                                 [[full[i, j] for j in idx] for i in tgt])
        mat_in = RationalMatrix(len(idx), len(src_up),
                                [[full[i, j] for j in src_up] for i in idx])
        _, kernel = rank_kernel(mat_out)
        image = [mat_in.column(j) for j in range(mat_in.cols)]
        rep = reduce_mod_span(kernel, image)
        lifted = []
        for v in rep:
            w = [ZERO] * n
            for pos, c in zip(idx, v):
                w[pos] = c
            lifted.append(w)
        dims[d] = len(rep)
        if lifted:
            reps[d] = lifted
    return TangentCohomology(dims, reps)


def binary_product(structure: LInftyStructure, v1, v2):
    """mu_2 of the structure evaluated on two coordinate vectors over ΣV.

    Tables carry one entry per sorted pair; the (b, a) contribution enters
    with the Koszul sign of the swap.
    """
    tables = suspended_tables_from_structure(structure)
    names = list(structure.space.names)
    idx = {n: i for i, n in enumerate(names)}
    par = structure.algebra.parity
    out = [ZERO] * structure.dim
    for ins, outs in tables.items():
        if len(ins) != 2:
            continue
        a, b = idx[ins[0]], idx[ins[1]]
        coeff = v1[a] * v2[b]
        if a != b:
            s = -1 if par[a] and par[b] else 1
            coeff += s * v1[b] * v2[a]
        if coeff:
            for on, oc in outs.items():
                out[idx[on]] += oc * coeff
    return out


# -- the classical cup bracket -------------------------------------------------

def cup_bracket(brackets, dim, g, h):
    """The symmetrized cup bracket of two multilinear cochains.

    ``brackets``: (i, j) -> coefficient list for [v_i, v_j] of an ungraded
    Lie algebra on basis v_0..v_{dim-1}; g and h map sorted index tuples to
    coefficient vectors and vanish off their arity.  Returns the cochain

        [g ∪ h](v_1,...,v_{n+m}) = Σ_σ 1/(n+m)! (-1)^σ [g(v_σ..), h(v_σ..)]
    """
    n = _arity(g)
    m = _arity(h)
    if n is None or m is None:
        return {}
    total = n + m
    fact = Fraction(1, math.factorial(total))
    out = {}
    for combo in _sorted_tuples(dim, total):
        acc = [ZERO] * dim
        for pi in permutations(range(total)):
            sign = _perm_sign(pi)
            left = tuple(combo[pi[i]] for i in range(n))
            right = tuple(combo[pi[i]] for i in range(n, total))
            gv = _eval_cochain(g, left, dim)
            if not any(gv):
                continue
            hv = _eval_cochain(h, right, dim)
            if not any(hv):
                continue
            for i, ci in enumerate(gv):
                if not ci:
                    continue
                for j, cj in enumerate(hv):
                    if not cj:
                        continue
                    br = brackets.get((i, j))
                    if br:
                        for k, bk in enumerate(br):
                            acc[k] += sign * ci * cj * bk
        acc = [fact * x for x in acc]
        if any(acc):
            out[combo] = acc
    return out


def _arity(g):
    arities = {len(k) for k in g}
    if not arities:
        return None
    if len(arities) > 1:
        raise AritySupport("cochain has mixed arities")
    return arities.pop()


def _sorted_tuples(dim, k):
    from itertools import combinations
    return list(combinations(range(dim), k))


def _perm_sign(pi):
    sign = 1
    for i in range(len(pi)):
        for j in range(i + 1, len(pi)):
            if pi[i] > pi[j]:
                sign = -sign
    return sign


def _eval_cochain(g, args, dim):
    """Evaluate an antisymmetric cochain on an arbitrary index tuple."""
    if len(set(args)) != len(args):
        return [ZERO] * dim
    order = sorted(range(len(args)), key=lambda i: args[i])
    key = tuple(sorted(args))
    vec = g.get(key)
    if vec is None:
        return [ZERO] * dim
    sign = _perm_sign(tuple(order))
    return [sign * c for c in vec]


def lie_bracket_table(structure: LInftyStructure):
    """(i, j) -> coefficient list of [v_i, v_j] for an ungraded Lie structure."""
    if any(d != 0 for d in structure.hom_degrees()):
        raise AritySupport("cup bracket fast path needs an ungraded Lie algebra")
    tables = suspended_tables_from_structure(structure)
    names = list(structure.space.names)
    n = len(names)
    out = {}
    for ins, outs in tables.items():
        if len(ins) != 2:
            raise AritySupport("not a plain Lie algebra")
        i, j = names.index(ins[0]), names.index(ins[1])
        vec = [ZERO] * n
        for on, oc in outs.items():
            vec[names.index(on)] = oc
        out[(i, j)] = vec
        out[(j, i)] = [-c for c in vec]
    return out
