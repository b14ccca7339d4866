"""Weight-truncated free graded-commutative algebras and their derivations.

An algebra element is a dict mapping a canonical monomial (a sorted tuple of
generator indices) to a nonzero Fraction.  Odd generators square to zero;
reordering words into canonical form pays (-1)^{pq} per transposition of
adjacent factors of degrees p and q.

Completion is realized as truncation: any product whose weight would exceed
``weight_cap`` is dropped and the event is recorded on the algebra in
``truncation_hit``.  A result is exact whenever that flag stayed off.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations_with_replacement
import math
import os

from .errors import (
    AlgebraMismatch,
    DegreeMismatch,
    EnumerationGuard,
    LinftyError,
)
from .graded import GradedSpace, COHOMOLOGICAL
from .linalg import ZERO, ONE, frac


def max_dim_guard() -> int:
    return int(os.environ.get("LINFTY_MAX_DIM", "20000"))


class FreeCommAlgebra:
    """Free graded-commutative algebra on named generators, weight-truncated.

    Generator degrees are cohomological.
    """

    def __init__(self, generators: GradedSpace, weight_cap: int):
        if weight_cap < 1:
            raise ValueError("weight_cap must be >= 1")
        if generators.grading != COHOMOLOGICAL:
            generators = generators.converted(COHOMOLOGICAL)
        self.generators = generators
        self.gen_names = list(generators.names)
        self.gen_degrees = [generators.degree(n) for n in self.gen_names]
        self.parity = [d % 2 for d in self.gen_degrees]
        self.weight_cap = weight_cap
        self.truncation_hit = False
        self._mono_cache = {}

    # -- identity -----------------------------------------------------------
    def same_as(self, other: "FreeCommAlgebra") -> bool:
        return (
            isinstance(other, FreeCommAlgebra)
            and self.gen_names == other.gen_names
            and self.gen_degrees == other.gen_degrees
            and self.weight_cap == other.weight_cap
        )

    def index(self, name: str) -> int:
        return self.gen_names.index(name)

    def __repr__(self):
        gens = ", ".join(
            f"{n}:{d}" for n, d in zip(self.gen_names, self.gen_degrees)
        )
        return f"FreeCommAlgebra({gens}; cap={self.weight_cap})"

    # -- monomials ----------------------------------------------------------
    def mono_degree(self, mono) -> int:
        return sum(self.gen_degrees[g] for g in mono)

    def mono_valid(self, mono) -> bool:
        for a, b in zip(mono, mono[1:]):
            if a == b and self.parity[a]:
                return False
        return len(mono) <= self.weight_cap

    def mono_mul(self, a, b):
        """Merge two canonical monomials; returns (monomial, sign) or None.

        None means the product is zero (odd repeat) or got truncated, in
        which case ``truncation_hit`` is set.  Genuine zeros are detected
        first so the truncation flag only fires on dropped nonzero products.
        """
        out = []
        sign = 1
        i = j = 0
        while i < len(a) and j < len(b):
            if a[i] <= b[j]:
                out.append(a[i])
                i += 1
            else:
                if self.parity[b[j]]:
                    jumped = sum(self.parity[g] for g in a[i:])
                    if jumped % 2:
                        sign = -sign
                out.append(b[j])
                j += 1
        out.extend(a[i:])
        out.extend(b[j:])
        for x, y in zip(out, out[1:]):
            if x == y and self.parity[x]:
                return None
        if len(out) > self.weight_cap:
            self.truncation_hit = True
            return None
        return tuple(out), sign

    def mono_str(self, mono) -> str:
        if not mono:
            return "1"
        parts = []
        i = 0
        while i < len(mono):
            j = i
            while j < len(mono) and mono[j] == mono[i]:
                j += 1
            name = self.gen_names[mono[i]]
            parts.append(name if j - i == 1 else f"{name}^{j - i}")
            i = j
        return "".join(parts)

    # -- elements -----------------------------------------------------------
    def zero(self):
        return {}

    def unit(self):
        return {(): ONE}

    def gen(self, g):
        if isinstance(g, str):
            g = self.index(g)
        return {(g,): ONE}

    def add(self, p, q, c=ONE):
        out = dict(p)
        for m, v in q.items():
            w = out.get(m, ZERO) + c * v
            if w:
                out[m] = w
            else:
                out.pop(m, None)
        return out

    def scale(self, p, c):
        c = frac(c)
        if not c:
            return {}
        return {m: c * v for m, v in p.items()}

    def mul(self, p, q):
        out = {}
        for m1, c1 in p.items():
            for m2, c2 in q.items():
                r = self.mono_mul(m1, m2)
                if r is None:
                    continue
                m, s = r
                w = out.get(m, ZERO) + s * c1 * c2
                if w:
                    out[m] = w
                else:
                    out.pop(m, None)
        return out

    def poly_degree(self, p):
        """Degree of a homogeneous element, None for 0; raises if mixed."""
        degs = {self.mono_degree(m) for m in p}
        if not degs:
            return None
        if len(degs) > 1:
            raise DegreeMismatch(f"inhomogeneous element of degrees {sorted(degs)}")
        return degs.pop()

    def weight_part(self, p, w):
        return {m: c for m, c in p.items() if len(m) == w}

    def min_weight(self, p):
        return min((len(m) for m in p), default=None)

    def poly_str(self, p) -> str:
        if not p:
            return "0"
        parts = []
        for m in sorted(p):
            c = p[m]
            parts.append(f"{'+' if c > 0 else '-'} {abs(c)}·{self.mono_str(m)}")
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def poly_from_pairs(self, pairs):
        out = {}
        for mono, c in pairs:
            mono = tuple(mono)
            key, sign = self._canonicalize(mono)
            if key is None:
                continue
            w = out.get(key, ZERO) + sign * frac(c)
            if w:
                out[key] = w
            else:
                out.pop(key, None)
        return out

    def _canonicalize(self, mono):
        """Sort an arbitrary word into canonical order with its Koszul sign."""
        key = ()
        sign = 1
        for g in mono:
            r = self.mono_mul(key, (g,))
            if r is None:
                return None, 0
            key, s = r
            sign *= s
        return key, sign

    # -- enumeration --------------------------------------------------------
    def monomials_of_weight(self, w):
        """All canonical monomials of the given weight (cached)."""
        if w > self.weight_cap:
            return []
        if w not in self._mono_cache:
            guard = max_dim_guard()
            n = len(self.gen_names)
            if n and math.comb(n + w - 1, w) > 50 * guard:
                raise EnumerationGuard(
                    f"weight-{w} monomials on {n} generators exceed the guard"
                )
            out = []
            for combo in combinations_with_replacement(range(n), w):
                ok = True
                for a, b in zip(combo, combo[1:]):
                    if a == b and self.parity[a]:
                        ok = False
                        break
                if ok:
                    out.append(combo)
                if len(out) > guard:
                    raise EnumerationGuard(
                        f"more than LINFTY_MAX_DIM={guard} monomials of weight {w}"
                    )
            self._mono_cache[w] = out
        return self._mono_cache[w]

    def monomials_by_degree(self, degree, max_weight=None, min_weight=0):
        cap = self.weight_cap if max_weight is None else min(max_weight, self.weight_cap)
        out = []
        for w in range(min_weight, cap + 1):
            out.extend(
                m for m in self.monomials_of_weight(w) if self.mono_degree(m) == degree
            )
        return out


class Derivation:
    """A continuous derivation, stored by its values on generators.

    ``values`` maps generator index -> algebra element; unlisted generators
    map to zero.  ``degree`` is the cohomological degree of the derivation;
    every value must be homogeneous of degree deg(g) + degree.
    """

    def __init__(self, algebra: FreeCommAlgebra, degree: int, values: dict,
                 constant_term_allowed: bool = True, check: bool = True):
        self.algebra = algebra
        self.degree = degree
        self.values = {}
        for g, p in values.items():
            if isinstance(g, str):
                g = algebra.index(g)
            if p:
                self.values[g] = dict(p)
        self.constant_term_allowed = constant_term_allowed
        if check:
            self._validate()

    def _validate(self):
        alg = self.algebra
        for g, p in self.values.items():
            d = alg.poly_degree(p)
            if d is not None and d != alg.gen_degrees[g] + self.degree:
                raise DegreeMismatch(
                    f"value on {alg.gen_names[g]} has degree {d}, expected "
                    f"{alg.gen_degrees[g] + self.degree}"
                )
            if not self.constant_term_allowed and () in p:
                raise LinftyError(
                    f"constant term on {alg.gen_names[g]} in a vanishing-constant-term derivation"
                )

    # -- bookkeeping --------------------------------------------------------
    def _require_same(self, other: "Derivation"):
        if not self.algebra.same_as(other.algebra):
            raise AlgebraMismatch("derivations live on different algebras")

    def is_zero(self) -> bool:
        return all(not p for p in self.values.values())

    def __eq__(self, other):
        if not isinstance(other, Derivation):
            return NotImplemented
        if not self.algebra.same_as(other.algebra):
            return False
        if self.degree != other.degree and not (self.is_zero() and other.is_zero()):
            return False
        gens = set(self.values) | set(other.values)
        return all(self.values.get(g, {}) == other.values.get(g, {}) for g in gens)

    def value(self, g):
        if isinstance(g, str):
            g = self.algebra.index(g)
        return self.values.get(g, {})

    def has_constant_term(self) -> bool:
        return any(() in p for p in self.values.values())

    def constant_terms(self):
        return {g: p[()] for g, p in self.values.items() if () in p}

    def weight_component(self, n: int) -> "Derivation":
        """The part mapping generators to weight-n words (arity-n part)."""
        vals = {g: self.algebra.weight_part(p, n) for g, p in self.values.items()}
        return Derivation(self.algebra, self.degree, vals,
                          constant_term_allowed=True, check=False)

    def weights(self):
        out = set()
        for p in self.values.values():
            out.update(len(m) for m in p)
        return sorted(out)

    def min_weight(self):
        ws = self.weights()
        return ws[0] if ws else None

    # -- algebra ------------------------------------------------------------
    def add(self, other: "Derivation", c=ONE) -> "Derivation":
        self._require_same(other)
        if self.degree != other.degree and not (self.is_zero() or other.is_zero()):
            raise DegreeMismatch("cannot add derivations of different degrees")
        vals = dict(self.values)
        out = Derivation(self.algebra,
                         self.degree if not self.is_zero() else other.degree,
                         vals, check=False)
        for g, p in other.values.items():
            out.values[g] = self.algebra.add(out.values.get(g, {}), p, c)
            if not out.values[g]:
                del out.values[g]
        out.constant_term_allowed = self.constant_term_allowed or other.constant_term_allowed
        return out

    def scale(self, c) -> "Derivation":
        return Derivation(
            self.algebra, self.degree,
            {g: self.algebra.scale(p, c) for g, p in self.values.items()},
            constant_term_allowed=self.constant_term_allowed, check=False,
        )

    def apply(self, p: dict) -> dict:
        """Graded Leibniz extension applied to an algebra element."""
        alg = self.algebra
        out = {}
        dpar = self.degree % 2
        for mono, coeff in p.items():
            prefix_par = 0
            for i, g in enumerate(mono):
                val = self.values.get(g)
                if val:
                    sign = -1 if (dpar and prefix_par % 2) else 1
                    pre = mono[:i]
                    suf = mono[i + 1:]
                    for vm, vc in val.items():
                        r = alg.mono_mul(pre, vm)
                        if r is None:
                            continue
                        m1, s1 = r
                        r = alg.mono_mul(m1, suf)
                        if r is None:
                            continue
                        m2, s2 = r
                        c = coeff * vc * sign * s1 * s2
                        w = out.get(m2, ZERO) + c
                        if w:
                            out[m2] = w
                        else:
                            out.pop(m2, None)
                prefix_par += alg.parity[g]
        return out

    def commutator(self, other: "Derivation") -> "Derivation":
        """[self, other] = self∘other - (-1)^{|self||other|} other∘self."""
        self._require_same(other)
        alg = self.algebra
        sign = -1 if (self.degree % 2) and (other.degree % 2) else 1
        vals = {}
        for g in range(len(alg.gen_names)):
            a = self.apply(other.values.get(g, {}))
            b = other.apply(self.values.get(g, {}))
            v = alg.add(a, b, -sign)
            if v:
                vals[g] = v
        return Derivation(
            alg, self.degree + other.degree, vals,
            constant_term_allowed=self.constant_term_allowed or other.constant_term_allowed,
            check=False,
        )

    def compose_power_on(self, p: dict, k: int) -> dict:
        for _ in range(k):
            p = self.apply(p)
        return p

    def __repr__(self):
        alg = self.algebra
        parts = [
            f"{alg.gen_names[g]} ↦ {alg.poly_str(p)}"
            for g, p in sorted(self.values.items())
            if p
        ]
        return f"Derivation(deg {self.degree}; " + "; ".join(parts) + ")"


def zero_derivation(algebra: FreeCommAlgebra, degree: int = 1) -> Derivation:
    return Derivation(algebra, degree, {}, check=False)


def extend_derivation(algebra: FreeCommAlgebra, degree: int, values: dict,
                      constant_term_allowed: bool = True) -> Derivation:
    """Build a derivation from generator values (the graded Leibniz extension
    is implicit in Derivation.apply)."""
    return Derivation(algebra, degree, values, constant_term_allowed)


class AlgebraMap:
    """A degree-0 algebra morphism given by generator images.

    Images live in ``target`` and must match the source generator degrees,
    so monomials map to products of images taken in stored order (no extra
    Koszul signs appear for an even map).
    """

    def __init__(self, source: FreeCommAlgebra, target: FreeCommAlgebra,
                 images: dict, check: bool = True):
        self.source = source
        self.target = target
        self.images = {}
        for g, p in images.items():
            if isinstance(g, str):
                g = source.index(g)
            self.images[g] = dict(p)
        if check:
            for g, p in self.images.items():
                d = target.poly_degree(p)
                if d is not None and d != source.gen_degrees[g]:
                    raise DegreeMismatch(
                        f"image of {source.gen_names[g]} has degree {d}, "
                        f"expected {source.gen_degrees[g]}"
                    )

    def apply(self, p: dict) -> dict:
        out = {}
        for mono, coeff in p.items():
            term = {(): ONE}
            for g in mono:
                img = self.images.get(g)
                if img is None:
                    img = self.target.gen(self.source.gen_names[g])
                term = self.target.mul(term, img)
                if not term:
                    break
            for m, c in term.items():
                w = out.get(m, ZERO) + coeff * c
                if w:
                    out[m] = w
                else:
                    out.pop(m, None)
        return out

    def conjugate(self, d: Derivation, inverse: "AlgebraMap") -> Derivation:
        """self ∘ d ∘ inverse, assembled on generators."""
        vals = {}
        for g in range(len(self.source.gen_names)):
            pre = inverse.apply(self.source.gen(g))
            v = self.apply(d.apply(pre))
            if v:
                vals[g] = v
        return Derivation(self.target, d.degree, vals, check=False)


def translation_map(algebra: FreeCommAlgebra, point: dict, sign: int = 1) -> AlgebraMap:
    """x_g ↦ x_g + sign * point[g] * 1 for scalar coordinates ``point``."""
    images = {}
    for g, c in point.items():
        if isinstance(g, str):
            g = algebra.index(g)
        c = frac(c)
        if c and algebra.gen_degrees[g] != 0:
            raise DegreeMismatch(
                f"scalar coordinate on generator {algebra.gen_names[g]} of "
                f"nonzero degree {algebra.gen_degrees[g]}"
            )
        img = algebra.gen(g)
        if c:
            img = algebra.add(img, {(): frac(sign) * c})
        images[g] = img
    return AlgebraMap(algebra, algebra, images, check=False)


def evaluate_at_point(algebra: FreeCommAlgebra, p: dict, point: dict) -> Fraction:
    """Evaluate an element at a scalar point (nonzero only on degree-0 gens)."""
    coords = {}
    for g, c in point.items():
        if isinstance(g, str):
            g = algebra.index(g)
        coords[g] = frac(c)
    total = ZERO
    for mono, coeff in p.items():
        v = coeff
        for g in mono:
            v *= coords.get(g, ZERO)
            if not v:
                break
        total += v
    return total


_EXP_GUARD = 64


def exp_automorphism(d: Derivation) -> AlgebraMap:
    """e^d as an algebra automorphism, for a nilpotent degree-0 derivation.

    The series is evaluated on generators and must terminate within the
    truncation; otherwise a LinftyError is raised.
    """
    if d.degree != 0:
        raise DegreeMismatch("exponential needs a degree-0 derivation")
    alg = d.algebra
    images = {}
    for g in range(len(alg.gen_names)):
        acc = alg.gen(g)
        term = alg.gen(g)
        k = 0
        while True:
            term = d.apply(term)
            k += 1
            if not term:
                break
            if k > _EXP_GUARD:
                raise LinftyError("exp series did not terminate (derivation not nilpotent?)")
            acc = alg.add(acc, term, Fraction(1, math.factorial(k)))
        images[g] = acc
    return AlgebraMap(alg, alg, images, check=False)


def exp_ad(eta: Derivation, d: Derivation) -> Derivation:
    """exp(ad_eta)(d) = Σ ad_eta^k(d)/k!, for nilpotent ad_eta."""
    out = d
    term = d
    k = 0
    while True:
        term = eta.commutator(term)
        k += 1
        if term.is_zero():
            break
        if k > _EXP_GUARD:
            raise LinftyError("exp(ad) series did not terminate")
        out = out.add(term, Fraction(1, math.factorial(k)))
    return out


def log_automorphism(phi: AlgebraMap) -> Derivation:
    """log of an automorphism that is the identity plus nilpotent part.

    Inverse of exp_automorphism on its image; the series log(1+N) is applied
    to generator images.
    """
    alg = phi.source
    # N(x) = phi(x) - x extended as (phi - id), iterated multiplicatively:
    # log(phi) = Σ (-1)^{k+1} (phi - id)^{∘k}/k on generators, where powers
    # are taken in the algebra-map sense.
    deltas = {}
    for g in range(len(alg.gen_names)):
        deltas[g] = alg.add(phi.apply(alg.gen(g)), alg.gen(g), -ONE)
    vals = {g: dict(p) for g, p in deltas.items() if p}
    # (phi - id)^{∘k}(x): apply phi - id repeatedly via its action on polys
    def phi_minus_id(p):
        return alg.add(phi.apply(p), p, -ONE)

    for g in range(len(alg.gen_names)):
        term = deltas[g]
        k = 1
        while term:
            k += 1
            term = phi_minus_id(term)
            if not term:
                break
            if k > _EXP_GUARD:
                raise LinftyError("log series did not terminate")
            c = Fraction((-1) ** (k + 1), k)
            vals[g] = alg.add(vals.get(g, {}), term, c)
            if not vals[g]:
                del vals[g]
    return Derivation(alg, 0, vals, check=False)
