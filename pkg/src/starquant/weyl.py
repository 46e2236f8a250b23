"""Formal Weyl algebra sections tensored with exterior forms.

Terms are stored sparsely, keyed by (y-exponent vector, strictly increasing
form index tuple, nu exponent) with base-ring coefficients.  The W-degree of
a term is (number of y factors) + 2*(nu exponent); the fiberwise Moyal
product is W-graded, so truncating at a fixed max W-degree is an exact
quotient and associativity survives truncation on the nose.

The fiberwise product follows

    a o b = sum_r (nu/2)^r / r!  Lam^{i1 j1} ... Lam^{ir jr}
            (d^r a / dy^{i..}) (d^r b / dy^{j..}),

with (a (x) alpha) o (b (x) beta) = (a o b) (x) (alpha ^ beta) and the graded
commutator [s, s'] = s o s' - (-1)^{q1 q2} s' o s on antisymmetric degrees.
"""
from __future__ import annotations

from fractions import Fraction
from math import factorial

from .nuseries import NuSeries
from .symplectic import SymplecticStructure, insert_front, interior, merge_wedge
from .trigpoly import TrigPoly


class WeylError(ValueError):
    pass


def _lam_nonzeros(struct: SymplecticStructure):
    out = []
    for i in range(struct.dim):
        for j in range(struct.dim):
            if struct.lam[i][j]:
                out.append((i, j, struct.lam[i][j]))
    return tuple(out)


class WeylFormSection:
    __slots__ = ("struct", "ring", "max_wdegree", "terms")

    def __init__(self, struct, ring, max_wdegree, terms=None):
        self.struct = struct
        self.ring = ring
        self.max_wdegree = max_wdegree
        clean = {}
        if terms:
            for (y, f, n), c in terms.items():
                if n < 0:
                    raise WeylError("negative nu exponent in Weyl section")
                if sum(y) + 2 * n > max_wdegree:
                    continue
                if _zero(c):
                    continue
                clean[(tuple(y), tuple(f), n)] = c
        self.terms = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, struct, ring, max_wdegree):
        return cls(struct, ring, max_wdegree)

    @classmethod
    def from_scalar(cls, struct, ring, max_wdegree, F):
        zero_y = (0,) * struct.dim
        return cls(struct, ring, max_wdegree, {(zero_y, (), 0): F})

    @classmethod
    def monomial(cls, struct, ring, max_wdegree, y_exps, form=(), nu=0, coeff=None):
        y = [0] * struct.dim
        for i in y_exps:
            y[i] += 1
        c = ring.one() if coeff is None else coeff
        return cls(struct, ring, max_wdegree, {(tuple(y), tuple(form), nu): c})

    def _compat(self, other: "WeylFormSection"):
        if self.struct != other.struct or self.max_wdegree != other.max_wdegree:
            raise WeylError("structure mismatch between Weyl sections")

    def _make(self, terms):
        return WeylFormSection(self.struct, self.ring, self.max_wdegree, terms)

    # -- linear structure -------------------------------------------------

    def __add__(self, other):
        self._compat(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k)
            out[k] = c if s is None else s + c
        return self._make(out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self._make({k: -c for k, c in self.terms.items()})

    def scale(self, q):
        return self._make({k: c * q for k, c in self.terms.items()})

    # -- the fiberwise Moyal product ---------------------------------------

    def _omul_cb(self, other, pair_sign):
        """Core product; pair_sign(q1, q2) multiplies each term pair."""
        self._compat(other)
        D = self.max_wdegree
        lam_nz = _lam_nonzeros(self.struct)
        acc: dict = {}
        for (y1, f1, n1), c1 in self.terms.items():
            w1 = sum(y1) + 2 * n1
            for (y2, f2, n2), c2 in other.terms.items():
                if w1 + sum(y2) + 2 * n2 > D:
                    continue
                fm, fsign = merge_wedge(f1, f2)
                if fm is None:
                    continue
                ps = pair_sign(len(f1), len(f2))
                if ps == 0:
                    continue
                base = c1 * c2
                if _zero(base):
                    continue
                sgn = Fraction(fsign * ps)
                r = 0
                state = {(y1, y2): Fraction(1)}
                while state:
                    pref = sgn / (2 ** r * factorial(r))
                    nu_out = n1 + n2 + r
                    for (a, b), coef in state.items():
                        yout = tuple(x + y for x, y in zip(a, b))
                        key = (yout, fm, nu_out)
                        contrib = base * (coef * pref)
                        prev = acc.get(key)
                        acc[key] = contrib if prev is None else prev + contrib
                    new: dict = {}
                    for (a, b), coef in state.items():
                        for (i, j, lam) in lam_nz:
                            if a[i] and b[j]:
                                c = coef * lam * a[i] * b[j]
                                na = a[:i] + (a[i] - 1,) + a[i + 1:]
                                nb = b[:j] + (b[j] - 1,) + b[j + 1:]
                                k2 = (na, nb)
                                prev = new.get(k2)
                                new[k2] = c if prev is None else prev + c
                    state = new
                    r += 1
        return self._make(acc)

    def omul(self, other):
        """Fiberwise product a o b."""
        return self._omul_cb(other, lambda q1, q2: 1)

    def commutator(self, other):
        """Graded commutator [a, b] = a o b - (-1)^{q1 q2} b o a."""
        first = self._omul_cb(other, lambda q1, q2: 1)
        second = other._omul_cb(self, lambda qb, qa: -((-1) ** (qa * qb)))
        return first + second

    # -- delta, delta^{-1}, exterior derivative -----------------------------

    def delta(self):
        """delta(a) = dx^k ^ d a/dy^k: lowers y-degree, raises form degree."""
        acc: dict = {}
        for (y, f, n), c in self.terms.items():
            for k in range(self.struct.dim):
                if not y[k]:
                    continue
                nf, s = insert_front(k, f)
                if nf is None:
                    continue
                ny = y[:k] + (y[k] - 1,) + y[k + 1:]
                contrib = c * Fraction(s * y[k])
                key = (ny, nf, n)
                prev = acc.get(key)
                acc[key] = contrib if prev is None else prev + contrib
        return self._make(acc)

    def delta_inv(self):
        """delta^{-1} a_{pq} = y^k i(d_k) a_{pq} / (p+q), zero on the (0,0) part."""
        acc: dict = {}
        for (y, f, n), c in self.terms.items():
            p, q = sum(y), len(f)
            if p + q == 0:
                continue
            for k in f:
                nf, s = interior(k, f)
                ny = y[:k] + (y[k] + 1,) + y[k + 1:]
                contrib = c * Fraction(s, p + q)
                key = (ny, nf, n)
                prev = acc.get(key)
                acc[key] = contrib if prev is None else prev + contrib
        return self._make(acc)

    def exterior_d(self):
        """d on coefficients: dx^j ^ (d_j c) term by term."""
        acc: dict = {}
        for (y, f, n), c in self.terms.items():
            for j in range(self.struct.dim):
                dc = self.ring.derive(c, j)
                if _zero(dc):
                    continue
                nf, s = insert_front(j, f)
                if nf is None:
                    continue
                contrib = dc if s == 1 else -dc
                key = (y, nf, n)
                prev = acc.get(key)
                acc[key] = contrib if prev is None else prev + contrib
        return self._make(acc)

    def nu_shift(self, k: int):
        """Multiply by nu^k; k < 0 demands every nu exponent stays >= 0."""
        out = {}
        for (y, f, n), c in self.terms.items():
            if n + k < 0:
                raise WeylError("nu_shift would create a negative nu power")
            out[(y, f, n + k)] = c
        return self._make(out)

    # -- structure queries ---------------------------------------------------

    def wcomponent(self, k: int):
        return self._make({key: c for key, c in self.terms.items()
                           if sum(key[0]) + 2 * key[2] == k})

    def wcomponents_upto(self, k: int):
        return self._make({key: c for key, c in self.terms.items()
                           if sum(key[0]) + 2 * key[2] <= k})

    def form_degree_part(self, q: int):
        return self._make({key: c for key, c in self.terms.items()
                           if len(key[1]) == q})

    def sigma(self, truncation: int) -> NuSeries:
        """Symbol map: the (y = 0, form = 0) part as a nu-series."""
        zero_y = (0,) * self.struct.dim
        coeffs = {n: c for (y, f, n), c in self.terms.items()
                  if y == zero_y and not f}
        return NuSeries(coeffs, truncation)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        # truncation caps are bookkeeping, not content: sections are equal
        # when their term dictionaries agree
        if not isinstance(other, WeylFormSection):
            return NotImplemented
        return self.struct == other.struct and self.terms == other.terms

    def max_wdeg_present(self) -> int:
        return max((sum(y) + 2 * n for (y, f, n) in self.terms), default=-1)

    def dump(self):
        """Deterministic sorted term list for golden tests."""
        rows = []
        for (y, f, n), c in self.terms.items():
            rows.append((y, f, n, repr(c)))
        rows.sort()
        return rows

    def __repr__(self):
        return f"WeylFormSection({len(self.terms)} terms, D={self.max_wdegree})"


def delta_via_commutator(a: WeylFormSection) -> WeylFormSection:
    """The commutator form -(1/nu)[omega_ij y^i dx^j, a] of the delta operator."""
    struct, ring = a.struct, a.ring
    terms = {}
    for i in range(struct.dim):
        for j in range(struct.dim):
            w = struct.omega[i][j]
            if not w:
                continue
            y = [0] * struct.dim
            y[i] = 1
            key = (tuple(y), (j,), 0)
            prev = terms.get(key)
            add = ring.const(w)
            terms[key] = add if prev is None else prev + add
    s = WeylFormSection(struct, ring, a.max_wdegree, terms)
    return -(s.commutator(a).nu_shift(-1))


def moyal_star_flat(struct: SymplecticStructure, F: TrigPoly, G: TrigPoly,
                    order: int) -> NuSeries:
    """Flat Moyal star product through nu^order; the oracle for the flat
    Fedosov product."""
    lam_nz = _lam_nonzeros(struct)
    pairs = [(F, G, Fraction(1))]
    coeffs = {}
    for r in range(order + 1):
        pref = Fraction(1, 2 ** r * factorial(r))
        total = TrigPoly.zero(F.dim)
        for (a, b, c) in pairs:
            total = total + (a * b) * c
        coeff = total * pref
        if coeff:
            coeffs[r] = coeff
        if r == order:
            break
        new = []
        for (a, b, c) in pairs:
            for (i, j, lam) in lam_nz:
                da = a.derive(i)
                if not da:
                    continue
                db = b.derive(j)
                if not db:
                    continue
                new.append((da, db, c * lam))
        pairs = new
        if not pairs:
            break
    return NuSeries(coeffs, order)


def poisson_bracket_flat(struct: SymplecticStructure, F: TrigPoly, G: TrigPoly) -> TrigPoly:
    """{F, G} = Lam^{ij} d_i F d_j G for the constant structure."""
    out = TrigPoly.zero(F.dim)
    for (i, j, lam) in _lam_nonzeros(struct):
        out = out + (F.derive(i) * G.derive(j)) * lam
    return out


def _zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return not c
