"""Constant symplectic structures, exterior forms, and the geometry interface.

The standard structure on T^2m is the block form omega(e_i, e_{m+i}) = 1.
Its exact inverse Lambda pins every downstream sign: the Poisson bracket is
{F,G} = Lambda^{ij} dF_i dG_j = -omega(X_F, X_G) with i(X_F)omega = dF, which
the tests assert explicitly.
"""
from __future__ import annotations

from fractions import Fraction
from math import factorial

from .epsjet import invert_field_matrix


class SymplecticStructure:
    """Constant antisymmetric omega on R^{2m} with exact inverse Lambda."""

    def __init__(self, omega):
        n = len(omega)
        if n % 2:
            raise ValueError("symplectic dimension must be even")
        self.dim = n
        self.m = n // 2
        self.omega = tuple(tuple(Fraction(x) for x in row) for row in omega)
        for i in range(n):
            for j in range(n):
                if self.omega[i][j] != -self.omega[j][i]:
                    raise ValueError("omega must be antisymmetric")
        self.lam = tuple(tuple(row) for row in
                         invert_field_matrix([list(r) for r in self.omega]))

    @classmethod
    def standard(cls, m: int) -> "SymplecticStructure":
        n = 2 * m
        om = [[Fraction(0)] * n for _ in range(n)]
        for i in range(m):
            om[i][m + i] = Fraction(1)
            om[m + i][i] = Fraction(-1)
        return cls(om)

    def liouville_coefficient(self) -> Fraction:
        """Top coefficient of omega^m/m! relative to dx^0 ^ ... ^ dx^{2m-1}."""
        form = FormPoly.from_matrix(self.dim, self.omega)
        top = form.power(self.m).scale(Fraction(1, factorial(self.m)))
        return top.terms.get(tuple(range(self.dim)), Fraction(0))

    def __eq__(self, other):
        return isinstance(other, SymplecticStructure) and self.omega == other.omega

    def __hash__(self):
        return hash(self.omega)

    def __repr__(self):
        return f"SymplecticStructure(dim={self.dim})"


def merge_wedge(f1, f2):
    """Merge two strictly increasing index tuples; None on a repeated index,
    else (merged tuple, sign of the shuffle)."""
    if not f1:
        return f2, 1
    if not f2:
        return f1, 1
    out = []
    sign = 1
    i = j = 0
    while i < len(f1) and j < len(f2):
        a, b = f1[i], f2[j]
        if a == b:
            return None, 0
        if a < b:
            out.append(a)
            i += 1
        else:
            out.append(b)
            j += 1
            if (len(f1) - i) % 2:
                sign = -sign
    out.extend(f1[i:])
    out.extend(f2[j:])
    return tuple(out), sign


def insert_front(k, form):
    """dx^k wedged on the left of the sorted tuple `form`: (tuple, sign) or None."""
    if k in form:
        return None, 0
    pos = sum(1 for a in form if a < k)
    return tuple(sorted(form + (k,))), (-1) ** pos


def interior(k, form):
    """i(d/dx^k) on the sorted tuple: (tuple, sign) or None if k absent."""
    if k not in form:
        return None, 0
    t = form.index(k)
    return form[:t] + form[t + 1:], (-1) ** t


class FormPoly:
    """Exterior form with ring-element coefficients, keyed by sorted index tuples."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms=None):
        self.dim = dim
        clean = {}
        if terms:
            for k, c in terms.items():
                if not _zero(c):
                    clean[tuple(k)] = c
        self.terms = clean

    @classmethod
    def from_matrix(cls, dim: int, mat) -> "FormPoly":
        """(1/2) * M_ij dx^i ^ dx^j for an antisymmetric matrix M."""
        terms = {}
        for i in range(dim):
            for j in range(i + 1, dim):
                c = mat[i][j]
                if not _zero(c):
                    terms[(i, j)] = c
        return cls(dim, terms)

    def __add__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k)
            out[k] = c if s is None else s + c
        return FormPoly(self.dim, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "FormPoly":
        return FormPoly(self.dim, {k: v * c for k, v in self.terms.items()})

    def wedge(self, other: "FormPoly") -> "FormPoly":
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k, s = merge_wedge(k1, k2)
                if k is None:
                    continue
                v = c1 * c2 if s == 1 else -(c1 * c2)
                acc = out.get(k)
                out[k] = v if acc is None else acc + v
        return FormPoly(self.dim, out)

    def power(self, p: int) -> "FormPoly":
        if p == 0:
            raise ValueError("use scalars for the 0-th power")
        out = self
        for _ in range(p - 1):
            out = out.wedge(self)
        return out

    def d(self, ring) -> "FormPoly":
        out = FormPoly(self.dim)
        acc = {}
        for k, c in self.terms.items():
            for j in range(self.dim):
                dc = ring.derive(c, j)
                if _zero(dc):
                    continue
                kk, s = insert_front(j, k)
                if kk is None:
                    continue
                v = dc if s == 1 else -dc
                prev = acc.get(kk)
                acc[kk] = v if prev is None else prev + v
        out.terms = {k: v for k, v in acc.items() if not _zero(v)}
        return out

    def top_coefficient(self):
        return self.terms.get(tuple(range(self.dim)))

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return (isinstance(other, FormPoly) and self.dim == other.dim
                and self.terms == other.terms)

    def __repr__(self):
        return f"FormPoly({self.terms!r})"


def _zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return not c


class Geometry:
    """A coefficient ring together with omega / Lambda matrices of ring entries.

    The constant torus case also keeps the exact SymplecticStructure so the
    Weyl-algebra layer can use Fraction-valued Lambda directly.
    """

    def __init__(self, ring, omega_mat, lam_mat, struct: SymplecticStructure | None = None):
        self.ring = ring
        self.dim = len(omega_mat)
        self.omega_mat = omega_mat
        self.lam_mat = lam_mat
        self.struct = struct

    @classmethod
    def constant(cls, struct: SymplecticStructure, ring) -> "Geometry":
        om = [[ring.const(struct.omega[i][j]) for j in range(struct.dim)]
              for i in range(struct.dim)]
        lm = [[ring.const(struct.lam[i][j]) for j in range(struct.dim)]
              for i in range(struct.dim)]
        return cls(ring, om, lm, struct)

    def omega(self, i: int, j: int):
        return self.omega_mat[i][j]

    def lam(self, i: int, j: int):
        return self.lam_mat[i][j]
