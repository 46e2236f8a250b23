"""Truncated eps-jets of torus Fourier sums, for perturbative Kaehler metrics.

An EpsJet of order J is a tuple (a_0, ..., a_J) of TrigPoly coefficients of
eps^0..eps^J; all ring operations truncate at eps^J.  A jet is invertible iff
its eps^0 head is an invertible constant, and then the Neumann series
terminates exactly at order J.
"""
from __future__ import annotations

from fractions import Fraction

from .gaussrat import GaussianRational
from .trigpoly import TrigPoly

_SCALARS = (int, Fraction, GaussianRational)


class EpsJet:
    __slots__ = ("dim", "order", "coeffs")

    def __init__(self, dim: int, order: int, coeffs=None):
        self.dim = dim
        self.order = order
        if coeffs is None:
            coeffs = []
        coeffs = list(coeffs)[: order + 1]
        while len(coeffs) < order + 1:
            coeffs.append(TrigPoly.zero(dim))
        self.coeffs = tuple(coeffs)

    @classmethod
    def const(cls, dim: int, order: int, c) -> "EpsJet":
        return cls(dim, order, [TrigPoly.const(dim, c)])

    @classmethod
    def of_poly(cls, order: int, p: TrigPoly, eps_power: int = 0) -> "EpsJet":
        coeffs = [TrigPoly.zero(p.dim)] * eps_power + [p]
        return cls(p.dim, order, coeffs)

    def _check(self, other: "EpsJet"):
        if self.dim != other.dim or self.order != other.order:
            raise ValueError("jet dimension/order mismatch")

    def __add__(self, other):
        if isinstance(other, _SCALARS):
            other = EpsJet.const(self.dim, self.order, other)
        if isinstance(other, TrigPoly):
            other = EpsJet.of_poly(self.order, other)
        self._check(other)
        return EpsJet(self.dim, self.order,
                      [a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, _SCALARS):
            other = EpsJet.const(self.dim, self.order, other)
        if isinstance(other, TrigPoly):
            other = EpsJet.of_poly(self.order, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return EpsJet(self.dim, self.order, [-a for a in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, _SCALARS):
            return EpsJet(self.dim, self.order, [a * other for a in self.coeffs])
        if isinstance(other, TrigPoly):
            other = EpsJet.of_poly(self.order, other)
        self._check(other)
        out = [TrigPoly.zero(self.dim) for _ in range(self.order + 1)]
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j in range(self.order + 1 - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] = out[i + j] + a * b
        return EpsJet(self.dim, self.order, out)

    __rmul__ = __mul__

    def derive(self, j: int) -> "EpsJet":
        return EpsJet(self.dim, self.order, [a.derive(j) for a in self.coeffs])

    def conj(self) -> "EpsJet":
        return EpsJet(self.dim, self.order, [a.conj() for a in self.coeffs])

    def head(self) -> TrigPoly:
        return self.coeffs[0]

    def __bool__(self):
        return any(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, _SCALARS):
            other = EpsJet.const(self.dim, self.order, other)
        if not isinstance(other, EpsJet):
            return NotImplemented
        return (self.dim, self.order, self.coeffs) == (other.dim, other.order, other.coeffs)

    def __hash__(self):
        return hash((self.dim, self.order, self.coeffs))

    def is_real(self) -> bool:
        return all(a.is_real() for a in self.coeffs)

    def __repr__(self):
        bits = [f"eps^{i}*({a!r})" for i, a in enumerate(self.coeffs) if a]
        return "EpsJet(" + (" + ".join(bits) if bits else "0") + ")"


def jet_invert(a: EpsJet) -> EpsJet:
    """Multiplicative inverse, exact through eps^J.

    Requires the eps^0 term to be an invertible constant.
    """
    h = a.head()
    c = h.constant_coefficient()
    if not c or len(h.terms) > 1:
        raise ValueError("jet_invert needs an invertible constant leading term")
    inv0 = c.inv()
    b = [TrigPoly.const(a.dim, inv0)]
    for n in range(1, a.order + 1):
        acc = TrigPoly.zero(a.dim)
        for i in range(1, n + 1):
            if a.coeffs[i]:
                acc = acc + a.coeffs[i] * b[n - i]
        b.append(acc * (-inv0))
    return EpsJet(a.dim, a.order, b)


def jet_log1(a: EpsJet) -> EpsJet:
    """log(a) for a jet whose head is the constant 1: log(1+u) series, exact."""
    one = EpsJet.const(a.dim, a.order, 1)
    u = a - one
    if u.coeffs[0]:
        raise ValueError("jet_log1 needs head exactly 1")
    out = EpsJet.const(a.dim, a.order, 0)
    upow = one
    for n in range(1, a.order + 1):
        upow = upow * u
        out = out + upow * Fraction((-1) ** (n + 1), n)
    return out


# -- exact linear algebra over GaussianRational ---------------------------


def solve_field(mat, rhs):
    """Gauss-Jordan solve over any exact field (Fraction or GaussianRational)."""
    n = len(mat)
    a = [list(row) + list(r if isinstance(r, (list, tuple)) else [r])
         for row, r in zip(mat, rhs)]
    w = len(a[0])
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise ValueError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = _inv_scalar(a[col][col])
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    sol = [row[n:w] for row in a]
    if w == n + 1:
        return [row[0] for row in sol]
    return sol


def invert_field_matrix(mat):
    n = len(mat)
    eye = [[_like_one(mat[0][0]) if i == j else _like_zero(mat[0][0])
            for j in range(n)] for i in range(n)]
    return solve_field(mat, eye)


def _inv_scalar(x):
    if isinstance(x, GaussianRational):
        return x.inv()
    return Fraction(1) / Fraction(x)


def _like_one(x):
    return GaussianRational(1) if isinstance(x, GaussianRational) else Fraction(1)


def _like_zero(x):
    return GaussianRational(0) if isinstance(x, GaussianRational) else Fraction(0)


def invert_jet_matrix(mat):
    """Inverse of a square matrix of EpsJets whose head is a constant matrix.

    Head inverted exactly by Gauss-Jordan; the eps-tail handled by the
    terminating Neumann series (H + E)^-1 = sum (-H^-1 E)^n H^-1.
    """
    n = len(mat)
    dim, order = mat[0][0].dim, mat[0][0].order
    heads = []
    for row in mat:
        hr = []
        for e in row:
            h = e.head()
            if h.terms and set(h.terms) != {(0,) * dim}:
                raise ValueError("jet matrix head must be constant")
            hr.append(h.constant_coefficient())
        heads.append(hr)
    hinv_c = invert_field_matrix([[GaussianRational.coerce(x) for x in row]
                                  for row in heads])
    hinv = [[EpsJet.const(dim, order, c) for c in row] for row in hinv_c]
    tail = [[mat[i][j] - EpsJet.const(dim, order, heads[i][j])
             for j in range(n)] for i in range(n)]
    neg_hinv_tail = _mat_mul(hinv, tail)
    for i in range(n):
        for j in range(n):
            neg_hinv_tail[i][j] = -neg_hinv_tail[i][j]
    out = [row[:] for row in hinv]
    power = [row[:] for row in hinv]
    for _ in range(order):
        power = _mat_mul(neg_hinv_tail, power)
        for i in range(n):
            for j in range(n):
                out[i][j] = out[i][j] + power[i][j]
    return out


def _mat_mul(a, b):
    n, m, p = len(a), len(b[0]), len(b)
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = a[i][0] * b[0][j]
            for k in range(1, p):
                acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


class JetRing:
    """Ring adapter for EpsJet entries."""

    def __init__(self, dim: int, order: int):
        self.dim = dim
        self.order = order

    def zero(self):
        return EpsJet.const(self.dim, self.order, 0)

    def one(self):
        return EpsJet.const(self.dim, self.order, 1)

    def const(self, q):
        return EpsJet.const(self.dim, self.order, q)

    def derive(self, a: EpsJet, j: int):
        return a.derive(j)

    def is_zero(self, a) -> bool:
        return not a

    def invert(self, a: EpsJet) -> EpsJet:
        return jet_invert(a)
