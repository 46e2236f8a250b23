"""Finite Fourier sums on a torus T^d over Gaussian rationals.

A TrigPoly is sum_k c_k e^{i k.x} with k in Z^d and c_k Gaussian rational.
Multiplication is convolution, differentiation multiplies the k-term by
i*k_j, so every ring operation is closed and exact.  Real functions are the
ones with c_{-k} = conj(c_k); reality is preserved by +, *, derive and is
checked wherever an operation requires a real input.
"""
from __future__ import annotations

from fractions import Fraction

from .gaussrat import GaussianRational, I

_SCALARS = (int, Fraction, GaussianRational)


class TrigPoly:
    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms=None):
        self.dim = dim
        clean = {}
        if terms:
            for k, c in terms.items():
                c = GaussianRational.coerce(c)
                if c:
                    clean[tuple(k)] = c
        self.terms = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "TrigPoly":
        return cls(dim)

    @classmethod
    def const(cls, dim: int, c) -> "TrigPoly":
        return cls(dim, {(0,) * dim: GaussianRational.coerce(c)})

    @classmethod
    def harmonic(cls, dim: int, freq, coeff=1) -> "TrigPoly":
        """coeff * e^{i freq.x}"""
        return cls(dim, {tuple(freq): GaussianRational.coerce(coeff)})

    @classmethod
    def cosine(cls, dim: int, freq, amp=1) -> "TrigPoly":
        k = tuple(freq)
        nk = tuple(-a for a in k)
        half = Fraction(amp) / 2
        if k == nk:
            return cls.const(dim, Fraction(amp))
        return cls(dim, {k: GaussianRational(half), nk: GaussianRational(half)})

    @classmethod
    def sine(cls, dim: int, freq, amp=1) -> "TrigPoly":
        k = tuple(freq)
        nk = tuple(-a for a in k)
        half = Fraction(amp) / 2
        if k == nk:
            return cls.zero(dim)
        return cls(dim, {k: GaussianRational(0, -half), nk: GaussianRational(0, half)})

    # -- ring operations ----------------------------------------------

    def _check(self, other: "TrigPoly"):
        if self.dim != other.dim:
            raise ValueError(f"torus dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if isinstance(other, _SCALARS):
            other = TrigPoly.const(self.dim, other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k)
            out[k] = c if s is None else s + c
        return TrigPoly(self.dim, out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigPoly) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return TrigPoly(self.dim, {k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, _SCALARS):
            c = GaussianRational.coerce(other)
            if not c:
                return TrigPoly.zero(self.dim)
            return TrigPoly(self.dim, {k: v * c for k, v in self.terms.items()})
        self._check(other)
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                p = c1 * c2
                s = out.get(k)
                out[k] = p if s is None else s + p
        return TrigPoly(self.dim, out)

    __rmul__ = __mul__

    def derive(self, j: int) -> "TrigPoly":
        """Exact partial derivative in direction j (0-based)."""
        out = {}
        for k, c in self.terms.items():
            if k[j]:
                out[k] = c * GaussianRational(0, k[j])
        return TrigPoly(self.dim, out)

    def conj(self) -> "TrigPoly":
        return TrigPoly(self.dim, {tuple(-a for a in k): c.conj()
                                   for k, c in self.terms.items()})

    # -- queries -------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, _SCALARS):
            other = TrigPoly.const(self.dim, other)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def is_real(self) -> bool:
        for k, c in self.terms.items():
            nk = tuple(-a for a in k)
            oc = self.terms.get(nk)
            if oc is None or oc != c.conj():
                return False
        return True

    def constant_coefficient(self) -> GaussianRational:
        return self.terms.get((0,) * self.dim, GaussianRational(0))

    def max_abs_freq(self) -> int:
        return max((max(abs(a) for a in k) for k in self.terms), default=0)

    def sorted_items(self):
        return sorted(self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "TrigPoly(0)"
        bits = [f"{c!r}*e^(i{list(k)}.x)" for k, c in self.sorted_items()]
        return "TrigPoly(" + " + ".join(bits) + ")"


# -- torus calculus ------------------------------------------------------


def torus_integrate(f: TrigPoly) -> Fraction:
    """Integral of a real TrigPoly over the torus, in units of (2*pi)^d.

    Only the constant Fourier mode survives; the (2*pi)^d volume factor is
    carried symbolically by every caller and cancels in all ratios.
    """
    if not f.is_real():
        raise ValueError("torus_integrate requires a real TrigPoly")
    return f.constant_coefficient().re


def laplacian(f: TrigPoly) -> TrigPoly:
    out = {}
    for k, c in f.terms.items():
        n2 = sum(a * a for a in k)
        if n2:
            out[k] = c * Fraction(-n2)
    return TrigPoly(f.dim, out)


def poisson_solve(f: TrigPoly) -> TrigPoly:
    """Exact zero-mean solution u of the flat Laplacian equation sum_j d^2u/dx_j^2 = f.

    Mode-wise division by -|k|^2; requires the input to have zero mean.
    """
    if f.constant_coefficient():
        raise ValueError("poisson_solve requires zero-mean input")
    out = {}
    for k, c in f.terms.items():
        n2 = sum(a * a for a in k)
        out[k] = c * Fraction(-1, n2)
    return TrigPoly(f.dim, out)


class TorusRing:
    """Ring adapter so tensor code can run uniformly over TrigPoly entries."""

    def __init__(self, dim: int):
        self.dim = dim

    def zero(self):
        return TrigPoly.zero(self.dim)

    def one(self):
        return TrigPoly.const(self.dim, 1)

    def const(self, q):
        return TrigPoly.const(self.dim, q)

    def derive(self, a: TrigPoly, j: int):
        return a.derive(j)

    def is_zero(self, a) -> bool:
        return not a

    def invert(self, a: TrigPoly) -> TrigPoly:
        c = a.constant_coefficient()
        if a.terms and (len(a.terms) > 1 or not c):
            raise ValueError("only constant TrigPolys are invertible")
        if not c:
            raise ZeroDivisionError("inverse of zero TrigPoly")
        return TrigPoly.const(self.dim, c.inv())


def ring_arith(a, b, op: str):
    """Dispatch table for the basic exact ring operations.

    op is one of 'add', 'mul', or 'derive_<j>'; operands must share their
    torus dimension / truncation settings (the operand types enforce it).
    """
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op.startswith("derive_"):
        j = int(op.split("_", 1)[1])
        return a.derive(j)
    raise ValueError(f"unknown ring operation {op!r}")
