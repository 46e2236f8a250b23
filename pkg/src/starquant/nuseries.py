"""Laurent series in the formal parameter nu with a hard truncation order.

Coefficients may be any exact ring element (Fraction, GaussianRational,
TrigPoly, EpsJet).  Finitely many negative exponents are allowed (trace
densities live in C^inf(M)[nu^-1, nu]]); every arithmetic operation drops
exponents above the truncation order.
"""
from __future__ import annotations

from fractions import Fraction


class NuSeries:
    __slots__ = ("coeffs", "truncation")

    def __init__(self, coeffs=None, truncation: int = 0):
        self.truncation = truncation
        clean = {}
        if coeffs:
            for r, c in coeffs.items():
                if r <= truncation and not _is_zero(c):
                    clean[int(r)] = c
        self.coeffs = clean

    @classmethod
    def constant(cls, c, truncation: int) -> "NuSeries":
        return cls({0: c}, truncation)

    @property
    def min_order(self) -> int:
        return min(self.coeffs) if self.coeffs else 0

    def coefficient(self, r: int, default=None):
        return self.coeffs.get(r, default)

    def _check(self, other: "NuSeries"):
        if self.truncation != other.truncation:
            raise ValueError(
                f"truncation mismatch: {self.truncation} vs {other.truncation}")

    def __add__(self, other):
        if not isinstance(other, NuSeries):
            other = NuSeries.constant(other, self.truncation)
        self._check(other)
        out = dict(self.coeffs)
        for r, c in other.coeffs.items():
            s = out.get(r)
            out[r] = c if s is None else s + c
        return NuSeries(out, self.truncation)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, NuSeries):
            other = NuSeries.constant(other, self.truncation)
        return self + (-other)

    def __neg__(self):
        return NuSeries({r: -c for r, c in self.coeffs.items()}, self.truncation)

    def __mul__(self, other):
        if not isinstance(other, NuSeries):
            return NuSeries({r: c * other for r, c in self.coeffs.items()},
                            self.truncation)
        self._check(other)
        out = {}
        for r1, c1 in self.coeffs.items():
            for r2, c2 in other.coeffs.items():
                r = r1 + r2
                if r > self.truncation:
                    continue
                p = c1 * c2
                s = out.get(r)
                out[r] = p if s is None else s + p
        return NuSeries(out, self.truncation)

    def __rmul__(self, other):
        return NuSeries({r: other * c for r, c in self.coeffs.items()},
                        self.truncation)

    def nu_shift(self, k: int) -> "NuSeries":
        """Multiply by nu^k (k may be negative: Laurent behaviour)."""
        return NuSeries({r + k: c for r, c in self.coeffs.items()},
                        self.truncation)

    def retruncate(self, truncation: int) -> "NuSeries":
        return NuSeries(self.coeffs, truncation)

    def map(self, fn) -> "NuSeries":
        return NuSeries({r: fn(c) for r, c in self.coeffs.items()},
                        self.truncation)

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, NuSeries):
            return NotImplemented
        return (self.truncation == other.truncation
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.truncation, frozenset(self.coeffs.items())))

    def sorted_items(self):
        return sorted(self.coeffs.items())

    def __repr__(self):
        if not self.coeffs:
            return "NuSeries(0)"
        bits = [f"nu^{r}*({c!r})" for r, c in self.sorted_items()]
        return " + ".join(bits) + f"  [trunc {self.truncation}]"


def _is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return not c
