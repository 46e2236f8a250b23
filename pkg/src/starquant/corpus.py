"""Seeded random test corpora: low-frequency trig functions, connections,
perturbation tensors, and sphere profiles.

Everything is driven by random.Random(seed) so CLI reports are reproducible
byte for byte.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .connections import SymTensor3, SymplecticConnection
from .gaussrat import GaussianRational
from .symplectic import Geometry, SymplecticStructure
from .trigpoly import TrigPoly, TorusRing

_NUMS = [-3, -2, -1, 1, 2, 3]
_DENS = [1, 2, 3, 4]


def rand_fraction(rng: random.Random) -> Fraction:
    return Fraction(rng.choice(_NUMS), rng.choice(_DENS))


def _rand_freqs(rng: random.Random, dim: int, max_freq: int, n_modes: int):
    """Distinct nonzero frequency vectors, one per conjugate pair."""
    pool = []
    seen = set()
    tries = 0
    while len(pool) < n_modes and tries < 200:
        tries += 1
        k = tuple(rng.randint(-max_freq, max_freq) for _ in range(dim))
        if not any(k):
            continue
        nk = tuple(-a for a in k)
        if k in seen or nk in seen:
            continue
        seen.add(k)
        pool.append(k)
    return pool


def random_trigpoly(rng: random.Random, dim: int, max_freq: int = 1,
                    n_modes: int = 2, zero_mean: bool = True) -> TrigPoly:
    """Random real trig polynomial with |k|_inf <= max_freq."""
    terms = {}
    for k in _rand_freqs(rng, dim, max_freq, n_modes):
        c = GaussianRational(rand_fraction(rng), rand_fraction(rng))
        nk = tuple(-a for a in k)
        terms[k] = terms.get(k, GaussianRational(0)) + c
        terms[nk] = terms.get(nk, GaussianRational(0)) + c.conj()
    if not zero_mean:
        terms[(0,) * dim] = GaussianRational(rand_fraction(rng))
    return TrigPoly(dim, terms)


def random_sym3(rng: random.Random, geo: Geometry, max_freq: int = 1,
                n_modes: int = 1) -> SymTensor3:
    """Random totally symmetric lowered 3-tensor with trig entries."""
    d = geo.dim
    comp = {}
    for i in range(d):
        for j in range(i, d):
            for k in range(j, d):
                comp[(i, j, k)] = random_trigpoly(rng, d, max_freq, n_modes,
                                                  zero_mean=True)
    return SymTensor3.from_components(geo.ring, d, comp)


def random_connection(rng: random.Random, struct: SymplecticStructure,
                      max_freq: int = 1, n_modes: int = 1) -> SymplecticConnection:
    geo = Geometry.constant(struct, TorusRing(struct.dim))
    return SymplecticConnection(geo, random_sym3(rng, geo, max_freq, n_modes))


def one_mode_connection(struct: SymplecticStructure) -> SymplecticConnection:
    """Deterministic single-mode T^2 connection used for the symbolic
    coefficient checks."""
    d = struct.dim
    geo = Geometry.constant(struct, TorusRing(d))
    f = TrigPoly.cosine(d, (1,) + (0,) * (d - 1))
    comp = {(i, j, k): TrigPoly.zero(d) for i in range(d)
            for j in range(i, d) for k in range(j, d)}
    comp[(0,) * 3] = f
    return SymplecticConnection(geo, SymTensor3.from_components(geo.ring, d, comp))


def random_profile_coeffs(rng: random.Random, degree: int = 2,
                          scale: Fraction = Fraction(1, 4)):
    """Coefficients of a bump polynomial b(h); the profile is
    psi = 1 + (1 - h^2) * b(h), so psi(+-1) = 1 automatically."""
    return [rand_fraction(rng) * scale for _ in range(degree + 1)]
