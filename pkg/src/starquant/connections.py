"""Symplectic connections, curvature invariants, the Cahen-Gutt momentum,
and the exact moment-map identity on tori.

The machinery is generic over a coefficient ring and a geometry (omega and
Lambda matrices with ring entries), so the same code paths run on exact
trigonometric tori, eps-jet families, and the symbolic sphere chart.

Conventions (see docs/conventions.md):
  R(d_k, d_l) d_j = R^r_{jkl} d_r,
  Ric_{ij} = R^v_{jvi}  (trace of V -> R(V, d_i) d_j),
  lowered Christoffel  gamma_{lij} = omega_{lk} Gamma^k_{ij}, totally symmetric,
  index raising with Lambda: (.)^{pq} = Lam^{pa} Lam^{qb} (.)_{ab}.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from math import factorial

from .symplectic import FormPoly, Geometry, SymplecticStructure
from .trigpoly import TrigPoly, torus_integrate


class SymmetryError(ValueError):
    """Raised when a tensor that must be totally symmetric is not; this
    signals an internal sign bug, never bad user input."""


def nested_zeros(ring, dim: int, rank: int):
    if rank == 0:
        return ring.zero()
    return [nested_zeros(ring, dim, rank - 1) for _ in range(dim)]


def tget(T, idx):
    for i in idx:
        T = T[i]
    return T


def tset(T, idx, v):
    for i in idx[:-1]:
        T = T[i]
    T[idx[-1]] = v


class SymTensor3:
    """Totally symmetric lowered 3-tensor with ring entries."""

    def __init__(self, entries):
        self.entries = entries
        self.dim = len(entries)

    @classmethod
    def zero(cls, ring, dim):
        return cls(nested_zeros(ring, dim, 3))

    @classmethod
    def from_components(cls, ring, dim, comp: dict):
        """Build from entries keyed by sorted index triples, completing symmetry."""
        t = nested_zeros(ring, dim, 3)
        for key, val in comp.items():
            for p in set(permutations(key)):
                tset(t, p, val)
        return cls(t)

    def validate_symmetric(self, ring):
        d = self.dim
        for i, j, k in product(range(d), repeat=3):
            for p in ((j, i, k), (i, k, j)):
                if not ring.is_zero(self.entries[i][j][k] - tget(self.entries, p)):
                    raise SymmetryError(f"3-tensor not symmetric at {(i, j, k)}")

    def add_scaled(self, other: "SymTensor3", t):
        d = self.dim
        out = [[[self.entries[i][j][k] + other.entries[i][j][k] * t
                 for k in range(d)] for j in range(d)] for i in range(d)]
        return SymTensor3(out)


class SymplecticConnection:
    """nabla = flat coordinate connection + deviation with lowered tensor gamma."""

    def __init__(self, geometry: Geometry, gamma: SymTensor3, check: bool = True):
        self.geometry = geometry
        self.gamma = gamma
        if check:
            gamma.validate_symmetric(geometry.ring)
        self._gamma_up = None
        self._curv = None

    @classmethod
    def flat(cls, geometry: Geometry):
        return cls(geometry, SymTensor3.zero(geometry.ring, geometry.dim), check=False)

    @property
    def gamma_up(self):
        """Gamma^k_{ij} = Lam^{kl} gamma_{lij}."""
        if self._gamma_up is None:
            geo = self.geometry
            d = geo.dim
            g = self.gamma.entries
            up = nested_zeros(geo.ring, d, 3)
            for k, i, j in product(range(d), repeat=3):
                acc = up[k][i][j]
                for l in range(d):
                    acc = acc + geo.lam(k, l) * g[l][i][j]
                up[k][i][j] = acc
            self._gamma_up = up
        return self._gamma_up

    def curvature(self) -> "CurvatureData":
        if self._curv is None:
            self._curv = curvature(self)
        return self._curv


@dataclass
class CurvatureData:
    R: list          # R[r][j][k][l], antisymmetric in (k, l)
    ric: list        # ric[i][j]


def curvature(conn: SymplecticConnection) -> CurvatureData:
    geo = conn.geometry
    ring, d = geo.ring, geo.dim
    G = conn.gamma_up
    R = nested_zeros(ring, d, 4)
    for r, j, k, l in product(range(d), repeat=4):
        acc = ring.derive(G[r][l][j], k) - ring.derive(G[r][k][j], l)
        for s in range(d):
            acc = acc + G[r][k][s] * G[s][l][j] - G[r][l][s] * G[s][k][j]
        R[r][j][k][l] = acc
    ric = nested_zeros(ring, d, 2)
    for i, j in product(range(d), repeat=2):
        acc = ric[i][j]
        for v in range(d):
            acc = acc + R[v][j][v][i]
        ric[i][j] = acc
    return CurvatureData(R, ric)


def cov_deriv(conn: SymplecticConnection, entries, variance: str):
    """Covariant derivative; the new lower index comes first.

    variance is a string over {'u','l'} matching the nesting of `entries`;
    rank-0 input (a ring element) returns its gradient.
    """
    geo = conn.geometry
    ring, d = geo.ring, geo.dim
    G = conn.gamma_up
    rank = len(variance)
    if rank == 0:
        return [ring.derive(entries, e) for e in range(d)], "l"
    out = nested_zeros(ring, d, rank + 1)
    for e in range(d):
        for idx in product(range(d), repeat=rank):
            acc = ring.derive(tget(entries, idx), e)
            for t, v in enumerate(variance):
                a = idx[t]
                for s in range(d):
                    swapped = idx[:t] + (s,) + idx[t + 1:]
                    if v == "u":
                        acc = acc + G[a][e][s] * tget(entries, swapped)
                    else:
                        acc = acc - G[s][e][a] * tget(entries, swapped)
            tset(out, (e,) + idx, acc)
    return out, "l" + variance


def second_cov_deriv(conn: SymplecticConnection, entries, variance: str):
    """nabla^2_{(u,v)} T = nabla_u nabla_v T - nabla_{nabla_u v} T; indices
    (u, v) come first in the output."""
    t1, v1 = cov_deriv(conn, entries, variance)
    t2, v2 = cov_deriv(conn, t1, v1)
    return t2, v2


def hamiltonian_vf(geo: Geometry, F):
    """X_F with i(X_F) omega = dF: components X^i = Lam^{ji} d_j F."""
    ring, d = geo.ring, geo.dim
    out = []
    for i in range(d):
        acc = ring.zero()
        for j in range(d):
            acc = acc + geo.lam(j, i) * ring.derive(F, j)
        out.append(acc)
    return out


def lie_derivative_connection(conn: SymplecticConnection, F) -> SymTensor3:
    """Lowered, totally symmetric (L_{X_F} nabla)(Y) Z = nabla^2_{(Y,Z)} X_F
    + R(X_F, Y) Z; total symmetry is verified and its failure raises."""
    geo = conn.geometry
    ring, d = geo.ring, geo.dim
    X = hamiltonian_vf(geo, F)
    ddX, _ = second_cov_deriv(conn, X, "u")
    R = conn.curvature().R
    low = nested_zeros(ring, d, 3)
    for a, b, c in product(range(d), repeat=3):
        acc = low[a][b][c]
        for r in range(d):
            up = ddX[a][b][r]
            for s in range(d):
                up = up + X[s] * R[r][b][s][a]
            acc = acc + up * geo.omega(r, c)
        low[a][b][c] = acc
    t = SymTensor3(low)
    t.validate_symmetric(ring)
    return t


def pontryagin_scalar(conn: SymplecticConnection):
    """P(nabla): the ratio of (1/2) tr(R o^ R) ^ omega^{m-2}/(m-2)! to the
    Liouville form omega^m/m!; identically zero when m = 1."""
    geo = conn.geometry
    ring, d = geo.ring, geo.dim
    m = d // 2
    if m < 2:
        return ring.zero()
    R = conn.curvature().R
    tr = FormPoly(d)
    for a in range(d):
        for b in range(d):
            fa = FormPoly.from_matrix(d, R[a][b])
            fb = FormPoly.from_matrix(d, R[b][a])
            tr = tr + fa.wedge(fb)
    total = tr.scale(Fraction(1, 2))
    omega_form = FormPoly.from_matrix(d, geo.omega_mat)
    if m > 2:
        total = total.wedge(omega_form.power(m - 2)).scale(Fraction(1, factorial(m - 2)))
    top = total.top_coefficient()
    if top is None:
        return ring.zero()
    liou = omega_form.power(m).scale(Fraction(1, factorial(m))).top_coefficient()
    return top * ring.invert(liou)


def cahen_gutt_momentum(conn: SymplecticConnection):
    """mu(nabla) = (nabla^2_{(p,q)} Ric)^{pq} + P(nabla), raised with Lambda."""
    geo = conn.geometry
    ring, d = geo.ring, geo.dim
    ric = conn.curvature().ric
    dd, _ = second_cov_deriv(conn, ric, "ll")
    acc = ring.zero()
    for p, q, a, b in product(range(d), repeat=4):
        la = geo.lam(p, a)
        if _zero(la):
            continue
        lb = geo.lam(q, b)
        if _zero(lb):
            continue
        acc = acc + la * lb * dd[a][b][p][q]
    return acc + pontryagin_scalar(conn)


def nabla_omega(conn: SymplecticConnection):
    """(nabla omega)_{e;ij}; must vanish for a symplectic connection."""
    geo = conn.geometry
    out, _ = cov_deriv(conn, geo.omega_mat, "ll")
    return out


def make_symplectic(geo: Geometry, gamma0_up) -> SymplecticConnection:
    """nabla_X Y = nabla0_X Y + (N(X,Y) + N(Y,X))/3 for torsion-free nabla0,
    where (nabla0_X omega)(Y,Z) = omega(N(X,Y), Z)."""
    ring, d = geo.ring, geo.dim
    for i, j, k in product(range(d), repeat=3):
        if not ring.is_zero(gamma0_up[i][j][k] - gamma0_up[i][k][j]):
            raise ValueError("input connection has torsion")
    # (nabla0 omega)_{i;jk}
    dom = nested_zeros(ring, d, 3)
    for i, j, k in product(range(d), repeat=3):
        acc = ring.derive(geo.omega_mat[j][k], i)
        for s in range(d):
            acc = acc - gamma0_up[s][i][j] * geo.omega(s, k)
            acc = acc - gamma0_up[s][i][k] * geo.omega(j, s)
        dom[i][j][k] = acc
    N = nested_zeros(ring, d, 3)  # N[r][i][j] = N(d_i, d_j)^r
    for r, i, j in product(range(d), repeat=3):
        acc = N[r][i][j]
        for k in range(d):
            acc = acc + dom[i][j][k] * geo.lam(k, r)
        N[r][i][j] = acc
    third = Fraction(1, 3)
    up = nested_zeros(ring, d, 3)
    for k, i, j in product(range(d), repeat=3):
        up[k][i][j] = gamma0_up[k][i][j] + (N[k][i][j] + N[k][j][i]) * third
    low = nested_zeros(ring, d, 3)
    for l, i, j in product(range(d), repeat=3):
        acc = low[l][i][j]
        for k in range(d):
            acc = acc + geo.omega(l, k) * up[k][i][j]
        low[l][i][j] = acc
    return SymplecticConnection(geo, SymTensor3(low))


# -- exact torus integration and the moment-map identity -------------------


def liouville_integral(struct: SymplecticStructure, f: TrigPoly) -> Fraction:
    """Integral of f against omega^m/m!, in units of (2*pi)^{2m}."""
    return struct.liouville_coefficient() * torus_integrate(f)


def omega_E_pairing(struct: SymplecticStructure, A: SymTensor3, B: SymTensor3) -> Fraction:
    """Symplectic pairing of symmetric 3-tensors: the integral of the full
    triple Lambda-contraction against omega^m/m! (units of (2*pi)^{2m}).

    Antisymmetric in (A, B): swapping the arguments transposes three Lambda
    factors.  The Lambda-slot orientation (B on the first slot of each
    Lambda) is the one that makes the moment-map identity hold with the
    Lie-derivative argument first; the identity check below validates it
    exactly.
    """
    d = struct.dim
    lam_cols = [[(j, struct.lam[j][i]) for j in range(d) if struct.lam[j][i]]
                for i in range(d)]
    total = TrigPoly.zero(d)
    for i1, i2, i3 in product(range(d), repeat=3):
        a = A.entries[i1][i2][i3]
        if not a:
            continue
        for (j1, l1) in lam_cols[i1]:
            for (j2, l2) in lam_cols[i2]:
                for (j3, l3) in lam_cols[i3]:
                    b = B.entries[j1][j2][j3]
                    if not b:
                        continue
                    total = total + (a * b) * (l1 * l2 * l3)
    return liouville_integral(struct, total)


def moment_map_identity_check(conn: SymplecticConnection, A: SymTensor3, F: TrigPoly):
    """Both sides of d/dt|_0 int mu(nabla + tA) F = Omega^E(L_{X_F} nabla, A),
    each computed exactly by an independent route; returns (lhs, rhs, residual).

    The t-derivative is extracted from exact cubic interpolation of the
    integral at t = 0..3 (mu(nabla + tA) has t-degree <= 3); the value at
    t = 4 re-checks the degree bound.
    """
    geo = conn.geometry
    struct = geo.struct
    if struct is None:
        raise ValueError("moment-map check needs a constant torus structure")
    vals = []
    for t in range(5):
        gam_t = conn.gamma.add_scaled(A, geo.ring.const(Fraction(t)))
        conn_t = SymplecticConnection(geo, gam_t, check=False)
        mu_t = cahen_gutt_momentum(conn_t)
        vals.append(liouville_integral(struct, mu_t * F))
    i0, i1, i2, i3, i4 = vals
    d1 = i1 - i0
    d2 = i2 - 2 * i1 + i0
    d3 = i3 - 3 * i2 + 3 * i1 - i0
    predicted_i4 = i0 + 4 * d1 + 6 * d2 + 4 * d3
    if predicted_i4 != i4:
        raise ArithmeticError("mu(nabla + tA) exceeded t-degree 3")
    lhs = d1 - d2 / 2 + d3 / 3
    rhs = omega_E_pairing(struct, lie_derivative_connection(conn, F), A)
    return lhs, rhs, lhs - rhs


def _zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return not c
