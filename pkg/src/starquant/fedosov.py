"""The Fedosov construction on exact tori: lift the connection to the Weyl
bundle, solve the flatness recursion for r, build flat sections Q(F), and
extract the star product together with its trace/closedness chain.

Degree budget: to report C_0..C_N the solver runs at max W-degree
D = 2N + 2 by default; raising D by 2 must leave every reported C_r
unchanged (verify_stability), which is the operational criterion that the
reported coefficients are final.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import factorial

from .connections import (SymplecticConnection, cahen_gutt_momentum,
                          lie_derivative_connection, liouville_integral,
                          second_cov_deriv)
from .nuseries import NuSeries
from .symplectic import FormPoly
from .trigpoly import TrigPoly, poisson_solve, torus_integrate
from .weyl import WeylFormSection, poisson_bracket_flat


class FedosovError(ValueError):
    pass


# -- lifting the connection ------------------------------------------------


def gamma_bar(conn: SymplecticConnection, D: int) -> WeylFormSection:
    """Gamma-bar = (1/2) gamma_{lij} y^l y^j dx^i."""
    geo = conn.geometry
    struct, ring, d = geo.struct, geo.ring, geo.dim
    half = Fraction(1, 2)
    terms: dict = {}
    for l, i, j in product(range(d), repeat=3):
        c = conn.gamma.entries[l][i][j]
        if not c:
            continue
        y = [0] * d
        y[l] += 1
        y[j] += 1
        key = (tuple(y), (i,), 0)
        add = c * half
        prev = terms.get(key)
        terms[key] = add if prev is None else prev + add
    return WeylFormSection(struct, ring, D, terms)


def r_bar(conn: SymplecticConnection, D: int) -> WeylFormSection:
    """R-bar = (1/4) omega_{ir} R^r_{jkl} y^i y^j dx^k ^ dx^l."""
    geo = conn.geometry
    struct, ring, d = geo.struct, geo.ring, geo.dim
    R = conn.curvature().R
    quarter = Fraction(1, 4)
    terms: dict = {}
    for i, j, k, l in product(range(d), repeat=4):
        if k == l:
            continue
        acc = ring.zero()
        for r in range(d):
            w = struct.omega[i][r]
            if w:
                acc = acc + R[r][j][k][l] * w
        if not acc:
            continue
        y = [0] * d
        y[i] += 1
        y[j] += 1
        form, sign = ((k, l), 1) if k < l else ((l, k), -1)
        add = acc * (quarter * sign)
        key = (tuple(y), form, 0)
        prev = terms.get(key)
        terms[key] = add if prev is None else prev + add
    return WeylFormSection(struct, ring, D, terms)


def lift_connection(conn: SymplecticConnection, D: int):
    """(partial operator, Gamma-bar, R-bar): partial a = da + (1/nu)[Gbar, a]."""
    gbar = gamma_bar(conn, D)
    rbar = r_bar(conn, D)

    def partial(a: WeylFormSection) -> WeylFormSection:
        return a.exterior_d() + gbar.commutator(a).nu_shift(-1)

    return partial, gbar, rbar


def central_two_form(conn: SymplecticConnection, series, D: int) -> WeylFormSection:
    """Central closed 2-form Omega = sum_j nu^j omega_j as a Weyl section.

    `series` is a list of (j >= 1, antisymmetric matrix) with Fraction or
    TrigPoly entries; closedness of each omega_j is verified symbolically.
    """
    geo = conn.geometry
    struct, ring, d = geo.struct, geo.ring, geo.dim
    terms: dict = {}
    zero_y = (0,) * d
    for j, mat in series:
        if j < 1:
            raise FedosovError("Omega must lie in nu * Omega^2(M)[[nu]]")
        entries = [[_as_ring(ring, mat[a][b]) for b in range(d)] for a in range(d)]
        for a in range(d):
            for b in range(d):
                if not ring.is_zero(entries[a][b] + entries[b][a]):
                    raise FedosovError("Omega coefficient matrix must be antisymmetric")
        form = FormPoly.from_matrix(d, entries)
        if form.d(ring):
            raise FedosovError("Omega must be closed")
        for (k, l), c in form.terms.items():
            key = (zero_y, (k, l), j)
            prev = terms.get(key)
            terms[key] = c if prev is None else prev + c
    return WeylFormSection(struct, ring, D, terms)


def _as_ring(ring, x):
    if isinstance(x, (int, Fraction)):
        return ring.const(x)
    return x


# -- solving the flatness recursion ----------------------------------------


def solve_r(conn: SymplecticConnection, D: int,
            omega_sec: WeylFormSection | None = None,
            work_degree: int | None = None):
    """Unique r with W-degree >= 3, delta^{-1} r = 0 and
    Rbar + partial r - delta r + (1/nu) r o r = Omega through degree D-1.

    The internal Weyl algebra runs with +2 degree slack: (1/nu)[.,.] needs
    commutator terms of degree D+2 before the nu-division brings them back
    below D, so a hard cap at D would corrupt the top two components.

    Returns (r_parts, partial, gbar, rbar) with r_parts[k] the degree-k
    component, k = 3..D.
    """
    geo = conn.geometry
    struct, ring = geo.struct, geo.ring
    W = D + 2 if work_degree is None else work_degree
    partial, gbar, rbar = lift_connection(conn, W)
    if omega_sec is None:
        omega_sec = WeylFormSection.zero(struct, ring, W)
    r_parts = {3: (rbar - omega_sec.wcomponent(2)).delta_inv()}
    for k in range(1, D - 2):
        acc = -omega_sec.wcomponent(k + 2) + partial(r_parts[k + 2])
        for l in range(1, k):
            acc = acc + r_parts[l + 2].omul(r_parts[k + 2 - l]).nu_shift(-1)
        r_parts[k + 3] = acc.delta_inv()
    return r_parts, partial, gbar, rbar


def flatness_residual(conn: SymplecticConnection, r_parts, partial, rbar,
                      omega_sec: WeylFormSection | None = None) -> WeylFormSection:
    """Rbar + partial r - delta r + (1/nu) r o r - Omega, through degree D-1
    with D the largest solved component."""
    geo = conn.geometry
    struct, ring = geo.struct, geo.ring
    W = rbar.max_wdegree
    D = max(r_parts)
    if omega_sec is None:
        omega_sec = WeylFormSection.zero(struct, ring, W)
    r = WeylFormSection.zero(struct, ring, W)
    for part in r_parts.values():
        r = r + part
    res = rbar + partial(r) - r.delta() + r.omul(r).nu_shift(-1) - omega_sec
    return res.wcomponents_upto(D - 1)


# -- sigma-targeted product -------------------------------------------------


def _full_contraction(struct, y1, y2) -> Fraction:
    """Coefficient of the complete y-contraction of y^{y1} against y^{y2}
    (equal total degrees), under (Lam^{ij} d_{y_i} (x) d_{y_j})^p."""
    lam_nz = [(i, j, struct.lam[i][j]) for i in range(struct.dim)
              for j in range(struct.dim) if struct.lam[i][j]]
    p = sum(y1)
    state = {(y1, y2): Fraction(1)}
    for _ in range(p):
        new: dict = {}
        for (a, b), coef in state.items():
            for (i, j, lam) in lam_nz:
                if a[i] and b[j]:
                    c = coef * lam * a[i] * b[j]
                    na = a[:i] + (a[i] - 1,) + a[i + 1:]
                    nb = b[:j] + (b[j] - 1,) + b[j + 1:]
                    key = (na, nb)
                    prev = new.get(key)
                    new[key] = c if prev is None else prev + c
        state = new
        if not state:
            return Fraction(0)
    zero = (0,) * struct.dim
    return state.get((zero, zero), Fraction(0))


def sigma_product(a: WeylFormSection, b: WeylFormSection, nu_order: int) -> NuSeries:
    """sigma(a o b) through nu^nu_order for form-free sections: only fully
    contracted pairs of equal y-degree contribute."""
    a._compat(b)
    struct = a.struct
    dim = struct.dim
    coeffs: dict = {}
    by_deg: dict = {}
    for (y2, f2, n2), c2 in b.terms.items():
        if f2:
            continue
        by_deg.setdefault(sum(y2), []).append((y2, n2, c2))
    for (y1, f1, n1), c1 in a.terms.items():
        if f1:
            continue
        p = sum(y1)
        for (y2, n2, c2) in by_deg.get(p, ()):
            nu = n1 + n2 + p
            if nu > nu_order:
                continue
            contr = _full_contraction(struct, y1, y2)
            if not contr:
                continue
            val = (c1 * c2) * (contr * Fraction(1, 2 ** p * factorial(p)))
            if not val:
                continue
            prev = coeffs.get(nu)
            coeffs[nu] = val if prev is None else prev + val
    return NuSeries(coeffs, nu_order)


# -- star evaluator ----------------------------------------------------------


class StarEvaluator:
    """Computed Fedosov star product: evaluates F * G to a requested
    nu-order and exposes the individual bidifferential coefficients."""

    def __init__(self, conn: SymplecticConnection, nu_order: int,
                 omega_series=None, max_wdegree: int | None = None):
        geo = conn.geometry
        if geo.struct is None:
            raise FedosovError("Fedosov construction needs a constant torus structure")
        D = 2 * nu_order + 2 if max_wdegree is None else max_wdegree
        if nu_order > (D - 2) // 2:
            raise FedosovError(
                f"nu order {nu_order} exceeds the degree budget (D-2)/2 = {(D - 2) // 2}")
        self.conn = conn
        self.struct = geo.struct
        self.ring = geo.ring
        self.N = nu_order
        self.D = D
        self.Dwork = D + 2
        self.omega_series = list(omega_series or [])
        self.omega_sec = central_two_form(conn, self.omega_series, self.Dwork)
        self.r_parts, self.partial, self.gbar, self.rbar = solve_r(
            conn, D, self.omega_sec, self.Dwork)
        self.r_total = WeylFormSection.zero(self.struct, self.ring, self.Dwork)
        for part in self.r_parts.values():
            self.r_total = self.r_total + part
        self._qcache: dict = {}
        self._mu = None

    # Q-lift ---------------------------------------------------------------

    def quantize(self, F: TrigPoly) -> WeylFormSection:
        """Flat section with symbol F, by the delta^{-1} recursion."""
        cached = self._qcache.get(F)
        if cached is not None:
            return cached
        struct, ring, D = self.struct, self.ring, self.D
        parts = [WeylFormSection.from_scalar(struct, ring, D, F)]
        for k in range(D):
            acc = self.partial(parts[k])
            for l in range(1, k):
                if l + 2 in self.r_parts:
                    acc = acc + self.r_parts[l + 2].commutator(parts[k - l]).nu_shift(-1)
            parts.append(acc.delta_inv())
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        self._qcache[F] = total
        return total

    def fedosov_connection_residual(self, a: WeylFormSection) -> WeylFormSection:
        """D(a) = partial a - delta a + (1/nu)[r, a], through degree D-1."""
        res = self.partial(a) - a.delta() + self.r_total.commutator(a).nu_shift(-1)
        return res.wcomponents_upto(self.D - 1)

    # star product -----------------------------------------------------------

    def star(self, F: TrigPoly, G: TrigPoly, nu_order: int | None = None) -> NuSeries:
        N = self.N if nu_order is None else nu_order
        if N > self.N:
            raise FedosovError("requested nu order exceeds the evaluator budget")
        return sigma_product(self.quantize(F), self.quantize(G), N)

    def star_series(self, A: NuSeries, B: NuSeries) -> NuSeries:
        """Bilinear extension of the star product to nu-series arguments."""
        N = min(A.truncation, B.truncation)
        out = NuSeries({}, N)
        for r1, c1 in A.coeffs.items():
            for r2, c2 in B.coeffs.items():
                if r1 + r2 > N:
                    continue
                s = self.star(c1, c2, N - r1 - r2)
                out = out + s.nu_shift(r1 + r2).retruncate(N)
        return out

    def commutator_series(self, F: TrigPoly, G: TrigPoly,
                          nu_order: int | None = None) -> NuSeries:
        return self.star(F, G, nu_order) - self.star(G, F, nu_order)

    def c_table(self, F: TrigPoly, G: TrigPoly):
        """All C_r(F, G), r = 0..N, as TrigPolys."""
        s = self.star(F, G)
        zero = TrigPoly.zero(self.struct.dim)
        return [s.coefficient(r, zero) for r in range(self.N + 1)]

    def flatness(self) -> WeylFormSection:
        return flatness_residual(self.conn, self.r_parts, self.partial,
                                 self.rbar, self.omega_sec)

    def delta_inv_r(self) -> WeylFormSection:
        return self.r_total.delta_inv()

    def verify_stability(self, pairs) -> bool:
        """Raising D by 2 must leave C_0..C_N unchanged on the given pairs."""
        bigger = StarEvaluator(self.conn, self.N, self.omega_series, self.D + 2)
        return all(self.c_table(F, G) == bigger.c_table(F, G) for (F, G) in pairs)

    # trace chain --------------------------------------------------------------

    @property
    def momentum(self) -> TrigPoly:
        if self._mu is None:
            self._mu = cahen_gutt_momentum(self.conn)
        return self._mu

    def tau(self, k: int, H: TrigPoly) -> Fraction:
        """Truncated trace coefficients: tau_0 = int, tau_1 = 0,
        tau_2 = -(1/24) int(. mu), tau_3 = 0 (nu-parity of the Omega = 0
        product kills C_4^-)."""
        if k == 0:
            return liouville_integral(self.struct, H)
        if k in (1, 3):
            return Fraction(0)
        if k == 2:
            return -Fraction(1, 24) * liouville_integral(self.struct, H * self.momentum)
        raise FedosovError("trace coefficients pinned only through tau_3")

    def trace_equation_residual(self, k: int, F: TrigPoly, G: TrigPoly) -> Fraction:
        """Residual of tau_k(C_1^-) + tau_{k-1}(C_2^-) + ... + tau_0(C_{k+1}^-)."""
        if k + 1 > self.N:
            raise FedosovError("star not computed through nu^{k+1}")
        comm = self.commutator_series(F, G, k + 1)
        zero = TrigPoly.zero(self.struct.dim)
        res = Fraction(0)
        for i in range(k + 1):
            res += self.tau(k - i, comm.coefficient(i + 1, zero))
        return res

    def trace_density_order2(self) -> NuSeries:
        """rho = 1 + (nu^2/24) mu(nabla), the order-2 Fedosov trace density."""
        one = TrigPoly.const(self.struct.dim, 1)
        return NuSeries({0: one, 2: self.momentum * Fraction(1, 24)}, self.N)

    def density_closedness_residual(self, F: TrigPoly, G: TrigPoly,
                                    rho: NuSeries | None = None,
                                    order: int = 3) -> NuSeries:
        """int (F*G - G*F) rho omega^m/m! through nu^order, as exact rationals."""
        if rho is None:
            rho = self.trace_density_order2()
        comm = self.commutator_series(F, G, min(order, self.N)).retruncate(order)
        prod = comm * rho.retruncate(order)
        return prod.map(lambda c: liouville_integral(self.struct, c))


# -- order-3 truncated product and the S^3 cocycle ---------------------------


def s3_cocycle(conn: SymplecticConnection, F: TrigPoly, G: TrigPoly) -> TrigPoly:
    """S^3(F, G): full triple Lambda-contraction of the two Lie-derivative
    tensors, antisymmetric in (F, G); int S^3(F,G) = int {F,G} mu(nabla)."""
    geo = conn.geometry
    struct, d = geo.struct, geo.dim
    LF = lie_derivative_connection(conn, F).entries
    LG = lie_derivative_connection(conn, G).entries
    lam_rows = [[(j, struct.lam[i][j]) for j in range(d) if struct.lam[i][j]]
                for i in range(d)]
    total = TrigPoly.zero(d)
    for i1, i2, i3 in product(range(d), repeat=3):
        a = LF[i1][i2][i3]
        if not a:
            continue
        for (j1, l1) in lam_rows[i1]:
            for (j2, l2) in lam_rows[i2]:
                for (j3, l3) in lam_rows[i3]:
                    b = LG[j1][j2][j3]
                    if not b:
                        continue
                    total = total + (a * b) * (l1 * l2 * l3)
    return total


def truncated_star3(conn: SymplecticConnection, F: TrigPoly, G: TrigPoly) -> NuSeries:
    """FG + (nu/2){F,G} + (nu^2/8) Lam Lam (nabla^2 F)(nabla^2 G)
    + (nu^3/48) S^3(F,G)."""
    geo = conn.geometry
    struct, d = geo.struct, geo.dim
    ddF, _ = second_cov_deriv(conn, F, "")
    ddG, _ = second_cov_deriv(conn, G, "")
    lam_rows = [[(j, struct.lam[i][j]) for j in range(d) if struct.lam[i][j]]
                for i in range(d)]
    c2 = TrigPoly.zero(d)
    for i1, i2 in product(range(d), repeat=2):
        a = ddF[i1][i2]
        if not a:
            continue
        for (j1, l1) in lam_rows[i1]:
            for (j2, l2) in lam_rows[i2]:
                b = ddG[j1][j2]
                if b:
                    c2 = c2 + (a * b) * (l1 * l2)
    coeffs = {
        0: F * G,
        1: poisson_bracket_flat(struct, F, G) * Fraction(1, 2),
        2: c2 * Fraction(1, 8),
        3: s3_cocycle(conn, F, G) * Fraction(1, 48),
    }
    return NuSeries(coeffs, 3)


# -- Karabegov closing at order nu^2 ----------------------------------------


class ClosingEquivalence:
    """B = Id + nu^2 X_2 with X_2 the scaled flat gradient of the potential
    solving the flat Poisson equation  Delta u = -(mu - mean mu);
    the conjugated product B^{-1}(BF * BG) is closed through nu^3."""

    def __init__(self, se: StarEvaluator):
        if se.N < 3:
            raise FedosovError("closing check needs the star through nu^3")
        self.se = se
        struct = se.struct
        d = struct.dim
        mu = se.momentum
        self.mu_mean = torus_integrate(TrigPoly.const(d, mu.constant_coefficient().re))
        osc = mu - TrigPoly.const(d, self.mu_mean)
        self.u = poisson_solve(-osc)
        self.x2 = [self.u.derive(j) * Fraction(1, 24) for j in range(d)]
        self.osc = osc

    def apply_x2(self, F: TrigPoly) -> TrigPoly:
        out = TrigPoly.zero(self.se.struct.dim)
        for j, v in enumerate(self.x2):
            out = out + v * F.derive(j)
        return out

    def div_x2(self) -> TrigPoly:
        out = TrigPoly.zero(self.se.struct.dim)
        for j, v in enumerate(self.x2):
            out = out + v.derive(j)
        return out

    def b_apply(self, F: NuSeries) -> NuSeries:
        shift = F.map(self.apply_x2).nu_shift(2)
        return F + shift.retruncate(F.truncation)

    def b_inverse(self, F: NuSeries) -> NuSeries:
        # Id - nu^2 X2 + nu^4 X2^2 - ... , exact through the truncation
        out = F
        power = F
        sign = -1
        for _ in range(F.truncation // 2):
            power = power.map(self.apply_x2).nu_shift(2).retruncate(F.truncation)
            out = out + (power if sign > 0 else -power)
            sign = -sign
        return out

    def star_tilde(self, F: TrigPoly, G: TrigPoly, order: int = 3) -> NuSeries:
        Fs = NuSeries({0: F}, order)
        Gs = NuSeries({0: G}, order)
        prod = self.se.star_series(self.b_apply(Fs), self.b_apply(Gs))
        return self.b_inverse(prod)

    def b_integral_residual(self, F: TrigPoly, order: int = 2) -> NuSeries:
        """int B(F) - int F (1 + nu^2 (mu - mean)/24), exact through nu^order."""
        struct = self.se.struct
        lhs = self.b_apply(NuSeries({0: F}, order)).map(
            lambda c: liouville_integral(struct, c))
        weighted = NuSeries({0: F, 2: F * self.osc * Fraction(1, 24)}, order)
        rhs = weighted.map(lambda c: liouville_integral(struct, c))
        return lhs - rhs

    def conjugated_commutator_residual(self, F: TrigPoly, G: TrigPoly) -> NuSeries:
        struct = self.se.struct
        comm = self.star_tilde(F, G) - self.star_tilde(G, F)
        return comm.map(lambda c: liouville_integral(struct, c))

    def divergence_bookkeeping_residual(self, F: TrigPoly) -> Fraction:
        """int F div(X_2) + int X_2 F = 0 (integration by parts on the torus)."""
        struct = self.se.struct
        return (liouville_integral(struct, F * self.div_x2())
                + liouville_integral(struct, self.apply_x2(F)))
